#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

// Data model and ingestion for ECG signals, embeddings, reports and QA items.
//
// File formats:
//   Reports   JSONL {"id": str, "report": str, "labels": [str]}
//   QA        JSONL {"id": str, "qtype": str, "question": str,
//                    "options": [str], "gold_answers": [str], "ecg_id": str}
//   Signals   manifest JSONL {"id": str, "file": str, "sample_rate_hz": num};
//             each file is header-less CSV, L rows x C numeric columns,
//             paths resolved relative to the manifest's directory.
//   Embeddings  binary, little-endian, bit-exact:
//             bytes 0-3   magic "ECGE"
//             bytes 4-7   version = 1 (u32)
//             bytes 8-15  n (u64)
//             bytes 16-19 d (u32)
//             then n*d float32, row-major.
//             Sidecar "<path>.ids": UTF-8, one id per line, line i <-> row i.
//
// Loaders are pure functions and safe to call concurrently on distinct
// paths; loaded collections are immutable after construction. Numeric
// parsing goes through std::from_chars and is locale-independent.

namespace ecgregen {

struct EcgRecord {
  std::string id;
  size_t rows = 0;  // time steps
  size_t cols = 0;  // leads
  std::vector<float> signal;  // row-major rows x cols, millivolts
  float sample_rate_hz = 0.f;

  float at(size_t r, size_t c) const { return signal[r * cols + c]; }
  std::vector<float> lead(size_t c) const;
};

struct Embedding {
  std::string id;
  std::vector<float> vec;
};

struct ReportEntry {
  std::string id;
  std::string report;
  std::vector<std::string> labels;
};

enum class QType { single_verify, single_choose, single_query };

std::string to_string(QType qtype);
QType qtype_from_string(const std::string& s);  // DataError on unknown

struct QAItem {
  std::string id;
  QType qtype = QType::single_verify;
  std::string question;
  std::vector<std::string> options;       // may be empty for single_query
  std::vector<std::string> gold_answers;  // non-empty
  std::string ecg_id;
};

/// n x d float32 block with row-aligned ids.
struct EmbeddingSet {
  std::vector<std::string> ids;
  size_t dim = 0;
  std::vector<float> data;  // row-major, ids.size() * dim

  size_t size() const { return ids.size(); }
  const float* row_ptr(size_t i) const { return data.data() + i * dim; }
  std::span<const float> row(size_t i) const { return {row_ptr(i), dim}; }
};

/// Row lookup table for an EmbeddingSet (id -> row index).
std::unordered_map<std::string, size_t> index_ids(const EmbeddingSet& set);

std::vector<ReportEntry> load_reports(const std::string& path);
EmbeddingSet load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingSet& set, const std::string& path);
std::vector<EcgRecord> load_signals(const std::string& manifest_path);
std::vector<QAItem> load_qa(const std::string& path);

/// Validated, id-indexed view over report entries. Rejects duplicate ids.
class ReportSet {
 public:
  ReportSet() = default;
  explicit ReportSet(std::vector<ReportEntry> entries);

  const ReportEntry* find(const std::string& id) const;
  const std::vector<ReportEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<ReportEntry> entries_;
  std::unordered_map<std::string, size_t> by_id_;
};

namespace detail {
// Shared binary helpers; also used by the index file format.
void write_u32(std::ostream& out, uint32_t v);
void write_u64(std::ostream& out, uint64_t v);
uint32_t read_u32(std::istream& in, const std::string& what);
uint64_t read_u64(std::istream& in, const std::string& what);
void write_f32_block(std::ostream& out, const float* data, size_t count);
void read_f32_block(std::istream& in, float* data, size_t count,
                    const std::string& what);
void write_ids_sidecar(const std::string& path,
                       const std::vector<std::string>& ids);
std::vector<std::string> read_ids_sidecar(const std::string& path,
                                          size_t expected_n);
}  // namespace detail

}  // namespace ecgregen
