#include "ecgregen/corpus.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ecgregen/errors.hpp"
#include "ecgregen/metrics.hpp"

namespace ecgregen {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<float> EcgRecord::lead(size_t c) const {
  std::vector<float> out(rows);
  for (size_t r = 0; r < rows; ++r) out[r] = signal[r * cols + c];
  return out;
}

std::string to_string(QType qtype) {
  switch (qtype) {
    case QType::single_verify:
      return "single_verify";
    case QType::single_choose:
      return "single_choose";
    case QType::single_query:
      return "single_query";
  }
  return "single_verify";
}

QType qtype_from_string(const std::string& s) {
  if (s == "single_verify") return QType::single_verify;
  if (s == "single_choose") return QType::single_choose;
  if (s == "single_query") return QType::single_query;
  throw DataError("unknown qtype: '" + s + "'");
}

namespace {

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

/// Iterates JSONL lines, skipping blank ones; fn(line_no, parsed object).
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": malformed JSON line");
    }
    fn(line_no, obj);
  }
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(where + ": missing or non-string key '" + key + "'");
  }
  return it->get<std::string>();
}

std::vector<std::string> require_string_array(const json& obj, const char* key,
                                              const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw DataError(where + ": missing or non-array key '" + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw DataError(where + ": non-string element in '" + key + "'");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<ReportEntry> load_reports(const std::string& path) {
  std::vector<ReportEntry> entries;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](size_t line_no, const json& obj) {
    std::string where = path + ":" + std::to_string(line_no);
    ReportEntry e;
    e.id = require_string(obj, "id", where);
    e.report = require_string(obj, "report", where);
    e.labels = require_string_array(obj, "labels", where);
    if (e.id.empty()) throw DataError(where + ": empty id");
    if (e.report.empty()) throw DataError(where + ": empty report");
    if (!seen.insert(e.id).second) {
      throw DataError(where + ": duplicate id '" + e.id + "'");
    }
    entries.push_back(std::move(e));
  });
  return entries;
}

std::vector<QAItem> load_qa(const std::string& path) {
  std::vector<QAItem> items;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](size_t line_no, const json& obj) {
    std::string where = path + ":" + std::to_string(line_no);
    QAItem item;
    item.id = require_string(obj, "id", where);
    item.qtype = qtype_from_string(require_string(obj, "qtype", where));
    item.question = require_string(obj, "question", where);
    item.options = require_string_array(obj, "options", where);
    item.gold_answers = require_string_array(obj, "gold_answers", where);
    item.ecg_id = require_string(obj, "ecg_id", where);
    if (item.id.empty()) throw DataError(where + ": empty id");
    if (item.gold_answers.empty()) {
      throw DataError(where + ": gold_answers must be non-empty");
    }
    if (!seen.insert(item.id).second) {
      throw DataError(where + ": duplicate id '" + item.id + "'");
    }
    if (item.qtype == QType::single_verify) {
      for (const auto& g : item.gold_answers) {
        std::string norm = normalize_answer(g);
        if (norm != "yes" && norm != "no") {
          throw DataError(where + ": verify gold answer '" + g +
                          "' is not yes/no");
        }
      }
    } else if (item.qtype == QType::single_choose) {
      std::unordered_set<std::string> opts;
      for (const auto& o : item.options) opts.insert(normalize_answer(o));
      opts.insert("none");
      for (const auto& g : item.gold_answers) {
        if (!opts.count(normalize_answer(g))) {
          throw DataError(where + ": choose gold answer '" + g +
                          "' not among options");
        }
      }
    }
    items.push_back(std::move(item));
  });
  return items;
}

// ---------------------------------------------------------------------------
// Binary helpers (little-endian regardless of host)

namespace detail {

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("truncated file while reading " + what);
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t read_u64(std::istream& in, const std::string& what) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw DataError("truncated file while reading " + what);
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f32_block(std::ostream& out, const float* data, size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(float)));
  } else {
    for (size_t i = 0; i < count; ++i) {
      uint32_t bits;
      std::memcpy(&bits, &data[i], 4);
      write_u32(out, bits);
    }
  }
}

void read_f32_block(std::istream& in, float* data, size_t count,
                    const std::string& what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(data),
                 static_cast<std::streamsize>(count * sizeof(float)))) {
      throw DataError("truncated file while reading " + what);
    }
  } else {
    for (size_t i = 0; i < count; ++i) {
      uint32_t bits = read_u32(in, what);
      std::memcpy(&data[i], &bits, 4);
    }
  }
}

void write_ids_sidecar(const std::string& path,
                       const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sidecar: " + path);
  for (const auto& id : ids) out << id << '\n';
  if (!out) throw DataError("write failed: " + path);
}

std::vector<std::string> read_ids_sidecar(const std::string& path,
                                          size_t expected_n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sidecar: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(line);
  }
  // Tolerate a single trailing blank line from editors.
  if (ids.size() == expected_n + 1 && ids.back().empty()) ids.pop_back();
  if (ids.size() != expected_n) {
    throw DataError("sidecar " + path + " has " + std::to_string(ids.size()) +
                    " ids, expected " + std::to_string(expected_n));
  }
  return ids;
}

}  // namespace detail

namespace {

constexpr char kEmbeddingMagic[4] = {'E', 'C', 'G', 'E'};
constexpr uint32_t kEmbeddingVersion = 1;

}  // namespace

void save_embeddings(const EmbeddingSet& set, const std::string& path) {
  if (set.dim == 0) throw DataError("embedding dimension must be >= 1");
  if (set.data.size() != set.ids.size() * set.dim) {
    throw DataError("embedding matrix size does not match ids * dim");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embeddings file: " + path);
  out.write(kEmbeddingMagic, 4);
  detail::write_u32(out, kEmbeddingVersion);
  detail::write_u64(out, set.ids.size());
  detail::write_u32(out, static_cast<uint32_t>(set.dim));
  detail::write_f32_block(out, set.data.data(), set.data.size());
  if (!out) throw DataError("write failed: " + path);
  out.close();
  detail::write_ids_sidecar(path + ".ids", set.ids);
}

EmbeddingSet load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw DataError("bad magic in embeddings file: " + path);
  }
  uint32_t version = detail::read_u32(in, "version");
  if (version != kEmbeddingVersion) {
    throw DataError("unsupported embeddings file version " +
                    std::to_string(version) + " in " + path);
  }
  uint64_t n = detail::read_u64(in, "row count");
  uint32_t d = detail::read_u32(in, "dimension");
  if (d == 0) throw DataError("embedding dimension 0 in " + path);

  EmbeddingSet set;
  set.dim = d;
  set.data.resize(static_cast<size_t>(n) * d);
  detail::read_f32_block(in, set.data.data(), set.data.size(),
                         "embedding payload of " + path);
  // Anything left over means the header undercounts the payload.
  char extra;
  if (in.read(&extra, 1)) {
    throw DataError("embeddings file " + path + " has trailing bytes");
  }
  for (float v : set.data) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite value in embeddings file " + path);
    }
  }
  set.ids = detail::read_ids_sidecar(path + ".ids", static_cast<size_t>(n));
  return set;
}

std::vector<EcgRecord> load_signals(const std::string& manifest_path) {
  fs::path base = fs::path(manifest_path).parent_path();
  std::vector<EcgRecord> records;
  std::unordered_set<std::string> seen;
  for_each_jsonl(manifest_path, [&](size_t line_no, const json& obj) {
    std::string where = manifest_path + ":" + std::to_string(line_no);
    EcgRecord rec;
    rec.id = require_string(obj, "id", where);
    if (rec.id.empty()) throw DataError(where + ": empty id");
    if (!seen.insert(rec.id).second) {
      throw DataError(where + ": duplicate id '" + rec.id + "'");
    }
    std::string file = require_string(obj, "file", where);
    auto it = obj.find("sample_rate_hz");
    if (it == obj.end() || !it->is_number()) {
      throw DataError(where + ": missing or non-numeric sample_rate_hz");
    }
    double sr = it->get<double>();
    if (!(sr > 0.0) || !std::isfinite(sr)) {
      throw DataError(where + ": sample_rate_hz must be positive");
    }
    rec.sample_rate_hz = static_cast<float>(sr);

    fs::path csv_path = fs::path(file).is_absolute() ? fs::path(file)
                                                     : base / file;
    std::ifstream csv(csv_path);
    if (!csv) throw DataError(where + ": cannot open signal file " +
                              csv_path.string());
    std::string line;
    size_t row = 0;
    while (std::getline(csv, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (is_blank(line)) continue;
      size_t col = 0;
      size_t pos = 0;
      while (true) {
        size_t comma = line.find(',', pos);
        std::string cell = line.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        size_t a = cell.find_first_not_of(" \t");
        size_t b = cell.find_last_not_of(" \t");
        if (a == std::string::npos) {
          throw DataError(csv_path.string() + ": empty cell at row " +
                          std::to_string(row + 1) + ", column " +
                          std::to_string(col + 1));
        }
        float value = 0.f;
        const char* first = cell.data() + a;
        const char* last = cell.data() + b + 1;
        auto [p, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || p != last || !std::isfinite(value)) {
          throw DataError(csv_path.string() + ": non-numeric cell at row " +
                          std::to_string(row + 1) + ", column " +
                          std::to_string(col + 1));
        }
        rec.signal.push_back(value);
        ++col;
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (row == 0) {
        rec.cols = col;
      } else if (col != rec.cols) {
        throw DataError(csv_path.string() + ": ragged row " +
                        std::to_string(row + 1) + " has " +
                        std::to_string(col) + " columns, expected " +
                        std::to_string(rec.cols));
      }
      ++row;
    }
    rec.rows = row;
    if (rec.rows == 0 || rec.cols == 0) {
      throw DataError(csv_path.string() + ": empty signal file");
    }
    records.push_back(std::move(rec));
  });
  return records;
}

std::unordered_map<std::string, size_t> index_ids(const EmbeddingSet& set) {
  std::unordered_map<std::string, size_t> map;
  map.reserve(set.ids.size());
  for (size_t i = 0; i < set.ids.size(); ++i) map.emplace(set.ids[i], i);
  return map;
}

ReportSet::ReportSet(std::vector<ReportEntry> entries)
    : entries_(std::move(entries)) {
  by_id_.reserve(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (!by_id_.emplace(entries_[i].id, i).second) {
      throw DataError("duplicate report id '" + entries_[i].id + "'");
    }
  }
}

const ReportEntry* ReportSet::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

}  // namespace ecgregen
