#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "ecgregen/corpus.hpp"

// Vector similarity index over unit-norm embeddings. Distances are squared
// L2, which on unit vectors equals 2 - 2*cos(theta) and so ranks identically
// to cosine or inner product. Results order by (distance, id); the id
// tie-break makes output independent of insertion order.
//
// Indices are immutable after build; concurrent searches on a shared index
// are safe.
//
// Index file format: magic "EIDX", version u32 LE, kind byte (0 = flat,
// 1 = ivf), then embedding-format payload(s) (see corpus.hpp). Row ids live
// in a "<path>.ids" sidecar aligned with stored row order.

namespace ecgregen {

namespace detail {
struct IndexIO;
}

struct Neighbor {
  std::string id;
  float distance;  // squared L2; in [0, 4] for unit vectors
};

class FlatIndex {
 public:
  FlatIndex() = default;

  /// matrix is n x dim row-major; rows must be unit norm (+-1e-4) and ids
  /// unique. DataError otherwise.
  static FlatIndex build(std::vector<std::string> ids,
                         std::vector<float> matrix, size_t dim);
  static FlatIndex build(const EmbeddingSet& set);

  /// Up to k nearest stored vectors not in exclude, ascending (distance, id).
  std::vector<Neighbor> search(
      std::span<const float> query, size_t k,
      const std::unordered_set<std::string>& exclude = {}) const;

  size_t size() const { return ids_.size(); }
  size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& matrix() const { return data_; }

 private:
  std::vector<std::string> ids_;
  std::vector<float> data_;
  size_t dim_ = 0;
};

class IvfIndex {
 public:
  IvfIndex() = default;

  /// Coarse quantizer from Lloyd's k-means with k-means++ seeding
  /// (SplitMix64(kmeans_seed)), at most 25 iterations or relative inertia
  /// change < 1e-4. Requires n >= nlist >= 1.
  static IvfIndex build(std::vector<std::string> ids,
                        std::vector<float> matrix, size_t dim, size_t nlist,
                        uint64_t kmeans_seed, size_t nprobe_default = 1);
  static IvfIndex build(const EmbeddingSet& set, size_t nlist,
                        uint64_t kmeans_seed, size_t nprobe_default = 1);

  /// Exact search restricted to the nprobe lists with the nearest
  /// centroids. 1 <= nprobe <= nlist.
  std::vector<Neighbor> search(
      std::span<const float> query, size_t k, size_t nprobe,
      const std::unordered_set<std::string>& exclude = {}) const;

  size_t size() const { return ids_.size(); }
  size_t dim() const { return dim_; }
  size_t nlist() const { return lists_.size(); }
  size_t nprobe_default() const { return nprobe_default_; }
  uint64_t kmeans_seed() const { return kmeans_seed_; }
  const std::vector<std::vector<uint64_t>>& lists() const { return lists_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& matrix() const { return data_; }
  const std::vector<float>& centroids() const { return centroids_; }

 private:
  friend struct detail::IndexIO;

  std::vector<std::string> ids_;
  std::vector<float> data_;       // insertion order, n x dim
  std::vector<float> centroids_;  // nlist x dim
  std::vector<std::vector<uint64_t>> lists_;  // row indices per centroid
  size_t dim_ = 0;
  size_t nprobe_default_ = 1;
  uint64_t kmeans_seed_ = 0;
};

using AnyIndex = std::variant<FlatIndex, IvfIndex>;

/// Flat search, or IVF search with its default nprobe.
std::vector<Neighbor> search_any(
    const AnyIndex& index, std::span<const float> query, size_t k,
    const std::unordered_set<std::string>& exclude = {});

size_t index_size(const AnyIndex& index);
size_t index_dim(const AnyIndex& index);

void save_index(const AnyIndex& index, const std::string& path);
AnyIndex load_index(const std::string& path);

}  // namespace ecgregen
