#include "ecgregen/vindex.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "ecgregen/errors.hpp"
#include "ecgregen/kernels.hpp"
#include "ecgregen/rng.hpp"

namespace ecgregen {

namespace {

constexpr float kUnitNormTolerance = 1e-4f;

void check_unit_rows(const std::vector<float>& matrix, size_t n, size_t dim,
                     const std::vector<std::string>& ids) {
  for (size_t i = 0; i < n; ++i) {
    double nrm = kern::norm(matrix.data() + i * dim, dim);
    if (std::abs(nrm - 1.0) > kUnitNormTolerance) {
      throw DataError("row '" + ids[i] + "' is not unit norm (|v| = " +
                      std::to_string(nrm) + ")");
    }
  }
}

void check_unique_ids(const std::vector<std::string>& ids) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw DataError("duplicate id '" + id + "' in index input");
    }
  }
}

void check_query(std::span<const float> query, size_t dim, size_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (query.size() != dim) {
    throw DataError("query dimension " + std::to_string(query.size()) +
                    " does not match index dimension " + std::to_string(dim));
  }
  double nrm = kern::norm(query.data(), query.size());
  if (std::abs(nrm - 1.0) > kUnitNormTolerance) {
    throw DataError("query is not unit norm (|v| = " + std::to_string(nrm) +
                    ")");
  }
}

bool neighbor_less(float da, const std::string& ia, float db,
                   const std::string& ib) {
  if (da != db) return da < db;
  return ia < ib;
}

/// Top-k selection over candidate rows by (distance, id). candidates holds
/// row indices; dist[i] pairs with candidates[i].
std::vector<Neighbor> select_top_k(const std::vector<uint64_t>& candidates,
                                   const std::vector<float>& dist,
                                   const std::vector<std::string>& ids,
                                   size_t k,
                                   const std::unordered_set<std::string>&
                                       exclude) {
  // Max-heap of the k best seen so far; heap top is the current worst.
  auto worse = [&](size_t a, size_t b) {
    return neighbor_less(dist[a], ids[candidates[a]], dist[b],
                         ids[candidates[b]]);
  };
  std::vector<size_t> heap;
  heap.reserve(k + 1);
  for (size_t i = 0; i < candidates.size(); ++i) {
    const std::string& id = ids[candidates[i]];
    if (!exclude.empty() && exclude.count(id)) continue;
    if (heap.size() < k) {
      heap.push_back(i);
      std::push_heap(heap.begin(), heap.end(), worse);
    } else if (worse(i, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.back() = i;
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), worse);
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (size_t i : heap) out.push_back({ids[candidates[i]], dist[i]});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// FlatIndex

FlatIndex FlatIndex::build(std::vector<std::string> ids,
                           std::vector<float> matrix, size_t dim) {
  if (dim == 0) throw DataError("index dimension must be >= 1");
  if (matrix.size() != ids.size() * dim) {
    throw DataError("matrix size does not match ids * dim");
  }
  check_unique_ids(ids);
  check_unit_rows(matrix, ids.size(), dim, ids);
  FlatIndex index;
  index.ids_ = std::move(ids);
  index.data_ = std::move(matrix);
  index.dim_ = dim;
  return index;
}

FlatIndex FlatIndex::build(const EmbeddingSet& set) {
  return build(set.ids, set.data, set.dim);
}

std::vector<Neighbor> FlatIndex::search(
    std::span<const float> query, size_t k,
    const std::unordered_set<std::string>& exclude) const {
  check_query(query, dim_, k);
  size_t n = ids_.size();
  if (n == 0) return {};
  std::vector<float> dist(n);
  kern::l2_sq_batch(query.data(), data_.data(), n, dim_, dist.data());
  std::vector<uint64_t> rows(n);
  for (size_t i = 0; i < n; ++i) rows[i] = i;
  return select_top_k(rows, dist, ids_, k, exclude);
}

// ---------------------------------------------------------------------------
// IvfIndex

namespace {

/// k-means++ seeding followed by Lloyd iterations. Deterministic for a
/// fixed seed: selection scans rows in order, assignment ties go to the
/// lowest centroid index, and means accumulate in double in row order.
std::vector<float> run_kmeans(const std::vector<float>& data, size_t n,
                              size_t dim, size_t nlist, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<float> centroids(nlist * dim);

  // Seeding: first centroid uniform, then rows weighted by squared
  // distance to the nearest chosen centroid.
  std::vector<double> weight(n, 0.0);
  size_t first = rng.index(n);
  std::copy_n(data.data() + first * dim, dim, centroids.begin());
  for (size_t i = 0; i < n; ++i) {
    weight[i] = kern::l2_sq(data.data() + i * dim, centroids.data(), dim);
  }
  for (size_t c = 1; c < nlist; ++c) {
    double total = 0.0;
    for (double w : weight) total += w;
    size_t pick;
    if (total <= 0.0) {
      pick = rng.index(n);
    } else {
      double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        cum += weight[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
    }
    float* dst = centroids.data() + c * dim;
    std::copy_n(data.data() + pick * dim, dim, dst);
    for (size_t i = 0; i < n; ++i) {
      float d = kern::l2_sq(data.data() + i * dim, dst, dim);
      if (d < weight[i]) weight[i] = d;
    }
  }

  std::vector<size_t> assign(n, 0);
  std::vector<double> sums(nlist * dim);
  std::vector<size_t> counts(nlist);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 25; ++iter) {
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const float* row = data.data() + i * dim;
      float best = std::numeric_limits<float>::infinity();
      size_t best_c = 0;
      for (size_t c = 0; c < nlist; ++c) {
        float d = kern::l2_sq(row, centroids.data() + c * dim, dim);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assign[i] = best_c;
      inertia += best;
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < n; ++i) {
      const float* row = data.data() + i * dim;
      double* sum = sums.data() + assign[i] * dim;
      for (size_t j = 0; j < dim; ++j) sum[j] += row[j];
      ++counts[assign[i]];
    }
    for (size_t c = 0; c < nlist; ++c) {
      if (counts[c] == 0) continue;  // keep the previous centroid
      float* dst = centroids.data() + c * dim;
      for (size_t j = 0; j < dim; ++j) {
        dst[j] = static_cast<float>(sums[c * dim + j] /
                                    static_cast<double>(counts[c]));
      }
    }

    if (inertia == 0.0) break;
    if (std::isfinite(prev_inertia) &&
        std::abs(prev_inertia - inertia) / prev_inertia < 1e-4) {
      break;
    }
    prev_inertia = inertia;
  }
  return centroids;
}

}  // namespace

IvfIndex IvfIndex::build(std::vector<std::string> ids,
                         std::vector<float> matrix, size_t dim, size_t nlist,
                         uint64_t kmeans_seed, size_t nprobe_default) {
  if (dim == 0) throw DataError("index dimension must be >= 1");
  if (matrix.size() != ids.size() * dim) {
    throw DataError("matrix size does not match ids * dim");
  }
  if (nlist < 1) throw ConfigError("nlist must be >= 1");
  if (ids.size() < nlist) {
    throw DataError("ivf needs n >= nlist (" + std::to_string(ids.size()) +
                    " < " + std::to_string(nlist) + ")");
  }
  if (nprobe_default < 1 || nprobe_default > nlist) {
    throw ConfigError("nprobe_default out of range");
  }
  check_unique_ids(ids);
  check_unit_rows(matrix, ids.size(), dim, ids);

  IvfIndex index;
  index.dim_ = dim;
  index.nprobe_default_ = nprobe_default;
  index.kmeans_seed_ = kmeans_seed;
  index.centroids_ = run_kmeans(matrix, ids.size(), dim, nlist, kmeans_seed);
  index.lists_.resize(nlist);
  for (size_t i = 0; i < ids.size(); ++i) {
    const float* row = matrix.data() + i * dim;
    float best = std::numeric_limits<float>::infinity();
    size_t best_c = 0;
    for (size_t c = 0; c < nlist; ++c) {
      float d = kern::l2_sq(row, index.centroids_.data() + c * dim, dim);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    index.lists_[best_c].push_back(i);
  }
  index.ids_ = std::move(ids);
  index.data_ = std::move(matrix);
  return index;
}

IvfIndex IvfIndex::build(const EmbeddingSet& set, size_t nlist,
                         uint64_t kmeans_seed, size_t nprobe_default) {
  return build(set.ids, set.data, set.dim, nlist, kmeans_seed, nprobe_default);
}

std::vector<Neighbor> IvfIndex::search(
    std::span<const float> query, size_t k, size_t nprobe,
    const std::unordered_set<std::string>& exclude) const {
  if (nprobe < 1 || nprobe > lists_.size()) {
    throw ConfigError("nprobe " + std::to_string(nprobe) +
                      " out of range 1.." + std::to_string(lists_.size()));
  }
  check_query(query, dim_, k);

  // Rank centroids by (distance, index).
  size_t nlist = lists_.size();
  std::vector<float> cdist(nlist);
  kern::l2_sq_batch(query.data(), centroids_.data(), nlist, dim_,
                    cdist.data());
  std::vector<size_t> order(nlist);
  for (size_t c = 0; c < nlist; ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cdist[a] != cdist[b]) return cdist[a] < cdist[b];
    return a < b;
  });

  std::vector<uint64_t> candidates;
  for (size_t p = 0; p < nprobe; ++p) {
    const auto& list = lists_[order[p]];
    candidates.insert(candidates.end(), list.begin(), list.end());
  }
  std::vector<float> dist(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    dist[i] = kern::l2_sq(query.data(), data_.data() + candidates[i] * dim_,
                          dim_);
  }
  return select_top_k(candidates, dist, ids_, k, exclude);
}

// ---------------------------------------------------------------------------
// AnyIndex helpers

std::vector<Neighbor> search_any(const AnyIndex& index,
                                 std::span<const float> query, size_t k,
                                 const std::unordered_set<std::string>&
                                     exclude) {
  if (const auto* flat = std::get_if<FlatIndex>(&index)) {
    return flat->search(query, k, exclude);
  }
  const auto& ivf = std::get<IvfIndex>(index);
  return ivf.search(query, k, ivf.nprobe_default(), exclude);
}

size_t index_size(const AnyIndex& index) {
  return std::visit([](const auto& idx) { return idx.size(); }, index);
}

size_t index_dim(const AnyIndex& index) {
  return std::visit([](const auto& idx) { return idx.dim(); }, index);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kIndexMagic[4] = {'E', 'I', 'D', 'X'};
constexpr uint32_t kIndexVersion = 1;

}  // namespace

namespace detail {
struct IndexIO {
  static IvfIndex load_ivf(std::istream& in, const std::string& path);
};
}  // namespace detail

namespace {

void write_matrix(std::ostream& out, size_t n, size_t dim,
                  const std::vector<float>& data) {
  detail::write_u64(out, n);
  detail::write_u32(out, static_cast<uint32_t>(dim));
  detail::write_f32_block(out, data.data(), n * dim);
}

std::vector<float> read_matrix(std::istream& in, size_t& n, size_t& dim,
                               const std::string& what) {
  n = static_cast<size_t>(detail::read_u64(in, what + " row count"));
  dim = detail::read_u32(in, what + " dimension");
  if (dim == 0) throw DataError("zero dimension in " + what);
  std::vector<float> data(n * dim);
  detail::read_f32_block(in, data.data(), data.size(), what);
  return data;
}

}  // namespace

void save_index(const AnyIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write index file: " + path);
  out.write(kIndexMagic, 4);
  detail::write_u32(out, kIndexVersion);

  if (const auto* flat = std::get_if<FlatIndex>(&index)) {
    out.put(0);
    write_matrix(out, flat->size(), flat->dim(), flat->matrix());
    if (!out) throw DataError("write failed: " + path);
    detail::write_ids_sidecar(path + ".ids", flat->ids());
    return;
  }
  const auto& ivf = std::get<IvfIndex>(index);
  out.put(1);
  detail::write_u32(out, static_cast<uint32_t>(ivf.nlist()));
  detail::write_u32(out, static_cast<uint32_t>(ivf.nprobe_default()));
  detail::write_u64(out, ivf.kmeans_seed());
  write_matrix(out, ivf.nlist(), ivf.dim(), ivf.centroids());
  write_matrix(out, ivf.size(), ivf.dim(), ivf.matrix());
  for (const auto& list : ivf.lists()) {
    detail::write_u64(out, list.size());
    for (uint64_t row : list) detail::write_u64(out, row);
  }
  if (!out) throw DataError("write failed: " + path);
  detail::write_ids_sidecar(path + ".ids", ivf.ids());
}

AnyIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kIndexMagic, 4) != 0) {
    throw DataError("bad magic in index file: " + path);
  }
  uint32_t version = detail::read_u32(in, "index version");
  if (version != kIndexVersion) {
    throw DataError("unsupported index version " + std::to_string(version) +
                    " in " + path);
  }
  int kind = in.get();
  if (kind != 0 && kind != 1) {
    throw DataError("unknown index kind in " + path);
  }

  if (kind == 0) {
    size_t n = 0, dim = 0;
    std::vector<float> data = read_matrix(in, n, dim, "flat index payload");
    std::vector<std::string> ids = detail::read_ids_sidecar(path + ".ids", n);
    return FlatIndex::build(std::move(ids), std::move(data), dim);
  }

  return detail::IndexIO::load_ivf(in, path);
}

namespace detail {

IvfIndex IndexIO::load_ivf(std::istream& in, const std::string& path) {
  uint32_t nlist = detail::read_u32(in, "nlist");
  uint32_t nprobe = detail::read_u32(in, "nprobe_default");
  uint64_t seed = detail::read_u64(in, "kmeans seed");
  size_t cn = 0, cdim = 0;
  std::vector<float> centroids = read_matrix(in, cn, cdim, "ivf centroids");
  if (cn != nlist) throw DataError("centroid count mismatch in " + path);
  size_t n = 0, dim = 0;
  std::vector<float> data = read_matrix(in, n, dim, "ivf payload");
  if (dim != cdim) throw DataError("dimension mismatch in " + path);
  if (nprobe < 1 || nprobe > nlist) {
    throw DataError("nprobe_default out of range in " + path);
  }

  IvfIndex index;
  index.dim_ = dim;
  index.nprobe_default_ = nprobe;
  index.kmeans_seed_ = seed;
  index.centroids_ = std::move(centroids);
  index.lists_.resize(nlist);
  size_t total = 0;
  for (uint32_t c = 0; c < nlist; ++c) {
    uint64_t count = detail::read_u64(in, "ivf list length");
    if (count > n) throw DataError("corrupt list length in " + path);
    index.lists_[c].resize(count);
    for (uint64_t i = 0; i < count; ++i) {
      uint64_t row = detail::read_u64(in, "ivf list entry");
      if (row >= n) throw DataError("ivf row index out of range in " + path);
      index.lists_[c][i] = row;
    }
    total += count;
  }
  if (total != n) {
    throw DataError("ivf lists cover " + std::to_string(total) +
                    " rows, expected " + std::to_string(n));
  }
  index.ids_ = detail::read_ids_sidecar(path + ".ids", n);
  check_unique_ids(index.ids_);
  index.data_ = std::move(data);
  return index;
}

}  // namespace detail

}  // namespace ecgregen
