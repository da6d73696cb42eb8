#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "ecgregen/corpus.hpp"

// Deterministic ECG embedding provider: hand-crafted waveform features
// projected to d dimensions by a seeded Gaussian random projection, then
// L2 normalized. embed() is a pure function of (signal bytes, config);
// identical inputs produce bit-identical vectors.

namespace ecgregen {

struct FeaturizerConfig {
  size_t d = 768;
  uint64_t projection_seed = 42;
  std::vector<float> band_edges_hz = {0.5f, 4.f, 8.f, 15.f, 30.f, 45.f};
  float peak_refractory_ms = 200.f;
};

/// R-peak candidates: local maxima of the squared, mean-removed signal
/// strictly above 0.6 * max(squared signal), kept greedily left to right so
/// successive peaks are at least the refractory interval apart. Ascending.
/// Inputs shorter than 2 samples yield an empty list.
std::vector<size_t> detect_r_peaks(std::span<const float> lead,
                                   float sample_rate_hz,
                                   float refractory_ms = 200.f);

/// Feature vector layout, fixed:
///   per lead, in lead order:
///     [0] mean  [1] population std  [2] min  [3] max  [4] RMS
///     [5] zero-cross rate of the mean-removed lead
///     [6..6+B) relative DFT band powers, B = |band_edges|-1
///       (each band's power over the summed power of all bands; 0 if the
///        total is zero)
///   then two global features from detect_r_peaks on lead 0:
///     heart rate bpm (0 when fewer than 2 peaks)
///     RR-interval population std in ms (0 when fewer than 2 intervals)
std::vector<double> raw_features(const EcgRecord& record,
                                 const FeaturizerConfig& cfg);

class Featurizer {
 public:
  explicit Featurizer(FeaturizerConfig cfg);  // ConfigError on bad config

  /// Projects raw features through a Gaussian matrix whose entries come
  /// from SplitMix64(projection_seed) in row-major order (one row per
  /// output dimension), then L2 normalizes. DataError("degenerate signal")
  /// when the feature vector is all zero.
  Embedding embed(const EcgRecord& record) const;

  const FeaturizerConfig& config() const { return cfg_; }

 private:
  const std::vector<float>& projection(size_t n_features) const;

  FeaturizerConfig cfg_;
  mutable std::mutex cache_mutex_;
  // Keyed by feature count; read-only after first use per key.
  mutable std::unordered_map<size_t, std::vector<float>> projection_cache_;
};

}  // namespace ecgregen
