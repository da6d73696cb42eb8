#include "ecgregen/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecgregen/errors.hpp"
#include "ecgregen/rng.hpp"

namespace ecgregen {

namespace {

void validate_config(const FeaturizerConfig& cfg) {
  if (cfg.d < 1) throw ConfigError("featurizer d must be >= 1");
  if (cfg.band_edges_hz.size() < 2) {
    throw ConfigError("band_edges_hz needs at least two edges");
  }
  for (size_t i = 0; i + 1 < cfg.band_edges_hz.size(); ++i) {
    if (!(cfg.band_edges_hz[i] < cfg.band_edges_hz[i + 1])) {
      throw ConfigError("band_edges_hz must be strictly increasing");
    }
  }
  if (!(cfg.band_edges_hz.front() > 0.f)) {
    throw ConfigError("band edges must be positive");
  }
  if (!(cfg.peak_refractory_ms > 0.f)) {
    throw ConfigError("peak_refractory_ms must be positive");
  }
}

void validate_record(const EcgRecord& record, const FeaturizerConfig& cfg) {
  if (record.rows < 1 || record.cols < 1) {
    throw DataError("record '" + record.id + "' has empty signal");
  }
  if (!(record.sample_rate_hz > 0.f)) {
    throw DataError("record '" + record.id + "' has non-positive sample rate");
  }
  if (record.sample_rate_hz <= 2.f * cfg.band_edges_hz.back()) {
    throw ConfigError("sample rate " + std::to_string(record.sample_rate_hz) +
                      " Hz too low for top band edge " +
                      std::to_string(cfg.band_edges_hz.back()) + " Hz");
  }
}

/// Power spectrum mass of the DFT bins whose frequency k*fs/L falls in
/// [lo, hi). Direct per-bin summation with a rotation recurrence; bins start
/// at k = 1 so a constant offset contributes nothing.
double band_power(std::span<const float> lead, float fs, float lo, float hi) {
  size_t n = lead.size();
  double bin_hz = static_cast<double>(fs) / static_cast<double>(n);
  size_t k_lo = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(static_cast<double>(lo) / bin_hz)));
  double power = 0.0;
  for (size_t k = k_lo; static_cast<double>(k) * bin_hz <
                        static_cast<double>(hi) && k <= n / 2; ++k) {
    double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                   static_cast<double>(n);
    double wr = std::cos(angle), wi = std::sin(angle);
    double cr = 1.0, ci = 0.0;  // rotator e^{-2*pi*i*k*t/n}
    double re = 0.0, im = 0.0;
    for (size_t t = 0; t < n; ++t) {
      re += lead[t] * cr;
      im += lead[t] * ci;
      double nr = cr * wr - ci * wi;
      ci = cr * wi + ci * wr;
      cr = nr;
    }
    power += re * re + im * im;
  }
  return power;
}

}  // namespace

std::vector<size_t> detect_r_peaks(std::span<const float> lead,
                                   float sample_rate_hz, float refractory_ms) {
  std::vector<size_t> peaks;
  size_t n = lead.size();
  if (n < 2) return peaks;

  double mean = 0.0;
  for (float v : lead) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> sq(n);
  double max_sq = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double y = lead[i] - mean;
    sq[i] = y * y;
    max_sq = std::max(max_sq, sq[i]);
  }
  if (max_sq == 0.0) return peaks;
  double threshold = 0.6 * max_sq;

  size_t refractory = static_cast<size_t>(std::llround(
      static_cast<double>(refractory_ms) / 1000.0 * sample_rate_hz));
  bool have_last = false;
  size_t last = 0;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (sq[i] <= threshold) continue;
    if (!(sq[i] > sq[i - 1] && sq[i] >= sq[i + 1])) continue;
    if (have_last && i - last < refractory) continue;
    peaks.push_back(i);
    last = i;
    have_last = true;
  }
  return peaks;
}

std::vector<double> raw_features(const EcgRecord& record,
                                 const FeaturizerConfig& cfg) {
  validate_config(cfg);
  validate_record(record, cfg);

  size_t n_bands = cfg.band_edges_hz.size() - 1;
  std::vector<double> features;
  features.reserve(record.cols * (6 + n_bands) + 2);

  for (size_t c = 0; c < record.cols; ++c) {
    std::vector<float> lead = record.lead(c);
    size_t n = lead.size();
    double mean = 0.0, min_v = lead[0], max_v = lead[0], sq_sum = 0.0;
    for (float v : lead) {
      mean += v;
      min_v = std::min<double>(min_v, v);
      max_v = std::max<double>(max_v, v);
      sq_sum += static_cast<double>(v) * v;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (float v : lead) {
      double d = v - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    double rms = std::sqrt(sq_sum / static_cast<double>(n));

    size_t crossings = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
      if ((lead[i] - mean) * (lead[i + 1] - mean) < 0.0) ++crossings;
    }
    double zcr = n > 1 ? static_cast<double>(crossings) /
                             static_cast<double>(n - 1)
                       : 0.0;

    features.push_back(mean);
    features.push_back(std::sqrt(var));
    features.push_back(min_v);
    features.push_back(max_v);
    features.push_back(rms);
    features.push_back(zcr);

    std::vector<double> powers(n_bands);
    double total = 0.0;
    for (size_t b = 0; b < n_bands; ++b) {
      powers[b] = band_power(lead, record.sample_rate_hz,
                             cfg.band_edges_hz[b], cfg.band_edges_hz[b + 1]);
      total += powers[b];
    }
    for (size_t b = 0; b < n_bands; ++b) {
      features.push_back(total > 0.0 ? powers[b] / total : 0.0);
    }
  }

  std::vector<float> lead0 = record.lead(0);
  std::vector<size_t> peaks =
      detect_r_peaks(lead0, record.sample_rate_hz, cfg.peak_refractory_ms);
  double hr_bpm = 0.0, rr_std_ms = 0.0;
  if (peaks.size() >= 2) {
    std::vector<double> rr(peaks.size() - 1);
    double rr_mean = 0.0;
    for (size_t i = 0; i + 1 < peaks.size(); ++i) {
      rr[i] = static_cast<double>(peaks[i + 1] - peaks[i]) /
              record.sample_rate_hz;
      rr_mean += rr[i];
    }
    rr_mean /= static_cast<double>(rr.size());
    hr_bpm = 60.0 / rr_mean;
    double var = 0.0;
    for (double v : rr) var += (v - rr_mean) * (v - rr_mean);
    var /= static_cast<double>(rr.size());
    rr_std_ms = std::sqrt(var) * 1000.0;
  }
  features.push_back(hr_bpm);
  features.push_back(rr_std_ms);
  return features;
}

Featurizer::Featurizer(FeaturizerConfig cfg) : cfg_(std::move(cfg)) {
  validate_config(cfg_);
}

const std::vector<float>& Featurizer::projection(size_t n_features) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = projection_cache_.find(n_features);
  if (it != projection_cache_.end()) return it->second;

  std::vector<float> matrix(cfg_.d * n_features);
  SplitMix64 rng(cfg_.projection_seed);
  for (size_t i = 0; i < cfg_.d; ++i) {
    for (size_t j = 0; j < n_features; ++j) {
      matrix[i * n_features + j] = static_cast<float>(rng.normal());
    }
  }
  return projection_cache_.emplace(n_features, std::move(matrix))
      .first->second;
}

Embedding Featurizer::embed(const EcgRecord& record) const {
  std::vector<double> features = raw_features(record, cfg_);
  bool all_zero = true;
  for (double f : features) {
    if (f != 0.0) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) {
    throw DataError("degenerate signal: record '" + record.id +
                    "' has an all-zero feature vector");
  }

  const std::vector<float>& proj = projection(features.size());
  size_t f_count = features.size();
  std::vector<double> projected(cfg_.d);
  for (size_t i = 0; i < cfg_.d; ++i) {
    double acc = 0.0;
    const float* row = proj.data() + i * f_count;
    for (size_t j = 0; j < f_count; ++j) acc += row[j] * features[j];
    projected[i] = acc;
  }
  double norm_sq = 0.0;
  for (double v : projected) norm_sq += v * v;
  double norm = std::sqrt(norm_sq);
  if (norm == 0.0) {
    throw DataError("degenerate signal: record '" + record.id +
                    "' projects to the zero vector");
  }

  Embedding e;
  e.id = record.id;
  e.vec.resize(cfg_.d);
  for (size_t i = 0; i < cfg_.d; ++i) {
    e.vec[i] = static_cast<float>(projected[i] / norm);
  }
  return e;
}

}  // namespace ecgregen
