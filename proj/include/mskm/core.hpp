#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mskm/errors.hpp"

namespace mskm {

// A single voxel (or synthetic pixel) time series of length T.
using TimeSeries = std::vector<double>;

struct Coord3 {
  uint32_t x = 0, y = 0, z = 0;
  bool operator==(const Coord3&) const = default;
};

// N voxel time series of length T plus the voxel -> volume coordinate map.
// Rows are stored contiguously, row-major.
struct TimeSeriesMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;        // rows * cols
  std::vector<Coord3> index_map;   // one coordinate per row

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
};

// Deterministic 64-bit generator: xoshiro256++ seeded through splitmix64.
// The exact algorithm and the substream derivation are part of the
// reproducibility contract and are documented in docs/FORMATS.md.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next();
  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  // Unbiased uniform integer on [0, n), n >= 1, by rejection sampling.
  uint64_t below(uint64_t n);
  // Standard normal via Box-Muller; pairs generated, second value cached.
  double gaussian();

  // Independent child stream; (purpose, index) pairs must be unique per use
  // site. Derivation depends only on the original seed, never on how much of
  // this stream has been consumed.
  Rng substream(uint64_t purpose, uint64_t index = 0) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_ = 0;
  uint64_t state_[4] = {};
  double cached_gauss_ = 0.0;
  bool has_cached_gauss_ = false;
};

// (x - mean(x)) / ||x - mean(x)||_2; a constant series maps to the zero
// vector so that its correlation with anything is 0.
TimeSeries normalize_for_correlation(std::span<const double> x);

// Pearson correlation as the dot product of the normalized forms,
// clamped to [-1, 1]. Correlation with a constant series is 0.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

// 1 - pearson_correlation, in [0, 2].
double correlation_distance(std::span<const double> x, std::span<const double> y);

// Elementwise arithmetic mean of a non-empty set of equal-length series.
TimeSeries mean_series(const std::vector<std::span<const double>>& rows);

// Fixed ascending-index dot product (the summation order everything else in
// the library relies on for reproducibility).
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace mskm
