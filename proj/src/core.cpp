#include "mskm/core.hpp"

#include <algorithm>
#include <cmath>

namespace mskm {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline uint64_t splitmix64(uint64_t& x) {
  uint64_t z = (x += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
  uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

uint64_t Rng::next() {
  // xoshiro256++ step (Blackman & Vigna).
  const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw_invalid("Rng::below: n must be >= 1");
  const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const uint64_t r = next();
    if (r >= threshold) return r % n;
  }
}

double Rng::gaussian() {
  if (has_cached_gauss_) {
    has_cached_gauss_ = false;
    return cached_gauss_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_gauss_ = r * std::sin(theta);
  has_cached_gauss_ = true;
  return r * std::cos(theta);
}

Rng Rng::substream(uint64_t purpose, uint64_t index) const {
  uint64_t x = seed_ ^ (purpose * kGolden);
  uint64_t a = splitmix64(x);
  x = a ^ (index + kGolden);
  return Rng(splitmix64(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

TimeSeries normalize_for_correlation(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw_invalid("normalize_for_correlation: series length must be >= 2");

  double sum = 0.0;
  double max_abs = 0.0;
  for (double v : x) {
    sum += v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  const double mean = sum / static_cast<double>(n);

  TimeSeries out(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] - mean;
    sq += out[i] * out[i];
  }
  const double norm = std::sqrt(sq);
  // A flat series has no direction: define its normalized form as zero.
  if (norm == 0.0 || norm <= 1e-12 * max_abs) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) v /= norm;
  return out;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw_invalid("pearson_correlation: length mismatch");
  const TimeSeries zx = normalize_for_correlation(x);
  const TimeSeries zy = normalize_for_correlation(y);
  return std::clamp(dot(zx, zy), -1.0, 1.0);
}

double correlation_distance(std::span<const double> x, std::span<const double> y) {
  return 1.0 - pearson_correlation(x, y);
}

TimeSeries mean_series(const std::vector<std::span<const double>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "mean_series: empty input set");
  const std::size_t n = rows.front().size();
  TimeSeries out(n, 0.0);
  for (const auto& r : rows) {
    if (r.size() != n) throw_invalid("mean_series: length mismatch");
    for (std::size_t i = 0; i < n; ++i) out[i] += r[i];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : out) v *= inv;
  return out;
}

}  // namespace mskm
