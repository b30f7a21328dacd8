#include "mskm/synth.hpp"

#include <algorithm>
#include <cmath>

namespace mskm {

namespace {

constexpr uint64_t kPurposePhases = 11;
constexpr uint64_t kPurposePixelNoise = 12;

double sample_std(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double sq = 0.0;
  for (double v : x) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / double(x.size() - 1));
}

}  // namespace

std::vector<uint32_t> default_region_map(uint32_t width, uint32_t height) {
  // Column band widths in 3:3:2 proportion, rows halved.
  const uint32_t c0 = (width * 3 + 4) / 8;
  const uint32_t c1 = c0 + (width * 3 + 4) / 8;
  const uint32_t rows_top = height / 2;
  std::vector<uint32_t> map(std::size_t(width) * height);
  for (uint32_t y = 0; y < height; ++y)
    for (uint32_t x = 0; x < width; ++x) {
      const uint32_t band = x < c0 ? 0 : x < c1 ? 1 : 2;
      const uint32_t region = (y < rows_top ? 0 : 3) + band + 1;
      map[std::size_t(y) * width + x] = region;
    }
  return map;
}

GridData generate_grid(const GridSpec& spec, uint64_t seed) {
  if (spec.width == 0 || spec.height == 0 || spec.t_points < 2)
    throw_invalid("generate_grid: invalid grid dimensions");
  if (!(spec.fs_hz > 0.0)) throw_invalid("generate_grid: fs must be positive");
  if (!(spec.snr > 0.0)) throw_invalid("generate_grid: snr must be positive");

  std::vector<uint32_t> region_map =
      spec.region_map.empty() ? default_region_map(spec.width, spec.height) : spec.region_map;
  if (region_map.size() != std::size_t(spec.width) * spec.height)
    throw_invalid("generate_grid: region_map size does not match grid");

  const std::size_t n_regions = spec.freqs_hz.size();
  if (n_regions == 0) throw_invalid("generate_grid: no region frequencies");
  std::vector<uint8_t> present(n_regions + 1, 0);
  for (uint32_t r : region_map) {
    if (r < 1 || r > n_regions)
      throw_invalid("generate_grid: region_map id outside 1..R");
    present[r] = 1;
  }
  for (std::size_t r = 1; r <= n_regions; ++r)
    if (!present[r]) throw_invalid("generate_grid: region " + std::to_string(r) +
                                   " missing from region_map");

  Rng rng(seed);
  GridData out;
  out.phases_rad = spec.phases_rad;
  if (out.phases_rad.empty()) {
    Rng prng = rng.substream(kPurposePhases);
    out.phases_rad.resize(n_regions);
    for (double& p : out.phases_rad) p = prng.uniform() * 2.0 * M_PI;
  }
  if (out.phases_rad.size() != n_regions)
    throw_invalid("generate_grid: phases length must equal region count");

  // Noiseless generator series per region.
  std::vector<std::vector<double>> gen(n_regions, std::vector<double>(spec.t_points));
  out.region_sigma.resize(n_regions);
  const bool noisy = std::isfinite(spec.snr);
  for (std::size_t r = 0; r < n_regions; ++r) {
    for (uint32_t t = 0; t < spec.t_points; ++t)
      gen[r][t] = std::sin(2.0 * M_PI * spec.freqs_hz[r] * (double(t) / spec.fs_hz) +
                           out.phases_rad[r]);
    out.region_sigma[r] = noisy ? sample_std(gen[r]) / spec.snr : 0.0;
  }

  const uint32_t nx = spec.width, ny = spec.height;
  out.data.geometry = {nx, ny, 1, float(spec.voxel_mm), float(spec.voxel_mm),
                       float(spec.voxel_mm), float(1.0 / spec.fs_hz)};
  out.data.nt = spec.t_points;
  out.data.voxels.resize(std::size_t(nx) * ny * spec.t_points);
  out.truth.geometry = out.data.geometry;
  out.truth.labels.assign(region_map.begin(), region_map.end());

  const std::size_t nvox = std::size_t(nx) * ny;
  for (std::size_t p = 0; p < nvox; ++p) {
    const std::size_t r = region_map[p] - 1;
    // Per-pixel substream so generation is schedule independent.
    Rng prng = rng.substream(kPurposePixelNoise, uint64_t(p));
    for (uint32_t t = 0; t < spec.t_points; ++t) {
      double v = gen[r][t];
      if (noisy) v += out.region_sigma[r] * prng.gaussian();
      out.data.voxels[std::size_t(t) * nvox + p] = float(v);
    }
  }
  return out;
}

std::vector<double> default_hrf(std::size_t lags, double tr_s) {
  // Difference-of-gammas lag response, peak scaled to 1. Used only to
  // synthesize data; fitting stays model-free.
  std::vector<double> h(lags);
  double peak = 0.0;
  for (std::size_t i = 0; i < lags; ++i) {
    const double t = double(i) * tr_s;
    const double a1 = 6.0, a2 = 16.0;
    const double v = std::pow(t, a1 - 1.0) * std::exp(-t) / std::tgamma(a1) -
                     std::pow(t, a2 - 1.0) * std::exp(-t) / std::tgamma(a2) / 6.0;
    h[i] = v;
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0.0)
    for (double& v : h) v /= peak;
  return h;
}

uint32_t task_t_points(const TaskSpec& spec) {
  const double total_s =
      spec.pre_rest_s + double(spec.n_blocks) * (spec.on_s + spec.off_s) + spec.post_rest_s;
  const double t = total_s / spec.tr_s;
  if (!(t > 0.0) || std::abs(t - std::round(t)) > 1e-9)
    throw_invalid("generate_task: experiment length must be an integer number of TRs");
  return uint32_t(std::llround(t));
}

TaskData generate_task(const TaskSpec& spec, uint64_t seed) {
  if (spec.n_blocks == 0 || !(spec.tr_s > 0.0))
    throw_invalid("generate_task: invalid block layout");
  const uint32_t T = task_t_points(spec);
  const auto trs = [&](double s) { return uint32_t(std::llround(s / spec.tr_s)); };
  const uint32_t pre = trs(spec.pre_rest_s), on = trs(spec.on_s), off = trs(spec.off_s);
  if (on == 0) throw_invalid("generate_task: on period shorter than one TR");

  TaskData out;
  out.t_points = T;
  out.hrf_true = spec.hrf_true.empty() ? default_hrf(30, spec.tr_s) : spec.hrf_true;
  if (out.hrf_true.size() > std::size_t(on + off))
    throw_invalid("generate_task: hrf length exceeds one block period");

  out.paradigm.assign(T, 0.0);
  for (uint32_t b = 0; b < spec.n_blocks; ++b) {
    const uint32_t onset = pre + b * (on + off);
    out.onsets.push_back(onset);
    for (uint32_t t = onset; t < std::min(T, onset + on); ++t) out.paradigm[t] = 1.0;
  }

  // Noiseless response: impulses at onsets convolved with the lag response.
  std::vector<double> response(T, 0.0);
  for (uint32_t onset : out.onsets)
    for (std::size_t j = 0; j < out.hrf_true.size(); ++j)
      if (onset + j < T) response[onset + j] += out.hrf_true[j];

  const uint32_t nx = spec.width, ny = spec.height;
  if (spec.resp_x0 + spec.resp_w > nx || spec.resp_y0 + spec.resp_h > ny)
    throw_invalid("generate_task: responding region outside the grid");
  out.responding.geometry = {nx, ny, 1, float(spec.voxel_mm), float(spec.voxel_mm),
                             float(spec.voxel_mm), float(spec.tr_s)};
  out.responding.flags.assign(std::size_t(nx) * ny, 0);
  for (uint32_t y = spec.resp_y0; y < spec.resp_y0 + spec.resp_h; ++y)
    for (uint32_t x = spec.resp_x0; x < spec.resp_x0 + spec.resp_w; ++x)
      out.responding.flags[std::size_t(y) * nx + x] = 1;

  out.data.geometry = out.responding.geometry;
  out.data.nt = T;
  const std::size_t nvox = std::size_t(nx) * ny;
  out.data.voxels.resize(nvox * T);
  Rng rng(seed);
  for (std::size_t p = 0; p < nvox; ++p) {
    Rng prng = rng.substream(kPurposePixelNoise, uint64_t(p));
    const bool responds = out.responding.flags[p] != 0;
    for (uint32_t t = 0; t < T; ++t) {
      double v = responds ? response[t] : 0.0;
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * prng.gaussian();
      out.data.voxels[std::size_t(t) * nvox + p] = float(v);
    }
  }
  return out;
}

TimeSeriesMatrix random_series(std::size_t n_rows, std::size_t t_points, uint64_t seed) {
  if (n_rows == 0 || t_points < 2) throw_invalid("random_series: invalid shape");
  TimeSeriesMatrix m;
  m.rows = n_rows;
  m.cols = t_points;
  m.data.resize(n_rows * t_points);
  m.index_map.resize(n_rows);
  Rng rng(seed);
  for (std::size_t r = 0; r < n_rows; ++r) {
    Rng prng = rng.substream(kPurposePixelNoise, uint64_t(r));
    for (std::size_t t = 0; t < t_points; ++t) m.data[r * t_points + t] = prng.gaussian();
    m.index_map[r] = {uint32_t(r), 0, 0};
  }
  return m;
}

}  // namespace mskm
