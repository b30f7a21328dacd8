#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mskm/core.hpp"
#include "mskm/volio.hpp"

namespace mskm {

// Sinusoid grid: each region carries one generator series plus white noise.
struct GridSpec {
  uint32_t width = 8;
  uint32_t height = 8;
  std::vector<uint32_t> region_map;  // width*height ids 1..R; empty -> default 6-region tiling
  uint32_t t_points = 50;
  double fs_hz = 10.0;
  std::vector<double> freqs_hz = {0.65, 0.7, 0.7, 0.8, 0.5, 0.9};
  std::vector<double> phases_rad;    // empty -> random per seed, one per region
  double snr = std::numeric_limits<double>::infinity();  // sigma_signal / sigma_noise
  double voxel_mm = 3.0;
};

// The default six-region tiling: two row bands (height split in half) times
// three column bands of widths 3/3/2 scaled to the grid width.
std::vector<uint32_t> default_region_map(uint32_t width, uint32_t height);

struct GridData {
  Volume4D data;          // width x height x 1 x t_points
  LabelVolume truth;      // region ids
  std::vector<double> phases_rad;  // phases actually used
  double noise_sigma = 0.0;        // per-region sigmas are reported in the sidecar
  std::vector<double> region_sigma;
};

GridData generate_grid(const GridSpec& spec, uint64_t seed);

// Block-design task: impulses at block onsets convolved with a lag-response
// vector inside a responding region, white noise everywhere.
struct TaskSpec {
  uint32_t n_blocks = 5;
  double on_s = 20.0;
  double off_s = 40.0;
  double pre_rest_s = 30.0;
  double post_rest_s = 0.0;  // the tail of the final off period
  double tr_s = 2.0;
  std::vector<double> hrf_true;  // empty -> built-in lag-response shape, peak 1
  double noise_sigma = 0.0;
  uint32_t width = 10;
  uint32_t height = 10;
  // Responding region: [x0, x0+w) x [y0, y0+h)
  uint32_t resp_x0 = 3, resp_y0 = 3, resp_w = 4, resp_h = 4;
  double voxel_mm = 3.0;
};

std::vector<double> default_hrf(std::size_t lags, double tr_s);

struct TaskData {
  Volume4D data;               // width x height x 1 x T
  MaskVolume responding;       // ground-truth responding voxels
  TimeSeries paradigm;         // boxcar, 1 during on TRs
  std::vector<uint32_t> onsets;  // block onset TR indices
  std::vector<double> hrf_true;
  uint32_t t_points = 0;
};

uint32_t task_t_points(const TaskSpec& spec);
TaskData generate_task(const TaskSpec& spec, uint64_t seed);

// White-noise series matrix for the timing benchmarks.
TimeSeriesMatrix random_series(std::size_t n_rows, std::size_t t_points, uint64_t seed);

}  // namespace mskm
