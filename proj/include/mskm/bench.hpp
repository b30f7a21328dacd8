#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mskm/clustering.hpp"
#include "mskm/synth.hpp"

namespace mskm {

enum class Algorithm { Simple, Hierarchical, Multistage };

Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm a);

// Closed-form worst-case distance-computation counts:
//   simple        R * M * k * N
//   hierarchical  N * (N - 1) / 2
//   multistage    2 * NS * R * M * N
uint64_t predicted_ops(Algorithm a, uint64_t n, uint64_t k, uint64_t r, uint64_t m,
                       uint64_t ns);

struct BenchResult {
  Algorithm algorithm = Algorithm::Simple;
  std::size_t n = 0;
  double mean_seconds = 0.0;      // monotonic wall clock around the call
  double mean_cpu_seconds = 0.0;  // process CPU time; immune to preemption
  uint64_t distance_ops = 0;  // measured, matrix build only for hierarchical
  uint64_t predicted = 0;
  uint32_t repeats = 0;
  uint32_t k = 0;
};

struct ScalingConfig {
  std::vector<std::size_t> sizes;
  std::size_t t_points = 100;
  uint32_t repeats = 20;
  int simple_k = 10;
  double ct = 0.7;
  int ns = 7;
  int replicates = 5;
  int max_iters = 100;
  uint64_t seed = 0;
  int threads = 1;
  std::size_t hier_guard = 20000;
};

struct ScalingSweep {
  std::vector<BenchResult> results;
  // log-log least-squares slopes, fitted on CPU time (stable under host
  // contention; the runs are serial so it tracks the wall clock).
  double slope_simple = 0.0;
  double slope_hierarchical = 0.0;
  double slope_multistage = 0.0;
  bool hierarchical_skipped = false;
};

// Times the three algorithms on white-noise series of increasing size.
// One warm-up run per point is discarded; timing covers the clustering
// call only. Runs are serial regardless of the threads setting.
ScalingSweep run_scaling_sweep(const ScalingConfig& cfg);

struct SweepTable {
  std::vector<double> ct_values;
  std::vector<int> ns_values;
  std::vector<double> mean_k;  // ct-major: mean over seeds of the final K
};

// Final cluster counts over a (ct, ns) grid on noisy synthetic grids,
// averaged over `seeds` generator seeds.
SweepTable run_hyperparameter_sweep(const GridSpec& spec, const std::vector<double>& ct_values,
                                    const std::vector<int>& ns_values, uint32_t seeds,
                                    uint64_t seed0, const KMeansConfig& kmeans);

struct SmoothingPoint {
  double fwhm_mm = 0.0;
  double mean_k = 0.0;
  double mean_intra_corr = 0.0;
  double mean_msi_vs_truth = 0.0;
};

struct SmoothingSweep {
  std::vector<SmoothingPoint> points;
  double intra_slope = 0.0;  // straight-line fit of intra corr vs fwhm
  double intra_r2 = 0.0;
  double k_slope = 0.0;
  double k_r2 = 0.0;
};

// Smooth -> multistage -> homogeneity/K/similarity per kernel width, averaged
// over seeds.
SmoothingSweep run_smoothing_sweep(const GridSpec& spec, const std::vector<double>& fwhm_mm,
                                   uint32_t seeds, uint64_t seed0,
                                   const MultistageConfig& cfg);

// Least-squares straight line y = a + b x; returns {b, r_squared}.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mskm
