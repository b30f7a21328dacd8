#include "mskm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <cmath>
#include <numeric>

#include "mskm/metrics.hpp"
#include "mskm/preprocess.hpp"

namespace mskm {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double now_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return double(ts.tv_sec) + double(ts.tv_nsec) * 1e-9;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "simple") return Algorithm::Simple;
  if (name == "hier" || name == "hierarchical") return Algorithm::Hierarchical;
  if (name == "multistage") return Algorithm::Multistage;
  throw_invalid("unknown algorithm '" + name + "' (simple|hier|multistage)");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Simple: return "simple";
    case Algorithm::Hierarchical: return "hierarchical";
    case Algorithm::Multistage: return "multistage";
  }
  return "?";
}

uint64_t predicted_ops(Algorithm a, uint64_t n, uint64_t k, uint64_t r, uint64_t m,
                       uint64_t ns) {
  if (n == 0) throw_invalid("predicted_ops: n must be positive");
  switch (a) {
    case Algorithm::Simple:
      if (k == 0 || r == 0 || m == 0) throw_invalid("predicted_ops: k, r, m must be positive");
      return r * m * k * n;
    case Algorithm::Hierarchical:
      return n * (n - 1) / 2;
    case Algorithm::Multistage:
      if (ns == 0 || r == 0 || m == 0) throw_invalid("predicted_ops: ns, r, m must be positive");
      return 2 * ns * r * m * n;
  }
  throw_invalid("predicted_ops: unknown algorithm");
}

ScalingSweep run_scaling_sweep(const ScalingConfig& cfg) {
  if (cfg.sizes.size() < 4) throw_invalid("run_scaling_sweep: need at least 4 sizes");
  if (!std::is_sorted(cfg.sizes.begin(), cfg.sizes.end()))
    throw_invalid("run_scaling_sweep: sizes must be ascending");
  if (cfg.sizes.back() < 8 * cfg.sizes.front())
    throw_invalid("run_scaling_sweep: sizes must span at least an 8x range");
  if (cfg.repeats < 1) throw_invalid("run_scaling_sweep: repeats must be >= 1");

  ScalingSweep sweep;
  std::vector<double> log_n[3], log_t[3];

  for (std::size_t size_idx = 0; size_idx < cfg.sizes.size(); ++size_idx) {
    const std::size_t n = cfg.sizes[size_idx];
    const TimeSeriesMatrix data =
        random_series(n, cfg.t_points, cfg.seed + 1000 * size_idx);
    VolumeGeometry geom{uint32_t(n), 1, 1, 1.f, 1.f, 1.f, 1.f};

    for (Algorithm algo : {Algorithm::Simple, Algorithm::Hierarchical,
                           Algorithm::Multistage}) {
      if (algo == Algorithm::Hierarchical && n > cfg.hier_guard) {
        sweep.hierarchical_skipped = true;
        continue;
      }
      BenchResult res;
      res.algorithm = algo;
      res.n = n;
      res.repeats = cfg.repeats;
      KMeansConfig kc;
      kc.replicates = cfg.replicates;
      kc.max_iters = cfg.max_iters;
      kc.seed = cfg.seed;
      kc.threads = 1;  // benchmarks run serially

      double total = 0.0, total_cpu = 0.0;
      // Warm-up run discarded, then timed repeats of the clustering call only.
      for (uint32_t rep = 0; rep <= cfg.repeats; ++rep) {
        const double t0 = now_seconds();
        const double c0 = now_cpu_seconds();
        Parcellation p;
        switch (algo) {
          case Algorithm::Simple:
            res.k = uint32_t(cfg.simple_k);
            p = simple_kmeans(data, geom, cfg.simple_k, kc);
            break;
          case Algorithm::Hierarchical:
            res.k = uint32_t(cfg.simple_k);
            p = hierarchical_cluster(data, geom, cfg.simple_k, cfg.hier_guard);
            break;
          case Algorithm::Multistage: {
            MultistageConfig mc;
            mc.ct = cfg.ct;
            mc.ns = cfg.ns;
            mc.kmeans = kc;
            p = multistage_cluster(data, geom, mc);
            res.k = p.k;
            break;
          }
        }
        const double dt = now_seconds() - t0;
        const double dc = now_cpu_seconds() - c0;
        if (rep > 0) {
          total += dt;
          total_cpu += dc;
        }
        if (rep == 0) res.distance_ops = p.ops.distance;
      }
      res.mean_seconds = total / double(cfg.repeats);
      res.mean_cpu_seconds = total_cpu / double(cfg.repeats);
      res.predicted = predicted_ops(algo, n, uint64_t(cfg.simple_k),
                                    uint64_t(cfg.replicates), uint64_t(cfg.max_iters),
                                    uint64_t(cfg.ns));
      sweep.results.push_back(res);

      const int slot = int(algo);
      log_n[slot].push_back(std::log(double(n)));
      log_t[slot].push_back(std::log(std::max(res.mean_cpu_seconds, 1e-9)));
    }
  }

  if (log_n[int(Algorithm::Simple)].size() >= 2)
    sweep.slope_simple = line_fit(log_n[int(Algorithm::Simple)], log_t[int(Algorithm::Simple)]).first;
  if (log_n[int(Algorithm::Hierarchical)].size() >= 2)
    sweep.slope_hierarchical =
        line_fit(log_n[int(Algorithm::Hierarchical)], log_t[int(Algorithm::Hierarchical)]).first;
  if (log_n[int(Algorithm::Multistage)].size() >= 2)
    sweep.slope_multistage =
        line_fit(log_n[int(Algorithm::Multistage)], log_t[int(Algorithm::Multistage)]).first;
  return sweep;
}

SweepTable run_hyperparameter_sweep(const GridSpec& spec, const std::vector<double>& ct_values,
                                    const std::vector<int>& ns_values, uint32_t seeds,
                                    uint64_t seed0, const KMeansConfig& kmeans) {
  if (ct_values.empty() || ns_values.empty())
    throw_invalid("run_hyperparameter_sweep: empty grid");
  if (seeds < 1) throw_invalid("run_hyperparameter_sweep: seeds must be >= 1");

  SweepTable table;
  table.ct_values = ct_values;
  table.ns_values = ns_values;
  table.mean_k.assign(ct_values.size() * ns_values.size(), 0.0);

  for (uint32_t s = 0; s < seeds; ++s) {
    const GridData grid = generate_grid(spec, seed0 + s);
    MaskVolume all;
    all.geometry = grid.data.geometry;
    all.flags.assign(grid.data.geometry.voxel_count(), 1);
    const TimeSeriesMatrix data = vectorize(grid.data, all);

    for (std::size_t ci = 0; ci < ct_values.size(); ++ci) {
      for (std::size_t ni = 0; ni < ns_values.size(); ++ni) {
        MultistageConfig mc;
        mc.ct = ct_values[ci];
        mc.ns = ns_values[ni];
        mc.kmeans = kmeans;
        mc.kmeans.seed = kmeans.seed + s;
        const Parcellation p = multistage_cluster(data, grid.data.geometry, mc);
        table.mean_k[ci * ns_values.size() + ni] += double(p.k);
      }
    }
  }
  for (double& v : table.mean_k) v /= double(seeds);
  return table;
}

SmoothingSweep run_smoothing_sweep(const GridSpec& spec, const std::vector<double>& fwhm_mm,
                                   uint32_t seeds, uint64_t seed0,
                                   const MultistageConfig& cfg) {
  if (fwhm_mm.empty()) throw_invalid("run_smoothing_sweep: empty fwhm list");
  if (!std::is_sorted(fwhm_mm.begin(), fwhm_mm.end()))
    throw_invalid("run_smoothing_sweep: fwhm list must be ascending");

  SmoothingSweep sweep;
  sweep.points.resize(fwhm_mm.size());
  for (std::size_t i = 0; i < fwhm_mm.size(); ++i) sweep.points[i].fwhm_mm = fwhm_mm[i];

  for (uint32_t s = 0; s < seeds; ++s) {
    const GridData grid = generate_grid(spec, seed0 + s);
    MaskVolume all;
    all.geometry = grid.data.geometry;
    all.flags.assign(grid.data.geometry.voxel_count(), 1);

    for (std::size_t i = 0; i < fwhm_mm.size(); ++i) {
      const Volume4D smoothed =
          gaussian_smooth(grid.data, all, fwhm_mm[i], cfg.kmeans.threads);
      const TimeSeriesMatrix data = vectorize(smoothed, all);
      MultistageConfig mc = cfg;
      mc.kmeans.seed = cfg.kmeans.seed + s;
      const Parcellation p = multistage_cluster(data, grid.data.geometry, mc);
      const IntraClusterReport intra = intra_cluster_correlation(p, data);
      const SimilarityReport sim = compare_parcellations(p.labels, grid.truth);
      sweep.points[i].mean_k += double(p.k);
      sweep.points[i].mean_intra_corr += intra.grand_mean;
      sweep.points[i].mean_msi_vs_truth += sim.msi;
    }
  }
  std::vector<double> xs, ys_intra, ys_k;
  for (auto& pt : sweep.points) {
    pt.mean_k /= double(seeds);
    pt.mean_intra_corr /= double(seeds);
    pt.mean_msi_vs_truth /= double(seeds);
    xs.push_back(pt.fwhm_mm);
    ys_intra.push_back(pt.mean_intra_corr);
    ys_k.push_back(pt.mean_k);
  }
  if (xs.size() >= 2) {
    std::tie(sweep.intra_slope, sweep.intra_r2) = line_fit(xs, ys_intra);
    std::tie(sweep.k_slope, sweep.k_r2) = line_fit(xs, ys_k);
  }
  return sweep;
}

std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw_invalid("line_fit: need >= 2 points");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (vxx == 0.0) return {0.0, 0.0};
  const double slope = vxy / vxx;
  const double r2 = vyy == 0.0 ? 1.0 : (vxy * vxy) / (vxx * vyy);
  return {slope, r2};
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw_invalid("spearman: need >= 2 points");
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= double(x.size());
  my /= double(x.size());
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

}  // namespace mskm
