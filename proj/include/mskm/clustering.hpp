#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mskm/core.hpp"
#include "mskm/volio.hpp"

namespace mskm {

struct KMeansConfig {
  int k = 2;
  int max_iters = 100;  // M, centroid updates per replicate
  int replicates = 5;   // R, independent restarts; best objective wins
  uint64_t seed = 0;
  int threads = 1;
};

// Distance evaluations, split by phase so the closed-form bounds from the
// complexity model can be checked exactly.
struct OpCounts {
  uint64_t distance = 0;      // assignment-phase row<->centroid evaluations
  uint64_t seeding = 0;       // k-means++ row<->seed evaluations
  uint64_t merge_update = 0;  // hierarchical linkage updates

  OpCounts& operator+=(const OpCounts& o) {
    distance += o.distance;
    seeding += o.seeding;
    merge_update += o.merge_update;
    return *this;
  }
};

struct KMeansResult {
  std::vector<uint32_t> assignments;             // per row, 1..k
  std::vector<std::vector<double>> centroids;    // k x T, raw space
  double objective = 0.0;                        // sum of assigned distances
  int iters_used = 0;                            // winning replicate
  OpCounts ops;                                  // summed over replicates
  uint64_t ledger_ops = 0;                       // independent k*rows-per-pass tally
  std::vector<double> objective_trace;           // winning replicate, per pass
};

struct MultistageConfig {
  double ct = 0.7;  // correlation threshold, in (0,1)
  int ns = 7;       // stages in the hierarchy, >= 1
  KMeansConfig kmeans{.k = 2};
};

struct Parcellation {
  LabelVolume labels;
  uint32_t k = 0;
  std::vector<std::vector<double>> representatives;  // K x T, raw space
  std::optional<HierarchyTree> tree;                 // absent for baselines
  // Pre-merge cluster directions (unit norm, zero mean), indexed by the
  // tree's cluster numbers; the merge pass correlated exactly these.
  std::vector<TimeSeries> pre_merge_directions;
  OpCounts ops;
  uint64_t ledger_ops = 0;
  double objective = 0.0;  // k-means objective where applicable
};

// k-means++ seeding with squared correlation distance weights. Returns k
// distinct row indices; if every remaining candidate is at distance 0 the
// pick falls back to a uniform choice among unchosen rows.
std::vector<uint32_t> kmeans_pp_seed(const TimeSeriesMatrix& data, int k, Rng& rng,
                                     OpCounts* ops = nullptr);

// Lloyd iterations in normalized space with correlation distance; centroids
// are reported in raw space as the mean of their members' raw series.
KMeansResult kmeans(const TimeSeriesMatrix& data, const KMeansConfig& cfg);

struct SplitResult {
  std::vector<uint32_t> rows_a, rows_b;  // rows_a holds the smallest member index
  TimeSeries centroid_a, centroid_b;     // raw space; empty child -> empty series
  double child_correlation = 1.0;        // 1 when a child comes back empty
};

// One k = 2 split of the given member rows.
SplitResult binary_split(const TimeSeriesMatrix& data,
                         const std::vector<uint32_t>& member_rows,
                         const KMeansConfig& cfg, OpCounts* ops = nullptr,
                         uint64_t* ledger = nullptr);

// The multistage algorithm: breadth-first binary splits until children
// correlate above ct or the stage budget runs out, then a union-find merge of
// converged clusters whose centroids correlate at or above ct.
Parcellation multistage_cluster(const TimeSeriesMatrix& data,
                                const VolumeGeometry& geometry,
                                const MultistageConfig& cfg);

// Plain k-means baseline; labels compacted if a cluster ends up empty.
Parcellation simple_kmeans(const TimeSeriesMatrix& data,
                           const VolumeGeometry& geometry, int k,
                           const KMeansConfig& cfg);

// Agglomerative baseline: average linkage over correlation distance via the
// nearest-neighbor chain, dendrogram cut at k clusters. Refuses to build the
// distance matrix above guard_n rows.
Parcellation hierarchical_cluster(const TimeSeriesMatrix& data,
                                  const VolumeGeometry& geometry, int k,
                                  std::size_t guard_n = 20000);

}  // namespace mskm
