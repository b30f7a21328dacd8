#pragma once

#include <cstdint>
#include <vector>

#include "mskm/clustering.hpp"
#include "mskm/core.hpp"
#include "mskm/volio.hpp"

namespace mskm {

struct ClusterSimilarity {
  uint32_t label = 0;       // cluster label in alpha
  double si = 0.0;          // best similarity index against beta
  uint32_t best_match = 0;  // beta label achieving it
  std::size_t size = 0;
};

struct SimilarityReport {
  std::vector<ClusterSimilarity> per_cluster;
  double msi = 0.0;      // max of per-cluster si
  double mean_si = 0.0;  // arithmetic mean of per-cluster si
};

// SI for one voxel set against a list of candidate sets:
// max_j sqrt(|a n b_j|^2 / (|a| * |b_j|)), ties resolved to the lowest j.
std::pair<double, std::size_t> similarity_index(
    const std::vector<std::size_t>& alpha_set,
    const std::vector<std::vector<std::size_t>>& beta_sets);

// Cluster-wise similarity of alpha against beta over two label volumes of
// identical dimensions. Background (label 0) voxels never contribute.
SimilarityReport compare_parcellations(const LabelVolume& alpha, const LabelVolume& beta);

struct IntraClusterReport {
  std::vector<uint32_t> labels;         // cluster id per entry
  std::vector<double> mean_correlation; // mean corr(member, representative)
  std::vector<std::size_t> sizes;
  double grand_mean = 0.0;              // average over clusters
};

// Mean correlation between each member voxel series and the cluster
// representative (the mean member series), per cluster.
IntraClusterReport intra_cluster_correlation(const Parcellation& p,
                                             const TimeSeriesMatrix& data);
IntraClusterReport intra_cluster_correlation(const LabelVolume& labels,
                                             const Volume4D& data);

struct TissueOverlapRow {
  uint32_t label = 0;
  double gm_frac = 0.0;
  double wm_frac = 0.0;
  std::size_t size = 0;
};

// Per-cluster gray/white matter overlap fractions, sorted by gm_frac
// descending (cluster id breaks ties).
std::vector<TissueOverlapRow> tissue_overlap(const LabelVolume& p,
                                             const MaskVolume& gm,
                                             const MaskVolume& wm);

// Uniform random labelling 1..k; resampled until every label occurs.
LabelVolume random_parcellation(const VolumeGeometry& geometry, uint32_t k, Rng& rng);

// Mean member series per label 1..K; requires contiguous labels.
std::vector<TimeSeries> representatives_from_labels(const LabelVolume& labels,
                                                    const Volume4D& data);

}  // namespace mskm
