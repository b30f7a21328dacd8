#include "mskm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mskm {

namespace {

// label -> (dense index, voxel count); order by ascending label value.
std::map<uint32_t, std::size_t> cluster_index(const LabelVolume& v) {
  std::map<uint32_t, std::size_t> idx;
  for (uint32_t l : v.labels)
    if (l != 0) idx.emplace(l, 0);
  std::size_t i = 0;
  for (auto& [label, slot] : idx) slot = i++;
  return idx;
}

}  // namespace

std::pair<double, std::size_t> similarity_index(
    const std::vector<std::size_t>& alpha_set,
    const std::vector<std::vector<std::size_t>>& beta_sets) {
  if (alpha_set.empty() || beta_sets.empty())
    throw_invalid("similarity_index: empty cluster set");
  double best = -1.0;
  std::size_t best_j = 0;
  for (std::size_t j = 0; j < beta_sets.size(); ++j) {
    const auto& b = beta_sets[j];
    if (b.empty()) throw_invalid("similarity_index: empty cluster set");
    // Both sets sorted ascending: linear intersection count.
    std::size_t inter = 0, ia = 0, ib = 0;
    while (ia < alpha_set.size() && ib < b.size()) {
      if (alpha_set[ia] < b[ib])
        ++ia;
      else if (b[ib] < alpha_set[ia])
        ++ib;
      else {
        ++inter;
        ++ia;
        ++ib;
      }
    }
    const double si = std::sqrt(double(inter) * double(inter) /
                                (double(alpha_set.size()) * double(b.size())));
    if (si > best) {
      best = si;
      best_j = j;
    }
  }
  return {best, best_j};
}

SimilarityReport compare_parcellations(const LabelVolume& alpha, const LabelVolume& beta) {
  if (!alpha.geometry.same_dims(beta.geometry))
    throw_invalid(
        "compare_parcellations: volume dimensions differ; resample one of the "
        "inputs externally before comparing");

  const auto a_idx = cluster_index(alpha);
  const auto b_idx = cluster_index(beta);
  if (a_idx.empty() || b_idx.empty())
    throw_invalid("compare_parcellations: a volume has no labelled voxels");

  const std::size_t ka = a_idx.size(), kb = b_idx.size();
  std::vector<std::size_t> a_count(ka, 0), b_count(kb, 0);
  std::vector<std::size_t> joint(ka * kb, 0);
  for (std::size_t v = 0; v < alpha.labels.size(); ++v) {
    const uint32_t la = alpha.labels[v], lb = beta.labels[v];
    if (la != 0) ++a_count[a_idx.at(la)];
    if (lb != 0) ++b_count[b_idx.at(lb)];
    if (la != 0 && lb != 0) ++joint[a_idx.at(la) * kb + b_idx.at(lb)];
  }

  std::vector<uint32_t> b_labels(kb);
  for (const auto& [label, slot] : b_idx) b_labels[slot] = label;

  SimilarityReport rep;
  rep.per_cluster.reserve(ka);
  double sum = 0.0, mx = 0.0;
  for (const auto& [label, slot] : a_idx) {
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < kb; ++j) {
      const double inter = double(joint[slot * kb + j]);
      const double si =
          std::sqrt(inter * inter / (double(a_count[slot]) * double(b_count[j])));
      if (si > best) {
        best = si;
        best_j = j;
      }
    }
    rep.per_cluster.push_back({label, best, b_labels[best_j], a_count[slot]});
    sum += best;
    mx = std::max(mx, best);
  }
  rep.msi = mx;
  rep.mean_si = sum / double(ka);
  return rep;
}

IntraClusterReport intra_cluster_correlation(const Parcellation& p,
                                             const TimeSeriesMatrix& data) {
  if (p.labels.geometry.voxel_count() == 0 || data.rows == 0)
    throw Error(ErrorCode::EmptyInput, "intra_cluster_correlation: empty input");
  IntraClusterReport rep;
  const uint32_t k = p.k;
  rep.labels.resize(k);
  rep.mean_correlation.assign(k, 0.0);
  rep.sizes.assign(k, 0);
  for (uint32_t c = 0; c < k; ++c) rep.labels[c] = c + 1;

  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto& coord = data.index_map[r];
    const uint32_t label = p.labels.labels[p.labels.geometry.linear(coord.x, coord.y, coord.z)];
    if (label == 0 || label > k) continue;
    rep.mean_correlation[label - 1] +=
        pearson_correlation(data.row(r), p.representatives[label - 1]);
    ++rep.sizes[label - 1];
  }
  double grand = 0.0;
  std::size_t nonempty = 0;
  for (uint32_t c = 0; c < k; ++c) {
    if (rep.sizes[c] > 0) {
      rep.mean_correlation[c] /= double(rep.sizes[c]);
      grand += rep.mean_correlation[c];
      ++nonempty;
    }
  }
  rep.grand_mean = nonempty ? grand / double(nonempty) : 0.0;
  return rep;
}

IntraClusterReport intra_cluster_correlation(const LabelVolume& labels,
                                             const Volume4D& data) {
  if (!labels.geometry.same_dims(data.geometry))
    throw_invalid("intra_cluster_correlation: label and data dimensions differ");
  const auto idx = cluster_index(labels);
  if (idx.empty()) throw Error(ErrorCode::EmptyInput, "intra_cluster_correlation: no labels");

  const std::size_t nvox = data.geometry.voxel_count();
  // Representatives: mean member series per cluster.
  std::vector<TimeSeries> reps(idx.size(), TimeSeries(data.nt, 0.0));
  std::vector<std::size_t> sizes(idx.size(), 0);
  for (std::size_t v = 0; v < nvox; ++v) {
    const uint32_t l = labels.labels[v];
    if (l == 0) continue;
    const std::size_t slot = idx.at(l);
    ++sizes[slot];
    for (uint32_t t = 0; t < data.nt; ++t)
      reps[slot][t] += double(data.voxels[std::size_t(t) * nvox + v]);
  }
  for (std::size_t s = 0; s < reps.size(); ++s)
    for (double& x : reps[s]) x /= double(sizes[s]);

  IntraClusterReport rep;
  rep.labels.resize(idx.size());
  rep.mean_correlation.assign(idx.size(), 0.0);
  rep.sizes = sizes;
  for (const auto& [label, slot] : idx) rep.labels[slot] = label;

  TimeSeries voxel(data.nt);
  for (std::size_t v = 0; v < nvox; ++v) {
    const uint32_t l = labels.labels[v];
    if (l == 0) continue;
    const std::size_t slot = idx.at(l);
    for (uint32_t t = 0; t < data.nt; ++t)
      voxel[t] = double(data.voxels[std::size_t(t) * nvox + v]);
    rep.mean_correlation[slot] += pearson_correlation(voxel, reps[slot]);
  }
  double grand = 0.0;
  for (std::size_t s = 0; s < reps.size(); ++s) {
    rep.mean_correlation[s] /= double(sizes[s]);
    grand += rep.mean_correlation[s];
  }
  rep.grand_mean = grand / double(reps.size());
  return rep;
}

std::vector<TissueOverlapRow> tissue_overlap(const LabelVolume& p,
                                             const MaskVolume& gm,
                                             const MaskVolume& wm) {
  if (!p.geometry.same_dims(gm.geometry) || !p.geometry.same_dims(wm.geometry))
    throw_invalid("tissue_overlap: volume dimensions differ");
  const auto idx = cluster_index(p);
  std::vector<TissueOverlapRow> rows(idx.size());
  for (const auto& [label, slot] : idx) rows[slot].label = label;
  for (std::size_t v = 0; v < p.labels.size(); ++v) {
    const uint32_t l = p.labels[v];
    if (l == 0) continue;
    auto& row = rows[idx.at(l)];
    ++row.size;
    if (gm.flags[v]) row.gm_frac += 1.0;
    if (wm.flags[v]) row.wm_frac += 1.0;
  }
  for (auto& row : rows) {
    row.gm_frac /= double(row.size);
    row.wm_frac /= double(row.size);
  }
  std::sort(rows.begin(), rows.end(), [](const TissueOverlapRow& a, const TissueOverlapRow& b) {
    if (a.gm_frac != b.gm_frac) return a.gm_frac > b.gm_frac;
    return a.label < b.label;
  });
  return rows;
}

std::vector<TimeSeries> representatives_from_labels(const LabelVolume& labels,
                                                    const Volume4D& data) {
  if (!labels.geometry.same_dims(data.geometry))
    throw_invalid("representatives_from_labels: dimensions differ");
  const uint32_t k = labels.max_label();
  if (k == 0) throw Error(ErrorCode::EmptyInput, "representatives_from_labels: no labels");
  const std::size_t nvox = data.geometry.voxel_count();
  std::vector<TimeSeries> reps(k, TimeSeries(data.nt, 0.0));
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t v = 0; v < nvox; ++v) {
    const uint32_t l = labels.labels[v];
    if (l == 0) continue;
    ++sizes[l - 1];
    for (uint32_t t = 0; t < data.nt; ++t)
      reps[l - 1][t] += double(data.voxels[std::size_t(t) * nvox + v]);
  }
  for (uint32_t c = 0; c < k; ++c) {
    if (sizes[c] == 0)
      throw_invalid("representatives_from_labels: label " + std::to_string(c + 1) +
                    " has no voxels; labels must be contiguous 1..K");
    for (double& x : reps[c]) x /= double(sizes[c]);
  }
  return reps;
}

LabelVolume random_parcellation(const VolumeGeometry& geometry, uint32_t k, Rng& rng) {
  const std::size_t nvox = geometry.voxel_count();
  if (k < 1 || k > nvox) throw_invalid("random_parcellation: need 1 <= k <= voxel count");
  LabelVolume lv;
  lv.geometry = geometry;
  lv.labels.resize(nvox);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<uint8_t> seen(k + 1, 0);
    for (std::size_t v = 0; v < nvox; ++v) {
      const uint32_t l = uint32_t(rng.below(k)) + 1;
      lv.labels[v] = l;
      seen[l] = 1;
    }
    bool all = true;
    for (uint32_t l = 1; l <= k; ++l) all = all && seen[l];
    if (all) return lv;
  }
  throw Error(ErrorCode::Internal,
              "random_parcellation: could not realize all labels in 1000 draws");
}

}  // namespace mskm
