#include "mskm/hrf.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace mskm {

FirDesign fir_design(std::size_t t_len, const std::vector<uint32_t>& onsets,
                     std::size_t lags, bool intercept) {
  if (onsets.empty()) throw_invalid("fir_design: no onsets");
  if (lags < 1) throw_invalid("fir_design: lags must be >= 1");
  for (uint32_t o : onsets)
    if (o >= t_len) throw_invalid("fir_design: onset " + std::to_string(o) +
                                  " outside [0, T)");
  FirDesign d;
  d.t_len = t_len;
  d.lags = lags;
  d.intercept = intercept;
  d.onsets = onsets;
  d.matrix.assign(t_len * d.cols(), 0.0);
  for (uint32_t o : onsets)
    for (std::size_t j = 0; j < lags; ++j)
      if (o + j < t_len) d.matrix[(o + j) * d.cols() + j] = 1.0;  // truncated at T
  if (intercept)
    for (std::size_t t = 0; t < t_len; ++t) d.matrix[t * d.cols() + lags] = 1.0;
  return d;
}

HrfEstimate fit_hrf(std::span<const double> y, const FirDesign& design) {
  if (y.size() != design.t_len)
    throw_invalid("fit_hrf: series length does not match the design");
  const Eigen::Index rows = Eigen::Index(design.t_len);
  const Eigen::Index cols = Eigen::Index(design.cols());
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index t = 0; t < rows; ++t)
    for (Eigen::Index c = 0; c < cols; ++c)
      X(t, c) = design.at(std::size_t(t), std::size_t(c));
  Eigen::VectorXd yv(rows);
  for (Eigen::Index t = 0; t < rows; ++t) yv(t) = y[std::size_t(t)];

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  Eigen::VectorXd beta = cod.solve(yv);  // minimum-norm solution

  HrfEstimate est;
  est.rank = int(cod.rank());
  est.rank_deficient = cod.rank() < cols;
  est.betas.assign(beta.data(), beta.data() + design.lags);
  if (design.intercept) est.intercept = beta(Eigen::Index(design.lags));
  est.residual_norm = (yv - X * beta).norm();
  return est;
}

ActivationReport rank_activation(const std::vector<std::vector<double>>& representatives,
                                 const HierarchyTree* tree,
                                 std::span<const double> paradigm,
                                 double secondary_threshold) {
  if (representatives.empty())
    throw Error(ErrorCode::EmptyInput, "rank_activation: no clusters");
  for (const auto& r : representatives)
    if (r.size() != paradigm.size())
      throw_invalid("rank_activation: representative and paradigm lengths differ");

  ActivationReport rep;
  rep.secondary_threshold = secondary_threshold;
  rep.tree_available = tree != nullptr;

  std::vector<bool> early(representatives.size(), false);
  if (tree) {
    if (tree->final_clusters.size() != representatives.size())
      throw_invalid("rank_activation: tree does not match the parcellation");
    for (std::size_t c = 0; c < representatives.size(); ++c) {
      bool all_early = true;
      for (int leaf : tree->final_clusters[c]) {
        const auto& node = tree->nodes.at(std::size_t(leaf));
        all_early = all_early && node.stage < tree->ns;
      }
      early[c] = all_early;
    }
  }

  double best = -2.0;
  for (std::size_t c = 0; c < representatives.size(); ++c) {
    const double r = pearson_correlation(representatives[c], paradigm);
    rep.clusters.push_back({uint32_t(c + 1), r, early[c]});
    if (r > best) {
      best = r;
      rep.primary = uint32_t(c + 1);
    }
  }
  for (const auto& e : rep.clusters) {
    if (e.label != rep.primary && e.paradigm_correlation >= secondary_threshold &&
        rep.tree_available && e.converged_early)
      rep.secondary.push_back(e.label);
    if (e.paradigm_correlation <= -secondary_threshold)
      rep.anticorrelated.push_back(e.label);
  }
  return rep;
}

}  // namespace mskm
