#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mskm/clustering.hpp"
#include "mskm/core.hpp"
#include "mskm/volio.hpp"

namespace mskm {

// FIR design: entry (t, j) = 1 iff t - onset = j for some onset, 0 <= j < L.
// The intercept, when enabled, is an extra all-ones column appended after the
// lag columns.
struct FirDesign {
  std::size_t t_len = 0;
  std::size_t lags = 0;
  bool intercept = true;
  std::vector<uint32_t> onsets;
  std::vector<double> matrix;  // t_len x (lags + intercept), row-major

  std::size_t cols() const { return lags + (intercept ? 1 : 0); }
  double at(std::size_t t, std::size_t c) const { return matrix[t * cols() + c]; }
};

FirDesign fir_design(std::size_t t_len, const std::vector<uint32_t>& onsets,
                     std::size_t lags, bool intercept = true);

struct HrfEstimate {
  std::vector<double> betas;       // one per lag, signal units
  std::optional<double> intercept;
  double residual_norm = 0.0;
  bool rank_deficient = false;
  int rank = 0;
};

// Minimum-norm least squares through a complete orthogonal decomposition;
// the residual is orthogonal to the design columns.
HrfEstimate fit_hrf(std::span<const double> y, const FirDesign& design);

struct ActivationEntry {
  uint32_t label = 0;
  double paradigm_correlation = 0.0;
  bool converged_early = false;  // all constituent leaves converged before the last stage
};

struct ActivationReport {
  std::vector<ActivationEntry> clusters;   // by label
  uint32_t primary = 0;                    // argmax correlation, ties -> lowest label
  std::vector<uint32_t> secondary;         // r >= threshold, early, not primary
  std::vector<uint32_t> anticorrelated;    // r <= -threshold
  double secondary_threshold = 0.4;
  bool tree_available = false;             // without a tree, secondary is unavailable
};

// Ranks clusters by temporal correlation of their representative series with
// the experiment paradigm. Secondary regions require the hierarchy tree: only
// clusters whose leaves all converged before the last stage qualify.
ActivationReport rank_activation(const std::vector<std::vector<double>>& representatives,
                                 const HierarchyTree* tree,
                                 std::span<const double> paradigm,
                                 double secondary_threshold = 0.4);

}  // namespace mskm
