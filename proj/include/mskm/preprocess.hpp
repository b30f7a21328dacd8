#pragma once

#include <string>
#include <vector>

#include "mskm/core.hpp"
#include "mskm/volio.hpp"

namespace mskm {

struct PreprocessConfig {
  double mask_threshold = 0.0;   // applied to the temporal-mean volume
  double smooth_fwhm_mm = 0.0;
  int detrend_poly_order = 1;    // 0..10
  bool regress_global = true;
  int regress_top_pcs = 0;
  int threads = 1;
};

// Voxel is in-mask iff its temporal mean exceeds the threshold.
MaskVolume mask_from_threshold(const Volume4D& v, double threshold);

// Rows ordered x fastest, then y, then z, over in-mask voxels.
TimeSeriesMatrix vectorize(const Volume4D& v, const MaskVolume& m);

// Inverse of vectorize on the mask support; out-of-mask voxels are zero.
Volume4D devectorize(const TimeSeriesMatrix& x, const MaskVolume& m);

// Per-frame separable Gaussian, sigma = fwhm / (2*sqrt(2*ln 2) * voxel size)
// per axis, truncated at radius ceil(3*sigma). At mask and volume borders the
// kernel is renormalized over the in-mask, in-bounds neighbors, so constants
// are preserved. fwhm = 0 returns the input unchanged; out-of-mask voxels are
// never modified.
Volume4D gaussian_smooth(const Volume4D& v, const MaskVolume& m, double fwhm_mm,
                         int threads = 1);

struct RegressResult {
  TimeSeriesMatrix matrix;
  int regressors_used = 0;
  int regressors_dropped = 0;  // dropped as linearly dependent
  std::vector<std::string> warnings;
};

// Projects out polynomial drift (orders 0..p on [-1,1]), optionally the
// global mean series and the top-k temporal principal components of the
// row-demeaned matrix. The combined regressor set is orthonormalized first;
// dependent members are dropped with a warning.
RegressResult detrend_and_regress(const TimeSeriesMatrix& x, const PreprocessConfig& cfg);

}  // namespace mskm
