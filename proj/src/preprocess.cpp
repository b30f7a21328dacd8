#include "mskm/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "parallel.hpp"

namespace mskm {

namespace {

// fwhm = 2*sqrt(2*ln 2) * sigma
constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2*sqrt(2*ln2))

std::vector<double> gaussian_kernel(double sigma_vox, int& radius) {
  radius = int(std::ceil(3.0 * sigma_vox));
  std::vector<double> w(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    w[i + radius] = std::exp(-0.5 * double(i) * double(i) / (sigma_vox * sigma_vox));
  return w;
}

// One renormalized 1D pass along the given axis; in-mask voxels only.
void smooth_axis(const std::vector<double>& in, std::vector<double>& out,
                 const MaskVolume& m, const std::vector<double>& w, int radius,
                 int axis) {
  const auto& g = m.geometry;
  const int dims[3] = {int(g.nx), int(g.ny), int(g.nz)};
  const std::size_t strides[3] = {1, g.nx, std::size_t(g.nx) * g.ny};
  const int len = dims[axis];
  const std::size_t stride = strides[axis];

  for (int z = 0; z < int(g.nz); ++z) {
    for (int y = 0; y < int(g.ny); ++y) {
      for (int x = 0; x < int(g.nx); ++x) {
        const std::size_t idx = g.linear(uint32_t(x), uint32_t(y), uint32_t(z));
        if (!m.flags[idx]) {
          out[idx] = in[idx];
          continue;
        }
        const int pos = axis == 0 ? x : axis == 1 ? y : z;
        double num = 0.0, den = 0.0;
        const int lo = std::max(-radius, -pos);
        const int hi = std::min(radius, len - 1 - pos);
        for (int i = lo; i <= hi; ++i) {
          const std::size_t nidx = idx + std::size_t(i) * stride;
          if (!m.flags[nidx]) continue;
          num += w[i + radius] * in[nidx];
          den += w[i + radius];
        }
        out[idx] = den > 0.0 ? num / den : in[idx];
      }
    }
  }
}

// Legendre polynomial values by the three-term recurrence.
std::vector<double> legendre_column(int order, std::size_t t_len) {
  std::vector<double> col(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double x = t_len == 1 ? 0.0 : -1.0 + 2.0 * double(t) / double(t_len - 1);
    double p0 = 1.0, p1 = x;
    if (order == 0) { col[t] = 1.0; continue; }
    for (int n = 1; n < order; ++n) {
      const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
      p0 = p1;
      p1 = p2;
    }
    col[t] = p1;
  }
  return col;
}

}  // namespace

MaskVolume mask_from_threshold(const Volume4D& v, double threshold) {
  if (!std::isfinite(threshold)) throw_invalid("mask_from_threshold: threshold must be finite");
  const std::size_t nvox = v.geometry.voxel_count();
  MaskVolume m;
  m.geometry = v.geometry;
  m.flags.assign(nvox, 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < nvox; ++i) {
    double sum = 0.0;
    for (uint32_t t = 0; t < v.nt; ++t) sum += v.voxels[std::size_t(t) * nvox + i];
    if (sum / double(v.nt) > threshold) {
      m.flags[i] = 1;
      ++count;
    }
  }
  if (count == 0)
    throw Error(ErrorCode::EmptyMask, "mask_from_threshold: threshold " +
                                          std::to_string(threshold) +
                                          " leaves no voxels in the mask");
  return m;
}

TimeSeriesMatrix vectorize(const Volume4D& v, const MaskVolume& m) {
  if (!v.geometry.same_dims(m.geometry))
    throw_invalid("vectorize: volume and mask dimensions differ");
  const std::size_t nvox = v.geometry.voxel_count();
  TimeSeriesMatrix out;
  out.cols = v.nt;
  for (uint32_t z = 0; z < v.geometry.nz; ++z)
    for (uint32_t y = 0; y < v.geometry.ny; ++y)
      for (uint32_t x = 0; x < v.geometry.nx; ++x)
        if (m.flags[v.geometry.linear(x, y, z)]) out.index_map.push_back({x, y, z});
  out.rows = out.index_map.size();
  out.data.resize(out.rows * out.cols);
  for (std::size_t r = 0; r < out.rows; ++r) {
    const auto& c = out.index_map[r];
    const std::size_t idx = v.geometry.linear(c.x, c.y, c.z);
    for (uint32_t t = 0; t < v.nt; ++t)
      out.data[r * out.cols + t] = double(v.voxels[std::size_t(t) * nvox + idx]);
  }
  return out;
}

Volume4D devectorize(const TimeSeriesMatrix& x, const MaskVolume& m) {
  Volume4D v;
  v.geometry = m.geometry;
  v.nt = uint32_t(x.cols);
  const std::size_t nvox = m.geometry.voxel_count();
  v.voxels.assign(nvox * x.cols, 0.f);
  if (x.index_map.size() != x.rows)
    throw_invalid("devectorize: index map size does not match row count");
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto& c = x.index_map[r];
    if (c.x >= m.geometry.nx || c.y >= m.geometry.ny || c.z >= m.geometry.nz)
      throw_invalid("devectorize: coordinate outside geometry");
    const std::size_t idx = m.geometry.linear(c.x, c.y, c.z);
    for (std::size_t t = 0; t < x.cols; ++t)
      v.voxels[t * nvox + idx] = float(x.data[r * x.cols + t]);
  }
  return v;
}

Volume4D gaussian_smooth(const Volume4D& v, const MaskVolume& m, double fwhm_mm,
                         int threads) {
  if (fwhm_mm < 0.0 || !std::isfinite(fwhm_mm))
    throw_invalid("gaussian_smooth: fwhm must be non-negative and finite");
  if (!v.geometry.same_dims(m.geometry))
    throw_invalid("gaussian_smooth: volume and mask dimensions differ");
  if (fwhm_mm == 0.0) return v;

  const double spacing[3] = {v.geometry.dx, v.geometry.dy, v.geometry.dz};
  int radius[3];
  std::vector<double> kern[3];
  for (int a = 0; a < 3; ++a) {
    const double sigma_vox = fwhm_mm * kFwhmToSigma / spacing[a];
    kern[a] = gaussian_kernel(sigma_vox, radius[a]);
  }

  Volume4D out = v;
  const std::size_t nvox = v.geometry.voxel_count();
  parallel_for(v.nt, threads, [&](std::size_t t0, std::size_t t1) {
    std::vector<double> a(nvox), b(nvox);
    for (std::size_t t = t0; t < t1; ++t) {
      for (std::size_t i = 0; i < nvox; ++i) a[i] = double(v.voxels[t * nvox + i]);
      smooth_axis(a, b, m, kern[0], radius[0], 0);
      smooth_axis(b, a, m, kern[1], radius[1], 1);
      smooth_axis(a, b, m, kern[2], radius[2], 2);
      for (std::size_t i = 0; i < nvox; ++i) out.voxels[t * nvox + i] = float(b[i]);
    }
  });
  return out;
}

RegressResult detrend_and_regress(const TimeSeriesMatrix& x, const PreprocessConfig& cfg) {
  const std::size_t t_len = x.cols;
  const int p = cfg.detrend_poly_order;
  const int k = cfg.regress_top_pcs;
  if (p < 0 || p > 10) throw_invalid("detrend_and_regress: poly order must be in 0..10");
  if (k < 0) throw_invalid("detrend_and_regress: regress_top_pcs must be >= 0");
  const int n_regs = (p + 1) + (cfg.regress_global ? 1 : 0) + k;
  if (t_len <= std::size_t(n_regs) + 1)
    throw_invalid("detrend_and_regress: need T > poly_order + pcs + global + 1");

  // Candidate regressors, in a fixed order: polynomials, global mean, PCs.
  std::vector<std::vector<double>> regs;
  for (int order = 0; order <= p; ++order) regs.push_back(legendre_column(order, t_len));

  if (cfg.regress_global) {
    std::vector<double> global(t_len, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t t = 0; t < t_len; ++t) global[t] += x.data[r * t_len + t];
    for (double& g : global) g /= double(x.rows);
    regs.push_back(std::move(global));
  }

  if (k > 0) {
    // Temporal covariance of the row-demeaned matrix.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(Eigen::Index(t_len), Eigen::Index(t_len));
    std::vector<double> centered(t_len);
    for (std::size_t r = 0; r < x.rows; ++r) {
      double mean = 0.0;
      for (std::size_t t = 0; t < t_len; ++t) mean += x.data[r * t_len + t];
      mean /= double(t_len);
      for (std::size_t t = 0; t < t_len; ++t) centered[t] = x.data[r * t_len + t] - mean;
      for (std::size_t i = 0; i < t_len; ++i)
        for (std::size_t j = i; j < t_len; ++j)
          cov(Eigen::Index(i), Eigen::Index(j)) += centered[i] * centered[j];
    }
    for (std::size_t i = 0; i < t_len; ++i)
      for (std::size_t j = 0; j < i; ++j)
        cov(Eigen::Index(i), Eigen::Index(j)) = cov(Eigen::Index(j), Eigen::Index(i));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw Error(ErrorCode::Internal, "detrend_and_regress: eigendecomposition failed");
    // Eigenvalues ascending; take the top k, canonicalize sign.
    for (int c = 0; c < k && c < int(t_len); ++c) {
      Eigen::VectorXd v = eig.eigenvectors().col(Eigen::Index(t_len) - 1 - c);
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0) v = -v;
      regs.emplace_back(v.data(), v.data() + v.size());
    }
  }

  // Modified Gram-Schmidt with dependent-column drop.
  RegressResult res;
  std::vector<std::vector<double>> basis;
  for (std::size_t ri = 0; ri < regs.size(); ++ri) {
    std::vector<double> q = regs[ri];
    const double norm0 = std::sqrt(dot(q, q));
    for (const auto& b : basis) {
      const double proj = dot(q, b);
      for (std::size_t t = 0; t < t_len; ++t) q[t] -= proj * b[t];
    }
    // Second pass keeps the basis orthonormal to machine precision.
    for (const auto& b : basis) {
      const double proj = dot(q, b);
      for (std::size_t t = 0; t < t_len; ++t) q[t] -= proj * b[t];
    }
    const double norm = std::sqrt(dot(q, q));
    if (norm <= 1e-10 * std::max(1.0, norm0)) {
      ++res.regressors_dropped;
      res.warnings.push_back("regressor " + std::to_string(ri) +
                             " dropped as linearly dependent");
      continue;
    }
    for (double& v : q) v /= norm;
    basis.push_back(std::move(q));
  }
  res.regressors_used = int(basis.size());

  res.matrix = x;
  auto& out = res.matrix;
  parallel_for(out.rows, cfg.threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      double* row = out.data.data() + r * t_len;
      for (const auto& b : basis) {
        double proj = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) proj += row[t] * b[t];
        for (std::size_t t = 0; t < t_len; ++t) row[t] -= proj * b[t];
      }
    }
  });
  return res;
}

}  // namespace mskm
