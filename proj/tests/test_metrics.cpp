#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mskm/metrics.hpp"

using namespace mskm;

namespace {

LabelVolume make_labels(uint32_t nx, uint32_t ny, uint32_t nz,
                        std::vector<uint32_t> labels) {
  LabelVolume lv;
  lv.geometry = {nx, ny, nz, 1.f, 1.f, 1.f, 0.f};
  lv.labels = std::move(labels);
  return lv;
}

// Direct evaluation over explicit voxel sets, independent of the
// contingency-table path.
SimilarityReport brute_force_compare(const LabelVolume& a, const LabelVolume& b) {
  std::map<uint32_t, std::vector<std::size_t>> sa, sb;
  for (std::size_t v = 0; v < a.labels.size(); ++v) {
    if (a.labels[v]) sa[a.labels[v]].push_back(v);
    if (b.labels[v]) sb[b.labels[v]].push_back(v);
  }
  SimilarityReport rep;
  double sum = 0;
  for (const auto& [la, set_a] : sa) {
    double best = -1;
    uint32_t best_label = 0;
    for (const auto& [lb, set_b] : sb) {
      std::size_t inter = 0;
      for (std::size_t v : set_a)
        inter += std::size_t(std::binary_search(set_b.begin(), set_b.end(), v));
      const double si =
          std::sqrt(double(inter) * double(inter) / (double(set_a.size()) * double(set_b.size())));
      if (si > best) {
        best = si;
        best_label = lb;
      }
    }
    rep.per_cluster.push_back({la, best, best_label, set_a.size()});
    sum += best;
    rep.msi = std::max(rep.msi, best);
  }
  rep.mean_si = sum / double(sa.size());
  return rep;
}

}  // namespace

TEST_CASE("similarity_index hand example") {
  // |alpha| = 4, best overlap 2 with |beta_j| = 2 -> sqrt(4 / 8)
  const std::vector<std::size_t> alpha{0, 1, 2, 3};
  const std::vector<std::vector<std::size_t>> betas{{10, 11}, {2, 3}};
  const auto [si, j] = similarity_index(alpha, betas);
  CHECK(si == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(j == 1);

  // Identical set: SI = 1, disjoint: 0.
  CHECK(similarity_index(alpha, {{0, 1, 2, 3}}).first == 1.0);
  CHECK(similarity_index(alpha, {{9, 10}}).first == 0.0);
  CHECK_THROWS_AS(similarity_index({}, {{1}}), Error);
}

TEST_CASE("compare_parcellations identity and symmetry of msi") {
  const LabelVolume a = make_labels(3, 2, 1, {1, 1, 2, 2, 3, 3});
  const SimilarityReport self = compare_parcellations(a, a);
  CHECK(self.msi == 1.0);
  CHECK(self.mean_si == 1.0);

  const LabelVolume b = make_labels(3, 2, 1, {1, 2, 2, 3, 3, 3});
  const SimilarityReport ab = compare_parcellations(a, b);
  const SimilarityReport ba = compare_parcellations(b, a);
  CHECK(ab.msi == doctest::Approx(ba.msi).epsilon(1e-14));
  CHECK(ab.mean_si <= ab.msi);
  CHECK(ab.msi <= 1.0);
  CHECK(ab.mean_si >= 0.0);
}

TEST_CASE("dimension mismatch rejected") {
  const LabelVolume a = make_labels(2, 1, 1, {1, 2});
  const LabelVolume b = make_labels(3, 1, 1, {1, 2, 2});
  CHECK_THROWS_AS(compare_parcellations(a, b), Error);
}

TEST_CASE("refinement property") {
  // alpha refines beta: each SI_i = sqrt(|alpha_i| / |beta_j|).
  const LabelVolume beta = make_labels(4, 2, 1, {1, 1, 1, 1, 2, 2, 2, 2});
  const LabelVolume alpha = make_labels(4, 2, 1, {1, 1, 2, 2, 3, 3, 3, 4});
  const SimilarityReport rep = compare_parcellations(alpha, beta);
  REQUIRE(rep.per_cluster.size() == 4);
  CHECK(rep.per_cluster[0].si == doctest::Approx(std::sqrt(2.0 / 4.0)));
  CHECK(rep.per_cluster[1].si == doctest::Approx(std::sqrt(2.0 / 4.0)));
  CHECK(rep.per_cluster[2].si == doctest::Approx(std::sqrt(3.0 / 4.0)));
  CHECK(rep.per_cluster[3].si == doctest::Approx(std::sqrt(1.0 / 4.0)));
}

TEST_CASE("contingency path matches brute force exactly") {
  Rng rng(47);
  for (int trial = 0; trial < 30; ++trial) {
    const uint32_t nx = 2 + uint32_t(rng.below(4));
    const uint32_t ny = 2 + uint32_t(rng.below(4));
    const uint32_t ka = 1 + uint32_t(rng.below(4));
    const uint32_t kb = 1 + uint32_t(rng.below(4));
    std::vector<uint32_t> la(nx * ny), lb(nx * ny);
    for (auto& l : la) l = uint32_t(rng.below(ka + 1));  // 0 allowed
    for (auto& l : lb) l = uint32_t(rng.below(kb + 1));
    bool a_has = false, b_has = false;
    for (auto l : la) a_has = a_has || l;
    for (auto l : lb) b_has = b_has || l;
    if (!a_has || !b_has) continue;

    const LabelVolume a = make_labels(nx, ny, 1, la);
    const LabelVolume b = make_labels(nx, ny, 1, lb);
    const SimilarityReport fast = compare_parcellations(a, b);
    const SimilarityReport slow = brute_force_compare(a, b);
    REQUIRE(fast.per_cluster.size() == slow.per_cluster.size());
    CHECK(fast.msi == slow.msi);
    CHECK(fast.mean_si == slow.mean_si);
    for (std::size_t i = 0; i < fast.per_cluster.size(); ++i) {
      CHECK(fast.per_cluster[i].si == slow.per_cluster[i].si);
      CHECK(fast.per_cluster[i].label == slow.per_cluster[i].label);
    }
  }
}

TEST_CASE("intra-cluster correlation") {
  // Cluster of identical members: value 1. Singleton: 1. {s, -s}: 0.
  Volume4D data;
  data.geometry = {5, 1, 1, 1.f, 1.f, 1.f, 1.f};
  data.nt = 3;
  // voxels: v0=v1=(1,2,3); v2 singleton (2,1,0); v3=(1,0,2), v4=(-1,0,-2)
  data.voxels = {1, 1, 2, 1, -1,  //
                 2, 2, 1, 0, 0,   //
                 3, 3, 0, 2, -2};
  const LabelVolume labels = make_labels(5, 1, 1, {1, 1, 2, 3, 3});
  const IntraClusterReport rep = intra_cluster_correlation(labels, data);
  REQUIRE(rep.labels.size() == 3);
  CHECK(rep.mean_correlation[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.mean_correlation[1] == doctest::Approx(1.0).epsilon(1e-12));
  // Representative of {s, -s} is the zero series; correlations are 0.
  CHECK(rep.mean_correlation[2] == doctest::Approx(0.0));
  CHECK(rep.grand_mean == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tissue overlap fractions and ordering") {
  const LabelVolume labels = make_labels(4, 2, 1, {1, 1, 2, 2, 2, 2, 3, 3});
  MaskVolume gm, wm;
  gm.geometry = wm.geometry = labels.geometry;
  gm.flags = {1, 1, 1, 1, 0, 0, 0, 0};  // cluster1 fully GM, cluster2 half
  wm.flags = {0, 0, 0, 0, 1, 1, 0, 0};  // cluster2 half WM, cluster3 neither
  const auto rows = tissue_overlap(labels, gm, wm);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].label == 1);
  CHECK(rows[0].gm_frac == 1.0);
  CHECK(rows[0].wm_frac == 0.0);
  CHECK(rows[1].label == 2);
  CHECK(rows[1].gm_frac == 0.5);
  CHECK(rows[1].wm_frac == 0.5);
  CHECK(rows[2].label == 3);
  CHECK(rows[2].gm_frac == 0.0);
  CHECK(rows[2].wm_frac == 0.0);
}

TEST_CASE("random parcellation") {
  VolumeGeometry g{16, 16, 16, 1.f, 1.f, 1.f, 0.f};
  Rng rng(53);
  const LabelVolume one = random_parcellation(g, 1, rng);
  for (uint32_t l : one.labels) CHECK(l == 1);

  Rng r1(54), r2(55);
  const LabelVolume a = random_parcellation(g, 8, r1);
  const LabelVolume b = random_parcellation(g, 8, r2);
  CHECK(a.labels != b.labels);

  // Histogram: each label within 5 sigma of 4096/8.
  std::vector<std::size_t> counts(9, 0);
  for (uint32_t l : a.labels) ++counts[l];
  const double mean = 4096.0 / 8.0;
  const double sigma = std::sqrt(4096.0 * (1.0 / 8.0) * (7.0 / 8.0));
  for (uint32_t l = 1; l <= 8; ++l) {
    CHECK(double(counts[l]) > mean - 5 * sigma);
    CHECK(double(counts[l]) < mean + 5 * sigma);
  }

  CHECK_THROWS_AS(random_parcellation(VolumeGeometry{2, 1, 1, 1, 1, 1, 0}, 3, rng), Error);
}

TEST_CASE("representatives_from_labels requires contiguity") {
  Volume4D data;
  data.geometry = {2, 1, 1, 1.f, 1.f, 1.f, 1.f};
  data.nt = 2;
  data.voxels = {1, 3, 2, 4};
  const auto reps = representatives_from_labels(make_labels(2, 1, 1, {1, 1}), data);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0][0] == doctest::Approx(2.0));
  CHECK(reps[0][1] == doctest::Approx(3.0));
  CHECK_THROWS_AS(representatives_from_labels(make_labels(2, 1, 1, {1, 3}), data), Error);
}
