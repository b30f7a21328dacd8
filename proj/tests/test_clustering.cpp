#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mskm/clustering.hpp"
#include "mskm/core.hpp"

using namespace mskm;

namespace {

TimeSeriesMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  TimeSeriesMatrix m;
  m.rows = rows.size();
  m.cols = rows.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
  m.index_map.resize(m.rows);
  for (uint32_t r = 0; r < m.rows; ++r) m.index_map[r] = {r, 0, 0};
  return m;
}

VolumeGeometry line_geometry(std::size_t n) {
  return {uint32_t(n), 1, 1, 1.f, 1.f, 1.f, 1.f};
}

std::vector<double> sine_series(double freq, double phase, std::size_t t_len, double fs) {
  std::vector<double> s(t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    s[t] = std::sin(2.0 * M_PI * freq * double(t) / fs + phase);
  return s;
}

// Exhaustive 2-means objective for a 4-row matrix: centroid of a side is the
// renormalized mean of the normalized members, objective the summed distance.
double bipartition_objective(const TimeSeriesMatrix& m, const std::vector<int>& side) {
  double total = 0.0;
  for (int s = 0; s < 2; ++s) {
    std::vector<TimeSeries> members;
    for (std::size_t r = 0; r < m.rows; ++r)
      if (side[r] == s) members.push_back(normalize_for_correlation(m.row(r)));
    if (members.empty()) continue;
    TimeSeries c(m.cols, 0.0);
    for (const auto& z : members)
      for (std::size_t t = 0; t < m.cols; ++t) c[t] += z[t];
    double nrm = std::sqrt(dot(c, c));
    if (nrm > 0)
      for (double& v : c) v /= nrm;
    for (const auto& z : members) total += 1.0 - std::clamp(dot(z, c), -1.0, 1.0);
  }
  return total;
}

// Naive average-linkage agglomeration (the textbook O(n^3) form), used as an
// independent oracle for the nearest-neighbor-chain implementation.
std::vector<int> naive_average_linkage(const TimeSeriesMatrix& m, int k) {
  const std::size_t n = m.rows;
  std::vector<std::vector<uint32_t>> clusters(n);
  for (uint32_t i = 0; i < n; ++i) clusters[i] = {i};
  auto pair_distance = [&](const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    double sum = 0;
    for (uint32_t i : a)
      for (uint32_t j : b) sum += correlation_distance(m.row(i), m.row(j));
    return sum / double(a.size() * b.size());
  };
  while (int(clusters.size()) > k) {
    double best = 1e300;
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = pair_distance(clusters[i], clusters[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + std::ptrdiff_t(bj));
  }
  std::vector<int> labels(n, -1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (uint32_t r : clusters[c]) labels[r] = int(c);
  return labels;
}

bool same_partition(const std::vector<uint32_t>& a, const std::vector<int>& b) {
  std::map<uint32_t, int> fwd;
  std::map<int, uint32_t> rev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto f = fwd.find(a[i]);
    auto r = rev.find(b[i]);
    if (f == fwd.end() && r == rev.end()) {
      fwd[a[i]] = b[i];
      rev[b[i]] = a[i];
    } else if (f == fwd.end() || r == rev.end() || f->second != b[i] || r->second != a[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("kmeans++ seeding contracts") {
  Rng rng(1);
  // k = 1: one row, uniform.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2, 3}, {2, 1, 0}, {0, 0, 1}});
    auto seeds = kmeans_pp_seed(m, 1, rng);
    CHECK(seeds.size() == 1);
    CHECK(seeds[0] < 3);
  }
  // Antipodal groups: the second seed lands in the opposite group always.
  {
    const std::vector<double> s{1, -2, 3, 0.5};
    std::vector<double> neg(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) neg[i] = -s[i];
    TimeSeriesMatrix m = matrix_from_rows({s, s, neg, neg});
    for (uint64_t trial = 0; trial < 50; ++trial) {
      Rng r2(trial);
      auto seeds = kmeans_pp_seed(m, 2, r2);
      const bool first_pos = seeds[0] < 2;
      const bool second_pos = seeds[1] < 2;
      CHECK(first_pos != second_pos);
    }
  }
  // k = N yields a permutation of all rows.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2, 3}, {3, 1, 2}, {0, 5, 1}, {2, 2, 0}});
    auto seeds = kmeans_pp_seed(m, 4, rng);
    std::set<uint32_t> uniq(seeds.begin(), seeds.end());
    CHECK(uniq.size() == 4);
  }
  CHECK_THROWS_AS(kmeans_pp_seed(matrix_from_rows({{1, 2}}), 3, rng), Error);
}

TEST_CASE("kmeans on identical rows handles the empty cluster") {
  TimeSeriesMatrix m = matrix_from_rows({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  KMeansConfig cfg;
  cfg.k = 2;
  cfg.seed = 5;
  const KMeansResult res = kmeans(m, cfg);
  CHECK(res.objective == doctest::Approx(0.0));
  for (uint32_t a : res.assignments) CHECK(a == res.assignments[0]);
}

TEST_CASE("kmeans separates sign groups; exhaustive bipartition oracle") {
  const std::vector<double> s{0.3, -1.2, 2.0, 0.1, -0.5};
  std::vector<double> neg(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) neg[i] = -s[i];
  TimeSeriesMatrix m = matrix_from_rows({s, s, neg, neg});

  // Oracle: of the 7 bipartitions, only the sign split has zero objective.
  int zero_count = 0;
  std::vector<int> zero_side;
  for (int mask = 1; mask <= 7; ++mask) {  // row 0 pinned to side 0
    std::vector<int> side{0, (mask >> 0) & 1, (mask >> 1) & 1, (mask >> 2) & 1};
    const double obj = bipartition_objective(m, side);
    if (obj < 1e-12) {
      ++zero_count;
      zero_side = side;
    }
  }
  CHECK(zero_count == 1);
  CHECK(zero_side == std::vector<int>{0, 0, 1, 1});

  KMeansConfig cfg;
  cfg.k = 2;
  cfg.seed = 7;
  const KMeansResult res = kmeans(m, cfg);
  CHECK(res.objective == doctest::Approx(0.0));
  CHECK(res.assignments[0] == res.assignments[1]);
  CHECK(res.assignments[2] == res.assignments[3]);
  CHECK(res.assignments[0] != res.assignments[2]);
  // Raw centroids are the group means.
  const auto& c_pos = res.centroids[res.assignments[0] - 1];
  for (std::size_t t = 0; t < s.size(); ++t) CHECK(c_pos[t] == doctest::Approx(s[t]));
}

TEST_CASE("kmeans k=1 returns the raw mean") {
  TimeSeriesMatrix m = matrix_from_rows({{1, 3, 5}, {3, 5, 7}});
  KMeansConfig cfg;
  cfg.k = 1;
  const KMeansResult res = kmeans(m, cfg);
  CHECK(res.assignments == std::vector<uint32_t>{1, 1});
  CHECK(res.centroids[0][0] == doctest::Approx(2.0));
  CHECK(res.centroids[0][1] == doctest::Approx(4.0));
  CHECK(res.centroids[0][2] == doctest::Approx(6.0));
}

TEST_CASE("kmeans objective trace is non-increasing") {
  Rng rng(133);
  for (uint64_t trial = 0; trial < 6; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 40; ++r) {
      std::vector<double> x(20);
      for (double& v : x) v = rng.gaussian();
      rows.push_back(x);
    }
    TimeSeriesMatrix m = matrix_from_rows(rows);
    KMeansConfig cfg;
    cfg.k = 4;
    cfg.replicates = 1;
    cfg.seed = trial;
    const KMeansResult res = kmeans(m, cfg);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9);
  }
}

TEST_CASE("kmeans op counter matches the ledger and the worst-case bound") {
  Rng rng(211);
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < 60; ++r) {
    std::vector<double> x(15);
    for (double& v : x) v = rng.gaussian();
    rows.push_back(x);
  }
  TimeSeriesMatrix m = matrix_from_rows(rows);
  KMeansConfig cfg;
  cfg.k = 5;
  cfg.replicates = 3;
  cfg.max_iters = 50;
  const KMeansResult res = kmeans(m, cfg);
  CHECK(res.ops.distance == res.ledger_ops);
  CHECK(res.ops.distance <= uint64_t(cfg.replicates) * uint64_t(cfg.max_iters) *
                                uint64_t(cfg.k) * m.rows);
}

TEST_CASE("binary_split examples") {
  KMeansConfig cfg;
  cfg.seed = 3;
  // Two identical rows: forced convergence.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2, 4}, {1, 2, 4}});
    const SplitResult r = binary_split(m, {0, 1}, cfg);
    CHECK(r.child_correlation == 1.0);
    CHECK(r.rows_b.empty());
  }
  // {s, -s}: children are the two rows, correlation -1.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, -2, 0.5}, {-1, 2, -0.5}});
    const SplitResult r = binary_split(m, {0, 1}, cfg);
    CHECK(r.child_correlation == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.rows_a == std::vector<uint32_t>{0});
    CHECK(r.rows_b == std::vector<uint32_t>{1});
  }
  // Two noiseless sinusoid groups: child correlation equals the generator
  // correlation.
  {
    const auto s1 = sine_series(0.5, 0.0, 50, 10.0);
    const auto s2 = sine_series(0.9, 1.1, 50, 10.0);
    const double rho = pearson_correlation(s1, s2);
    TimeSeriesMatrix m = matrix_from_rows({s1, s1, s1, s2, s2, s2});
    const SplitResult r = binary_split(m, {0, 1, 2, 3, 4, 5}, cfg);
    CHECK(r.child_correlation == doctest::Approx(rho).epsilon(1e-6));
  }
}

TEST_CASE("multistage trivial cases") {
  MultistageConfig cfg;
  cfg.ct = 0.7;
  cfg.ns = 3;
  // All rows identical: one cluster.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    const Parcellation p = multistage_cluster(m, line_geometry(4), cfg);
    CHECK(p.k == 1);
    for (uint32_t r = 0; r < 4; ++r) CHECK(p.labels.labels[r] == 1);
    REQUIRE(p.tree.has_value());
    CHECK(p.tree->nodes[0].converged);
    CHECK(p.tree->nodes[0].split_child_correlation == 1.0);
  }
  // Single row: one cluster, representative is the row.
  {
    TimeSeriesMatrix m = matrix_from_rows({{4, 5, 6}});
    const Parcellation p = multistage_cluster(m, line_geometry(1), cfg);
    CHECK(p.k == 1);
    CHECK(p.representatives[0] == std::vector<double>{4, 5, 6});
  }
  // ns = 0 rejected.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2, 3}, {3, 2, 1}});
    MultistageConfig bad = cfg;
    bad.ns = 0;
    CHECK_THROWS_AS(multistage_cluster(m, line_geometry(2), bad), Error);
    bad.ns = 3;
    bad.ct = 1.5;
    CHECK_THROWS_AS(multistage_cluster(m, line_geometry(2), bad), Error);
  }
}

TEST_CASE("multistage recovers well-separated groups and the tree is coherent") {
  // Three nearly-orthogonal generators, copies each.
  const auto g1 = sine_series(0.5, 0.3, 64, 10.0);
  const auto g2 = sine_series(1.1, 1.2, 64, 10.0);
  const auto g3 = sine_series(1.9, 2.1, 64, 10.0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back(g1);
  for (int i = 0; i < 5; ++i) rows.push_back(g2);
  for (int i = 0; i < 5; ++i) rows.push_back(g3);
  TimeSeriesMatrix m = matrix_from_rows(rows);

  MultistageConfig cfg;
  cfg.ct = 0.7;
  cfg.ns = 3;
  cfg.kmeans.seed = 9;
  const Parcellation p = multistage_cluster(m, line_geometry(15), cfg);
  CHECK(p.k == 3);
  // Partition totality and purity.
  for (uint32_t r = 0; r < 15; ++r) {
    CHECK(p.labels.labels[r] >= 1);
    CHECK(p.labels.labels[r] <= p.k);
    CHECK(p.labels.labels[r] == p.labels.labels[(r / 5) * 5]);
  }
  // Representatives equal the mean of member raw series.
  for (uint32_t c = 1; c <= p.k; ++c) {
    std::vector<std::span<const double>> members;
    for (uint32_t r = 0; r < 15; ++r)
      if (p.labels.labels[r] == c) members.push_back(m.row(r));
    const TimeSeries mean = mean_series(members);
    for (std::size_t t = 0; t < mean.size(); ++t)
      CHECK(std::abs(p.representatives[c - 1][t] - mean[t]) <= 1e-10);
  }
  // Tree structure: converged-by-threshold nodes carry corr >= ct, split
  // nodes < ct, forced leaves none.
  REQUIRE(p.tree.has_value());
  const HierarchyTree& tree = *p.tree;
  for (const auto& n : tree.nodes) {
    if (n.child_a >= 0) {
      CHECK_FALSE(n.converged);
      REQUIRE(n.split_child_correlation.has_value());
      CHECK(*n.split_child_correlation < cfg.ct);
      // Children partition the parent.
      CHECK(tree.nodes[n.child_a].voxel_count + tree.nodes[n.child_b].voxel_count ==
            n.voxel_count);
    } else {
      CHECK(n.converged);
      if (n.split_child_correlation.has_value() && n.voxel_count >= 2)
        CHECK(*n.split_child_correlation >= cfg.ct);
    }
  }
  CHECK(tree.final_clusters.size() == p.k);
}

TEST_CASE("multistage K bound and merge closure") {
  Rng rng(311);
  for (uint64_t trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 48; ++r) {
      std::vector<double> x(24);
      for (double& v : x) v = rng.gaussian();
      rows.push_back(x);
    }
    TimeSeriesMatrix m = matrix_from_rows(rows);
    MultistageConfig cfg;
    cfg.ct = 0.4;
    cfg.ns = 4;
    cfg.kmeans.seed = trial;
    const Parcellation p = multistage_cluster(m, line_geometry(48), cfg);
    CHECK(p.k <= (1u << cfg.ns));
    // Partition totality.
    std::vector<std::size_t> counts(p.k, 0);
    for (uint32_t r = 0; r < 48; ++r) {
      REQUIRE(p.labels.labels[r] >= 1);
      REQUIRE(p.labels.labels[r] <= p.k);
      ++counts[p.labels.labels[r] - 1];
    }
    for (std::size_t c = 0; c < p.k; ++c) CHECK(counts[c] > 0);

    // Merge closure: pre-merge cluster directions in different final clusters
    // stay below ct pairwise.
    const HierarchyTree& tree = *p.tree;
    std::vector<std::pair<int, const TimeSeries*>> leaves;  // (final label, direction)
    for (std::size_t fc = 0; fc < tree.final_clusters.size(); ++fc)
      for (int leaf : tree.final_clusters[fc]) {
        const int c = tree.nodes[std::size_t(leaf)].cluster_number;
        REQUIRE(c >= 1);
        leaves.push_back({int(fc), &p.pre_merge_directions[std::size_t(c - 1)]});
      }
    for (std::size_t i = 0; i < leaves.size(); ++i)
      for (std::size_t j = i + 1; j < leaves.size(); ++j)
        if (leaves[i].first != leaves[j].first)
          CHECK(dot(*leaves[i].second, *leaves[j].second) < cfg.ct);
  }
}

TEST_CASE("multistage determinism and thread independence") {
  Rng rng(401);
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < 64; ++r) {
    std::vector<double> x(30);
    for (double& v : x) v = rng.gaussian();
    rows.push_back(x);
  }
  TimeSeriesMatrix m = matrix_from_rows(rows);
  MultistageConfig cfg;
  cfg.ct = 0.5;
  cfg.ns = 4;
  cfg.kmeans.seed = 77;
  const Parcellation p1 = multistage_cluster(m, line_geometry(64), cfg);
  const Parcellation p2 = multistage_cluster(m, line_geometry(64), cfg);
  CHECK(p1.labels.labels == p2.labels.labels);
  CHECK(p1.representatives == p2.representatives);
  CHECK(tree_to_json(*p1.tree) == tree_to_json(*p2.tree));

  MultistageConfig cfg4 = cfg;
  cfg4.kmeans.threads = 4;
  const Parcellation p4 = multistage_cluster(m, line_geometry(64), cfg4);
  CHECK(p1.labels.labels == p4.labels.labels);

  MultistageConfig cfg_other = cfg;
  cfg_other.kmeans.seed = 78;
  const Parcellation p3 = multistage_cluster(m, line_geometry(64), cfg_other);
  CHECK(p3.k >= 1);  // different seed may legitimately give the same labels
}

TEST_CASE("multistage affine invariance of labels") {
  Rng rng(501);
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < 40; ++r) {
    std::vector<double> x(25);
    for (double& v : x) v = rng.gaussian() + 3.0;
    rows.push_back(x);
  }
  TimeSeriesMatrix m = matrix_from_rows(rows);

  // Exact power-of-two scaling: bitwise-identical normalized forms.
  TimeSeriesMatrix scaled = m;
  for (std::size_t r = 0; r < scaled.rows; ++r)
    for (std::size_t t = 0; t < scaled.cols; ++t) scaled.data[r * scaled.cols + t] *= 4.0;

  // Generic positive affine map per row.
  TimeSeriesMatrix affine = m;
  for (std::size_t r = 0; r < affine.rows; ++r) {
    const double a = 0.2 + rng.uniform() * 3.0;
    const double b = rng.uniform() * 40.0 - 20.0;
    for (std::size_t t = 0; t < affine.cols; ++t)
      affine.data[r * affine.cols + t] = a * affine.data[r * affine.cols + t] + b;
  }

  MultistageConfig cfg;
  cfg.ct = 0.5;
  cfg.ns = 3;
  cfg.kmeans.seed = 13;
  const Parcellation p0 = multistage_cluster(m, line_geometry(40), cfg);
  const Parcellation ps = multistage_cluster(scaled, line_geometry(40), cfg);
  const Parcellation pa = multistage_cluster(affine, line_geometry(40), cfg);
  CHECK(p0.labels.labels == ps.labels.labels);
  CHECK(p0.labels.labels == pa.labels.labels);
  CHECK(p0.tree->nodes.size() == pa.tree->nodes.size());
}

TEST_CASE("simple_kmeans parcellation") {
  const auto g1 = sine_series(0.5, 0.0, 40, 10.0);
  const auto g2 = sine_series(1.3, 0.7, 40, 10.0);
  TimeSeriesMatrix m = matrix_from_rows({g1, g1, g1, g2, g2, g2});
  KMeansConfig cfg;
  cfg.seed = 21;
  const Parcellation p = simple_kmeans(m, line_geometry(6), 2, cfg);
  CHECK(p.k == 2);
  CHECK_FALSE(p.tree.has_value());
  CHECK(p.labels.labels[0] == p.labels.labels[1]);
  CHECK(p.labels.labels[3] == p.labels.labels[4]);
  CHECK(p.labels.labels[0] != p.labels.labels[3]);

  // k = N: every row its own cluster, zero objective.
  const Parcellation pn = simple_kmeans(m, line_geometry(6), 6, cfg);
  CHECK(pn.objective == doctest::Approx(0.0));

  // k = 1: single cluster.
  const Parcellation p1 = simple_kmeans(m, line_geometry(6), 1, cfg);
  CHECK(p1.k == 1);

  // k above N clamps to N; duplicate rows leave their surplus clusters empty
  // and the labels compact to the distinct series.
  const Parcellation pc = simple_kmeans(m, line_geometry(6), 40, cfg);
  CHECK(pc.k == 2);
  CHECK(pc.objective == doctest::Approx(0.0));
}

TEST_CASE("hierarchical baseline") {
  // N = 2, k = 1: both merged.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2, 3}, {5, 1, 0}});
    const Parcellation p = hierarchical_cluster(m, line_geometry(2), 1);
    CHECK(p.k == 1);
    CHECK(p.labels.labels[0] == 1);
    CHECK(p.labels.labels[1] == 1);
  }
  // Matrix build op count is exactly N(N-1)/2.
  {
    Rng rng(601);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 100; ++r) {
      std::vector<double> x(10);
      for (double& v : x) v = rng.gaussian();
      rows.push_back(x);
    }
    TimeSeriesMatrix m = matrix_from_rows(rows);
    const Parcellation p = hierarchical_cluster(m, line_geometry(100), 5);
    CHECK(p.ops.distance == 4950);
  }
  // Sign groups against the exhaustive oracle.
  {
    const std::vector<double> s{0.7, -0.1, 1.9, -2.2};
    std::vector<double> neg(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) neg[i] = -s[i];
    TimeSeriesMatrix m = matrix_from_rows({s, s, neg, neg});
    const Parcellation p = hierarchical_cluster(m, line_geometry(4), 2);
    const std::vector<int> oracle = naive_average_linkage(m, 2);
    CHECK(same_partition(std::vector<uint32_t>(p.labels.labels.begin(),
                                               p.labels.labels.end()),
                         oracle));
  }
  // Guard.
  {
    TimeSeriesMatrix m = matrix_from_rows({{1, 2}, {2, 1}, {0, 1}});
    CHECK_THROWS_AS(hierarchical_cluster(m, line_geometry(3), 2, 2), Error);
    try {
      hierarchical_cluster(m, line_geometry(3), 2, 2);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ResourceLimit);
    }
  }
}

TEST_CASE("hierarchical agrees with the naive oracle on random data") {
  Rng rng(701);
  for (uint64_t trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> rows;
    const int n = 3 + int(rng.below(8));
    for (int r = 0; r < n; ++r) {
      std::vector<double> x(8);
      for (double& v : x) v = rng.gaussian();
      rows.push_back(x);
    }
    TimeSeriesMatrix m = matrix_from_rows(rows);
    const int k = 1 + int(rng.below(uint64_t(n)));
    const Parcellation p = hierarchical_cluster(m, line_geometry(std::size_t(n)), k);
    const std::vector<int> oracle = naive_average_linkage(m, k);
    CHECK(same_partition(std::vector<uint32_t>(p.labels.labels.begin(),
                                               p.labels.labels.end()),
                         oracle));
  }
}
