#include "mskm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"

namespace mskm {

namespace {

// Substream purposes (documented in docs/FORMATS.md).
constexpr uint64_t kPurposeReplicate = 1;
constexpr uint64_t kPurposeNode = 2;

struct NormData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> z;  // normalized forms, row-major

  const double* row(std::size_t r) const { return z.data() + r * cols; }
};

NormData normalize_rows(const TimeSeriesMatrix& data) {
  if (data.rows == 0) throw Error(ErrorCode::EmptyInput, "clustering: no rows");
  if (data.cols < 2) throw_invalid("clustering: series length must be >= 2");
  NormData n;
  n.rows = data.rows;
  n.cols = data.cols;
  n.z.resize(data.rows * data.cols);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const TimeSeries zr = normalize_for_correlation(data.row(r));
    std::copy(zr.begin(), zr.end(), n.z.begin() + r * data.cols);
  }
  return n;
}

inline double norm_distance(const double* a, const double* b, std::size_t t_len) {
  double s = 0.0;
  for (std::size_t i = 0; i < t_len; ++i) s += a[i] * b[i];
  return 1.0 - std::clamp(s, -1.0, 1.0);
}

TimeSeries raw_mean(const TimeSeriesMatrix& data, const std::vector<uint32_t>& rows) {
  TimeSeries out(data.cols, 0.0);
  for (uint32_t r : rows)
    for (std::size_t t = 0; t < data.cols; ++t) out[t] += data.data[std::size_t(r) * data.cols + t];
  const double inv = 1.0 / double(rows.size());
  for (double& v : out) v *= inv;
  return out;
}

// Unit-norm mean direction of the members' normalized forms. Convergence and
// merge decisions correlate these, never the raw means: that keeps every
// threshold decision invariant under per-voxel positive affine maps of the
// input (raw means of differently rescaled rows are different mixtures).
TimeSeries normalized_centroid(const NormData& norm, const std::vector<uint32_t>& rows) {
  TimeSeries c(norm.cols, 0.0);
  for (uint32_t r : rows) {
    const double* z = norm.row(r);
    for (std::size_t t = 0; t < norm.cols; ++t) c[t] += z[t];
  }
  double sq = 0.0;
  for (double v : c) sq += v * v;
  const double nrm = std::sqrt(sq);
  if (nrm > 0.0)
    for (double& v : c) v /= nrm;
  else
    std::fill(c.begin(), c.end(), 0.0);
  return c;
}

double centroid_correlation(const TimeSeries& a, const TimeSeries& b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

std::vector<uint32_t> seed_subset(const NormData& norm, const std::vector<uint32_t>& rows,
                                  int k, Rng& rng, OpCounts& ops) {
  const std::size_t n = rows.size();
  const std::size_t t_len = norm.cols;
  std::vector<uint32_t> seeds;
  seeds.reserve(std::size_t(k));
  std::vector<uint8_t> chosen(n, 0);

  const std::size_t first = std::size_t(rng.below(n));
  seeds.push_back(uint32_t(first));
  chosen[first] = 1;

  std::vector<double> min_dist(n, 0.0);
  for (int j = 1; j < k; ++j) {
    // Distances to the seed added last.
    const double* zs = norm.row(rows[seeds.back()]);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = norm_distance(norm.row(rows[i]), zs, t_len);
      if (j == 1 || d < min_dist[i]) min_dist[i] = d;
    }
    ops.seeding += n;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!chosen[i]) total += min_dist[i] * min_dist[i];

    std::size_t pick = n;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        const double w = min_dist[i] * min_dist[i];
        if (w <= 0.0) continue;
        cum += w;
        last_positive = i;
        if (cum > u) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = last_positive;  // rounding fell off the end
    }
    if (pick == n) {
      // Every unchosen candidate is at distance 0: uniform fallback.
      std::size_t n_unchosen = 0;
      for (std::size_t i = 0; i < n; ++i) n_unchosen += chosen[i] ? 0 : 1;
      std::size_t target = std::size_t(rng.below(n_unchosen));
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (target == 0) {
          pick = i;
          break;
        }
        --target;
      }
    }
    seeds.push_back(uint32_t(pick));
    chosen[pick] = 1;
  }
  return seeds;  // indices into `rows`
}

struct EngineResult {
  std::vector<uint32_t> assign;  // 0..k-1 per subset element
  std::vector<std::vector<double>> centroids_norm;
  double objective = std::numeric_limits<double>::infinity();
  int iters = 0;
  std::vector<double> obj_trace;
};

// One full k-means run (all replicates) on a row subset, in normalized space.
EngineResult kmeans_subset(const NormData& norm, const std::vector<uint32_t>& rows,
                           const KMeansConfig& cfg, const Rng& base_rng,
                           OpCounts& ops, uint64_t& ledger) {
  const std::size_t n = rows.size();
  const std::size_t t_len = norm.cols;
  const int k = std::min<int>(cfg.k, int(n));
  if (k < 1) throw_invalid("kmeans: k must be >= 1");
  if (cfg.max_iters < 1 || cfg.replicates < 1)
    throw_invalid("kmeans: max_iters and replicates must be >= 1");

  EngineResult best;
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    Rng rng = base_rng.substream(kPurposeReplicate, uint64_t(rep));
    const std::vector<uint32_t> seeds = seed_subset(norm, rows, k, rng, ops);

    std::vector<std::vector<double>> cent(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const double* zs = norm.row(rows[seeds[std::size_t(j)]]);
      cent[std::size_t(j)].assign(zs, zs + t_len);
    }

    EngineResult cur;
    cur.assign.assign(n, 0);
    std::vector<uint32_t> prev(n, uint32_t(-1));
    std::vector<double> assigned_dist(n, 0.0);
    std::vector<uint8_t> used_for_reseed(n, 0);

    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
      // Assignment pass (parallel over rows; each row independent).
      parallel_for(n, cfg.threads, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
          const double* zi = norm.row(rows[i]);
          double bestd = norm_distance(zi, cent[0].data(), t_len);
          uint32_t bestj = 0;
          for (int j = 1; j < k; ++j) {
            const double d = norm_distance(zi, cent[std::size_t(j)].data(), t_len);
            if (d < bestd) {
              bestd = d;
              bestj = uint32_t(j);
            }
          }
          cur.assign[i] = bestj;
          assigned_dist[i] = bestd;
        }
      });
      ops.distance += uint64_t(k) * n;
      ledger += uint64_t(k) * n;

      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) obj += assigned_dist[i];
      cur.obj_trace.push_back(obj);
      cur.objective = obj;

      std::vector<std::size_t> counts(std::size_t(k), 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[cur.assign[i]];
      std::vector<int> empties;
      for (int j = 0; j < k; ++j)
        if (counts[std::size_t(j)] == 0) empties.push_back(j);

      if (empties.empty() && cur.assign == prev) {
        ++iter;
        break;
      }
      prev = cur.assign;

      // Update step: mean of member normalized rows, put back on the sphere.
      std::vector<std::vector<double>> sums(std::size_t(k),
                                            std::vector<double>(t_len, 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        const double* zi = norm.row(rows[i]);
        auto& s = sums[cur.assign[i]];
        for (std::size_t t = 0; t < t_len; ++t) s[t] += zi[t];
      }
      for (int j = 0; j < k; ++j) {
        if (counts[std::size_t(j)] == 0) continue;
        auto& s = sums[std::size_t(j)];
        double sq = 0.0;
        for (double v : s) sq += v * v;
        const double nrm = std::sqrt(sq);
        if (nrm > 0.0)
          for (double& v : s) v /= nrm;
        else
          std::fill(s.begin(), s.end(), 0.0);  // members cancelled out
        cent[std::size_t(j)] = std::move(s);
      }

      // Empty clusters restart at the row farthest from its centroid.
      if (!empties.empty()) {
        std::fill(used_for_reseed.begin(), used_for_reseed.end(), 0);
        for (int j : empties) {
          double maxd = -1.0;
          std::size_t pick = 0;
          for (std::size_t i = 0; i < n; ++i) {
            if (used_for_reseed[i]) continue;
            if (assigned_dist[i] > maxd) {
              maxd = assigned_dist[i];
              pick = i;
            }
          }
          used_for_reseed[pick] = 1;
          const double* zp = norm.row(rows[pick]);
          cent[std::size_t(j)].assign(zp, zp + t_len);
        }
      }
    }
    cur.iters = iter;
    cur.centroids_norm = std::move(cent);
    if (cur.objective < best.objective) best = std::move(cur);
  }
  return best;
}

struct PendingNode {
  int id;
  std::vector<uint32_t> members;  // ascending original row indices
};

// Disjoint-set with path compression; small and local to the merge passes.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[std::size_t(x)] != x) {
      parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
      x = parent[std::size_t(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::size_t(std::max(a, b))] = std::min(a, b);
  }
};

LabelVolume labels_from_assignment(const TimeSeriesMatrix& data,
                                   const VolumeGeometry& geometry,
                                   const std::vector<uint32_t>& row_labels) {
  LabelVolume lv;
  lv.geometry = geometry;
  lv.labels.assign(geometry.voxel_count(), 0);
  if (data.index_map.size() != data.rows)
    throw_invalid("clustering: matrix has no usable index map");
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto& c = data.index_map[r];
    if (c.x >= geometry.nx || c.y >= geometry.ny || c.z >= geometry.nz)
      throw_invalid("clustering: coordinate outside geometry");
    lv.labels[geometry.linear(c.x, c.y, c.z)] = row_labels[r];
  }
  return lv;
}

}  // namespace

std::vector<uint32_t> kmeans_pp_seed(const TimeSeriesMatrix& data, int k, Rng& rng,
                                     OpCounts* ops) {
  if (k < 1 || std::size_t(k) > data.rows)
    throw_invalid("kmeans_pp_seed: need 1 <= k <= N");
  const NormData norm = normalize_rows(data);
  std::vector<uint32_t> rows(data.rows);
  std::iota(rows.begin(), rows.end(), 0);
  OpCounts local;
  auto s = seed_subset(norm, rows, k, rng, local);
  if (ops) *ops += local;
  return s;
}

KMeansResult kmeans(const TimeSeriesMatrix& data, const KMeansConfig& cfg) {
  const NormData norm = normalize_rows(data);
  std::vector<uint32_t> rows(data.rows);
  std::iota(rows.begin(), rows.end(), 0);

  KMeansResult res;
  Rng base(cfg.seed);
  EngineResult eng = kmeans_subset(norm, rows, cfg, base, res.ops, res.ledger_ops);

  const int k = int(eng.centroids_norm.size());
  res.assignments.resize(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i) res.assignments[i] = eng.assign[i] + 1;
  res.objective = eng.objective;
  res.iters_used = eng.iters;
  res.objective_trace = std::move(eng.obj_trace);

  std::vector<std::vector<uint32_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < data.rows; ++i)
    members[eng.assign[i]].push_back(uint32_t(i));
  res.centroids.resize(std::size_t(k));
  for (int j = 0; j < k; ++j) {
    if (members[std::size_t(j)].empty())
      res.centroids[std::size_t(j)].assign(data.cols, 0.0);
    else
      res.centroids[std::size_t(j)] = raw_mean(data, members[std::size_t(j)]);
  }
  return res;
}

SplitResult binary_split(const TimeSeriesMatrix& data,
                         const std::vector<uint32_t>& member_rows,
                         const KMeansConfig& cfg, OpCounts* ops, uint64_t* ledger) {
  if (member_rows.size() < 2)
    throw_invalid("binary_split: node must have at least 2 member rows");
  const NormData norm = normalize_rows(data);
  OpCounts local_ops;
  uint64_t local_ledger = 0;
  KMeansConfig k2 = cfg;
  k2.k = 2;
  Rng node_rng = Rng(cfg.seed).substream(kPurposeNode, 0);
  EngineResult eng = kmeans_subset(norm, member_rows, k2, node_rng, local_ops, local_ledger);
  if (ops) *ops += local_ops;
  if (ledger) *ledger += local_ledger;

  SplitResult out;
  for (std::size_t i = 0; i < member_rows.size(); ++i)
    (eng.assign[i] == eng.assign[0] ? out.rows_a : out.rows_b).push_back(member_rows[i]);
  if (out.rows_b.empty()) {
    out.centroid_a = raw_mean(data, out.rows_a);
    out.child_correlation = 1.0;
    return out;
  }
  out.centroid_a = raw_mean(data, out.rows_a);
  out.centroid_b = raw_mean(data, out.rows_b);
  out.child_correlation = centroid_correlation(normalized_centroid(norm, out.rows_a),
                                               normalized_centroid(norm, out.rows_b));
  return out;
}

Parcellation multistage_cluster(const TimeSeriesMatrix& data,
                                const VolumeGeometry& geometry,
                                const MultistageConfig& cfg) {
  if (!(cfg.ct > 0.0 && cfg.ct < 1.0))
    throw_invalid("multistage_cluster: ct must be in (0,1)");
  if (cfg.ns < 1) throw_invalid("multistage_cluster: ns must be >= 1");
  const NormData norm = normalize_rows(data);

  Parcellation out;
  HierarchyTree tree;
  tree.ct = cfg.ct;
  tree.ns = cfg.ns;

  KMeansConfig k2 = cfg.kmeans;
  k2.k = 2;
  Rng seed_root(k2.seed);

  std::vector<uint32_t> all(data.rows);
  std::iota(all.begin(), all.end(), 0);

  HierarchyNode root;
  root.id = 0;
  root.stage = 0;
  root.voxel_count = all.size();
  root.centroid = raw_mean(data, all);
  tree.nodes.push_back(root);

  std::vector<PendingNode> parents;
  parents.push_back({0, std::move(all)});

  std::vector<std::vector<uint32_t>> leaf_members;  // by pre-merge cluster number - 1
  std::vector<int> leaf_node_ids;

  auto converge = [&](int node_id, std::vector<uint32_t>&& members) {
    tree.nodes[std::size_t(node_id)].converged = true;
    leaf_members.push_back(std::move(members));
    leaf_node_ids.push_back(node_id);
    tree.nodes[std::size_t(node_id)].cluster_number = int(leaf_members.size());
  };

  for (int depth = 0; depth < cfg.ns && !parents.empty(); ++depth) {
    std::vector<PendingNode> next;
    for (auto& pn : parents) {
      if (pn.members.size() < 2) {
        converge(pn.id, std::move(pn.members));
        continue;
      }
      Rng node_rng = seed_root.substream(kPurposeNode, uint64_t(pn.id));
      EngineResult eng =
          kmeans_subset(norm, pn.members, k2, node_rng, out.ops, out.ledger_ops);

      std::vector<uint32_t> rows_a, rows_b;
      for (std::size_t i = 0; i < pn.members.size(); ++i)
        (eng.assign[i] == eng.assign[0] ? rows_a : rows_b).push_back(pn.members[i]);

      double child_corr;
      TimeSeries cent_a, cent_b;
      if (rows_b.empty()) {
        child_corr = 1.0;  // k-means could not split: homogeneous by construction
      } else {
        cent_a = raw_mean(data, rows_a);
        cent_b = raw_mean(data, rows_b);
        child_corr = centroid_correlation(normalized_centroid(norm, rows_a),
                                          normalized_centroid(norm, rows_b));
      }
      tree.nodes[std::size_t(pn.id)].split_child_correlation = child_corr;

      if (child_corr >= cfg.ct) {
        converge(pn.id, std::move(pn.members));
        continue;
      }

      const int id_a = int(tree.nodes.size());
      const int id_b = id_a + 1;
      HierarchyNode a, b;
      a.id = id_a;
      b.id = id_b;
      a.stage = b.stage = depth + 1;
      a.parent = b.parent = pn.id;
      a.voxel_count = rows_a.size();
      b.voxel_count = rows_b.size();
      a.centroid = std::move(cent_a);
      b.centroid = std::move(cent_b);
      tree.nodes[std::size_t(pn.id)].child_a = id_a;
      tree.nodes[std::size_t(pn.id)].child_b = id_b;
      tree.nodes.push_back(std::move(a));
      tree.nodes.push_back(std::move(b));
      next.push_back({id_a, std::move(rows_a)});
      next.push_back({id_b, std::move(rows_b)});
    }
    parents = std::move(next);
  }
  // Stage budget exhausted: whatever is left converges as-is.
  for (auto& pn : parents) converge(pn.id, std::move(pn.members));

  // Merge pass: single sweep of pairwise centroid correlations, transitive
  // closure over pairs at or above ct.
  const std::size_t k_pre = leaf_members.size();
  std::vector<TimeSeries> pre_centroids(k_pre);
  for (std::size_t c = 0; c < k_pre; ++c)
    pre_centroids[c] = normalized_centroid(norm, leaf_members[c]);

  UnionFind uf(k_pre);
  for (std::size_t i = 0; i < k_pre; ++i)
    for (std::size_t j = i + 1; j < k_pre; ++j)
      if (centroid_correlation(pre_centroids[i], pre_centroids[j]) >= cfg.ct)
        uf.unite(int(i), int(j));

  // Final clusters keep the order of first convergence.
  std::vector<int> group_label(k_pre, 0);
  int k_final = 0;
  for (std::size_t c = 0; c < k_pre; ++c) {
    const int rootc = uf.find(int(c));
    if (group_label[std::size_t(rootc)] == 0) group_label[std::size_t(rootc)] = ++k_final;
    group_label[c] = group_label[std::size_t(rootc)];
  }

  tree.final_clusters.assign(std::size_t(k_final), {});
  std::vector<std::vector<uint32_t>> final_members(static_cast<std::size_t>(k_final));
  for (std::size_t c = 0; c < k_pre; ++c) {
    const int lbl = group_label[c];
    tree.final_clusters[std::size_t(lbl - 1)].push_back(leaf_node_ids[c]);
    auto& fm = final_members[std::size_t(lbl - 1)];
    fm.insert(fm.end(), leaf_members[c].begin(), leaf_members[c].end());
  }
  for (auto& fm : final_members) std::sort(fm.begin(), fm.end());

  out.k = uint32_t(k_final);
  out.representatives.resize(std::size_t(k_final));
  std::vector<uint32_t> row_labels(data.rows, 0);
  for (int c = 0; c < k_final; ++c) {
    out.representatives[std::size_t(c)] = raw_mean(data, final_members[std::size_t(c)]);
    for (uint32_t r : final_members[std::size_t(c)]) row_labels[r] = uint32_t(c + 1);
  }
  out.labels = labels_from_assignment(data, geometry, row_labels);
  out.tree = std::move(tree);
  out.pre_merge_directions = std::move(pre_centroids);
  return out;
}

Parcellation simple_kmeans(const TimeSeriesMatrix& data,
                           const VolumeGeometry& geometry, int k,
                           const KMeansConfig& cfg) {
  KMeansConfig c = cfg;
  c.k = k;
  KMeansResult res = kmeans(data, c);

  // Compact away empty clusters so labels stay contiguous.
  const int kk = int(res.centroids.size());
  std::vector<std::size_t> counts(std::size_t(kk), 0);
  for (uint32_t a : res.assignments) ++counts[a - 1];
  std::vector<uint32_t> remap(std::size_t(kk), 0);
  uint32_t next = 0;
  for (int j = 0; j < kk; ++j)
    if (counts[std::size_t(j)] > 0) remap[std::size_t(j)] = ++next;

  Parcellation out;
  out.k = next;
  out.ops = res.ops;
  out.ledger_ops = res.ledger_ops;
  out.objective = res.objective;
  std::vector<uint32_t> row_labels(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i)
    row_labels[i] = remap[res.assignments[i] - 1];
  out.labels = labels_from_assignment(data, geometry, row_labels);
  out.representatives.resize(next);
  for (int j = 0; j < kk; ++j)
    if (counts[std::size_t(j)] > 0)
      out.representatives[remap[std::size_t(j)] - 1] = std::move(res.centroids[std::size_t(j)]);
  return out;
}

Parcellation hierarchical_cluster(const TimeSeriesMatrix& data,
                                  const VolumeGeometry& geometry, int k,
                                  std::size_t guard_n) {
  const std::size_t n = data.rows;
  if (n > guard_n)
    throw Error(ErrorCode::ResourceLimit,
                "hierarchical_cluster: N = " + std::to_string(n) +
                    " exceeds the distance-matrix guard of " + std::to_string(guard_n));
  if (k < 1) throw_invalid("hierarchical_cluster: k must be >= 1");
  const int kk = std::min<int>(k, int(n));
  const NormData norm = normalize_rows(data);

  Parcellation out;

  // Condensed upper-triangle distance matrix, float to halve the footprint.
  auto tri = [n](std::size_t i, std::size_t j) {
    // i < j
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  };
  std::vector<float> dist(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = norm.row(i);
    for (std::size_t j = i + 1; j < n; ++j)
      dist[tri(i, j)] = float(norm_distance(zi, norm.row(j), norm.cols));
  }
  out.ops.distance += n * (n - 1) / 2;

  auto d_at = [&](std::size_t i, std::size_t j) -> float& {
    return i < j ? dist[tri(i, j)] : dist[tri(j, i)];
  };

  // Nearest-neighbor chain, average linkage via Lance-Williams updates.
  std::vector<uint8_t> active(n, 1);
  std::vector<std::size_t> size(n, 1);
  struct Merge {
    uint32_t a, b;
    float height;
    uint32_t order;
  };
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  std::vector<std::size_t> chain;
  std::size_t scan_from = 0;

  while (merges.size() + 1 < n) {
    if (chain.empty()) {
      while (!active[scan_from]) ++scan_from;
      chain.push_back(scan_from);
    }
    for (;;) {
      const std::size_t a = chain.back();
      float best = std::numeric_limits<float>::infinity();
      std::size_t bestj = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (!active[j] || j == a) continue;
        const float d = d_at(a, j);
        if (d < best) {
          best = d;
          bestj = j;
        }
      }
      // Prefer the chain predecessor on ties so the chain terminates.
      if (chain.size() >= 2) {
        const std::size_t prev = chain[chain.size() - 2];
        if (d_at(a, prev) == best) bestj = prev;
      }
      if (chain.size() >= 2 && bestj == chain[chain.size() - 2]) {
        // Reciprocal nearest neighbors: merge.
        const std::size_t b = bestj;
        chain.pop_back();
        chain.pop_back();
        const std::size_t keep = std::min(a, b), drop = std::max(a, b);
        const float h = d_at(a, b);
        for (std::size_t j = 0; j < n; ++j) {
          if (!active[j] || j == keep || j == drop) continue;
          d_at(keep, j) = float((double(size[keep]) * d_at(keep, j) +
                                 double(size[drop]) * d_at(drop, j)) /
                                double(size[keep] + size[drop]));
          ++out.ops.merge_update;
        }
        size[keep] += size[drop];
        active[drop] = 0;
        merges.push_back({uint32_t(keep), uint32_t(drop), h, uint32_t(merges.size())});
        if (drop == scan_from) ++scan_from;
        break;
      }
      chain.push_back(bestj);
    }
  }

  // Cut: replay the N-k lowest merges (stable in original order on ties).
  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& x, const Merge& y) { return x.height < y.height; });
  UnionFind uf(n);
  for (std::size_t m = 0; m + std::size_t(kk) < n; ++m)
    uf.unite(int(merges[m].a), int(merges[m].b));

  // Components labelled 1..k in order of smallest member row.
  std::vector<uint32_t> row_labels(n, 0);
  std::vector<int> comp_label(n, 0);
  uint32_t next = 0;
  std::vector<std::vector<uint32_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    const int root = uf.find(int(i));
    if (comp_label[std::size_t(root)] == 0) {
      comp_label[std::size_t(root)] = int(++next);
      members.emplace_back();
    }
    row_labels[i] = uint32_t(comp_label[std::size_t(root)]);
    members[std::size_t(comp_label[std::size_t(root)] - 1)].push_back(uint32_t(i));
  }

  out.k = next;
  out.labels = labels_from_assignment(data, geometry, row_labels);
  out.representatives.resize(next);
  for (uint32_t c = 0; c < next; ++c)
    out.representatives[c] = raw_mean(data, members[c]);
  return out;
}

}  // namespace mskm
