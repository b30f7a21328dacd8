// mskm command-line front end. Talks to the library exclusively through the
// C API in mskm/mskm.h; the CLI itself only parses flags, moves bytes and
// renames files.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mskm/mskm.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  std::string code;
  CliError(std::string code_, const std::string& msg)
      : std::runtime_error(msg), code(std::move(code_)) {}
};

void check(mskm_status s) {
  if (s != MSKM_OK) throw CliError(mskm_status_name(s), mskm_last_error());
}

// Owned string/buffer helpers around the C API allocation contract.
struct OwnedString {
  char* p = nullptr;
  OwnedString() = default;
  OwnedString(OwnedString&& o) noexcept : p(o.p) { o.p = nullptr; }
  OwnedString& operator=(OwnedString&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  OwnedString(const OwnedString&) = delete;
  OwnedString& operator=(const OwnedString&) = delete;
  ~OwnedString() { mskm_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct VolumeHandle {
  mskm_volume* v = nullptr;
  VolumeHandle() = default;
  VolumeHandle(VolumeHandle&& o) noexcept : v(o.v) { o.v = nullptr; }
  VolumeHandle& operator=(VolumeHandle&& o) noexcept {
    std::swap(v, o.v);
    return *this;
  }
  VolumeHandle(const VolumeHandle&) = delete;
  VolumeHandle& operator=(const VolumeHandle&) = delete;
  ~VolumeHandle() { mskm_volume_free(v); }
};

struct ParcellationHandle {
  mskm_parcellation* p = nullptr;
  ParcellationHandle(const ParcellationHandle&) = delete;
  ParcellationHandle& operator=(const ParcellationHandle&) = delete;
  ParcellationHandle() = default;
  ~ParcellationHandle() { mskm_parcellation_free(p); }
};

void write_file_atomic(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError("io_error", "cannot open '" + tmp + "' for writing");
    out.write(body.data(), std::streamsize(body.size()));
    if (!out) throw CliError("io_error", "write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

void write_volume_atomic(const mskm_volume* v, const std::string& path) {
  const std::string tmp = path + ".tmp";
  check(mskm_volume_write(v, tmp.c_str()));
  fs::rename(tmp, path);
}

VolumeHandle read_volume(const std::string& path) {
  VolumeHandle h;
  check(mskm_volume_read(path.c_str(), &h.v));
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("io_error", "cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

int parse_threads(const std::string& s) {
  if (s == "auto") return 0;
  try {
    return std::stoi(s);
  } catch (...) {
    throw CliError("invalid_input", "--threads expects a number or 'auto'");
  }
}

std::vector<double> parse_grid(const std::string& s) {
  // "a,b,c" or "start:end:step"
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    double start, end, step;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &start, &end, &step) != 3 || step <= 0)
      throw CliError("invalid_input", "grid '" + s + "' must be start:end:step");
    for (double v = start; v <= end + 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw CliError("invalid_input", "empty grid '" + s + "'");
  return out;
}

std::vector<uint32_t> parse_u32_list(const std::string& s) {
  std::vector<uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(uint32_t(std::stoul(item)));
  if (out.empty()) throw CliError("invalid_input", "empty list '" + s + "'");
  return out;
}

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "INF" || s == "Inf")
    return std::numeric_limits<double>::infinity();
  return std::stod(s);
}

struct GlobalOpts {
  uint64_t seed = 0;
  std::string threads = "auto";
  bool quiet = false;
};

mskm_cluster_params cluster_params(const GlobalOpts& g) {
  mskm_cluster_params p;
  mskm_cluster_params_init(&p);
  p.seed = g.seed;
  p.threads = parse_threads(g.threads);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multistage k-means parcellation toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "random seed (default 0)")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads or 'auto'")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "machine-readable errors on stderr");

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate ground-truthed data");
  synth->require_subcommand(1);
  struct {
    std::string snr = "inf", spec, out, truth_out, sidecar_out;
  } sy;
  auto add_synth_flags = [&](CLI::App* c, bool with_snr) {
    if (with_snr) c->add_option("--snr", sy.snr, "signal-to-noise ratio or 'inf'")->capture_default_str();
    c->add_option("--spec", sy.spec, "spec JSON file (defaults when omitted)");
    c->add_option("--out", sy.out, "output data volume (.f4d)")->required();
    c->add_option("--truth-out", sy.truth_out, "ground-truth volume (.f4d)");
    c->add_option("--sidecar-out", sy.sidecar_out, "sidecar JSON with the resolved spec");
  };
  auto* synth_grid = synth->add_subcommand("grid", "sinusoid grid with noise");
  add_synth_flags(synth_grid, true);
  auto* synth_task = synth->add_subcommand("task", "block-design task data");
  add_synth_flags(synth_task, false);

  // ---- preprocess ------------------------------------------------------
  auto* prep = app.add_subcommand("preprocess", "mask, smooth, detrend, regress");
  struct {
    std::string in, out, mask_out, report_out;
    double mask_threshold = 0.0, fwhm = 0.0;
    int detrend_order = 1, pcs = 0;
    bool global_regress = true;
  } pp;
  prep->add_option("--in", pp.in, "input volume (.f4d)")->required();
  prep->add_option("--mask-threshold", pp.mask_threshold, "temporal-mean threshold")
      ->capture_default_str();
  prep->add_option("--smooth-fwhm", pp.fwhm, "Gaussian FWHM in mm")->capture_default_str();
  prep->add_option("--detrend-order", pp.detrend_order, "polynomial detrend order")
      ->capture_default_str();
  prep->add_flag("--global-regress,!--no-global-regress", pp.global_regress,
                 "regress the global mean series")
      ->capture_default_str();
  prep->add_option("--pcs", pp.pcs, "temporal principal components to regress")
      ->capture_default_str();
  prep->add_option("--out", pp.out, "output volume (.f4d)")->required();
  prep->add_option("--mask-out", pp.mask_out, "mask volume (.f4d)");
  prep->add_option("--report-out", pp.report_out, "report JSON");

  // ---- cluster ----------------------------------------------------------
  auto* cluster = app.add_subcommand("cluster", "parcellate a 4D volume");
  cluster->require_subcommand(1);
  struct {
    std::string in, mask, labels_out, centroids_out, tree_out, report_out;
    double ct = 0.7;
    int ns = 7, k = 10, replicates = 5, max_iters = 100;
    uint64_t hier_guard = 20000;
    bool csv_header = false;
  } cl;
  auto add_cluster_io = [&](CLI::App* c) {
    c->add_option("--in", cl.in, "input volume (.f4d)")->required();
    c->add_option("--mask", cl.mask, "mask volume (.f4d); all voxels when omitted");
    c->add_option("--replicates", cl.replicates, "k-means replicates")->capture_default_str();
    c->add_option("--max-iters", cl.max_iters, "Lloyd iteration cap")->capture_default_str();
    c->add_option("--labels-out", cl.labels_out, "label volume (.f4d)");
    c->add_option("--centroids-out", cl.centroids_out, "representative series CSV");
    c->add_flag("--csv-header", cl.csv_header, "emit a header row in the CSV");
    c->add_option("--report-out", cl.report_out, "run report JSON");
  };
  auto* cl_ms = cluster->add_subcommand("multistage", "multistage binary k-means");
  add_cluster_io(cl_ms);
  cl_ms->add_option("--ct", cl.ct, "correlation threshold")->capture_default_str();
  cl_ms->add_option("--ns", cl.ns, "stages in the hierarchy")->capture_default_str();
  cl_ms->add_option("--tree-out", cl.tree_out, "hierarchy tree JSON");
  auto* cl_simple = cluster->add_subcommand("simple", "plain k-means");
  add_cluster_io(cl_simple);
  cl_simple->add_option("--k", cl.k, "number of clusters")->capture_default_str();
  auto* cl_hier = cluster->add_subcommand("hier", "agglomerative average linkage");
  add_cluster_io(cl_hier);
  cl_hier->add_option("--k", cl.k, "number of clusters")->capture_default_str();
  cl_hier->add_option("--hier-guard", cl.hier_guard, "max N for the distance matrix")
      ->capture_default_str();

  // ---- metrics ------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "similarity and homogeneity measures");
  metrics->require_subcommand(1);
  struct {
    std::string a, b, labels, data, gm, wm, out, csv_out, dims = "16,16,16";
    uint32_t k = 8, trials = 100;
  } mt;
  auto* mt_msi = metrics->add_subcommand("msi", "similarity between two parcellations");
  mt_msi->add_option("--a", mt.a, "first label volume")->required();
  mt_msi->add_option("--b", mt.b, "second label volume")->required();
  mt_msi->add_option("--out", mt.out, "report JSON")->required();
  auto* mt_intra = metrics->add_subcommand("intra", "intra-cluster homogeneity");
  mt_intra->add_option("--labels", mt.labels, "label volume")->required();
  mt_intra->add_option("--data", mt.data, "data volume")->required();
  mt_intra->add_option("--out", mt.out, "report JSON")->required();
  mt_intra->add_option("--csv-out", mt.csv_out, "per-cluster CSV");
  auto* mt_ovl = metrics->add_subcommand("overlap", "tissue overlap fractions");
  mt_ovl->add_option("--labels", mt.labels, "label volume")->required();
  mt_ovl->add_option("--gm", mt.gm, "gray-matter mask")->required();
  mt_ovl->add_option("--wm", mt.wm, "white-matter mask")->required();
  mt_ovl->add_option("--out", mt.out, "report JSON")->required();
  mt_ovl->add_option("--csv-out", mt.csv_out, "per-cluster CSV");
  auto* mt_rand = metrics->add_subcommand("random-baseline", "random-parcellation msi");
  mt_rand->add_option("--k", mt.k, "clusters per volume")->capture_default_str();
  mt_rand->add_option("--trials", mt.trials, "number of random pairs")->capture_default_str();
  mt_rand->add_option("--dims", mt.dims, "volume dimensions nx,ny,nz")->capture_default_str();
  mt_rand->add_option("--out", mt.out, "report JSON")->required();

  // ---- hrf -------------------------------------------------------------------
  auto* hrf = app.add_subcommand("hrf", "hemodynamic response estimation");
  hrf->require_subcommand(1);
  struct {
    std::string labels, data, tree, onsets, out, csv_out;
    uint32_t lags = 30, on_trs = 10;
    double secondary_threshold = 0.4;
    bool intercept = true;
    bool percent_change = false;
  } hf;
  auto* hrf_fit = hrf->add_subcommand("fit", "per-cluster FIR fit");
  hrf_fit->add_option("--labels", hf.labels, "label volume")->required();
  hrf_fit->add_option("--data", hf.data, "data volume")->required();
  hrf_fit->add_option("--onsets", hf.onsets, "comma list of onset TRs, or a JSON file")
      ->required();
  hrf_fit->add_option("--lags", hf.lags, "FIR lags")->capture_default_str();
  hrf_fit->add_flag("--intercept,!--no-intercept", hf.intercept, "include an intercept column")
      ->capture_default_str();
  hrf_fit->add_flag("--percent-change", hf.percent_change,
                    "report betas as percent change over the cluster mean");
  hrf_fit->add_option("--out", hf.out, "report JSON")->required();
  hrf_fit->add_option("--csv-out", hf.csv_out, "cluster,lag,beta CSV");
  auto* hrf_rank = hrf->add_subcommand("rank", "primary/secondary activation ranking");
  hrf_rank->add_option("--labels", hf.labels, "label volume")->required();
  hrf_rank->add_option("--data", hf.data, "data volume")->required();
  hrf_rank->add_option("--tree", hf.tree, "hierarchy tree JSON (for secondary regions)");
  hrf_rank->add_option("--onsets", hf.onsets,
                       "comma list of onset TRs, or a JSON file with a paradigm")
      ->required();
  hrf_rank->add_option("--on-trs", hf.on_trs, "boxcar width for a plain onset list")
      ->capture_default_str();
  hrf_rank->add_option("--secondary-threshold", hf.secondary_threshold,
                       "correlation threshold for secondary regions")
      ->capture_default_str();
  hrf_rank->add_option("--out", hf.out, "report JSON")->required();

  // ---- bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "complexity and sweep harnesses");
  bench->require_subcommand(1);
  struct {
    std::string algo = "simple", sizes = "500,1000,2000,4000,8000";
    std::string ct_grid = "0.3:0.95:0.05", ns_grid = "2,3,4,5,6,7,8,9,10";
    std::string fwhm_grid = "0,3,6,9,12", out, json_out, snr = "1";
    uint64_t n = 1000;
    uint32_t t_points = 100, repeats = 20, seeds = 20, k = 10;
    double ct = 0.7;
    int ns = 7;
  } bn;
  auto* bn_pred = bench->add_subcommand("predict", "closed-form distance-op count");
  bn_pred->add_option("--algo", bn.algo, "simple|hier|multistage")->required();
  bn_pred->add_option("--n", bn.n, "data points")->required();
  bn_pred->add_option("--k", bn.k, "clusters (simple)")->capture_default_str();
  bn_pred->add_option("--ns", bn.ns, "stages (multistage)")->capture_default_str();
  auto* bn_scale = bench->add_subcommand("scaling", "wall-clock scaling sweep");
  bn_scale->add_option("--sizes", bn.sizes, "comma list of N")->capture_default_str();
  bn_scale->add_option("--t", bn.t_points, "time points per series")->capture_default_str();
  bn_scale->add_option("--repeats", bn.repeats, "timed repeats per point")->capture_default_str();
  bn_scale->add_option("--k", bn.k, "simple k-means cluster count")->capture_default_str();
  bn_scale->add_option("--ct", bn.ct, "multistage correlation threshold")->capture_default_str();
  bn_scale->add_option("--ns", bn.ns, "multistage stages")->capture_default_str();
  bn_scale->add_option("--out", bn.out, "CSV output")->required();
  bn_scale->add_option("--json-out", bn.json_out, "JSON summary");
  auto* bn_table = bench->add_subcommand("table1", "cluster count vs (ct, ns)");
  bn_table->add_option("--ct-grid", bn.ct_grid, "ct values (list or start:end:step)")
      ->capture_default_str();
  bn_table->add_option("--ns-grid", bn.ns_grid, "ns values")->capture_default_str();
  bn_table->add_option("--snr", bn.snr, "synthetic grid SNR")->capture_default_str();
  bn_table->add_option("--seeds", bn.seeds, "seeds to average over")->capture_default_str();
  bn_table->add_option("--out", bn.out, "CSV output")->required();
  bn_table->add_option("--json-out", bn.json_out, "JSON summary");
  auto* bn_smooth = bench->add_subcommand("smoothing", "kernel-width sweep");
  bn_smooth->add_option("--fwhm-grid", bn.fwhm_grid, "FWHM values in mm")->capture_default_str();
  bn_smooth->add_option("--snr", bn.snr, "synthetic grid SNR")->capture_default_str();
  bn_smooth->add_option("--seeds", bn.seeds, "seeds to average over")->capture_default_str();
  bn_smooth->add_option("--ct", bn.ct, "correlation threshold")->capture_default_str();
  bn_smooth->add_option("--ns", bn.ns, "stages")->capture_default_str();
  bn_smooth->add_option("--out", bn.out, "CSV output")->required();
  bn_smooth->add_option("--json-out", bn.json_out, "JSON summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    // -------- synth --------
    if (synth_grid->parsed() || synth_task->parsed()) {
      std::string spec_json;
      if (!sy.spec.empty()) spec_json = read_file(sy.spec);
      VolumeHandle data, truth;
      OwnedString sidecar;
      if (synth_grid->parsed()) {
        check(mskm_synth_grid(sy.spec.empty() ? nullptr : spec_json.c_str(),
                              parse_snr(sy.snr), g.seed, &data.v,
                              sy.truth_out.empty() ? nullptr : &truth.v, &sidecar.p));
      } else {
        check(mskm_synth_task(sy.spec.empty() ? nullptr : spec_json.c_str(), g.seed,
                              &data.v, sy.truth_out.empty() ? nullptr : &truth.v,
                              &sidecar.p));
      }
      write_volume_atomic(data.v, sy.out);
      if (!sy.truth_out.empty()) write_volume_atomic(truth.v, sy.truth_out);
      if (!sy.sidecar_out.empty()) write_file_atomic(sy.sidecar_out, sidecar.str());
      if (!g.quiet) std::cout << "wrote " << sy.out << "\n";
    }

    // -------- preprocess --------
    if (prep->parsed()) {
      const VolumeHandle in = read_volume(pp.in);
      mskm_preprocess_params params;
      mskm_preprocess_params_init(&params);
      params.mask_threshold = pp.mask_threshold;
      params.smooth_fwhm_mm = pp.fwhm;
      params.detrend_poly_order = pp.detrend_order;
      params.regress_global = pp.global_regress ? 1 : 0;
      params.regress_top_pcs = pp.pcs;
      params.threads = parse_threads(g.threads);
      VolumeHandle out, mask;
      OwnedString report;
      check(mskm_preprocess_run(in.v, &params, &out.v,
                                pp.mask_out.empty() ? nullptr : &mask.v, &report.p));
      write_volume_atomic(out.v, pp.out);
      if (!pp.mask_out.empty()) write_volume_atomic(mask.v, pp.mask_out);
      if (!pp.report_out.empty()) write_file_atomic(pp.report_out, report.str());
      if (!g.quiet) std::cout << "wrote " << pp.out << "\n";
    }

    // -------- cluster --------
    if (cl_ms->parsed() || cl_simple->parsed() || cl_hier->parsed()) {
      const VolumeHandle data = read_volume(cl.in);
      VolumeHandle mask;
      if (!cl.mask.empty()) mask = read_volume(cl.mask);
      mskm_cluster_params params = cluster_params(g);
      params.ct = cl.ct;
      params.ns = cl.ns;
      params.k = cl.k;
      params.replicates = cl.replicates;
      params.max_iters = cl.max_iters;
      params.hier_guard = cl.hier_guard;
      const char* algo = cl_ms->parsed() ? "multistage" : cl_simple->parsed() ? "simple" : "hier";
      ParcellationHandle parc;
      check(mskm_cluster_run(data.v, mask.v, algo, &params, &parc.p));

      uint32_t k = 0;
      check(mskm_parcellation_get_k(parc.p, &k));
      if (!cl.labels_out.empty()) {
        VolumeHandle labels;
        check(mskm_parcellation_get_labels(parc.p, &labels.v));
        write_volume_atomic(labels.v, cl.labels_out);
      }
      if (!cl.centroids_out.empty()) {
        OwnedString csv;
        check(mskm_parcellation_centroids_csv(parc.p, cl.csv_header ? 1 : 0, &csv.p));
        write_file_atomic(cl.centroids_out, csv.str());
      }
      if (!cl.tree_out.empty()) {
        OwnedString tree;
        check(mskm_parcellation_tree_json(parc.p, &tree.p));
        write_file_atomic(cl.tree_out, tree.str());
      }
      if (!cl.report_out.empty()) {
        OwnedString report;
        check(mskm_parcellation_report_json(parc.p, &report.p));
        write_file_atomic(cl.report_out, report.str());
      }
      if (!g.quiet) std::cout << "k=" << k << "\n";
    }

    // -------- metrics --------
    if (mt_msi->parsed()) {
      const VolumeHandle a = read_volume(mt.a), b = read_volume(mt.b);
      OwnedString rep;
      check(mskm_metrics_compare(a.v, b.v, &rep.p));
      write_file_atomic(mt.out, rep.str());
      if (!g.quiet) std::cout << "wrote " << mt.out << "\n";
    }
    if (mt_intra->parsed()) {
      const VolumeHandle labels = read_volume(mt.labels), data = read_volume(mt.data);
      OwnedString rep, csv;
      check(mskm_metrics_intra(labels.v, data.v, &rep.p,
                               mt.csv_out.empty() ? nullptr : &csv.p));
      write_file_atomic(mt.out, rep.str());
      if (!mt.csv_out.empty()) write_file_atomic(mt.csv_out, csv.str());
      if (!g.quiet) std::cout << "wrote " << mt.out << "\n";
    }
    if (mt_ovl->parsed()) {
      const VolumeHandle labels = read_volume(mt.labels), gm = read_volume(mt.gm),
                         wm = read_volume(mt.wm);
      OwnedString rep, csv;
      check(mskm_metrics_overlap(labels.v, gm.v, wm.v, &rep.p,
                                 mt.csv_out.empty() ? nullptr : &csv.p));
      write_file_atomic(mt.out, rep.str());
      if (!mt.csv_out.empty()) write_file_atomic(mt.csv_out, csv.str());
      if (!g.quiet) std::cout << "wrote " << mt.out << "\n";
    }
    if (mt_rand->parsed()) {
      const std::vector<uint32_t> dims = parse_u32_list(mt.dims);
      if (dims.size() != 3) throw CliError("invalid_input", "--dims expects nx,ny,nz");
      OwnedString rep;
      check(mskm_metrics_random_baseline(dims[0], dims[1], dims[2], mt.k, mt.trials,
                                         g.seed, &rep.p));
      write_file_atomic(mt.out, rep.str());
      if (!g.quiet) std::cout << "wrote " << mt.out << "\n";
    }

    // -------- hrf --------
    if (hrf_fit->parsed() || hrf_rank->parsed()) {
      const VolumeHandle labels = read_volume(hf.labels), data = read_volume(hf.data);
      mskm_volume_info info;
      check(mskm_volume_get_info(data.v, &info));

      // --onsets: JSON file (array or object with onsets/paradigm) or list.
      std::vector<uint32_t> onsets;
      std::vector<double> paradigm;
      if (fs::exists(hf.onsets)) {
        const json j = json::parse(read_file(hf.onsets));
        if (j.is_array()) {
          paradigm = j.get<std::vector<double>>();
        } else {
          if (j.contains("onsets")) onsets = j.at("onsets").get<std::vector<uint32_t>>();
          if (j.contains("paradigm"))
            paradigm = j.at("paradigm").get<std::vector<double>>();
        }
        if (onsets.empty() && paradigm.empty())
          throw CliError("invalid_input",
                         "'" + hf.onsets + "' holds neither onsets nor a paradigm");
      } else {
        onsets = parse_u32_list(hf.onsets);
      }

      if (hrf_fit->parsed()) {
        if (onsets.empty())
          throw CliError("invalid_input", "hrf fit needs onset TRs, not a paradigm");
        OwnedString rep, csv;
        check(mskm_hrf_fit(labels.v, data.v, onsets.data(), onsets.size(), hf.lags,
                           hf.intercept ? 1 : 0, hf.percent_change ? 1 : 0, &rep.p,
                           hf.csv_out.empty() ? nullptr : &csv.p));
        write_file_atomic(hf.out, rep.str());
        if (!hf.csv_out.empty()) write_file_atomic(hf.csv_out, csv.str());
      } else {
        if (paradigm.empty()) {
          double* buf = nullptr;
          size_t len = 0;
          check(mskm_paradigm_boxcar(info.nt, onsets.data(), onsets.size(), hf.on_trs,
                                     &buf, &len));
          paradigm.assign(buf, buf + len);
          mskm_buffer_free(buf);
        }
        std::string tree_json;
        if (!hf.tree.empty()) tree_json = read_file(hf.tree);
        OwnedString rep;
        check(mskm_hrf_rank(labels.v, data.v, hf.tree.empty() ? nullptr : tree_json.c_str(),
                            paradigm.data(), paradigm.size(), hf.secondary_threshold,
                            &rep.p));
        write_file_atomic(hf.out, rep.str());
      }
      if (!g.quiet) std::cout << "wrote " << hf.out << "\n";
    }

    // -------- bench --------
    if (bn_pred->parsed()) {
      mskm_cluster_params params = cluster_params(g);
      uint64_t ops = 0;
      check(mskm_bench_predict(bn.algo.c_str(), bn.n, bn.k, uint64_t(params.replicates),
                               uint64_t(params.max_iters), uint64_t(bn.ns), &ops));
      std::cout << ops << "\n";
    }
    if (bn_scale->parsed()) {
      const std::vector<double> sizes_d = parse_grid(bn.sizes);
      std::vector<uint64_t> sizes(sizes_d.begin(), sizes_d.end());
      mskm_cluster_params params = cluster_params(g);
      params.k = int(bn.k);
      params.ct = bn.ct;
      params.ns = bn.ns;
      OwnedString rep, csv;
      check(mskm_bench_scaling(sizes.data(), sizes.size(), bn.t_points, bn.repeats,
                               &params, &rep.p, &csv.p));
      write_file_atomic(bn.out, csv.str());
      if (!bn.json_out.empty()) write_file_atomic(bn.json_out, rep.str());
      if (!g.quiet) std::cout << "wrote " << bn.out << "\n";
    }
    if (bn_table->parsed()) {
      const std::vector<double> cts = parse_grid(bn.ct_grid);
      const std::vector<double> nss_d = parse_grid(bn.ns_grid);
      std::vector<int32_t> nss(nss_d.begin(), nss_d.end());
      mskm_cluster_params params = cluster_params(g);
      OwnedString rep, csv;
      check(mskm_bench_table(parse_snr(bn.snr), cts.data(), cts.size(), nss.data(),
                             nss.size(), bn.seeds, &params, &rep.p, &csv.p));
      write_file_atomic(bn.out, csv.str());
      if (!bn.json_out.empty()) write_file_atomic(bn.json_out, rep.str());
      if (!g.quiet) std::cout << "wrote " << bn.out << "\n";
    }
    if (bn_smooth->parsed()) {
      const std::vector<double> fwhms = parse_grid(bn.fwhm_grid);
      mskm_cluster_params params = cluster_params(g);
      params.ct = bn.ct;
      params.ns = bn.ns;
      OwnedString rep, csv;
      check(mskm_bench_smoothing(parse_snr(bn.snr), fwhms.data(), fwhms.size(), bn.seeds,
                                 &params, &rep.p, &csv.p));
      write_file_atomic(bn.out, csv.str());
      if (!bn.json_out.empty()) write_file_atomic(bn.json_out, rep.str());
      if (!g.quiet) std::cout << "wrote " << bn.out << "\n";
    }
  } catch (const CliError& e) {
    if (g.quiet)
      std::cerr << json{{"error", {{"code", e.code}, {"message", e.what()}}}}.dump() << "\n";
    else
      std::cerr << "error (" << e.code << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    if (g.quiet)
      std::cerr << json{{"error", {{"code", "internal_error"}, {"message", e.what()}}}}.dump()
                << "\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
