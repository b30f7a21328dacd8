#include "mskm/mskm.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include <json.hpp>

#include "mskm/bench.hpp"
#include "mskm/clustering.hpp"
#include "mskm/core.hpp"
#include "mskm/errors.hpp"
#include "mskm/hrf.hpp"
#include "mskm/metrics.hpp"
#include "mskm/preprocess.hpp"
#include "mskm/synth.hpp"
#include "mskm/volio.hpp"

using nlohmann::json;

struct mskm_volume {
  mskm::Volume4D v;
  mskm::VolumeKind kind = mskm::VolumeKind::Series;
};

struct mskm_parcellation {
  mskm::Parcellation p;
  std::string algorithm;
  mskm_cluster_params params{};
};

namespace {

thread_local std::string g_last_error;

mskm_status map_code(mskm::ErrorCode c) {
  switch (c) {
    case mskm::ErrorCode::InvalidInput: return MSKM_ERR_INVALID_INPUT;
    case mskm::ErrorCode::EmptyInput: return MSKM_ERR_EMPTY_INPUT;
    case mskm::ErrorCode::EmptyMask: return MSKM_ERR_EMPTY_MASK;
    case mskm::ErrorCode::FormatError: return MSKM_ERR_FORMAT;
    case mskm::ErrorCode::ResourceLimit: return MSKM_ERR_RESOURCE_LIMIT;
    case mskm::ErrorCode::IoError: return MSKM_ERR_IO;
    case mskm::ErrorCode::Internal: return MSKM_ERR_INTERNAL;
  }
  return MSKM_ERR_INTERNAL;
}

template <typename Fn>
mskm_status wrap(Fn&& fn) {
  try {
    fn();
    return MSKM_OK;
  } catch (const mskm::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MSKM_ERR_RESOURCE_LIMIT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MSKM_ERR_INTERNAL;
  }
}

mskm_status fail_null(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return MSKM_ERR_INVALID_INPUT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void assign_out(char** slot, const std::string& s) {
  if (slot) *slot = dup_string(s);
}

json parse_json(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    mskm::throw_invalid(std::string(what) + ": " + e.what());
  }
}

mskm::MaskVolume mask_for_data(const mskm_volume* data, const mskm_volume* mask) {
  mskm::MaskVolume m;
  if (mask) {
    m = mskm::mask_from_volume(mask->v);
    if (!m.geometry.same_dims(data->v.geometry))
      mskm::throw_invalid("mask and data dimensions differ");
  } else {
    m.geometry = data->v.geometry;
    m.flags.assign(data->v.geometry.voxel_count(), 1);
  }
  if (m.count() == 0)
    throw mskm::Error(mskm::ErrorCode::EmptyMask, "mask has no voxels set");
  return m;
}

json ops_json(const mskm::OpCounts& ops) {
  return json{{"distance", ops.distance},
              {"seeding", ops.seeding},
              {"merge_update", ops.merge_update}};
}

mskm::GridSpec grid_spec_from_json(const json& j) {
  mskm::GridSpec spec;
  if (j.contains("width")) spec.width = j.at("width").get<uint32_t>();
  if (j.contains("height")) spec.height = j.at("height").get<uint32_t>();
  if (j.contains("t_points")) spec.t_points = j.at("t_points").get<uint32_t>();
  if (j.contains("fs_hz")) spec.fs_hz = j.at("fs_hz").get<double>();
  if (j.contains("freqs_hz")) spec.freqs_hz = j.at("freqs_hz").get<std::vector<double>>();
  if (j.contains("phases_rad") && !j.at("phases_rad").is_null())
    spec.phases_rad = j.at("phases_rad").get<std::vector<double>>();
  if (j.contains("region_map") && !j.at("region_map").is_null())
    spec.region_map = j.at("region_map").get<std::vector<uint32_t>>();
  if (j.contains("voxel_mm")) spec.voxel_mm = j.at("voxel_mm").get<double>();
  if (j.contains("snr")) {
    const auto& s = j.at("snr");
    if (s.is_string())
      spec.snr = std::numeric_limits<double>::infinity();
    else
      spec.snr = s.get<double>();
  }
  return spec;
}

json grid_spec_to_json(const mskm::GridSpec& spec) {
  json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["t_points"] = spec.t_points;
  j["fs_hz"] = spec.fs_hz;
  j["freqs_hz"] = spec.freqs_hz;
  j["voxel_mm"] = spec.voxel_mm;
  if (std::isfinite(spec.snr))
    j["snr"] = spec.snr;
  else
    j["snr"] = "inf";
  return j;
}

mskm::TaskSpec task_spec_from_json(const json& j) {
  mskm::TaskSpec spec;
  if (j.contains("n_blocks")) spec.n_blocks = j.at("n_blocks").get<uint32_t>();
  if (j.contains("on_s")) spec.on_s = j.at("on_s").get<double>();
  if (j.contains("off_s")) spec.off_s = j.at("off_s").get<double>();
  if (j.contains("pre_rest_s")) spec.pre_rest_s = j.at("pre_rest_s").get<double>();
  if (j.contains("post_rest_s")) spec.post_rest_s = j.at("post_rest_s").get<double>();
  if (j.contains("tr_s")) spec.tr_s = j.at("tr_s").get<double>();
  if (j.contains("hrf_true") && !j.at("hrf_true").is_null())
    spec.hrf_true = j.at("hrf_true").get<std::vector<double>>();
  if (j.contains("noise_sigma")) spec.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("width")) spec.width = j.at("width").get<uint32_t>();
  if (j.contains("height")) spec.height = j.at("height").get<uint32_t>();
  if (j.contains("responding")) {
    const auto r = j.at("responding").get<std::vector<uint32_t>>();
    if (r.size() != 4) mskm::throw_invalid("task spec: responding must be [x0,y0,w,h]");
    spec.resp_x0 = r[0];
    spec.resp_y0 = r[1];
    spec.resp_w = r[2];
    spec.resp_h = r[3];
  }
  if (j.contains("voxel_mm")) spec.voxel_mm = j.at("voxel_mm").get<double>();
  return spec;
}

mskm::KMeansConfig kmeans_from_params(const mskm_cluster_params* p) {
  mskm::KMeansConfig kc;
  kc.k = p->k;
  kc.replicates = p->replicates;
  kc.max_iters = p->max_iters;
  kc.seed = p->seed;
  kc.threads = p->threads;
  return kc;
}

}  // namespace

extern "C" {

const char* mskm_version(void) { return "1.0.0"; }

const char* mskm_status_name(mskm_status s) {
  switch (s) {
    case MSKM_OK: return "ok";
    case MSKM_ERR_INVALID_INPUT: return "invalid_input";
    case MSKM_ERR_EMPTY_INPUT: return "empty_input";
    case MSKM_ERR_EMPTY_MASK: return "empty_mask";
    case MSKM_ERR_FORMAT: return "format_error";
    case MSKM_ERR_RESOURCE_LIMIT: return "resource_limit";
    case MSKM_ERR_IO: return "io_error";
    case MSKM_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* mskm_last_error(void) { return g_last_error.c_str(); }

void mskm_string_free(char* s) { std::free(s); }
void mskm_buffer_free(void* p) { std::free(p); }

/* ---- volumes ------------------------------------------------------------ */

mskm_status mskm_volume_read(const char* path, mskm_volume** out) {
  if (!path || !out) return fail_null("path/out");
  return wrap([&] {
    auto* h = new mskm_volume();
    try {
      h->v = mskm::read_f4d(path, &h->kind);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

mskm_status mskm_volume_write(const mskm_volume* v, const char* path) {
  if (!v || !path) return fail_null("volume/path");
  return wrap([&] { mskm::write_f4d(v->v, path, v->kind); });
}

mskm_status mskm_volume_get_info(const mskm_volume* v, mskm_volume_info* out) {
  if (!v || !out) return fail_null("volume/out");
  out->nx = v->v.geometry.nx;
  out->ny = v->v.geometry.ny;
  out->nz = v->v.geometry.nz;
  out->nt = v->v.nt;
  out->dx = v->v.geometry.dx;
  out->dy = v->v.geometry.dy;
  out->dz = v->v.geometry.dz;
  out->tr = v->v.geometry.tr;
  out->kind = uint8_t(v->kind);
  return MSKM_OK;
}

mskm_status mskm_volume_get_data(const mskm_volume* v, float* out, size_t capacity) {
  if (!v || !out) return fail_null("volume/out");
  return wrap([&] {
    if (capacity < v->v.voxels.size())
      mskm::throw_invalid("buffer too small: need " + std::to_string(v->v.voxels.size()) +
                          " floats");
    std::memcpy(out, v->v.voxels.data(), v->v.voxels.size() * sizeof(float));
  });
}

mskm_status mskm_volume_create(const mskm_volume_info* info, const float* data, size_t count,
                               mskm_volume** out) {
  if (!info || !data || !out) return fail_null("info/data/out");
  return wrap([&] {
    if (info->kind > 2) mskm::throw_invalid("kind must be 0, 1 or 2");
    mskm::Volume4D v;
    v.geometry = {info->nx, info->ny, info->nz, info->dx, info->dy, info->dz, info->tr};
    v.nt = info->nt;
    const std::size_t need = v.geometry.voxel_count() * v.nt;
    if (count != need)
      mskm::throw_invalid("data count " + std::to_string(count) + " != nx*ny*nz*nt = " +
                          std::to_string(need));
    v.voxels.assign(data, data + count);
    auto kind = mskm::VolumeKind(info->kind);
    if (kind == mskm::VolumeKind::Labels) (void)mskm::labels_from_volume(v);
    if (kind == mskm::VolumeKind::Mask) (void)mskm::mask_from_volume(v);
    *out = new mskm_volume{std::move(v), kind};
  });
}

void mskm_volume_free(mskm_volume* v) { delete v; }

/* ---- synth --------------------------------------------------------------- */

mskm_status mskm_synth_grid(const char* spec_json, double snr, uint64_t seed,
                            mskm_volume** out_data, mskm_volume** out_truth,
                            char** out_sidecar_json) {
  if (!out_data) return fail_null("out_data");
  return wrap([&] {
    mskm::GridSpec spec;
    if (spec_json) spec = grid_spec_from_json(parse_json(spec_json, "grid spec"));
    if (!std::isfinite(snr))
      spec.snr = std::numeric_limits<double>::infinity();
    else if (snr > 0.0)
      spec.snr = snr;
    mskm::GridData grid = mskm::generate_grid(spec, seed);

    json sidecar = grid_spec_to_json(spec);
    sidecar["seed"] = seed;
    sidecar["phases_rad"] = grid.phases_rad;
    sidecar["region_sigma"] = grid.region_sigma;

    *out_data = new mskm_volume{std::move(grid.data), mskm::VolumeKind::Series};
    if (out_truth)
      *out_truth = new mskm_volume{mskm::volume_from_labels(grid.truth),
                                   mskm::VolumeKind::Labels};
    assign_out(out_sidecar_json, sidecar.dump(2) + "\n");
  });
}

mskm_status mskm_synth_task(const char* spec_json, uint64_t seed, mskm_volume** out_data,
                            mskm_volume** out_truth, char** out_sidecar_json) {
  if (!out_data) return fail_null("out_data");
  return wrap([&] {
    mskm::TaskSpec spec;
    if (spec_json) spec = task_spec_from_json(parse_json(spec_json, "task spec"));
    mskm::TaskData task = mskm::generate_task(spec, seed);

    json sidecar;
    sidecar["seed"] = seed;
    sidecar["n_blocks"] = spec.n_blocks;
    sidecar["on_s"] = spec.on_s;
    sidecar["off_s"] = spec.off_s;
    sidecar["pre_rest_s"] = spec.pre_rest_s;
    sidecar["post_rest_s"] = spec.post_rest_s;
    sidecar["tr_s"] = spec.tr_s;
    sidecar["t_points"] = task.t_points;
    sidecar["noise_sigma"] = spec.noise_sigma;
    sidecar["onsets"] = task.onsets;
    sidecar["paradigm"] = task.paradigm;
    sidecar["hrf_true"] = task.hrf_true;

    *out_data = new mskm_volume{std::move(task.data), mskm::VolumeKind::Series};
    if (out_truth)
      *out_truth = new mskm_volume{mskm::volume_from_mask(task.responding),
                                   mskm::VolumeKind::Mask};
    assign_out(out_sidecar_json, sidecar.dump(2) + "\n");
  });
}

/* ---- preprocess ----------------------------------------------------------- */

void mskm_preprocess_params_init(mskm_preprocess_params* p) {
  if (!p) return;
  p->mask_threshold = 0.0;
  p->smooth_fwhm_mm = 0.0;
  p->detrend_poly_order = 1;
  p->regress_global = 1;
  p->regress_top_pcs = 0;
  p->threads = 0;
}

mskm_status mskm_preprocess_run(const mskm_volume* in, const mskm_preprocess_params* params,
                                mskm_volume** out_data, mskm_volume** out_mask,
                                char** out_report_json) {
  if (!in || !params || !out_data) return fail_null("in/params/out_data");
  return wrap([&] {
    mskm::PreprocessConfig cfg;
    cfg.mask_threshold = params->mask_threshold;
    cfg.smooth_fwhm_mm = params->smooth_fwhm_mm;
    cfg.detrend_poly_order = params->detrend_poly_order;
    cfg.regress_global = params->regress_global != 0;
    cfg.regress_top_pcs = params->regress_top_pcs;
    cfg.threads = params->threads;

    const mskm::MaskVolume mask = mskm::mask_from_threshold(in->v, cfg.mask_threshold);
    const mskm::Volume4D smoothed =
        mskm::gaussian_smooth(in->v, mask, cfg.smooth_fwhm_mm, cfg.threads);
    const mskm::TimeSeriesMatrix mat = mskm::vectorize(smoothed, mask);
    mskm::RegressResult reg = mskm::detrend_and_regress(mat, cfg);

    json report;
    report["mask_threshold"] = cfg.mask_threshold;
    report["smooth_fwhm_mm"] = cfg.smooth_fwhm_mm;
    report["detrend_poly_order"] = cfg.detrend_poly_order;
    report["regress_global"] = cfg.regress_global;
    report["regress_top_pcs"] = cfg.regress_top_pcs;
    report["n_in_mask"] = mask.count();
    report["t_points"] = in->v.nt;
    report["regressors_used"] = reg.regressors_used;
    report["regressors_dropped"] = reg.regressors_dropped;
    report["warnings"] = reg.warnings;

    *out_data = new mskm_volume{mskm::devectorize(reg.matrix, mask),
                                mskm::VolumeKind::Series};
    if (out_mask)
      *out_mask = new mskm_volume{mskm::volume_from_mask(mask), mskm::VolumeKind::Mask};
    assign_out(out_report_json, report.dump(2) + "\n");
  });
}

/* ---- clustering ------------------------------------------------------------ */

void mskm_cluster_params_init(mskm_cluster_params* p) {
  if (!p) return;
  p->ct = 0.7;
  p->ns = 7;
  p->k = 10;
  p->replicates = 5;
  p->max_iters = 100;
  p->seed = 0;
  p->threads = 0;
  p->hier_guard = 20000;
}

mskm_status mskm_cluster_run(const mskm_volume* data, const mskm_volume* mask,
                             const char* algorithm, const mskm_cluster_params* params,
                             mskm_parcellation** out) {
  if (!data || !algorithm || !params || !out) return fail_null("data/algorithm/params/out");
  return wrap([&] {
    const mskm::Algorithm algo = mskm::algorithm_from_name(algorithm);
    const mskm::MaskVolume m = mask_for_data(data, mask);
    const mskm::TimeSeriesMatrix mat = mskm::vectorize(data->v, m);
    const mskm::KMeansConfig kc = kmeans_from_params(params);

    auto* h = new mskm_parcellation();
    try {
      h->algorithm = mskm::algorithm_name(algo);
      h->params = *params;
      switch (algo) {
        case mskm::Algorithm::Multistage: {
          mskm::MultistageConfig mc;
          mc.ct = params->ct;
          mc.ns = params->ns;
          mc.kmeans = kc;
          h->p = mskm::multistage_cluster(mat, data->v.geometry, mc);
          break;
        }
        case mskm::Algorithm::Simple:
          h->p = mskm::simple_kmeans(mat, data->v.geometry, params->k, kc);
          break;
        case mskm::Algorithm::Hierarchical:
          h->p = mskm::hierarchical_cluster(mat, data->v.geometry, params->k,
                                            std::size_t(params->hier_guard));
          break;
      }
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

mskm_status mskm_parcellation_get_k(const mskm_parcellation* p, uint32_t* out) {
  if (!p || !out) return fail_null("parcellation/out");
  *out = p->p.k;
  return MSKM_OK;
}

mskm_status mskm_parcellation_get_labels(const mskm_parcellation* p, mskm_volume** out) {
  if (!p || !out) return fail_null("parcellation/out");
  return wrap([&] {
    *out = new mskm_volume{mskm::volume_from_labels(p->p.labels), mskm::VolumeKind::Labels};
  });
}

mskm_status mskm_parcellation_centroids_csv(const mskm_parcellation* p, int header,
                                            char** out_csv) {
  if (!p || !out_csv) return fail_null("parcellation/out_csv");
  return wrap([&] {
    std::string body;
    if (header && !p->p.representatives.empty()) {
      for (std::size_t t = 0; t < p->p.representatives.front().size(); ++t) {
        if (t) body.push_back(',');
        body += "t" + std::to_string(t);
      }
      body.push_back('\n');
    }
    for (const auto& row : p->p.representatives) {
      for (std::size_t t = 0; t < row.size(); ++t) {
        if (t) body.push_back(',');
        body += mskm::format_shortest(row[t]);
      }
      body.push_back('\n');
    }
    *out_csv = dup_string(body);
  });
}

mskm_status mskm_parcellation_tree_json(const mskm_parcellation* p, char** out) {
  if (!p || !out) return fail_null("parcellation/out");
  return wrap([&] {
    if (!p->p.tree)
      mskm::throw_invalid("this parcellation has no hierarchy tree (baseline algorithm)");
    *out = dup_string(mskm::tree_to_json(*p->p.tree));
  });
}

mskm_status mskm_parcellation_report_json(const mskm_parcellation* p, char** out) {
  if (!p || !out) return fail_null("parcellation/out");
  return wrap([&] {
    json rep;
    rep["algorithm"] = p->algorithm;
    rep["k"] = p->p.k;
    rep["seed"] = p->params.seed;
    rep["replicates"] = p->params.replicates;
    rep["max_iters"] = p->params.max_iters;
    if (p->algorithm == "multistage") {
      rep["ct"] = p->params.ct;
      rep["ns"] = p->params.ns;
    } else {
      rep["requested_k"] = p->params.k;
    }
    rep["objective"] = p->p.objective;
    rep["ops"] = ops_json(p->p.ops);
    rep["ledger_ops"] = p->p.ledger_ops;
    *out = dup_string(rep.dump(2) + "\n");
  });
}

void mskm_parcellation_free(mskm_parcellation* p) { delete p; }

/* ---- metrics ---------------------------------------------------------------- */

mskm_status mskm_metrics_compare(const mskm_volume* a_labels, const mskm_volume* b_labels,
                                 char** out_json) {
  if (!a_labels || !b_labels || !out_json) return fail_null("a/b/out_json");
  return wrap([&] {
    const mskm::LabelVolume a = mskm::labels_from_volume(a_labels->v);
    const mskm::LabelVolume b = mskm::labels_from_volume(b_labels->v);
    const mskm::SimilarityReport rep = mskm::compare_parcellations(a, b);
    json j;
    j["msi"] = rep.msi;
    j["mean_si"] = rep.mean_si;
    json rows = json::array();
    for (const auto& c : rep.per_cluster)
      rows.push_back({{"label", c.label},
                      {"si", c.si},
                      {"best_match", c.best_match},
                      {"size", c.size}});
    j["clusters"] = std::move(rows);
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

mskm_status mskm_metrics_intra(const mskm_volume* labels, const mskm_volume* data,
                               char** out_json, char** out_csv) {
  if (!labels || !data || !out_json) return fail_null("labels/data/out_json");
  return wrap([&] {
    const mskm::LabelVolume lv = mskm::labels_from_volume(labels->v);
    const mskm::IntraClusterReport rep = mskm::intra_cluster_correlation(lv, data->v);
    json j;
    j["grand_mean"] = rep.grand_mean;
    json rows = json::array();
    std::string csv = "cluster,mean_correlation,size\n";
    for (std::size_t i = 0; i < rep.labels.size(); ++i) {
      rows.push_back({{"label", rep.labels[i]},
                      {"mean_correlation", rep.mean_correlation[i]},
                      {"size", rep.sizes[i]}});
      csv += std::to_string(rep.labels[i]) + "," +
             mskm::format_shortest(rep.mean_correlation[i]) + "," +
             std::to_string(rep.sizes[i]) + "\n";
    }
    j["clusters"] = std::move(rows);
    *out_json = dup_string(j.dump(2) + "\n");
    assign_out(out_csv, csv);
  });
}

mskm_status mskm_metrics_overlap(const mskm_volume* labels, const mskm_volume* gm,
                                 const mskm_volume* wm, char** out_json, char** out_csv) {
  if (!labels || !gm || !wm || !out_json) return fail_null("labels/gm/wm/out_json");
  return wrap([&] {
    const mskm::LabelVolume lv = mskm::labels_from_volume(labels->v);
    const mskm::MaskVolume gmask = mskm::mask_from_volume(gm->v);
    const mskm::MaskVolume wmask = mskm::mask_from_volume(wm->v);
    const auto rows = mskm::tissue_overlap(lv, gmask, wmask);
    json j = json::array();
    std::string csv = "cluster,gm_frac,wm_frac,size\n";
    for (const auto& r : rows) {
      j.push_back({{"label", r.label},
                   {"gm_frac", r.gm_frac},
                   {"wm_frac", r.wm_frac},
                   {"size", r.size}});
      csv += std::to_string(r.label) + "," + mskm::format_shortest(r.gm_frac) + "," +
             mskm::format_shortest(r.wm_frac) + "," + std::to_string(r.size) + "\n";
    }
    *out_json = dup_string(json{{"clusters", j}}.dump(2) + "\n");
    assign_out(out_csv, csv);
  });
}

mskm_status mskm_metrics_random_baseline(uint32_t nx, uint32_t ny, uint32_t nz, uint32_t k,
                                         uint32_t trials, uint64_t seed, char** out_json) {
  if (!out_json) return fail_null("out_json");
  return wrap([&] {
    if (trials == 0) mskm::throw_invalid("random baseline: trials must be >= 1");
    mskm::VolumeGeometry geom{nx, ny, nz, 1.f, 1.f, 1.f, 0.f};
    mskm::Rng rng(seed);
    std::vector<double> msi, mean_si, sq_si;
    for (uint32_t t = 0; t < trials; ++t) {
      mskm::Rng ra = rng.substream(21, t);
      mskm::Rng rb = rng.substream(22, t);
      const mskm::LabelVolume a = mskm::random_parcellation(geom, k, ra);
      const mskm::LabelVolume b = mskm::random_parcellation(geom, k, rb);
      const mskm::SimilarityReport rep = mskm::compare_parcellations(a, b);
      msi.push_back(rep.msi);
      mean_si.push_back(rep.mean_si);
      sq_si.push_back(rep.msi * rep.msi);
    }
    double m = 0, s = 0, mm = 0, msq = 0;
    for (std::size_t i = 0; i < msi.size(); ++i) {
      m += msi[i];
      mm += mean_si[i];
      msq += sq_si[i];
    }
    m /= double(trials);
    mm /= double(trials);
    msq /= double(trials);
    for (double v : msi) s += (v - m) * (v - m);
    s = trials > 1 ? std::sqrt(s / double(trials - 1)) : 0.0;
    json j;
    j["dims"] = {nx, ny, nz};
    j["k"] = k;
    j["trials"] = trials;
    j["seed"] = seed;
    j["mean_msi"] = m;
    j["std_msi"] = s;
    j["mean_mean_si"] = mm;
    // Squared-index variant (no square root in the per-pair index), reported
    // as a diagnostic alongside the primary definition.
    j["mean_msi_squared"] = msq;
    j["per_trial_msi"] = msi;
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

/* ---- hrf ---------------------------------------------------------------------- */

mskm_status mskm_hrf_fit(const mskm_volume* labels, const mskm_volume* data,
                         const uint32_t* onsets, size_t n_onsets, uint32_t lags,
                         int intercept, int percent_change, char** out_json,
                         char** out_csv) {
  if (!labels || !data || !onsets || !out_json) return fail_null("labels/data/onsets/out_json");
  return wrap([&] {
    const mskm::LabelVolume lv = mskm::labels_from_volume(labels->v);
    const auto reps = mskm::representatives_from_labels(lv, data->v);
    const std::vector<uint32_t> ons(onsets, onsets + n_onsets);
    const mskm::FirDesign design =
        mskm::fir_design(data->v.nt, ons, lags, intercept != 0);

    json j;
    j["lags"] = lags;
    j["intercept"] = intercept != 0;
    j["percent_change"] = percent_change != 0;
    j["onsets"] = ons;
    json rows = json::array();
    std::string csv = "cluster,lag,beta\n";
    for (std::size_t c = 0; c < reps.size(); ++c) {
      mskm::HrfEstimate est = mskm::fit_hrf(reps[c], design);
      if (percent_change) {
        double mean = 0.0;
        for (double v : reps[c]) mean += v;
        mean /= double(reps[c].size());
        if (mean == 0.0)
          mskm::throw_invalid("percent-change normalization: cluster " +
                              std::to_string(c + 1) + " has zero temporal mean");
        for (double& b : est.betas) b = 100.0 * b / mean;
      }
      json je;
      je["label"] = c + 1;
      je["betas"] = est.betas;
      if (est.intercept) je["intercept"] = *est.intercept;
      je["residual_norm"] = est.residual_norm;
      je["rank_deficient"] = est.rank_deficient;
      rows.push_back(std::move(je));
      for (std::size_t l = 0; l < est.betas.size(); ++l)
        csv += std::to_string(c + 1) + "," + std::to_string(l) + "," +
               mskm::format_shortest(est.betas[l]) + "\n";
    }
    j["clusters"] = std::move(rows);
    *out_json = dup_string(j.dump(2) + "\n");
    assign_out(out_csv, csv);
  });
}

mskm_status mskm_hrf_rank(const mskm_volume* labels, const mskm_volume* data,
                          const char* tree_json, const double* paradigm, size_t paradigm_len,
                          double secondary_threshold, char** out_json) {
  if (!labels || !data || !paradigm || !out_json)
    return fail_null("labels/data/paradigm/out_json");
  return wrap([&] {
    const mskm::LabelVolume lv = mskm::labels_from_volume(labels->v);
    const auto reps = mskm::representatives_from_labels(lv, data->v);
    std::optional<mskm::HierarchyTree> tree;
    if (tree_json) tree = mskm::tree_from_json(tree_json);
    const std::span<const double> par(paradigm, paradigm_len);
    const mskm::ActivationReport rep =
        mskm::rank_activation(reps, tree ? &*tree : nullptr, par, secondary_threshold);

    json j;
    j["primary"] = rep.primary;
    j["secondary"] = rep.secondary;
    j["anticorrelated"] = rep.anticorrelated;
    j["secondary_threshold"] = rep.secondary_threshold;
    j["tree_available"] = rep.tree_available;
    json rows = json::array();
    for (const auto& e : rep.clusters)
      rows.push_back({{"label", e.label},
                      {"paradigm_correlation", e.paradigm_correlation},
                      {"converged_early", e.converged_early}});
    j["clusters"] = std::move(rows);
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

mskm_status mskm_paradigm_boxcar(uint32_t t_points, const uint32_t* onsets, size_t n_onsets,
                                 uint32_t on_trs, double** out, size_t* out_len) {
  if (!onsets || !out || !out_len) return fail_null("onsets/out/out_len");
  return wrap([&] {
    if (n_onsets == 0) mskm::throw_invalid("paradigm: no onsets");
    if (on_trs == 0) mskm::throw_invalid("paradigm: on_trs must be >= 1");
    for (size_t i = 0; i < n_onsets; ++i)
      if (onsets[i] >= t_points) mskm::throw_invalid("paradigm: onset outside [0, T)");
    double* buf = static_cast<double*>(std::calloc(t_points, sizeof(double)));
    if (!buf) throw std::bad_alloc();
    for (size_t i = 0; i < n_onsets; ++i)
      for (uint32_t t = onsets[i]; t < std::min(t_points, onsets[i] + on_trs); ++t)
        buf[t] = 1.0;
    *out = buf;
    *out_len = t_points;
  });
}

/* ---- bench ----------------------------------------------------------------------- */

mskm_status mskm_bench_predict(const char* algorithm, uint64_t n, uint64_t k, uint64_t r,
                               uint64_t m, uint64_t ns, uint64_t* out) {
  if (!algorithm || !out) return fail_null("algorithm/out");
  return wrap([&] {
    *out = mskm::predicted_ops(mskm::algorithm_from_name(algorithm), n, k, r, m, ns);
  });
}

mskm_status mskm_bench_scaling(const uint64_t* sizes, size_t n_sizes, uint32_t t_points,
                               uint32_t repeats, const mskm_cluster_params* params,
                               char** out_json, char** out_csv) {
  if (!sizes || !params || !out_json) return fail_null("sizes/params/out_json");
  return wrap([&] {
    mskm::ScalingConfig cfg;
    cfg.sizes.assign(sizes, sizes + n_sizes);
    cfg.t_points = t_points;
    cfg.repeats = repeats;
    cfg.simple_k = params->k;
    cfg.ct = params->ct;
    cfg.ns = params->ns;
    cfg.replicates = params->replicates;
    cfg.max_iters = params->max_iters;
    cfg.seed = params->seed;
    cfg.threads = params->threads;
    cfg.hier_guard = std::size_t(params->hier_guard);
    const mskm::ScalingSweep sweep = mskm::run_scaling_sweep(cfg);

    json j;
    j["slopes"] = {{"simple", sweep.slope_simple},
                   {"hierarchical", sweep.slope_hierarchical},
                   {"multistage", sweep.slope_multistage}};
    j["hierarchical_skipped"] = sweep.hierarchical_skipped;
    json rows = json::array();
    std::string csv =
        "algorithm,n,mean_seconds,mean_cpu_seconds,distance_ops,predicted_ops\n";
    for (const auto& r : sweep.results) {
      rows.push_back({{"algorithm", mskm::algorithm_name(r.algorithm)},
                      {"n", r.n},
                      {"mean_seconds", r.mean_seconds},
                      {"mean_cpu_seconds", r.mean_cpu_seconds},
                      {"distance_ops", r.distance_ops},
                      {"predicted_ops", r.predicted},
                      {"repeats", r.repeats}});
      csv += mskm::algorithm_name(r.algorithm) + "," + std::to_string(r.n) + "," +
             mskm::format_shortest(r.mean_seconds) + "," +
             mskm::format_shortest(r.mean_cpu_seconds) + "," +
             std::to_string(r.distance_ops) + "," + std::to_string(r.predicted) + "\n";
    }
    j["results"] = std::move(rows);
    *out_json = dup_string(j.dump(2) + "\n");
    assign_out(out_csv, csv);
  });
}

mskm_status mskm_bench_table(double snr, const double* ct_grid, size_t n_ct,
                             const int32_t* ns_grid, size_t n_ns, uint32_t seeds,
                             const mskm_cluster_params* params, char** out_json,
                             char** out_csv) {
  if (!ct_grid || !ns_grid || !params || !out_json)
    return fail_null("ct_grid/ns_grid/params/out_json");
  return wrap([&] {
    mskm::GridSpec spec;
    spec.snr = std::isfinite(snr) && snr > 0.0 ? snr
                                               : std::numeric_limits<double>::infinity();
    const std::vector<double> cts(ct_grid, ct_grid + n_ct);
    std::vector<int> nss(ns_grid, ns_grid + n_ns);
    const mskm::KMeansConfig kc = kmeans_from_params(params);
    const mskm::SweepTable table =
        mskm::run_hyperparameter_sweep(spec, cts, nss, seeds, params->seed, kc);

    std::string csv = "ct";
    for (int ns : table.ns_values) csv += ",ns" + std::to_string(ns);
    csv += "\n";
    for (std::size_t ci = 0; ci < table.ct_values.size(); ++ci) {
      csv += mskm::format_shortest(table.ct_values[ci]);
      for (std::size_t ni = 0; ni < table.ns_values.size(); ++ni)
        csv += "," + mskm::format_shortest(table.mean_k[ci * table.ns_values.size() + ni]);
      csv += "\n";
    }
    json j;
    j["snr"] = spec.snr;
    j["seeds"] = seeds;
    j["ct"] = table.ct_values;
    j["ns"] = table.ns_values;
    j["mean_k"] = table.mean_k;
    *out_json = dup_string(j.dump(2) + "\n");
    assign_out(out_csv, csv);
  });
}

mskm_status mskm_bench_smoothing(double snr, const double* fwhm_grid, size_t n_fwhm,
                                 uint32_t seeds, const mskm_cluster_params* params,
                                 char** out_json, char** out_csv) {
  if (!fwhm_grid || !params || !out_json) return fail_null("fwhm_grid/params/out_json");
  return wrap([&] {
    mskm::GridSpec spec;
    spec.snr = std::isfinite(snr) && snr > 0.0 ? snr
                                               : std::numeric_limits<double>::infinity();
    mskm::MultistageConfig mc;
    mc.ct = params->ct;
    mc.ns = params->ns;
    mc.kmeans = kmeans_from_params(params);
    const std::vector<double> fwhms(fwhm_grid, fwhm_grid + n_fwhm);
    const mskm::SmoothingSweep sweep =
        mskm::run_smoothing_sweep(spec, fwhms, seeds, params->seed, mc);

    std::string csv = "fwhm_mm,mean_k,mean_intra_corr,mean_msi_vs_truth\n";
    json rows = json::array();
    for (const auto& pt : sweep.points) {
      rows.push_back({{"fwhm_mm", pt.fwhm_mm},
                      {"mean_k", pt.mean_k},
                      {"mean_intra_corr", pt.mean_intra_corr},
                      {"mean_msi_vs_truth", pt.mean_msi_vs_truth}});
      csv += mskm::format_shortest(pt.fwhm_mm) + "," + mskm::format_shortest(pt.mean_k) +
             "," + mskm::format_shortest(pt.mean_intra_corr) + "," +
             mskm::format_shortest(pt.mean_msi_vs_truth) + "\n";
    }
    json j;
    j["snr"] = spec.snr;
    j["seeds"] = seeds;
    j["points"] = std::move(rows);
    j["intra_fit"] = {{"slope", sweep.intra_slope}, {"r2", sweep.intra_r2}};
    j["k_fit"] = {{"slope", sweep.k_slope}, {"r2", sweep.k_r2}};
    *out_json = dup_string(j.dump(2) + "\n");
    assign_out(out_csv, csv);
  });
}

}  // extern "C"
