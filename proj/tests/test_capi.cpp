#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mskm/mskm.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("mskm_capi_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(mskm_version()).size() > 0);
  CHECK(std::string(mskm_status_name(MSKM_OK)) == "ok");
  CHECK(std::string(mskm_status_name(MSKM_ERR_FORMAT)) == "format_error");
}

TEST_CASE("null arguments are invalid input with a message") {
  CHECK(mskm_volume_read(nullptr, nullptr) == MSKM_ERR_INVALID_INPUT);
  CHECK(std::strlen(mskm_last_error()) > 0);
}

TEST_CASE("volume create/write/read round trip through the C surface") {
  TempDir td;
  mskm_volume_info info{2, 2, 1, 3, 1.f, 1.f, 1.f, 2.f, 0};
  std::vector<float> data(12);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = float(i) * 0.5f;

  mskm_volume* v = nullptr;
  REQUIRE(mskm_volume_create(&info, data.data(), data.size(), &v) == MSKM_OK);
  const std::string p = td.path("v.f4d");
  REQUIRE(mskm_volume_write(v, p.c_str()) == MSKM_OK);

  mskm_volume* r = nullptr;
  REQUIRE(mskm_volume_read(p.c_str(), &r) == MSKM_OK);
  mskm_volume_info got{};
  REQUIRE(mskm_volume_get_info(r, &got) == MSKM_OK);
  CHECK(got.nx == 2);
  CHECK(got.nt == 3);
  CHECK(got.tr == 2.f);
  CHECK(got.kind == 0);
  std::vector<float> back(12);
  REQUIRE(mskm_volume_get_data(r, back.data(), back.size()) == MSKM_OK);
  CHECK(back == data);
  // Undersized buffer is rejected.
  CHECK(mskm_volume_get_data(r, back.data(), 3) == MSKM_ERR_INVALID_INPUT);
  mskm_volume_free(v);
  mskm_volume_free(r);
}

TEST_CASE("format errors carry the right status") {
  TempDir td;
  const std::string p = td.path("junk.f4d");
  std::ofstream(p) << "this is not a volume";
  mskm_volume* v = nullptr;
  CHECK(mskm_volume_read(p.c_str(), &v) == MSKM_ERR_FORMAT);
  CHECK(mskm_volume_read(td.path("missing.f4d").c_str(), &v) == MSKM_ERR_IO);
}

TEST_CASE("invalid label payload rejected at create") {
  mskm_volume_info info{2, 1, 1, 1, 1.f, 1.f, 1.f, 0.f, 1};
  const float bad[2] = {1.f, 2.5f};
  mskm_volume* v = nullptr;
  CHECK(mskm_volume_create(&info, bad, 2, &v) == MSKM_ERR_FORMAT);
}

TEST_CASE("synth to cluster to metrics through handles") {
  // Noiseless grid with well-spread fixed phases.
  const char* spec =
      R"({"phases_rad": [0.0, 0.8, 2.37, 3.9, 1.9, 5.3]})";
  mskm_volume* data = nullptr;
  mskm_volume* truth = nullptr;
  char* sidecar = nullptr;
  REQUIRE(mskm_synth_grid(spec, INFINITY, 42, &data, &truth, &sidecar) == MSKM_OK);
  const json side = json::parse(sidecar);
  CHECK(side.at("snr") == "inf");
  mskm_string_free(sidecar);

  mskm_cluster_params params;
  mskm_cluster_params_init(&params);
  CHECK(params.ct == 0.7);
  CHECK(params.ns == 7);
  CHECK(params.replicates == 5);
  CHECK(params.max_iters == 100);
  params.ns = 3;

  mskm_parcellation* parc = nullptr;
  REQUIRE(mskm_cluster_run(data, nullptr, "multistage", &params, &parc) == MSKM_OK);
  uint32_t k = 0;
  REQUIRE(mskm_parcellation_get_k(parc, &k) == MSKM_OK);
  CHECK(k >= 1);
  CHECK(k <= 8);

  mskm_volume* labels = nullptr;
  REQUIRE(mskm_parcellation_get_labels(parc, &labels) == MSKM_OK);

  char* rep = nullptr;
  REQUIRE(mskm_metrics_compare(labels, truth, &rep) == MSKM_OK);
  const json jrep = json::parse(rep);
  CHECK(jrep.at("msi").get<double>() <= 1.0);
  CHECK(jrep.at("mean_si").get<double>() <= jrep.at("msi").get<double>() + 1e-15);
  mskm_string_free(rep);

  char* csv = nullptr;
  REQUIRE(mskm_parcellation_centroids_csv(parc, 0, &csv) == MSKM_OK);
  CHECK(std::string(csv).find(',') != std::string::npos);
  mskm_string_free(csv);

  char* tree = nullptr;
  REQUIRE(mskm_parcellation_tree_json(parc, &tree) == MSKM_OK);
  const json jtree = json::parse(tree);
  CHECK(jtree.at("format") == "mskm-tree/1");
  mskm_string_free(tree);

  char* report = nullptr;
  REQUIRE(mskm_parcellation_report_json(parc, &report) == MSKM_OK);
  CHECK(json::parse(report).at("algorithm") == "multistage");
  mskm_string_free(report);

  // Baselines have no tree.
  mskm_parcellation* simple = nullptr;
  params.k = 3;
  REQUIRE(mskm_cluster_run(data, nullptr, "simple", &params, &simple) == MSKM_OK);
  char* no_tree = nullptr;
  CHECK(mskm_parcellation_tree_json(simple, &no_tree) == MSKM_ERR_INVALID_INPUT);

  mskm_parcellation_free(simple);
  mskm_parcellation_free(parc);
  mskm_volume_free(labels);
  mskm_volume_free(truth);
  mskm_volume_free(data);
}

TEST_CASE("same seed gives identical outputs through the C API") {
  mskm_volume *d1 = nullptr, *d2 = nullptr;
  REQUIRE(mskm_synth_grid(nullptr, 1.0, 7, &d1, nullptr, nullptr) == MSKM_OK);
  REQUIRE(mskm_synth_grid(nullptr, 1.0, 7, &d2, nullptr, nullptr) == MSKM_OK);
  std::vector<float> b1(64 * 50), b2(64 * 50);
  REQUIRE(mskm_volume_get_data(d1, b1.data(), b1.size()) == MSKM_OK);
  REQUIRE(mskm_volume_get_data(d2, b2.data(), b2.size()) == MSKM_OK);
  CHECK(b1 == b2);
  mskm_volume_free(d1);
  mskm_volume_free(d2);
}

TEST_CASE("paradigm boxcar helper") {
  const uint32_t onsets[2] = {3, 8};
  double* buf = nullptr;
  size_t len = 0;
  REQUIRE(mskm_paradigm_boxcar(12, onsets, 2, 2, &buf, &len) == MSKM_OK);
  REQUIRE(len == 12);
  const std::vector<double> expect{0, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0, 0};
  for (std::size_t i = 0; i < 12; ++i) CHECK(buf[i] == expect[i]);
  mskm_buffer_free(buf);
}

TEST_CASE("single-voxel mask clusters to K=1") {
  mskm_volume* data = nullptr;
  REQUIRE(mskm_synth_grid(nullptr, 1.0, 3, &data, nullptr, nullptr) == MSKM_OK);
  std::vector<float> flags(64, 0.f);
  flags[10] = 1.f;
  mskm_volume_info minfo{8, 8, 1, 1, 3.f, 3.f, 3.f, 0.1f, 2};
  mskm_volume* mask = nullptr;
  REQUIRE(mskm_volume_create(&minfo, flags.data(), flags.size(), &mask) == MSKM_OK);

  mskm_cluster_params params;
  mskm_cluster_params_init(&params);
  params.ns = 3;
  mskm_parcellation* parc = nullptr;
  REQUIRE(mskm_cluster_run(data, mask, "multistage", &params, &parc) == MSKM_OK);
  uint32_t k = 0;
  REQUIRE(mskm_parcellation_get_k(parc, &k) == MSKM_OK);
  CHECK(k == 1);

  // Empty mask is its own error code.
  std::fill(flags.begin(), flags.end(), 0.f);
  mskm_volume* empty = nullptr;
  REQUIRE(mskm_volume_create(&minfo, flags.data(), flags.size(), &empty) == MSKM_OK);
  mskm_parcellation* p2 = nullptr;
  CHECK(mskm_cluster_run(data, empty, "multistage", &params, &p2) == MSKM_ERR_EMPTY_MASK);

  mskm_parcellation_free(parc);
  mskm_volume_free(empty);
  mskm_volume_free(mask);
  mskm_volume_free(data);
}

TEST_CASE("bench predict through the C API") {
  uint64_t ops = 0;
  REQUIRE(mskm_bench_predict("hier", 100, 0, 0, 0, 0, &ops) == MSKM_OK);
  CHECK(ops == 4950);
  REQUIRE(mskm_bench_predict("simple", 1000, 10, 5, 100, 0, &ops) == MSKM_OK);
  CHECK(ops == 5000000);
  CHECK(mskm_bench_predict("nope", 1, 1, 1, 1, 1, &ops) == MSKM_ERR_INVALID_INPUT);
}

TEST_CASE("task synth and hrf rank through the C API") {
  const char* spec = R"({"noise_sigma": 0.0})";
  mskm_volume *data = nullptr, *truth = nullptr;
  char* sidecar = nullptr;
  REQUIRE(mskm_synth_task(spec, 11, &data, &truth, &sidecar) == MSKM_OK);
  const json side = json::parse(sidecar);
  const auto paradigm = side.at("paradigm").get<std::vector<double>>();
  CHECK(paradigm.size() == 165);
  mskm_string_free(sidecar);

  mskm_cluster_params params;
  mskm_cluster_params_init(&params);
  params.ns = 3;
  mskm_parcellation* parc = nullptr;
  REQUIRE(mskm_cluster_run(data, nullptr, "multistage", &params, &parc) == MSKM_OK);
  mskm_volume* labels = nullptr;
  REQUIRE(mskm_parcellation_get_labels(parc, &labels) == MSKM_OK);
  char* tree = nullptr;
  REQUIRE(mskm_parcellation_tree_json(parc, &tree) == MSKM_OK);

  char* rank = nullptr;
  REQUIRE(mskm_hrf_rank(labels, data, tree, paradigm.data(), paradigm.size(), 0.4,
                        &rank) == MSKM_OK);
  const json jrank = json::parse(rank);
  CHECK(jrank.at("primary").get<uint32_t>() >= 1);
  mskm_string_free(rank);
  mskm_string_free(tree);

  const auto onsets = json::parse(R"([15,45,75,105,135])").get<std::vector<uint32_t>>();
  char *fit_json = nullptr, *fit_csv = nullptr;
  REQUIRE(mskm_hrf_fit(labels, data, onsets.data(), onsets.size(), 30, 1, 0, &fit_json,
                       &fit_csv) == MSKM_OK);
  CHECK(json::parse(fit_json).at("clusters").size() >= 1);
  CHECK(std::string(fit_csv).rfind("cluster,lag,beta", 0) == 0);
  mskm_string_free(fit_csv);

  // Percent-change normalization rescales betas by the cluster temporal mean.
  char* fit_pc_json = nullptr;
  const mskm_status pc_status = mskm_hrf_fit(labels, data, onsets.data(), onsets.size(),
                                             30, 1, 1, &fit_pc_json, nullptr);
  if (pc_status == MSKM_OK) {
    const json a = json::parse(fit_json);
    const json b = json::parse(fit_pc_json);
    CHECK(b.at("percent_change") == true);
    CHECK(a.at("clusters").size() == b.at("clusters").size());
    mskm_string_free(fit_pc_json);
  } else {
    // A cluster with zero temporal mean makes the normalization undefined.
    CHECK(pc_status == MSKM_ERR_INVALID_INPUT);
  }
  mskm_string_free(fit_json);

  mskm_volume_free(labels);
  mskm_parcellation_free(parc);
  mskm_volume_free(truth);
  mskm_volume_free(data);
}
