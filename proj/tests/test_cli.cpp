#include <cstdio>
#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hemocyte/cli.hpp"
#include "hemocyte/eval.hpp"
#include "hemocyte/image_io.hpp"
#include "hemocyte/synthetic.hpp"
#include "support/tmpdir.hpp"

using namespace hemocyte;
using testutil::TmpDir;

namespace {

// Captures stdout while the command runs; the CLI prints results there.
int run_captured(const std::vector<std::string>& args, std::string* out) {
  std::ostringstream sink;
  std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
  int rc = -1;
  try {
    rc = run_command(args);
  } catch (...) {
    std::cout.rdbuf(old);
    throw;
  }
  std::cout.rdbuf(old);
  *out = sink.str();
  return rc;
}

std::string make_dataset(TmpDir& tmp, int per_class) {
  const std::string root = tmp.sub("data");
  for (int label = 0; label < 4; ++label) {
    const std::string dir = root + "/" + canonical_class_names()[label];
    std::filesystem::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "s-%03d.png", i);
      save_png_rgb(synth_smear(label, 7000 + 1000 * label + i),
                   std::filesystem::path(dir) / name);
    }
  }
  return root;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  std::string out;
  CHECK(run_captured({"--definitely-not-a-flag"}, &out) == 2);
  CHECK(run_captured({"transmogrify"}, &out) == 2);
  CHECK(run_captured({"segment"}, &out) == 2);  // --in/--out are required
  CHECK(run_captured({"--help"}, &out) == 0);
}

TEST_CASE("config errors exit with 3") {
  unsetenv("HEMOCYTE_DATA");  // keep the no-dataset probe hermetic
  TmpDir tmp("cli-cfg");
  const std::string bad = tmp.sub("bad.json");
  {
    std::ofstream f(bad);
    f << "{ this is not json";
  }
  const std::string img = tmp.sub("in.png");
  save_png_rgb(synth_smear(1, 3), img);

  std::string out;
  CHECK(run_captured({"segment", "--in", img, "--out", tmp.sub("a.png"), "--out-dir",
                      tmp.sub("o1"), "--config", bad},
                     &out) == 3);
  CHECK(run_captured({"segment", "--in", img, "--out", tmp.sub("b.png"), "--out-dir",
                      tmp.sub("o2"), "--space", "cmyk"},
                     &out) == 3);
  CHECK(run_captured({"train", "--out", tmp.sub("m.json"), "--out-dir", tmp.sub("o3")}, &out) ==
        3);  // no dataset root anywhere
}

TEST_CASE("pipeline errors exit with 1") {
  TmpDir tmp("cli-io");
  std::string out;
  CHECK(run_captured({"segment", "--in", tmp.sub("ghost.png"), "--out", tmp.sub("g.png"),
                      "--out-dir", tmp.sub("o")},
                     &out) == 1);
}

TEST_CASE("segment writes the crop and a manifest") {
  TmpDir tmp("cli-seg");
  const std::string img = tmp.sub("cell.png");
  save_png_rgb(synth_smear(2, 11), img);
  const std::string out_dir = tmp.sub("out");
  const std::string crop = tmp.sub("crop.png");

  std::string out;
  REQUIRE(run_captured({"segment", "--in", img, "--out", crop, "--out-dir", out_dir}, &out) == 0);
  CHECK(out.find("wrote") != std::string::npos);

  REQUIRE(std::filesystem::exists(crop));
  Image reread = load_image_rgb(crop);
  CHECK(reread.width == 128);
  CHECK(reread.height == 128);

  nlohmann::json manifest = read_json(out_dir + "/manifest.json");
  CHECK(manifest.at("command") == "segment");
  bool lists_crop = false, lists_self = false;
  for (const auto& a : manifest.at("artifacts")) {
    const std::string s = a.get<std::string>();
    if (s.find("crop.png") != std::string::npos) lists_crop = true;
    if (s.find("manifest.json") != std::string::npos) lists_self = true;
  }
  CHECK(lists_crop);
  CHECK(lists_self);
  CHECK(manifest.at("config").is_object());
  CHECK_FALSE(manifest.at("config_fingerprint").get<std::string>().empty());
  CHECK(manifest.at("timings").contains("total_seconds"));
}

TEST_CASE("featurize emits the descriptor as json") {
  TmpDir tmp("cli-feat");
  const std::string img = tmp.sub("cell.png");
  save_png_rgb(synth_smear(0, 13), img);
  const std::string out_path = tmp.sub("features.json");

  std::string out;
  REQUIRE(run_captured({"featurize", "--in", img, "--out", out_path, "--out-dir", tmp.sub("out"),
                        "--corners", "harris"},
                       &out) == 0);

  nlohmann::json f = read_json(out_path);
  CHECK(f.at("descriptor_id") == "hog32");
  CHECK(f.at("length") == 324);
  REQUIRE(f.at("values").size() == 324);
  CHECK(f.at("corners").at("detector") == "harris");
  CHECK(f.at("corners").at("points").is_array());

  // a pre-segmented 128x128 crop passes through and gives the same descriptor
  const std::string crop = tmp.sub("crop.png");
  std::string out2;
  REQUIRE(run_captured({"segment", "--in", img, "--out", crop, "--out-dir", tmp.sub("seg-out")},
                       &out2) == 0);
  REQUIRE(run_captured({"featurize", "--in", crop, "--out", tmp.sub("f2.json"), "--out-dir",
                        tmp.sub("out2")},
                       &out2) == 0);
  nlohmann::json f2 = read_json(tmp.sub("f2.json"));
  CHECK_FALSE(f2.contains("corners"));
  CHECK(f2.at("values") == f.at("values"));
}

TEST_CASE("train, predict, evaluate make a round trip") {
  TmpDir tmp("cli-train");
  const std::string root = make_dataset(tmp, 8);
  const std::string out_dir = tmp.sub("out");
  const std::string model = tmp.sub("model.json");

  std::string out;
  REQUIRE(run_captured({"train", "--data", root, "--out", model, "--out-dir", out_dir, "--algo",
                        "knn", "--k", "1"},
                       &out) == 0);
  CHECK(out.find("trained knn:k=1") != std::string::npos);
  REQUIRE(std::filesystem::exists(model));
  nlohmann::json mj = read_json(model);
  CHECK(mj.at("format") == "hemocyte-model");
  CHECK(mj.at("classifier").at("family") == "knn");
  CHECK_FALSE(mj.at("pca").is_null());

  // byte-identical to a training lymphocyte, so 1-nn must land on its twin
  const std::string probe = tmp.sub("probe.png");
  save_png_rgb(synth_smear(1, 8003), probe);
  std::string pred;
  REQUIRE(run_captured({"predict", "--model", model, "--in", probe, "--out-dir",
                        tmp.sub("pred-out")},
                       &pred) == 0);
  CHECK(pred.find("LYMPHOCYTE") != std::string::npos);

  std::string eval_out;
  REQUIRE(run_captured({"evaluate", "--data", root, "--out-dir", tmp.sub("eval"), "--algo",
                        "knn:k=1"},
                       &eval_out) == 0);
  REQUIRE(std::filesystem::exists(tmp.sub("eval") + "/evaluation.json"));
  REQUIRE(std::filesystem::exists(tmp.sub("eval") + "/confusion.csv"));
  CHECK(eval_out.find("accuracy") != std::string::npos);
  nlohmann::json ej = read_json(tmp.sub("eval") + "/evaluation.json");
  REQUIRE(ej.is_array());
  const double acc = ej.at(0).at("accuracy").get<double>();
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("compare sweeps the configured specs") {
  TmpDir tmp("cli-cmp");
  const std::string root = make_dataset(tmp, 3);
  const std::string out_dir = tmp.sub("out");
  const std::string cfg_path = tmp.sub("cfg.json");
  {
    nlohmann::json cfg;
    cfg["classifiers"] = {"knn:k=1", "gnb"};
    cfg["pca"] = {{"enabled", true}, {"variance_fraction", 0.95}};
    std::ofstream f(cfg_path);
    f << cfg.dump(2);
  }

  std::string out;
  REQUIRE(run_captured({"compare", "--data", root, "--out-dir", out_dir, "--config", cfg_path},
                       &out) == 0);
  REQUIRE(std::filesystem::exists(out_dir + "/reports.csv"));
  CHECK(out.find("knn:k=1") != std::string::npos);
  CHECK(out.find("gnb") != std::string::npos);
  CHECK(out.find("4 reports") != std::string::npos);

  nlohmann::json manifest = read_json(out_dir + "/manifest.json");
  CHECK(manifest.at("command") == "compare");
  CHECK(manifest.at("cache_dirs").size() == 2);
}

TEST_CASE("inspect-config prints canonical json and fingerprints") {
  std::string out;
  REQUIRE(run_captured({"inspect-config"}, &out) == 0);
  const size_t brace = out.find('{');
  REQUIRE(brace != std::string::npos);
  nlohmann::json j = nlohmann::json::parse(out.substr(brace, out.rfind('}') - brace + 1));
  CHECK(j.at("classifiers").at(0) == "knn:k=1");
  CHECK(j.at("seed") == 42);
  CHECK(j.at("segmentation").at("color_space") == "RGB");
  CHECK(out.find("config_fingerprint ") != std::string::npos);
  CHECK(out.find("pipeline_fingerprint ") != std::string::npos);
}

TEST_CASE("seed and space overrides reach the resolved config") {
  std::string out;
  REQUIRE(run_captured({"inspect-config", "--space", "hsv", "--seed", "7"}, &out) == 0);
  const size_t brace = out.find('{');
  REQUIRE(brace != std::string::npos);
  nlohmann::json j = nlohmann::json::parse(out.substr(brace, out.rfind('}') - brace + 1));
  CHECK(j.at("seed") == 7);
  CHECK(j.at("segmentation").at("color_space") == "HSV");
}
