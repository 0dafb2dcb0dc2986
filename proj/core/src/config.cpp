#include "hemocyte/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hemocyte/classifiers.hpp"
#include "hemocyte/error.hpp"
#include "hemocyte/hash.hpp"

namespace hemocyte {

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                         const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw Error(ErrorCode::ConfigError,
                  std::string("unknown key '") + it.key() + "' in " + where);
  }
}

nlohmann::json segmentation_to_json(const RunConfig& cfg) {
  return nlohmann::json{{"color_space", color_space_name(cfg.threshold.space)},
                        {"lo", cfg.threshold.lo},
                        {"hi", cfg.threshold.hi},
                        {"dilation_radius", cfg.dilation_radius},
                        {"normalized_size", cfg.normalized_size}};
}

nlohmann::json hog_to_json(const HogParams& hog) {
  return nlohmann::json{{"cell_size", hog.cell_size},
                        {"block_cells", hog.block_cells},
                        {"block_stride", hog.block_stride},
                        {"bins", hog.bins},
                        {"signed", hog.signed_gradients}};
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void validate_config(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (cfg.threshold.space == ColorSpace::Gray) fail("config: gray is not a segmentation space");
  for (int i = 0; i < 3; ++i)
    if (cfg.threshold.lo[i] > cfg.threshold.hi[i])
      fail("config: threshold lo exceeds hi on channel " + std::to_string(i));
  if (cfg.dilation_radius < 0) fail("config: dilation_radius must be >= 0");
  if (cfg.normalized_size < 8) fail("config: normalized_size must be >= 8");
  if (!(cfg.pca.variance_fraction > 0.0) || cfg.pca.variance_fraction > 1.0)
    fail("config: pca.variance_fraction must be in (0, 1]");
  if (cfg.jobs < 0) fail("config: jobs must be >= 0");
  if (cfg.classifiers.empty()) fail("config: at least one classifier spec is required");
  try {
    hog_descriptor_length(cfg.normalized_size, cfg.normalized_size, cfg.hog);
  } catch (const Error& e) {
    fail(std::string("config: hog parameters invalid: ") + e.what());
  }
  for (const std::string& spec : cfg.classifiers) parse_classifier_spec(spec);
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["dataset_root"] = cfg.dataset_root;
  j["segmentation"] = segmentation_to_json(cfg);
  j["hog"] = hog_to_json(cfg.hog);
  j["pca"] = {{"enabled", cfg.pca.enabled}, {"variance_fraction", cfg.pca.variance_fraction}};
  j["classifiers"] = cfg.classifiers;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["jobs"] = cfg.jobs;
  return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse failed: ") + e.what());
  }
  RunConfig cfg;
  try {
    reject_unknown_keys(j, {"dataset_root", "segmentation", "hog", "pca", "classifiers", "seed",
                            "output_dir", "jobs"},
                        "config");
    if (j.contains("dataset_root")) cfg.dataset_root = j["dataset_root"].get<std::string>();
    if (j.contains("segmentation")) {
      const auto& s = j["segmentation"];
      reject_unknown_keys(s, {"color_space", "lo", "hi", "dilation_radius", "normalized_size"},
                          "config.segmentation");
      if (s.contains("color_space")) {
        cfg.threshold = preset_threshold(color_space_from_name(s["color_space"].get<std::string>()));
      }
      if (s.contains("lo")) cfg.threshold.lo = s["lo"].get<std::array<double, 3>>();
      if (s.contains("hi")) cfg.threshold.hi = s["hi"].get<std::array<double, 3>>();
      if (s.contains("dilation_radius")) cfg.dilation_radius = s["dilation_radius"].get<int>();
      if (s.contains("normalized_size")) cfg.normalized_size = s["normalized_size"].get<int>();
    }
    if (j.contains("hog")) {
      const auto& h = j["hog"];
      reject_unknown_keys(h, {"cell_size", "block_cells", "block_stride", "bins", "signed"},
                          "config.hog");
      if (h.contains("cell_size")) cfg.hog.cell_size = h["cell_size"].get<int>();
      if (h.contains("block_cells")) cfg.hog.block_cells = h["block_cells"].get<int>();
      if (h.contains("block_stride")) cfg.hog.block_stride = h["block_stride"].get<int>();
      if (h.contains("bins")) cfg.hog.bins = h["bins"].get<int>();
      if (h.contains("signed")) cfg.hog.signed_gradients = h["signed"].get<bool>();
    }
    if (j.contains("pca")) {
      const auto& p = j["pca"];
      reject_unknown_keys(p, {"enabled", "variance_fraction"}, "config.pca");
      if (p.contains("enabled")) cfg.pca.enabled = p["enabled"].get<bool>();
      if (p.contains("variance_fraction"))
        cfg.pca.variance_fraction = p["variance_fraction"].get<double>();
    }
    if (j.contains("classifiers")) cfg.classifiers = j["classifiers"].get<std::vector<std::string>>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config field has wrong type: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path_or_default) {
  if (path_or_default == "default") return default_config();
  std::ifstream in(path_or_default, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file: " + path_or_default);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_fingerprint(const RunConfig& cfg) {
  return hash_hex(fnv1a64(config_to_json(cfg)));
}

std::string pipeline_fingerprint(const RunConfig& cfg) {
  nlohmann::json j;
  j["segmentation"] = segmentation_to_json(cfg);
  j["hog"] = hog_to_json(cfg.hog);
  return hash_hex(fnv1a64(j.dump()));
}

}  // namespace hemocyte
