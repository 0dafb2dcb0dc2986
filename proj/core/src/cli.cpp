#include "hemocyte/cli.hpp"

#include <CLI11.hpp>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hemocyte/classifiers.hpp"
#include "hemocyte/config.hpp"
#include "hemocyte/error.hpp"
#include "hemocyte/eval.hpp"
#include "hemocyte/features.hpp"
#include "hemocyte/image_io.hpp"
#include "hemocyte/pca.hpp"
#include "hemocyte/segment.hpp"

namespace fs = std::filesystem;

namespace hemocyte {

namespace {

constexpr const char* kVersion = "0.1.0";

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CommonOpts {
  std::string config = "default";
  std::string data;
  std::string out_dir;
  std::string space;
  long long seed = -1;
  int jobs = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config, "config file path, or the literal 'default'");
  cmd->add_option("--data", o.data, "dataset root (overrides HEMOCYTE_DATA and the config)");
  cmd->add_option("--out-dir", o.out_dir, "output directory for artifacts and the manifest");
  cmd->add_option("--space", o.space, "segmentation color space preset: rgb|hsv|ycbcr|lab");
  cmd->add_option("--seed", o.seed, "split/shuffle seed");
  cmd->add_option("--jobs", o.jobs, "worker threads for per-image stages (0 = all cores)");
}

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.space.empty()) cfg.threshold = preset_threshold(color_space_from_name(o.space));
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.jobs >= 0) cfg.jobs = o.jobs;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (!o.data.empty()) {
    cfg.dataset_root = o.data;
  } else if (const char* env = std::getenv("HEMOCYTE_DATA"); env && *env) {
    cfg.dataset_root = env;
  }
  validate_config(cfg);
  return cfg;
}

const std::string& require_dataset_root(const RunConfig& cfg) {
  if (cfg.dataset_root.empty())
    throw Error(ErrorCode::ConfigError,
                "no dataset root: pass --data, set HEMOCYTE_DATA, or set dataset_root in the config");
  return cfg.dataset_root;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    std::vector<std::string> artifacts,
                    const std::map<std::string, double>& timings,
                    const std::vector<std::string>& warnings,
                    const std::vector<std::string>& cache_dirs = {}) {
  fs::create_directories(cfg.output_dir);
  const std::string path = cfg.output_dir + "/manifest.json";
  artifacts.push_back(path);
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  j["config_fingerprint"] = config_fingerprint(cfg);
  j["pipeline_fingerprint"] = pipeline_fingerprint(cfg);
  j["artifacts"] = artifacts;
  j["cache_dirs"] = cache_dirs;
  j["timings"] = timings;
  j["warnings"] = warnings;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void save_by_extension(const Image& img, const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext != ".png" && ext != ".jpg" && ext != ".jpeg")
    throw Error(ErrorCode::ConfigError, "unsupported output extension (use .png or .jpeg): " + path);
  ensure_parent_dir(path);
  if (ext == ".png")
    save_png_rgb(img, path);
  else
    save_jpeg_rgb(img, path);
}

// Pre-segmented crops pass through; anything else runs the full pipeline.
Image to_cell(const Image& img, const RunConfig& cfg) {
  if (img.width == cfg.normalized_size && img.height == cfg.normalized_size) return img;
  const SegmentParams seg = cfg.segment_params();
  return segment_cell(img, seg.threshold, seg.dilation_radius, seg.out_size);
}

std::string spec_from_flags(const std::string& algo, int k, int splits, const std::string& kernel,
                            double c, double gamma) {
  if (algo.find(':') != std::string::npos || algo == "lda" || algo == "qda" || algo == "gnb")
    return algo;
  if (algo == "knn") return "knn:k=" + std::to_string(k);
  if (algo == "tree") return "tree:" + std::to_string(splits);
  if (algo == "svm") {
    std::string spec = "svm:" + (kernel.empty() ? std::string("rbf") : kernel);
    if (c > 0.0) spec += ",c=" + std::to_string(c);
    if (gamma > 0.0) spec += ",gamma=" + std::to_string(gamma);
    return spec;
  }
  throw Error(ErrorCode::ConfigError, "unknown algorithm: " + algo);
}

struct TrainedBundle {
  RunConfig cfg;
  PcaModel pca;
  int pca_k = 0;
  bool pca_enabled = false;
  ClassifierPtr model;
};

std::string bundle_to_json(const TrainedBundle& b) {
  nlohmann::json j;
  j["format"] = "hemocyte-model";
  j["version"] = 1;
  j["config"] = nlohmann::json::parse(config_to_json(b.cfg));
  if (b.pca_enabled) {
    j["pca"] = nlohmann::json::parse(pca_to_json(b.pca));
    j["pca_k"] = b.pca_k;
  } else {
    j["pca"] = nullptr;
    j["pca_k"] = 0;
  }
  j["classifier"] = nlohmann::json::parse(b.model->to_json());
  return j.dump();
}

TrainedBundle bundle_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("model file parse failed: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "hemocyte-model")
      throw Error(ErrorCode::InvalidData, "not a model file: " + path);
    TrainedBundle b;
    b.cfg = config_from_json(j.at("config").dump());
    if (!j.at("pca").is_null()) {
      b.pca = pca_from_json(j.at("pca").dump());
      b.pca_k = j.at("pca_k").get<int>();
      b.pca_enabled = true;
    }
    b.model = deserialize_classifier(j.at("classifier").dump());
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("model file missing field: ") + e.what());
  }
}

void warn_if_unconverged(const Classifier& model, std::vector<std::string>& warnings) {
  if (const auto* svm = dynamic_cast<const SvmClassifier*>(&model); svm && !svm->converged()) {
    warnings.push_back("svm training hit the pass budget before satisfying KKT conditions");
    std::cerr << "warning: " << warnings.back() << "\n";
  }
}

// ---- subcommand bodies ----

int cmd_segment(const CommonOpts& common, const std::string& in, const std::string& out) {
  const RunConfig cfg = resolve_config(common);
  const auto t0 = std::chrono::steady_clock::now();
  const Image img = load_image_rgb(in);
  const SegmentParams seg = cfg.segment_params();
  const SegmentDetail detail =
      segment_cell_detail(img, seg.threshold, seg.dilation_radius, seg.out_size);
  save_by_extension(detail.cell, out);
  std::vector<std::string> warnings;
  if (detail.distorted)
    warnings.push_back("crop hit the image border; aspect ratio was stretched");
  write_manifest(cfg, "segment", {out}, {{"total_seconds", seconds_since(t0)}}, warnings);
  std::cout << "wrote " << out << " (" << detail.cell.width << "x" << detail.cell.height << ")\n";
  return 0;
}

int cmd_featurize(const CommonOpts& common, const std::string& in, const std::string& out,
                  const std::string& corners) {
  const RunConfig cfg = resolve_config(common);
  const auto t0 = std::chrono::steady_clock::now();
  const Image cell = to_cell(load_image_rgb(in), cfg);
  const FeatureVector hog = hog_descriptor(cell, cfg.hog);

  nlohmann::json j;
  j["descriptor_id"] = hog.descriptor_id;
  j["length"] = hog.values.size();
  j["values"] = hog.values;
  if (corners == "harris" || corners == "fast") {
    const std::vector<Corner> found =
        corners == "harris" ? harris_corners(cell) : fast_corners(cell, 20);
    nlohmann::json arr = nlohmann::json::array();
    for (const Corner& c : found)
      arr.push_back({{"x", c.x}, {"y", c.y}, {"response", c.response}});
    j["corners"] = {{"detector", corners}, {"points", arr}};
  } else if (corners != "none") {
    throw Error(ErrorCode::ConfigError, "--corners must be none, harris, or fast");
  }
  ensure_parent_dir(out);
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
  f << j.dump(2) << "\n";

  write_manifest(cfg, "featurize", {out}, {{"total_seconds", seconds_since(t0)}}, {});
  std::cout << "wrote " << out << " (" << hog.values.size() << " features)\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& out, const std::string& spec_text,
              int subset, double pca_frac, bool no_pca) {
  RunConfig cfg = resolve_config(common);
  if (pca_frac > 0.0) {
    cfg.pca.enabled = true;
    cfg.pca.variance_fraction = pca_frac;
  }
  if (no_pca) cfg.pca.enabled = false;
  if (!spec_text.empty()) cfg.classifiers = {spec_text};
  validate_config(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  Dataset ds = ingest_dataset(require_dataset_root(cfg), cfg.seed);
  if (subset > 0) ds = subset_per_class(ds, subset, cfg.seed);

  std::map<std::string, double> timings;
  const auto t_feat = std::chrono::steady_clock::now();
  ExtractionResult ex = extract_features(ds, cfg, cfg.output_dir + "/cache");
  timings["feature_seconds"] = seconds_since(t_feat);
  if (ex.train.x.rows == 0)
    throw Error(ErrorCode::InvalidData, "no training samples survived the pipeline");

  TrainedBundle bundle;
  bundle.cfg = cfg;
  LabeledSet train = std::move(ex.train);
  if (cfg.pca.enabled) {
    const auto t_pca = std::chrono::steady_clock::now();
    bundle.pca = pca_fit(train.x);
    bundle.pca_k = select_k_for_variance(bundle.pca, cfg.pca.variance_fraction);
    train.x = pca_project_matrix(bundle.pca, train.x, bundle.pca_k);
    bundle.pca_enabled = true;
    timings["pca_seconds"] = seconds_since(t_pca);
  }
  const ClassifierSpec spec = parse_classifier_spec(cfg.classifiers.front());
  const auto t_train = std::chrono::steady_clock::now();
  bundle.model = train_from_spec(spec, train);
  timings["train_seconds"] = seconds_since(t_train);
  timings["total_seconds"] = seconds_since(t0);

  std::vector<std::string> warnings;
  warn_if_unconverged(*bundle.model, warnings);
  for (const std::string& f : ex.failures) warnings.push_back("skipped " + f);

  ensure_parent_dir(out);
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
  f << bundle_to_json(bundle) << "\n";

  write_manifest(cfg, "train", {out}, timings, warnings, {cfg.output_dir + "/cache"});
  std::cout << "trained " << spec.display() << " on " << train.x.rows << " samples ("
            << train.x.cols << " features";
  if (bundle.pca_enabled) std::cout << " after pca k=" << bundle.pca_k;
  std::cout << "), wrote " << out << "\n";
  return 0;
}

int cmd_predict(const CommonOpts& common, const std::string& model_path, const std::string& in) {
  TrainedBundle bundle = bundle_from_file(model_path);
  if (!common.out_dir.empty()) bundle.cfg.output_dir = common.out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  const Image cell = to_cell(load_image_rgb(in), bundle.cfg);
  const FeatureVector hog = hog_descriptor(cell, bundle.cfg.hog);
  std::vector<float> values(hog.values.begin(), hog.values.end());
  if (bundle.pca_enabled)
    values = pca_project(bundle.pca, values.data(), static_cast<int>(values.size()), bundle.pca_k);
  const int label = bundle.model->predict(values.data(), static_cast<int>(values.size()));
  write_manifest(bundle.cfg, "predict", {}, {{"total_seconds", seconds_since(t0)}}, {});
  std::cout << bundle.model->class_names.at(label) << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& spec_text, int subset) {
  RunConfig cfg = resolve_config(common);
  if (!spec_text.empty()) cfg.classifiers = {spec_text};
  validate_config(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  Dataset ds = ingest_dataset(require_dataset_root(cfg), cfg.seed);
  if (subset > 0) ds = subset_per_class(ds, subset, cfg.seed);

  ExtractionResult ex = extract_features(ds, cfg, cfg.output_dir + "/cache");
  if (ex.train.x.rows == 0 || ex.test.x.rows == 0)
    throw Error(ErrorCode::InvalidData, "no usable train or test samples");

  LabeledSet train = std::move(ex.train);
  LabeledSet test = std::move(ex.test);
  int pca_k = 0;
  if (cfg.pca.enabled) {
    const PcaModel pca = pca_fit(train.x);
    pca_k = select_k_for_variance(pca, cfg.pca.variance_fraction);
    train.x = pca_project_matrix(pca, train.x, pca_k);
    test.x = pca_project_matrix(pca, test.x, pca_k);
  }
  const ClassifierSpec spec = parse_classifier_spec(cfg.classifiers.front());
  const auto t_train = std::chrono::steady_clock::now();
  ClassifierPtr model = train_from_spec(spec, train);
  const double train_seconds = seconds_since(t_train);

  EvaluationReport rep = evaluate(*model, test, train_seconds, config_fingerprint(cfg));
  rep.algorithm = spec.algorithm;
  rep.variant = spec.variant;
  rep.pca = cfg.pca.enabled;

  std::vector<std::string> warnings;
  warn_if_unconverged(*model, warnings);
  for (const std::string& f : ex.failures) warnings.push_back("skipped " + f);

  fs::create_directories(cfg.output_dir);
  const std::string report_path = cfg.output_dir + "/evaluation.json";
  const std::string confusion_path = cfg.output_dir + "/confusion.csv";
  {
    std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + report_path);
    f << reports_to_json({rep}) << "\n";
  }
  {
    std::ofstream f(confusion_path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + confusion_path);
    f << confusion_to_csv(rep.confusion, ds.class_names);
  }
  write_manifest(cfg, "evaluate", {report_path, confusion_path},
                 {{"train_seconds", train_seconds}, {"total_seconds", seconds_since(t0)}}, warnings,
                 {cfg.output_dir + "/cache"});

  std::cout << spec.display() << (cfg.pca.enabled ? " with pca (k=" + std::to_string(pca_k) + ")"
                                                  : " without pca")
            << ": accuracy " << rep.accuracy << " on " << test.x.rows << " test samples";
  if (!ex.failures.empty()) std::cout << " (" << ex.failures.size() << " images skipped)";
  std::cout << "\n";
  return 0;
}

int cmd_compare(const CommonOpts& common, int subset) {
  const RunConfig cfg = resolve_config(common);
  const auto t0 = std::chrono::steady_clock::now();
  Dataset ds = ingest_dataset(require_dataset_root(cfg), cfg.seed);
  if (subset > 0) ds = subset_per_class(ds, subset, cfg.seed);

  const ComparisonOutput out = run_comparison(ds, cfg);
  write_manifest(cfg, "compare", out.artifacts, {{"total_seconds", seconds_since(t0)}},
                 out.from_cache ? std::vector<std::string>{"reports replayed from cache"}
                                : std::vector<std::string>{},
                 {cfg.output_dir + "/cache", cfg.output_dir + "/report-cache"});

  std::cout << "algorithm        pca    accuracy\n";
  for (const EvaluationReport& r : out.reports) {
    const std::string name = r.algorithm + (r.variant.empty() ? "" : ":" + r.variant);
    char line[64];
    std::snprintf(line, sizeof(line), "%-16s %-6s %.4f", name.c_str(), r.pca ? "yes" : "no",
                  r.accuracy);
    std::cout << line;
    if (!r.error.empty()) std::cout << "  [failed: " << r.error << "]";
    std::cout << "\n";
  }
  std::cout << out.reports.size() << " reports -> " << cfg.output_dir << "/reports.csv\n";
  return 0;
}

int cmd_inspect_config(const CommonOpts& common) {
  const RunConfig cfg = resolve_config(common);
  std::cout << config_to_json(cfg) << "\n";
  std::cout << "config_fingerprint " << config_fingerprint(cfg) << "\n";
  std::cout << "pipeline_fingerprint " << pipeline_fingerprint(cfg) << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("hemocyte");
  for (const std::string& a : args) argv_store.push_back(a);
  std::vector<const char*> argv;
  argv.reserve(argv_store.size());
  for (const std::string& a : argv_store) argv.push_back(a.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data());
}

int run_command(int argc, const char* const* argv) {
  CLI::App app{"white blood cell segmentation and classification pipeline"};
  app.require_subcommand(1);

  CommonOpts seg_opts;
  std::string seg_in, seg_out;
  CLI::App* seg = app.add_subcommand("segment", "extract the normalized cell crop from one image");
  seg->add_option("--in", seg_in, "input image")->required();
  seg->add_option("--out", seg_out, "output image (.png or .jpeg)")->required();
  add_common(seg, seg_opts);

  CommonOpts feat_opts;
  std::string feat_in, feat_out, feat_corners = "none";
  CLI::App* feat = app.add_subcommand("featurize", "write the feature vector for one image");
  feat->add_option("--in", feat_in, "input image (raw smear or pre-segmented crop)")->required();
  feat->add_option("--out", feat_out, "output JSON path")->required();
  feat->add_option("--corners", feat_corners, "also detect corners: none|harris|fast");
  add_common(feat, feat_opts);

  CommonOpts train_opts;
  std::string train_out, train_algo, train_kernel;
  int train_k = 1, train_splits = 20, train_subset = 0;
  double train_c = 0.0, train_gamma = 0.0, train_pca = 0.0;
  bool train_no_pca = false;
  CLI::App* train = app.add_subcommand("train", "train a classifier on a dataset");
  train->add_option("--out", train_out, "output model path")->required();
  train->add_option("--algo", train_algo, "classifier spec (knn, tree:coarse, svm:rbf, ...)");
  train->add_option("--k", train_k, "neighbors for --algo knn");
  train->add_option("--splits", train_splits, "split budget for --algo tree");
  train->add_option("--kernel", train_kernel, "kernel for --algo svm");
  train->add_option("--c", train_c, "soft-margin C for --algo svm");
  train->add_option("--gamma", train_gamma, "rbf gamma for --algo svm");
  train->add_option("--pca", train_pca, "enable pca keeping this variance fraction");
  train->add_flag("--no-pca", train_no_pca, "disable pca");
  train->add_option("--subset", train_subset, "use only N images per class");
  add_common(train, train_opts);

  CommonOpts pred_opts;
  std::string pred_model, pred_in;
  CLI::App* pred = app.add_subcommand("predict", "classify one image with a trained model");
  pred->add_option("--model", pred_model, "model file from train")->required();
  pred->add_option("--in", pred_in, "input image (raw smear or pre-segmented crop)")->required();
  add_common(pred, pred_opts);

  CommonOpts eval_opts;
  std::string eval_algo;
  int eval_subset = 0;
  CLI::App* eval = app.add_subcommand("evaluate", "train and score one classifier on the split");
  eval->add_option("--algo", eval_algo, "classifier spec (defaults to the config's first)");
  eval->add_option("--subset", eval_subset, "use only N images per class");
  add_common(eval, eval_opts);

  CommonOpts cmp_opts;
  int cmp_subset = 0;
  CLI::App* cmp = app.add_subcommand("compare", "sweep every configured classifier with and without pca");
  cmp->add_option("--subset", cmp_subset, "use only N images per class");
  add_common(cmp, cmp_opts);

  CommonOpts ins_opts;
  CLI::App* ins = app.add_subcommand("inspect-config", "print the resolved config and fingerprints");
  add_common(ins, ins_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (seg->parsed()) return cmd_segment(seg_opts, seg_in, seg_out);
    if (feat->parsed()) return cmd_featurize(feat_opts, feat_in, feat_out, feat_corners);
    if (train->parsed()) {
      const std::string spec =
          train_algo.empty()
              ? std::string()
              : spec_from_flags(train_algo, train_k, train_splits, train_kernel, train_c, train_gamma);
      return cmd_train(train_opts, train_out, spec, train_subset, train_pca, train_no_pca);
    }
    if (pred->parsed()) return cmd_predict(pred_opts, pred_model, pred_in);
    if (eval->parsed()) return cmd_evaluate(eval_opts, eval_algo, eval_subset);
    if (cmp->parsed()) return cmd_compare(cmp_opts, cmp_subset);
    if (ins->parsed()) return cmd_inspect_config(ins_opts);
    std::cerr << "usage error: no subcommand\n";
    return 2;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) {
      std::cerr << "config error: " << e.what() << "\n";
      return 3;
    }
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hemocyte
