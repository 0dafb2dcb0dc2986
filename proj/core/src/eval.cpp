#include "hemocyte/eval.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "hemocyte/error.hpp"
#include "hemocyte/features.hpp"
#include "hemocyte/hash.hpp"
#include "hemocyte/image_io.hpp"
#include "hemocyte/pca.hpp"

namespace fs = std::filesystem;

namespace hemocyte {

// ---- confusion matrix ----

long long ConfusionMatrix::total() const {
  long long n = 0;
  for (long long c : counts) n += c;
  return n;
}

long long ConfusionMatrix::trace() const {
  long long n = 0;
  for (int i = 0; i < num_classes; ++i) n += at(i, i);
  return n;
}

double ConfusionMatrix::accuracy() const {
  const long long n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

std::vector<double> ConfusionMatrix::precision() const {
  std::vector<double> out(num_classes, 0.0);
  for (int p = 0; p < num_classes; ++p) {
    long long col = 0;
    for (int t = 0; t < num_classes; ++t) col += at(t, p);
    if (col > 0) out[p] = static_cast<double>(at(p, p)) / static_cast<double>(col);
  }
  return out;
}

std::vector<double> ConfusionMatrix::recall() const {
  std::vector<double> out(num_classes, 0.0);
  for (int t = 0; t < num_classes; ++t) {
    long long row = 0;
    for (int p = 0; p < num_classes; ++p) row += at(t, p);
    if (row > 0) out[t] = static_cast<double>(at(t, t)) / static_cast<double>(row);
  }
  return out;
}

// ---- evaluation ----

EvaluationReport evaluate(const Classifier& model, const LabeledSet& test, double train_seconds,
                          const std::string& fingerprint) {
  if (test.x.rows == 0) throw Error(ErrorCode::InvalidInput, "evaluate: empty test set");
  if (test.x.cols != model.feature_dim())
    throw Error(ErrorCode::DimensionMismatch,
                "evaluate: test features have dim " + std::to_string(test.x.cols) +
                    ", model expects " + std::to_string(model.feature_dim()));

  EvaluationReport rep;
  rep.algorithm = model.family();
  rep.fingerprint = fingerprint;
  rep.train_seconds = train_seconds;

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> preds = model.predict_batch(test.x);
  const auto t1 = std::chrono::steady_clock::now();
  const double seconds = std::chrono::duration<double>(t1 - t0).count();

  const int c = static_cast<int>(test.class_names.size());
  rep.confusion = ConfusionMatrix::make(c);
  for (int i = 0; i < test.x.rows; ++i) rep.confusion.add(test.y[i], preds[i]);
  rep.accuracy = rep.confusion.accuracy();
  rep.precision = rep.confusion.precision();
  rep.recall = rep.confusion.recall();
  rep.predict_obs_per_sec = test.x.rows / std::max(seconds, 1e-9);
  return rep;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorCode::DimensionMismatch, "mask_iou: mask dimensions differ");
  long long inter = 0, uni = 0;
  for (size_t i = 0; i < a.bits.size(); ++i) {
    const bool ab = a.bits[i] != 0, bb = b.bits[i] != 0;
    inter += ab && bb;
    uni += ab || bb;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// ---- feature extraction ----

namespace {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 0) jobs = 1;
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

constexpr char kCacheMagic[4] = {'H', 'F', 'C', '1'};

bool read_cached_features(const std::string& path, size_t expect, std::vector<float>* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4];
  std::uint32_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0 || count != expect) return false;
  out->resize(count);
  in.read(reinterpret_cast<char*>(out->data()), static_cast<std::streamsize>(count * sizeof(float)));
  return static_cast<bool>(in);
}

void write_cached_features(const std::string& path, const std::vector<float>& values, int tag) {
  const std::string tmp = path + ".tmp" + std::to_string(tag);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;  // cache is best-effort
    const std::uint32_t count = static_cast<std::uint32_t>(values.size());
    out.write(kCacheMagic, 4);
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      return;
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fs::remove(tmp, ec);
}

}  // namespace

ExtractionResult extract_features(const Dataset& data, const RunConfig& cfg,
                                  const std::string& cache_dir) {
  const int n = static_cast<int>(data.samples.size());
  const size_t dim = hog_descriptor_length(cfg.normalized_size, cfg.normalized_size, cfg.hog);
  const std::string fp = pipeline_fingerprint(cfg);
  if (!cache_dir.empty()) fs::create_directories(cache_dir);

  std::vector<std::vector<float>> features(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> errors(n);
  std::atomic<int> hits{0}, misses{0};
  const SegmentParams seg = cfg.segment_params();

  parallel_for(n, cfg.jobs, [&](int i) {
    const DatasetSample& smp = data.samples[i];
    try {
      std::string cache_path;
      if (!cache_dir.empty()) {
        const std::uint64_t content = hash_file(smp.path);
        cache_path = cache_dir + "/" + hash_hex(content) + "-" + fp + ".feat";
        std::vector<float> cached;
        if (read_cached_features(cache_path, dim, &cached)) {
          features[i] = std::move(cached);
          ok[i] = 1;
          hits.fetch_add(1);
          return;
        }
      }
      const Image img = load_image_rgb(smp.path);
      const Image cell = segment_cell(img, seg.threshold, seg.dilation_radius, seg.out_size);
      const FeatureVector hog = hog_descriptor(cell, cfg.hog);
      std::vector<float> vals(hog.values.size());
      for (size_t j = 0; j < vals.size(); ++j) vals[j] = static_cast<float>(hog.values[j]);
      if (!cache_path.empty()) write_cached_features(cache_path, vals, i);
      features[i] = std::move(vals);
      ok[i] = 1;
      misses.fetch_add(1);
    } catch (const Error& e) {
      errors[i] = smp.path + ": " + e.what();
    }
  });

  ExtractionResult res;
  res.cache_hits = hits.load();
  res.cache_misses = misses.load();
  int n_train = 0, n_test = 0;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    (data.samples[i].split == Split::Train ? n_train : n_test) += 1;
  }
  res.train.x = FeatureMatrix::make(n_train, static_cast<int>(dim));
  res.test.x = FeatureMatrix::make(n_test, static_cast<int>(dim));
  res.train.class_names = data.class_names;
  res.test.class_names = data.class_names;
  int r_train = 0, r_test = 0;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) {
      if (!errors[i].empty()) res.failures.push_back(errors[i]);
      continue;
    }
    const DatasetSample& smp = data.samples[i];
    if (smp.split == Split::Train) {
      std::copy(features[i].begin(), features[i].end(), res.train.x.row(r_train));
      res.train.y.push_back(smp.label);
      res.train_paths.push_back(smp.path);
      ++r_train;
    } else {
      std::copy(features[i].begin(), features[i].end(), res.test.x.row(r_test));
      res.test.y.push_back(smp.label);
      res.test_paths.push_back(smp.path);
      ++r_test;
    }
  }
  return res;
}

// ---- CSV / JSON serialization ----

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json report_to_json_obj(const EvaluationReport& r) {
  return nlohmann::json{{"algorithm", r.algorithm},
                        {"variant", r.variant},
                        {"pca", r.pca},
                        {"accuracy", r.accuracy},
                        {"train_seconds", r.train_seconds},
                        {"predict_obs_per_sec", r.predict_obs_per_sec},
                        {"fingerprint", r.fingerprint},
                        {"error", r.error},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"confusion",
                         {{"num_classes", r.confusion.num_classes}, {"counts", r.confusion.counts}}}};
}

EvaluationReport report_from_json_obj(const nlohmann::json& j) {
  EvaluationReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.pca = j.at("pca").get<bool>();
  r.accuracy = j.at("accuracy").get<double>();
  r.train_seconds = j.at("train_seconds").get<double>();
  r.predict_obs_per_sec = j.at("predict_obs_per_sec").get<double>();
  r.fingerprint = j.at("fingerprint").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.precision = j.at("precision").get<std::vector<double>>();
  r.recall = j.at("recall").get<std::vector<double>>();
  r.confusion.num_classes = j.at("confusion").at("num_classes").get<int>();
  r.confusion.counts = j.at("confusion").at("counts").get<std::vector<long long>>();
  return r;
}

}  // namespace

std::string reports_to_csv(const std::vector<EvaluationReport>& reports) {
  std::string out = "algorithm,variant,pca,accuracy,train_seconds,predict_obs_per_sec\n";
  for (const EvaluationReport& r : reports) {
    out += r.algorithm;
    out += ',';
    out += r.variant;
    out += ',';
    out += r.pca ? "true" : "false";
    out += ',';
    out += fmt_double(r.accuracy);
    out += ',';
    out += fmt_double(r.train_seconds);
    out += ',';
    out += fmt_double(r.predict_obs_per_sec);
    out += '\n';
  }
  return out;
}

std::string confusion_to_csv(const ConfusionMatrix& m, const std::vector<std::string>& names) {
  std::string out = "true_class";
  for (int p = 0; p < m.num_classes; ++p) {
    out += ',';
    out += p < static_cast<int>(names.size()) ? names[p] : std::to_string(p);
  }
  out += '\n';
  for (int t = 0; t < m.num_classes; ++t) {
    out += t < static_cast<int>(names.size()) ? names[t] : std::to_string(t);
    for (int p = 0; p < m.num_classes; ++p) {
      out += ',';
      out += std::to_string(m.at(t, p));
    }
    out += '\n';
  }
  return out;
}

std::string reports_to_json(const std::vector<EvaluationReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EvaluationReport& r : reports) arr.push_back(report_to_json_obj(r));
  return arr.dump(2);
}

// ---- comparison runs ----

namespace {

std::string sanitize_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '-')
      out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

std::string dataset_key(const Dataset& data) {
  std::uint64_t h = kFnvOffset;
  for (const DatasetSample& smp : data.samples) {
    h = fnv1a64(smp.path, h);
    const int label = smp.label;
    h = fnv1a64(&label, sizeof(label), h);
    const int split = smp.split == Split::Test ? 1 : 0;
    h = fnv1a64(&split, sizeof(split), h);
    const std::uint64_t content = hash_file(smp.path);
    h = fnv1a64(&content, sizeof(content), h);
  }
  return hash_hex(h);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace

ComparisonOutput run_comparison(const Dataset& data, const RunConfig& cfg) {
  if (cfg.classifiers.empty())
    throw Error(ErrorCode::ConfigError, "run_comparison: no classifier specs");
  if (data.samples.empty()) throw Error(ErrorCode::InvalidInput, "run_comparison: empty dataset");

  fs::create_directories(cfg.output_dir);
  const std::string fingerprint = config_fingerprint(cfg);
  const std::string memo_dir = cfg.output_dir + "/report-cache";
  const std::string memo_key = hash_hex(fnv1a64(fingerprint + dataset_key(data)));
  const std::string memo_path = memo_dir + "/" + memo_key + ".json";

  ComparisonOutput out;
  std::vector<EvaluationReport>& reports = out.reports;
  {
    std::ifstream in(memo_path, std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      try {
        const nlohmann::json arr = nlohmann::json::parse(buf.str());
        for (const auto& item : arr) reports.push_back(report_from_json_obj(item));
        out.from_cache = true;
      } catch (const std::exception&) {
        reports.clear();  // unreadable memo; recompute
      }
    }
  }

  std::vector<std::string> failures;
  if (!out.from_cache) {
    ExtractionResult ex = extract_features(data, cfg, cfg.output_dir + "/cache");
    failures = ex.failures;
    if (ex.train.x.rows == 0 || ex.test.x.rows == 0)
      throw Error(ErrorCode::InvalidData, "run_comparison: no usable train or test samples");

    PcaModel pca = pca_fit(ex.train.x);
    const int k = select_k_for_variance(pca, cfg.pca.variance_fraction);
    LabeledSet train_pca{pca_project_matrix(pca, ex.train.x, k), ex.train.y, ex.train.class_names};
    LabeledSet test_pca{pca_project_matrix(pca, ex.test.x, k), ex.test.y, ex.test.class_names};

    for (const std::string& spec_text : cfg.classifiers) {
      const ClassifierSpec spec = parse_classifier_spec(spec_text);
      for (const bool with_pca : {false, true}) {
        const LabeledSet& train = with_pca ? train_pca : ex.train;
        const LabeledSet& test = with_pca ? test_pca : ex.test;
        EvaluationReport rep;
        try {
          const auto t0 = std::chrono::steady_clock::now();
          ClassifierPtr model = train_from_spec(spec, train);
          const auto t1 = std::chrono::steady_clock::now();
          rep = evaluate(*model, test, std::chrono::duration<double>(t1 - t0).count(), fingerprint);
        } catch (const Error& e) {
          rep = EvaluationReport{};
          rep.confusion = ConfusionMatrix::make(static_cast<int>(data.class_names.size()));
          rep.fingerprint = fingerprint;
          rep.error = e.what();
        }
        rep.algorithm = spec.algorithm;
        rep.variant = spec.variant;
        rep.pca = with_pca;
        reports.push_back(std::move(rep));
      }
    }
    fs::create_directories(memo_dir);
    write_text_file(memo_path, reports_to_json(reports));
  }

  auto emit = [&](const std::string& path, const std::string& text) {
    write_text_file(path, text);
    out.artifacts.push_back(path);
  };
  emit(cfg.output_dir + "/reports.csv", reports_to_csv(reports));
  emit(cfg.output_dir + "/reports.json", reports_to_json(reports));
  for (const EvaluationReport& r : reports) {
    std::string name = sanitize_token(r.algorithm);
    if (!r.variant.empty()) name += "-" + sanitize_token(r.variant);
    name += r.pca ? "-pca" : "-nopca";
    emit(cfg.output_dir + "/confusion-" + name + ".csv",
         confusion_to_csv(r.confusion, data.class_names));
  }
  if (!failures.empty()) {
    std::string text;
    for (const std::string& f : failures) {
      text += f;
      text += '\n';
    }
    emit(cfg.output_dir + "/failures.txt", text);
  }
  return out;
}

// ---- hull-vs-box IoU ----

double mean_hull_iou(const std::vector<AnnotatedSample>& samples, const RunConfig& cfg, int limit) {
  if (samples.empty()) throw Error(ErrorCode::InvalidInput, "mean_hull_iou: no annotated samples");
  int n = static_cast<int>(samples.size());
  if (limit > 0) n = std::min(n, limit);

  std::vector<double> ious(n, 0.0);
  const SegmentParams seg = cfg.segment_params();
  parallel_for(n, cfg.jobs, [&](int i) {
    const AnnotatedSample& smp = samples[i];
    try {
      const Image img = load_image_rgb(smp.image_path);
      const SegmentDetail detail =
          segment_cell_detail(img, seg.threshold, seg.dilation_radius, seg.out_size);
      BinaryMask box = BinaryMask::make(img.width, img.height);
      const int x0 = std::max(0, smp.xmin), x1 = std::min(img.width - 1, smp.xmax);
      const int y0 = std::max(0, smp.ymin), y1 = std::min(img.height - 1, smp.ymax);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) box.set(x, y);
      ious[i] = mask_iou(detail.hull, box);
    } catch (const Error&) {
      ious[i] = 0.0;
    }
  });
  double acc = 0.0;
  for (double v : ious) acc += v;
  return acc / n;
}

}  // namespace hemocyte
