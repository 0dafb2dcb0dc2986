#include <algorithm>
#include <cstdio>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "hemocyte/error.hpp"
#include "hemocyte/eval.hpp"
#include "hemocyte/image_io.hpp"
#include "hemocyte/synthetic.hpp"
#include "support/tmpdir.hpp"

using namespace hemocyte;
using testutil::TmpDir;

namespace {

// Small but real cell images so extraction has something to find.
void write_class_images(const std::string& dir, int label, int n, std::uint64_t seed0) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img-%03d.png", i);
    save_png_rgb(synth_smear(label, seed0 + i), std::filesystem::path(dir) / name);
  }
}

std::string make_flat_dataset(TmpDir& tmp, int per_class, std::uint64_t seed0 = 100) {
  const std::string root = tmp.sub("data");
  for (int label = 0; label < 4; ++label)
    write_class_images(root + "/" + canonical_class_names()[label], label, per_class,
                       seed0 + 1000 * label);
  return root;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// reports.csv with the two wall-clock columns blanked out.
std::string strip_timings(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() >= 6) {
      cols[4] = "_";
      cols[5] = "_";
    }
    for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("canonical class order is fixed") {
  const auto& names = canonical_class_names();
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "EOSINOPHIL");
  CHECK(names[1] == "LYMPHOCYTE");
  CHECK(names[2] == "MONOCYTE");
  CHECK(names[3] == "NEUTROPHIL");
}

TEST_CASE("flat layout ingests with a stratified 80/20 split") {
  TmpDir tmp("ingest-flat");
  const std::string root = make_flat_dataset(tmp, 10);
  Dataset ds = ingest_dataset(root, 42);

  CHECK(ds.class_names == canonical_class_names());
  CHECK(ds.samples.size() == 40);
  CHECK(ds.skipped == 0);
  CHECK(ds.count(Split::Test) == 8);
  CHECK(ds.count(Split::Train) == 32);
  for (int label = 0; label < 4; ++label) {
    CHECK(ds.count_class(label) == 10);
    int test = 0;
    for (const DatasetSample& s : ds.samples)
      if (s.label == label && s.split == Split::Test) ++test;
    CHECK(test == 2);  // round(0.2 * 10) per class
  }

  // same seed, same scan: byte-for-byte identical assignment
  Dataset again = ingest_dataset(root, 42);
  REQUIRE(again.samples.size() == ds.samples.size());
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    REQUIRE(again.samples[i].path == ds.samples[i].path);
    REQUIRE(again.samples[i].label == ds.samples[i].label);
    REQUIRE(again.samples[i].split == ds.samples[i].split);
  }

  // a different seed moves at least one image across the split
  Dataset moved = ingest_dataset(root, 43);
  bool any_diff = false;
  for (size_t i = 0; i < ds.samples.size(); ++i)
    if (moved.samples[i].split != ds.samples[i].split) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("two samples still yield one test image") {
  TmpDir tmp("ingest-two");
  const std::string root = make_flat_dataset(tmp, 2);
  Dataset ds = ingest_dataset(root, 42);
  for (int label = 0; label < 4; ++label) {
    int test = 0, train = 0;
    for (const DatasetSample& s : ds.samples) {
      if (s.label != label) continue;
      (s.split == Split::Test ? test : train)++;
    }
    CHECK(test == 1);
    CHECK(train == 1);
  }
}

TEST_CASE("explicit TRAIN/TEST directories are honored, case-insensitively") {
  TmpDir tmp("ingest-2level");
  const std::string root = tmp.sub("data");
  for (int label = 0; label < 4; ++label) {
    std::string cls = canonical_class_names()[label];
    for (char& c : cls) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    write_class_images(root + "/train/" + cls, label, 3, 500 + 100 * label);
    write_class_images(root + "/Test/" + cls, label, 2, 900 + 100 * label);
  }
  Dataset ds = ingest_dataset(root, 42);
  CHECK(ds.samples.size() == 20);
  CHECK(ds.count(Split::Train) == 12);
  CHECK(ds.count(Split::Test) == 8);
  // the fixed split must ignore the seed entirely
  Dataset other = ingest_dataset(root, 77);
  for (size_t i = 0; i < ds.samples.size(); ++i)
    REQUIRE(other.samples[i].split == ds.samples[i].split);
}

TEST_CASE("layout problems are reported by code") {
  TmpDir tmp("ingest-bad");

  try {
    ingest_dataset(tmp.sub("nowhere"), 42);
    FAIL("expected LayoutError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LayoutError);
  }

  const std::string missing = tmp.sub("missing");
  write_class_images(missing + "/EOSINOPHIL", 0, 2, 1);
  try {
    ingest_dataset(missing, 42);
    FAIL("expected LayoutError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LayoutError);
  }

  const std::string lopsided = tmp.sub("lopsided");
  for (int label = 0; label < 4; ++label)
    write_class_images(lopsided + "/TRAIN/" + canonical_class_names()[label], label, 2, 50);
  try {
    ingest_dataset(lopsided, 42);  // TRAIN exists, TEST does not
    FAIL("expected LayoutError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LayoutError);
  }

  const std::string hollow = tmp.sub("hollow");
  for (int label = 0; label < 4; ++label)
    std::filesystem::create_directories(hollow + "/" + canonical_class_names()[label]);
  write_class_images(hollow + "/EOSINOPHIL", 0, 2, 60);
  try {
    ingest_dataset(hollow, 42);
    FAIL("expected EmptyClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyClass);
  }
}

TEST_CASE("non-image files are skipped and counted") {
  TmpDir tmp("ingest-skip");
  const std::string root = make_flat_dataset(tmp, 3);
  {
    std::ofstream notes(root + "/MONOCYTE/notes.txt");
    notes << "not an image\n";
    std::ofstream fake(root + "/MONOCYTE/fake.png", std::ios::binary);
    fake << "PNG? no.";
  }
  Dataset ds = ingest_dataset(root, 42);
  CHECK(ds.samples.size() == 12);
  CHECK(ds.skipped == 2);
  for (const DatasetSample& s : ds.samples) REQUIRE(s.path.find("fake") == std::string::npos);
}

TEST_CASE("per-class subsets are deterministic and re-split") {
  TmpDir tmp("subset");
  const std::string root = make_flat_dataset(tmp, 10);
  Dataset full = ingest_dataset(root, 42);
  Dataset small = subset_per_class(full, 5, 42);
  CHECK(small.samples.size() == 20);
  for (int label = 0; label < 4; ++label) CHECK(small.count_class(label) == 5);
  CHECK(small.count(Split::Test) == 4);  // round(0.2 * 5) = 1 per class

  Dataset again = subset_per_class(full, 5, 42);
  for (size_t i = 0; i < small.samples.size(); ++i) {
    REQUIRE(again.samples[i].path == small.samples[i].path);
    REQUIRE(again.samples[i].split == small.samples[i].split);
  }

  // subset paths come from the full set, no duplicates
  std::set<std::string> seen;
  for (const DatasetSample& s : small.samples) REQUIRE(seen.insert(s.path).second);

  Dataset capped = subset_per_class(full, 99, 42);
  CHECK(capped.samples.size() == full.samples.size());
  CHECK_THROWS_AS(subset_per_class(full, 0, 42), Error);
}

TEST_CASE("confusion matrix arithmetic") {
  ConfusionMatrix m = ConfusionMatrix::make(3);
  // truth 0: 4 right, 1 called as 2; truth 1: 3 right; truth 2: 2 right, 2 as 0
  for (int i = 0; i < 4; ++i) m.add(0, 0);
  m.add(0, 2);
  for (int i = 0; i < 3; ++i) m.add(1, 1);
  for (int i = 0; i < 2; ++i) m.add(2, 2);
  m.add(2, 0);
  m.add(2, 0);

  CHECK(m.total() == 12);
  CHECK(m.trace() == 9);
  CHECK(m.accuracy() == doctest::Approx(0.75));
  CHECK(m.at(2, 0) == 2);

  const std::vector<double> prec = m.precision();
  const std::vector<double> rec = m.recall();
  CHECK(prec[0] == doctest::Approx(4.0 / 6.0));
  CHECK(prec[1] == doctest::Approx(1.0));
  CHECK(prec[2] == doctest::Approx(2.0 / 3.0));
  CHECK(rec[0] == doctest::Approx(4.0 / 5.0));
  CHECK(rec[1] == doctest::Approx(1.0));
  CHECK(rec[2] == doctest::Approx(0.5));

  // classes never predicted or never present score 0, not NaN
  ConfusionMatrix empty_col = ConfusionMatrix::make(2);
  empty_col.add(0, 0);
  CHECK(empty_col.precision()[1] == 0.0);
  CHECK(empty_col.recall()[1] == 0.0);

  const std::string csv = confusion_to_csv(m, {"a", "b", "c"});
  CHECK(csv.rfind("true_class,a,b,c", 0) == 0);
  CHECK(csv.find("c,2,0,2") != std::string::npos);
}

TEST_CASE("mask iou counts pixels, not boxes") {
  BinaryMask a = BinaryMask::make(8, 4);
  BinaryMask b = BinaryMask::make(8, 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) a.set(x, y);  // 8 px
  for (int y = 0; y < 2; ++y)
    for (int x = 2; x < 6; ++x) b.set(x, y);  // 8 px, overlap 4
  CHECK(mask_iou(a, b) == doctest::Approx(4.0 / 12.0));
  CHECK(mask_iou(a, a) == doctest::Approx(1.0));

  BinaryMask e1 = BinaryMask::make(8, 4), e2 = BinaryMask::make(8, 4);
  CHECK(mask_iou(e1, e2) == 1.0);
  CHECK(mask_iou(e1, a) == 0.0);

  BinaryMask wrong = BinaryMask::make(4, 4);
  CHECK_THROWS_AS(mask_iou(a, wrong), Error);
}

TEST_CASE("feature extraction caches by content") {
  TmpDir tmp("extract");
  const std::string root = make_flat_dataset(tmp, 3);
  Dataset ds = ingest_dataset(root, 42);

  RunConfig cfg = default_config();
  cfg.jobs = 2;
  const std::string cache = tmp.sub("cache");

  ExtractionResult first = extract_features(ds, cfg, cache);
  CHECK(first.failures.empty());
  CHECK(first.cache_misses == 12);
  CHECK(first.cache_hits == 0);
  CHECK(first.train.x.rows == 8);
  CHECK(first.test.x.rows == 4);
  CHECK(first.train.x.cols == 324);
  CHECK(first.train_paths.size() == 8);
  CHECK(first.test_paths.size() == 4);
  CHECK(first.train.class_names == canonical_class_names());

  ExtractionResult second = extract_features(ds, cfg, cache);
  CHECK(second.cache_hits == 12);
  CHECK(second.cache_misses == 0);
  REQUIRE(second.train.x.data == first.train.x.data);
  REQUIRE(second.test.x.data == first.test.x.data);
  REQUIRE(second.train.y == first.train.y);
  REQUIRE(second.test_paths == first.test_paths);

  // rows follow dataset order restricted to each split
  size_t ti = 0, si = 0;
  for (const DatasetSample& smp : ds.samples) {
    if (smp.split == Split::Train)
      REQUIRE(first.train_paths.at(ti++) == smp.path);
    else
      REQUIRE(first.test_paths.at(si++) == smp.path);
  }
}

TEST_CASE("unsegmentable images are dropped, not fatal") {
  TmpDir tmp("extract-fail");
  const std::string root = make_flat_dataset(tmp, 3);
  Image blank = Image::make(64, 64, ColorSpace::Rgb);
  std::fill(blank.data.begin(), blank.data.end(), 255.0f);
  save_png_rgb(blank, root + "/LYMPHOCYTE/img-000.png");  // overwrite with all-white

  Dataset ds = ingest_dataset(root, 42);
  RunConfig cfg = default_config();
  cfg.jobs = 1;
  ExtractionResult r = extract_features(ds, cfg, "");
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].find("img-000.png") != std::string::npos);
  CHECK(r.train.x.rows + r.test.x.rows == 11);
  CHECK(r.cache_hits == 0);  // nothing to hit without a cache dir
}

TEST_CASE("comparison runs sweep specs and memoize reports") {
  TmpDir tmp("compare");
  const std::string root = make_flat_dataset(tmp, 3);
  Dataset ds = ingest_dataset(root, 42);

  RunConfig cfg = default_config();
  cfg.dataset_root = root;
  cfg.classifiers = {"knn:k=1", "gnb"};
  cfg.output_dir = tmp.sub("out");
  cfg.jobs = 2;

  ComparisonOutput run1 = run_comparison(ds, cfg);
  CHECK_FALSE(run1.from_cache);
  REQUIRE(run1.reports.size() == 4);
  CHECK(run1.reports[0].algorithm == "knn");
  CHECK_FALSE(run1.reports[0].pca);
  CHECK(run1.reports[1].algorithm == "knn");
  CHECK(run1.reports[1].pca);
  CHECK(run1.reports[2].algorithm == "gnb");
  CHECK_FALSE(run1.reports[2].pca);
  CHECK(run1.reports[3].pca);
  for (const EvaluationReport& r : run1.reports) {
    CHECK(r.error.empty());
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.confusion.total() == 4);
    REQUIRE_FALSE(r.fingerprint.empty());
  }

  const std::string csv_path = cfg.output_dir + "/reports.csv";
  for (const std::string& art : run1.artifacts) REQUIRE(std::filesystem::exists(art));
  const std::string csv1 = slurp(csv_path);
  CHECK(csv1.rfind("algorithm,variant,pca,accuracy,train_seconds,predict_obs_per_sec", 0) == 0);

  // same directory, same inputs: the memo replays byte-identical artifacts
  ComparisonOutput run2 = run_comparison(ds, cfg);
  CHECK(run2.from_cache);
  REQUIRE(slurp(csv_path) == csv1);
  REQUIRE(run2.reports.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(run2.reports[i].accuracy == run1.reports[i].accuracy);
    CHECK(run2.reports[i].confusion.counts == run1.reports[i].confusion.counts);
  }

  // a fresh directory recomputes: timings move, results do not
  RunConfig cfg2 = cfg;
  cfg2.output_dir = tmp.sub("out2");
  ComparisonOutput run3 = run_comparison(ds, cfg2);
  CHECK_FALSE(run3.from_cache);
  REQUIRE(strip_timings(slurp(cfg2.output_dir + "/reports.csv")) == strip_timings(csv1));

  // changing the seed invalidates the memo even in the original directory
  RunConfig cfg3 = cfg;
  cfg3.seed = 43;
  Dataset ds43 = ingest_dataset(root, 43);
  ComparisonOutput run4 = run_comparison(ds43, cfg3);
  CHECK_FALSE(run4.from_cache);
}

TEST_CASE("failed specs land in the error column, not in an exception") {
  TmpDir tmp("compare-fail");
  const std::string root = make_flat_dataset(tmp, 2);  // 1 train image per class
  Dataset ds = ingest_dataset(root, 42);

  RunConfig cfg = default_config();
  cfg.dataset_root = root;
  cfg.classifiers = {"qda", "knn:k=1"};  // qda cannot fit one sample per class
  cfg.output_dir = tmp.sub("out");
  cfg.jobs = 2;

  ComparisonOutput out = run_comparison(ds, cfg);
  REQUIRE(out.reports.size() == 4);  // each spec swept with pca off, then on
  CHECK_FALSE(out.reports[0].error.empty());
  CHECK_FALSE(out.reports[1].error.empty());
  CHECK(out.reports[0].accuracy == 0.0);
  CHECK(out.reports[2].error.empty());
  CHECK(out.reports[3].error.empty());
  const nlohmann::json j = nlohmann::json::parse(slurp(cfg.output_dir + "/reports.json"));
  CHECK_FALSE(j.at(0).at("error").get<std::string>().empty());
  CHECK(j.at(2).at("error").get<std::string>().empty());
}

TEST_CASE("report json carries the full sweep") {
  EvaluationReport a;
  a.algorithm = "knn";
  a.variant = "k=1";
  a.pca = true;
  a.confusion = ConfusionMatrix::make(2);
  a.confusion.add(0, 0);
  a.confusion.add(1, 0);
  a.accuracy = 0.5;
  a.precision = {0.5, 0.0};
  a.recall = {1.0, 0.0};
  a.train_seconds = 1.25;
  a.predict_obs_per_sec = 10.0;
  a.fingerprint = "abc123";

  const std::string text = reports_to_json({a});
  const nlohmann::json j = nlohmann::json::parse(text);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  CHECK(j[0]["algorithm"] == "knn");
  CHECK(j[0]["variant"] == "k=1");
  CHECK(j[0]["pca"] == true);
  CHECK(j[0]["accuracy"].get<double>() == doctest::Approx(0.5));
  CHECK(j[0]["confusion"]["num_classes"] == 2);
  CHECK(j[0]["confusion"]["counts"][2] == 1);
  CHECK(j[0]["fingerprint"] == "abc123");

  const std::string csv = reports_to_csv({a});
  CHECK(csv.find("knn,k=1,true,") != std::string::npos);
}

TEST_CASE("annotation xml parses boxes for WBC objects only") {
  TmpDir tmp("annot");
  const std::string dir = tmp.sub("ann");
  std::filesystem::create_directories(dir);

  save_png_rgb(synth_smear(1, 7), dir + "/cell-1.png");
  {
    std::ofstream xml(dir + "/cell-1.xml");
    xml << "<annotation>\n  <filename>cell-1.png</filename>\n"
        << "  <object>\n    <name>RBC</name>\n    <bndbox>\n"
        << "      <xmin>1</xmin><ymin>2</ymin><xmax>3</xmax><ymax>4</ymax>\n"
        << "    </bndbox>\n  </object>\n"
        << "  <object>\n    <name>WBC</name>\n    <bndbox>\n"
        << "      <xmin>60</xmin>\n      <ymin>40</ymin>\n"
        << "      <xmax>210</xmax>\n      <ymax>190</ymax>\n"
        << "    </bndbox>\n  </object>\n</annotation>\n";
  }
  save_png_rgb(synth_smear(2, 8), dir + "/cell-2.png");
  {
    std::ofstream xml(dir + "/cell-2.xml");  // no WBC: must be skipped
    xml << "<annotation><filename>cell-2.png</filename><object><name>RBC</name>"
        << "<bndbox><xmin>5</xmin><ymin>5</ymin><xmax>9</xmax><ymax>9</ymax></bndbox>"
        << "</object></annotation>\n";
  }

  std::vector<AnnotatedSample> got = load_annotations(dir);
  REQUIRE(got.size() == 1);
  CHECK(got[0].image_path.find("cell-1.png") != std::string::npos);
  CHECK(got[0].xmin == 60);
  CHECK(got[0].ymin == 40);
  CHECK(got[0].xmax == 210);
  CHECK(got[0].ymax == 190);

  CHECK_THROWS_AS(load_annotations(tmp.sub("absent")), Error);
}

TEST_CASE("hull iou against synthetic boxes clears a sanity floor") {
  TmpDir tmp("iou");
  const std::string dir = tmp.sub("ann");
  write_synthetic_annotated(dir, 8, 21);
  std::vector<AnnotatedSample> samples = load_annotations(dir);
  REQUIRE(samples.size() == 8);
  RunConfig cfg = default_config();
  const double iou = mean_hull_iou(samples, cfg, 4);
  CHECK(iou > 0.4);
  CHECK(iou <= 1.0);
}
