#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hemocyte/error.hpp"
#include "hemocyte/eval.hpp"
#include "hemocyte/image_io.hpp"

namespace fs = std::filesystem;

namespace hemocyte {

const std::vector<std::string>& canonical_class_names() {
  static const std::vector<std::string> names = {"EOSINOPHIL", "LYMPHOCYTE", "MONOCYTE",
                                                 "NEUTROPHIL"};
  return names;
}

int Dataset::count(Split s) const {
  int n = 0;
  for (const DatasetSample& smp : samples)
    if (smp.split == s) ++n;
  return n;
}

int Dataset::count_class(int label) const {
  int n = 0;
  for (const DatasetSample& smp : samples)
    if (smp.label == label) ++n;
  return n;
}

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Fisher-Yates with raw modulo draws; uniform_int_distribution is not
// portable across standard libraries, this is.
void shuffle_indices(std::vector<int>& idx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
}

int test_count_for(int n) {
  if (n < 2) return 0;
  const long long t = std::llround(0.2 * n);
  return static_cast<int>(std::clamp<long long>(t, 1, n - 1));
}

fs::path find_subdir(const fs::path& root, const std::string& name) {
  const std::string want = upper(name);
  std::vector<fs::path> matches;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && upper(entry.path().filename().string()) == want)
      matches.push_back(entry.path());
  }
  if (matches.empty()) return {};
  std::sort(matches.begin(), matches.end());
  return matches.front();
}

std::vector<std::string> list_images(const fs::path& dir, int* skipped) {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (looks_like_image(entry.path().string()))
      out.push_back(entry.path().string());
    else
      ++*skipped;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Shuffles the sorted per-class list and marks the first chunk as test.
void append_split_class(Dataset& ds, const std::vector<std::string>& paths, int label,
                        std::uint64_t seed) {
  const int n = static_cast<int>(paths.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  shuffle_indices(order, seed + static_cast<std::uint64_t>(label));
  std::vector<char> is_test(n, 0);
  const int n_test = test_count_for(n);
  for (int i = 0; i < n_test; ++i) is_test[order[i]] = 1;
  for (int i = 0; i < n; ++i)
    ds.samples.push_back({paths[i], label, is_test[i] ? Split::Test : Split::Train});
}

}  // namespace

Dataset ingest_dataset(const std::string& root, std::uint64_t seed) {
  if (!fs::is_directory(root))
    throw Error(ErrorCode::LayoutError, "dataset root is not a directory: " + root);

  Dataset ds;
  ds.class_names = canonical_class_names();

  const fs::path train_dir = find_subdir(root, "TRAIN");
  const fs::path test_dir = find_subdir(root, "TEST");

  if (!train_dir.empty() || !test_dir.empty()) {
    if (train_dir.empty() || test_dir.empty())
      throw Error(ErrorCode::LayoutError,
                  "dataset has only one of TRAIN/TEST under " + root);
    for (int label = 0; label < static_cast<int>(ds.class_names.size()); ++label) {
      const std::string& name = ds.class_names[label];
      const fs::path tr = find_subdir(train_dir, name);
      const fs::path te = find_subdir(test_dir, name);
      if (tr.empty() || te.empty())
        throw Error(ErrorCode::LayoutError, "missing class directory " + name + " under " + root);
      const std::vector<std::string> train_paths = list_images(tr, &ds.skipped);
      const std::vector<std::string> test_paths = list_images(te, &ds.skipped);
      if (train_paths.empty() || test_paths.empty())
        throw Error(ErrorCode::EmptyClass, "class " + name + " has no images");
      for (const std::string& p : train_paths) ds.samples.push_back({p, label, Split::Train});
      for (const std::string& p : test_paths) ds.samples.push_back({p, label, Split::Test});
    }
    return ds;
  }

  for (int label = 0; label < static_cast<int>(ds.class_names.size()); ++label) {
    const std::string& name = ds.class_names[label];
    const fs::path dir = find_subdir(root, name);
    if (dir.empty())
      throw Error(ErrorCode::LayoutError, "missing class directory " + name + " under " + root);
    const std::vector<std::string> paths = list_images(dir, &ds.skipped);
    if (paths.empty()) throw Error(ErrorCode::EmptyClass, "class " + name + " has no images");
    append_split_class(ds, paths, label, seed);
  }
  return ds;
}

Dataset subset_per_class(const Dataset& full, int per_class, std::uint64_t seed) {
  if (per_class < 1) throw Error(ErrorCode::InvalidParams, "subset_per_class: need per_class >= 1");
  Dataset ds;
  ds.class_names = full.class_names;
  for (int label = 0; label < static_cast<int>(full.class_names.size()); ++label) {
    std::vector<std::string> paths;
    for (const DatasetSample& smp : full.samples)
      if (smp.label == label) paths.push_back(smp.path);
    std::sort(paths.begin(), paths.end());
    const int n = static_cast<int>(paths.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    shuffle_indices(order, seed + static_cast<std::uint64_t>(label));
    const int keep = std::min(per_class, n);
    std::vector<std::string> chosen;
    chosen.reserve(keep);
    for (int i = 0; i < keep; ++i) chosen.push_back(paths[order[i]]);
    std::sort(chosen.begin(), chosen.end());
    append_split_class(ds, chosen, label, seed);
  }
  return ds;
}

// ---- detection annotations ----

namespace {

// Contents of the first <tag>...</tag> at or after `from`; npos-safe.
std::string tag_text(const std::string& s, const std::string& tag, size_t from, size_t* end_out) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  const size_t a = s.find(open, from);
  if (a == std::string::npos) return {};
  const size_t b = s.find(close, a + open.size());
  if (b == std::string::npos) return {};
  if (end_out) *end_out = b + close.size();
  return s.substr(a + open.size(), b - a - open.size());
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int tag_int(const std::string& block, const std::string& tag) {
  const std::string t = trim(tag_text(block, tag, 0, nullptr));
  if (t.empty()) throw Error(ErrorCode::InvalidData, "annotation missing <" + tag + ">");
  try {
    return static_cast<int>(std::llround(std::stod(t)));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidData, "annotation has non-numeric <" + tag + ">: " + t);
  }
}

std::string resolve_image(const fs::path& xml_path, const std::string& filename_tag) {
  const fs::path dir = xml_path.parent_path();
  if (!filename_tag.empty()) {
    const fs::path cand = dir / filename_tag;
    if (fs::is_regular_file(cand)) return cand.string();
  }
  for (const char* ext : {".jpg", ".jpeg", ".png", ".JPG", ".JPEG", ".PNG"}) {
    fs::path cand = xml_path;
    cand.replace_extension(ext);
    if (fs::is_regular_file(cand)) return cand.string();
  }
  return {};
}

}  // namespace

std::vector<AnnotatedSample> load_annotations(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::LayoutError, "annotation directory does not exist: " + dir);
  std::vector<fs::path> xmls;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && upper(entry.path().extension().string()) == ".XML")
      xmls.push_back(entry.path());
  }
  std::sort(xmls.begin(), xmls.end());

  std::vector<AnnotatedSample> out;
  for (const fs::path& xml : xmls) {
    std::ifstream in(xml, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    size_t pos = 0;
    while (true) {
      size_t obj_end = std::string::npos;
      const std::string block = tag_text(text, "object", pos, &obj_end);
      if (block.empty()) break;
      pos = obj_end;
      if (upper(trim(tag_text(block, "name", 0, nullptr))) != "WBC") continue;
      const std::string bnd = tag_text(block, "bndbox", 0, nullptr);
      if (bnd.empty()) continue;
      AnnotatedSample smp;
      smp.image_path = resolve_image(xml, trim(tag_text(text, "filename", 0, nullptr)));
      if (smp.image_path.empty()) break;
      smp.xmin = tag_int(bnd, "xmin");
      smp.ymin = tag_int(bnd, "ymin");
      smp.xmax = tag_int(bnd, "xmax");
      smp.ymax = tag_int(bnd, "ymax");
      out.push_back(smp);
      break;  // one WBC box per image is the annotation convention
    }
  }
  return out;
}

}  // namespace hemocyte
