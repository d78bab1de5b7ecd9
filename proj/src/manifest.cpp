#include "neuflow/dataio/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "neuflow/dataio/flo.hpp"
#include "neuflow/dataio/png_io.hpp"

namespace neuflow {

namespace fs = std::filesystem;

FileDataset::FileDataset(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error("dataset: cannot open manifest: " + manifest_path);
  dir_ = fs::path(manifest_path).parent_path().string();
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Entry e;
    if (!std::getline(ss, e.img1, '\t') || !std::getline(ss, e.img2, '\t') ||
        !std::getline(ss, e.flow, '\t') || !std::getline(ss, e.valid, '\t'))
      throw std::runtime_error("dataset: malformed manifest line: " + line);
    entries_.push_back(std::move(e));
  }
  if (entries_.empty())
    throw std::runtime_error("dataset: empty manifest: " + manifest_path);
}

SynthSample FileDataset::get(int64_t i) const {
  const auto& e = entries_.at(static_cast<size_t>(i));
  auto at = [&](const std::string& rel) { return (fs::path(dir_) / rel).string(); };
  SynthSample s;
  s.img1 = read_png8(at(e.img1));
  s.img2 = read_png8(at(e.img2));
  s.gt = read_flo(at(e.flow));
  int64_t vh = 0, vw = 0;
  s.valid = read_png8_gray(at(e.valid), &vh, &vw);
  if (vh != s.gt.h || vw != s.gt.w)
    throw std::runtime_error("dataset: valid mask dims mismatch for sample " +
                             std::to_string(i));
  for (auto& v : s.valid) v = v > 0 ? 1 : 0;
  return s;
}

std::string save_dataset(const std::string& dir, int64_t count, uint64_t base_seed,
                         const SynthOptions& opt) {
  fs::create_directories(dir);
  const std::string manifest_path = (fs::path(dir) / "manifest.tsv").string();
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("dataset: cannot write manifest: " + manifest_path);
  for (int64_t i = 0; i < count; ++i) {
    SynthSample s = generate_sample(base_seed + static_cast<uint64_t>(i), opt);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%05lld", static_cast<long long>(i));
    const std::string img1 = std::string(stem) + "_img1.png";
    const std::string img2 = std::string(stem) + "_img2.png";
    const std::string flow = std::string(stem) + "_flow.flo";
    const std::string valid = std::string(stem) + "_valid.png";
    write_png8((fs::path(dir) / img1).string(), s.img1);
    write_png8((fs::path(dir) / img2).string(), s.img2);
    write_flo(s.gt, (fs::path(dir) / flow).string());
    std::vector<uint8_t> v255(s.valid.size());
    for (size_t j = 0; j < s.valid.size(); ++j) v255[j] = s.valid[j] ? 255 : 0;
    write_png8_gray((fs::path(dir) / valid).string(), s.gt.h, s.gt.w, v255);
    mf << img1 << '\t' << img2 << '\t' << flow << '\t' << valid << '\n';
  }
  return manifest_path;
}

}  // namespace neuflow
