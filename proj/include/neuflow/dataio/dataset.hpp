#pragma once

#include <memory>
#include <string>
#include <vector>

#include "neuflow/dataio/synth.hpp"

namespace neuflow {

struct Dataset {
  virtual ~Dataset() = default;
  virtual int64_t size() const = 0;
  virtual SynthSample get(int64_t i) const = 0;
};

// Samples are pure functions of (base_seed + index); nothing is stored.
struct SynthDataset final : Dataset {
  uint64_t base_seed = 0;
  int64_t count = 0;
  SynthOptions opt;

  SynthDataset(uint64_t seed, int64_t n, SynthOptions o)
      : base_seed(seed), count(n), opt(std::move(o)) {}
  int64_t size() const override { return count; }
  SynthSample get(int64_t i) const override {
    return generate_sample(base_seed + static_cast<uint64_t>(i), opt);
  }
};

// On-disk dataset addressed through a manifest of tab-separated file
// quadruples (img1, img2, flow, valid), one sample per line, paths relative
// to the manifest location.
struct FileDataset final : Dataset {
  explicit FileDataset(const std::string& manifest_path);
  int64_t size() const override { return static_cast<int64_t>(entries_.size()); }
  SynthSample get(int64_t i) const override;

 private:
  struct Entry {
    std::string img1, img2, flow, valid;
  };
  std::string dir_;
  std::vector<Entry> entries_;
};

// Writes `count` samples plus manifest.tsv under dir; returns the manifest
// path.
std::string save_dataset(const std::string& dir, int64_t count, uint64_t base_seed,
                         const SynthOptions& opt);

}  // namespace neuflow
