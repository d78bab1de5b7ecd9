#pragma once

// Latency micro-benchmarks: monotonic wall clock around the timed call only,
// warmup runs excluded, median as the headline statistic. Reports record
// the threading configuration.

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuflow/model.hpp"

namespace neuflow {

struct BenchReport {
  std::string variant;
  std::string resolution;
  int64_t iters16 = -1, iters8 = -1;  // whole-model schedule, -1 for step benches
  int64_t reps = 0, warmup = 0, threads = 1;
  double median_s = 0, mean_s = 0, p95_s = 0;

  nlohmann::json to_json() const;
};

// Fills median/mean/p95 from raw rep timings (warmup already excluded).
void summarize_timings(std::vector<double> t, BenchReport& r);
int64_t bench_threads();
// Single-threaded substrate unless OMP_NUM_THREADS says otherwise.
void pin_bench_threads();

template <class Fn>
std::vector<double> time_reps(Fn&& fn, int64_t reps, int64_t warmup) {
  NF_CHECK(reps >= 10, "bench: reps must be >= 10");
  for (int64_t i = 0; i < warmup; ++i) fn();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(reps));
  for (int64_t i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    out.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return out;
}

// One refine step (warp + conv stack) at the given dims, inputs
// pre-generated outside the timed region.
inline BenchReport bench_refine_step(const std::string& variant, int64_t h, int64_t w,
                                     int64_t hidden_dim, int64_t ctx_dim,
                                     int64_t corr_radius, int64_t reps, int64_t warmup,
                                     uint64_t seed = 0) {
  RefineConfig rc;
  rc.variant = variant;
  auto rng = make_rng(seed + 17);
  RefineBlock<float> block;
  const int64_t corr_ch = (2 * corr_radius + 1) * (2 * corr_radius + 1);
  block.init(rng, rc, hidden_dim, ctx_dim, corr_ch);

  auto vol = Tensor<float>::from_data({corr_ch, h, w},
                                      randn_vec<float>(rng, static_cast<size_t>(corr_ch * h * w), 0.5f));
  auto flow = Tensor<float>::from_data({2, h, w}, randn_vec<float>(rng, static_cast<size_t>(2 * h * w), 1.f));
  auto ctx = Tensor<float>::from_data({ctx_dim, h, w},
                                      randn_vec<float>(rng, static_cast<size_t>(ctx_dim * h * w), 0.5f));
  auto hidden = block.initial_hidden(h, w);

  NoGradGuard ng;
  auto timings = time_reps(
      [&] {
        auto corr_w = ops::warp_zero(vol, flow);
        auto [nf, nh] = block.step(corr_w, flow, ctx, hidden);
        (void)nf;
        (void)nh;
      },
      reps, warmup);

  BenchReport r;
  r.variant = variant;
  r.resolution = std::to_string(w) + "x" + std::to_string(h);
  r.reps = reps;
  r.warmup = warmup;
  r.threads = bench_threads();
  summarize_timings(std::move(timings), r);
  return r;
}

inline BenchReport bench_whole_model(const NeuFlow<float>& model, int64_t h, int64_t w,
                                     int64_t iters16, int64_t iters8, int64_t reps,
                                     int64_t warmup, uint64_t seed = 0) {
  auto rng = make_rng(seed + 23);
  auto i1 = Tensor<float>::from_data({3, h, w}, uniform_vec<float>(rng, static_cast<size_t>(3 * h * w), -1.f, 1.f));
  auto i2 = Tensor<float>::from_data({3, h, w}, uniform_vec<float>(rng, static_cast<size_t>(3 * h * w), -1.f, 1.f));
  ForwardOptions opt;
  opt.iters16 = iters16;
  opt.iters8 = iters8;
  opt.record_sequence = false;

  NoGradGuard ng;
  auto timings = time_reps([&] { model.forward(i1, i2, opt); }, reps, warmup);

  BenchReport r;
  r.variant = "model";
  r.resolution = std::to_string(w) + "x" + std::to_string(h);
  r.iters16 = iters16 >= 0 ? iters16 : model.cfg.iters16;
  r.iters8 = iters8 >= 0 ? iters8 : model.cfg.iters8;
  r.reps = reps;
  r.warmup = warmup;
  r.threads = bench_threads();
  summarize_timings(std::move(timings), r);
  return r;
}

}  // namespace neuflow
