// Compares the OpenMP kernels against their serial nested-loop references.
// Run with OMP_NUM_THREADS to control the parallel side.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include "neuflow/core/rng.hpp"
#include "neuflow/kernels/conv2d.hpp"
#include "neuflow/kernels/correlation.hpp"
#include "neuflow/kernels/gemm.hpp"
#include "neuflow/kernels/image.hpp"
#include "neuflow/kernels/reference.hpp"
#include "neuflow/kernels/upsample.hpp"

using neuflow::make_rng;
using neuflow::randn_vec;

namespace {

template <class Fn>
double time_best_of(Fn&& fn, int reps) {
  double best = 1e30;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count());
  }
  return best;
}

void report(const std::string& name, double serial_s, double omp_s, double gflop) {
  std::printf("%-18s serial %8.2f ms  omp %8.2f ms  speedup %5.2fx",
              name.c_str(), serial_s * 1e3, omp_s * 1e3, serial_s / omp_s);
  if (gflop > 0) std::printf("  (%.1f GFLOP/s parallel)", gflop / omp_s);
  std::printf("\n");
}

}  // namespace

int main() {
  std::printf("kernel benchmark, %d OpenMP thread(s)\n", omp_get_max_threads());
  std::printf("(references are plain nested loops; the gap mixes blocking/vectorization "
              "gains with threading)\n");
  auto rng = make_rng(99);
  const int reps = 5;

  {
    const int64_t M = 96, K = 96 * 9, N = 64 * 64;
    auto a = randn_vec<float>(rng, M * K);
    auto b = randn_vec<float>(rng, K * N);
    std::vector<float> c(M * N), cref(M * N);
    const double s = time_best_of([&] { neuflow::ref::gemm_nn(M, K, N, a.data(), b.data(), cref.data()); }, reps);
    const double p = time_best_of([&] { neuflow::kernels::gemm_nn(M, K, N, a.data(), b.data(), c.data()); }, reps);
    report("gemm_nn", s, p, 2e-9 * M * K * N);
  }
  {
    neuflow::kernels::Conv2dDims d{64, 64, 64, 64, 3, 3, 1, 1};
    auto x = randn_vec<float>(rng, 64 * 64 * 64);
    auto w = randn_vec<float>(rng, 64ull * 64 * 9);
    auto bias = randn_vec<float>(rng, 64);
    std::vector<float> out(64 * 64 * 64), outref(64 * 64 * 64);
    const double s = time_best_of(
        [&] { neuflow::ref::conv2d(64, 64, 64, 64, 3, 3, 1, 1, x.data(), w.data(), bias.data(), outref.data()); },
        reps);
    const double p = time_best_of(
        [&] { neuflow::kernels::conv2d_forward(d, x.data(), w.data(), bias.data(), out.data()); }, reps);
    report("conv2d 3x3", s, p, 2e-9 * 64 * 64 * 9 * 64 * 64);
  }
  {
    const int64_t c = 96, h = 48, w = 48, r = 4;
    auto f0 = randn_vec<float>(rng, c * h * w);
    auto f1 = randn_vec<float>(rng, c * h * w);
    std::vector<float> vol(81 * h * w), volref(81 * h * w);
    const double s = time_best_of(
        [&] { neuflow::ref::local_correlation(c, h, w, r, f0.data(), f1.data(), volref.data()); }, reps);
    const double p = time_best_of(
        [&] { neuflow::kernels::local_correlation(c, h, w, r, f0.data(), f1.data(), vol.data()); }, reps);
    report("local_corr r=4", s, p, 2e-9 * 81 * c * h * w);
  }
  {
    const int64_t c = 81, h = 48, w = 48;
    auto x = randn_vec<float>(rng, c * h * w);
    auto flow = randn_vec<float>(rng, 2 * h * w, 2.f);
    std::vector<float> out(c * h * w), outref(c * h * w);
    const double s = time_best_of(
        [&] { neuflow::ref::warp_zero(c, h, w, x.data(), flow.data(), outref.data()); }, reps);
    const double p = time_best_of(
        [&] { neuflow::kernels::warp_zero(c, h, w, x.data(), flow.data(), out.data()); }, reps);
    report("warp_zero", s, p, 0);
  }
  {
    const int64_t c = 128, h = 32, w = 32;
    auto x = randn_vec<float>(rng, c * h * w);
    std::vector<float> out(c * 64 * 64), outref(c * 64 * 64);
    const double s = time_best_of(
        [&] { neuflow::ref::bilinear_resize(c, h, w, 64, 64, x.data(), outref.data()); }, reps);
    const double p = time_best_of(
        [&] { neuflow::kernels::bilinear_resize(c, h, w, 64, 64, x.data(), out.data()); }, reps);
    report("bilinear_resize", s, p, 0);
  }
  {
    const int64_t h = 32, w = 32;
    auto flow = randn_vec<float>(rng, 2 * h * w, 2.f);
    auto mask = randn_vec<float>(rng, 576 * h * w, 0.1f);
    for (auto& m : mask) m = std::abs(m);
    std::vector<float> out(2 * 64 * h * w), outref(2 * 64 * h * w);
    const double s = time_best_of(
        [&] { neuflow::ref::convex_upsample8(h, w, flow.data(), mask.data(), outref.data()); }, reps);
    const double p = time_best_of(
        [&] { neuflow::kernels::convex_upsample8(h, w, flow.data(), mask.data(), out.data()); }, reps);
    report("convex_upsample8", s, p, 0);
  }
  return 0;
}
