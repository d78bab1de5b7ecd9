#include <doctest.h>

#include <cmath>

#include "neuflow/kernels/reference.hpp"
#include "neuflow/refinement.hpp"
#include "testutil.hpp"

using namespace neuflow;
using nftest::max_abs_diff;
using nftest::rand_tensor;

TEST_SUITE_BEGIN("refinement");

TEST_CASE("local_correlation: all-zero f1 gives an all-zero volume") {
  auto rng = make_rng(51);
  auto f0 = rand_tensor<float>(rng, {8, 6, 6});
  auto vol = ops::local_correlation(f0, Tensor<float>::zeros({8, 6, 6}), 4);
  for (float v : vol.value()) CHECK(v == 0.f);
}

TEST_CASE("local_correlation: constant feature, interior center channel = C*c^2/sqrt(C)") {
  const int64_t C = 8;
  const float c = 0.5f;
  auto f = Tensor<float>::full({C, 6, 6}, c);
  auto vol = ops::local_correlation(f, f, 4);
  const double expect = C * c * c / std::sqrt(static_cast<double>(C));
  // channel 40 is zero displacement; every pixel has an in-bounds center
  for (int64_t p = 0; p < 36; ++p)
    CHECK(vol.data()[40 * 36 + p] == doctest::Approx(expect).epsilon(1e-5));
  // full-volume agreement with the loop oracle
  std::vector<float> vr(vol.value().size());
  ref::local_correlation(C, 6, 6, 4, f.data(), f.data(), vr.data());
  CHECK(max_abs_diff(vol.value(), vr) < 1e-5);
}

TEST_CASE("local_correlation: shift by (1,0) puts the interior argmax at (1,0)") {
  auto rng = make_rng(52);
  const int64_t h = 6, w = 6, C = 16;
  auto f0 = rand_tensor<float>(rng, {C, h, w}, 1.5f);
  std::vector<float> sh(f0.value().size(), 0.f);
  for (int64_t ch = 0; ch < C; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w - 1; ++x)
        sh[(ch * h + y) * w + x + 1] = f0.data()[(ch * h + y) * w + x];
  auto f1 = Tensor<float>::from_data({C, h, w}, std::move(sh));
  auto vol = ops::local_correlation(f0, f1, 4);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 1; x < w - 1; ++x) {  // interior in the shift direction
      int64_t best = 0;
      for (int64_t d = 1; d < 81; ++d)
        if (vol.data()[d * h * w + y * w + x] > vol.data()[best * h * w + y * w + x])
          best = d;
      CHECK(best / 9 - 4 == 0);  // dy
      CHECK(best % 9 - 4 == 1);  // dx
    }
}

TEST_CASE("warp_volume: zero flow is the identity") {
  auto rng = make_rng(53);
  auto vol = rand_tensor<float>(rng, {81, 5, 5});
  auto w = ops::warp_zero(vol, Tensor<float>::zeros({2, 5, 5}));
  CHECK(max_abs_diff(w.value(), vol.value()) <= 1e-6);
}

TEST_CASE("warp_volume: integer flow (1,0) shifts and zero-fills the right edge") {
  auto rng = make_rng(54);
  const int64_t h = 4, w = 4;
  auto vol = rand_tensor<float>(rng, {3, h, w});
  auto flow = Tensor<float>::zeros({2, h, w});
  for (int64_t p = 0; p < h * w; ++p) flow.data()[p] = 1.f;
  auto out = ops::warp_zero(vol, flow);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        const float expect =
            x + 1 < w ? vol.data()[(c * h + y) * w + x + 1] : 0.f;
        CHECK(out.data()[(c * h + y) * w + x] == doctest::Approx(expect));
      }
}

TEST_CASE("warp_volume: constant volume, in-bounds samples stay constant") {
  auto vol = Tensor<float>::full({4, 6, 6}, 1.25f);
  auto rng = make_rng(55);
  auto flow = rand_tensor<float>(rng, {2, 6, 6}, 0.9f);
  auto out = ops::warp_zero(vol, flow);
  for (int64_t y = 0; y < 6; ++y)
    for (int64_t x = 0; x < 6; ++x) {
      const float fx = x + flow.data()[y * 6 + x];
      const float fy = y + flow.data()[36 + y * 6 + x];
      if (fx < 0 || fx > 5 || fy < 0 || fy > 5) continue;  // partially outside
      for (int64_t c = 0; c < 4; ++c)
        CHECK(out.data()[(c * 6 + y) * 6 + x] == doctest::Approx(1.25f).epsilon(1e-6));
    }
}

TEST_CASE("hard_clamp: saturation values and gradient mask") {
  auto x = Tensor<double>::from_data({3}, {5.0, -10.0, 0.3}, true);
  auto y = hard_clamp(x);
  CHECK(y.data()[0] == 4.0);
  CHECK(y.data()[1] == -4.0);
  CHECK(y.data()[2] == 0.3);
  ops::sum(y).backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == 1.0);
}

namespace {
RefineBlock<float> make_block(Rng& rng, const std::string& variant, int64_t hidden,
                              int64_t ctx, int64_t corr_ch) {
  RefineConfig rc;
  rc.variant = variant;
  RefineBlock<float> b;
  b.init(rng, rc, hidden, ctx, corr_ch);
  return b;
}
}  // namespace

TEST_CASE("refine_step: hidden state respects the [-4,4] bound under adversarial weights") {
  auto rng = make_rng(56);
  auto block = make_block(rng, "gate_free", 16, 8, 81);
  // crank the final layer so pre-activations exceed +-100
  for (auto& v : block.convs.back().w.value()) v = v > 0 ? 3.f : -3.f;
  for (auto& v : block.convs.back().b.value()) v = 100.f;

  auto vol = rand_tensor<float>(rng, {81, 5, 5}, 2.f);
  auto flow = rand_tensor<float>(rng, {2, 5, 5}, 3.f);
  auto ctx = rand_tensor<float>(rng, {8, 5, 5}, 2.f);
  auto h = block.initial_hidden(5, 5);
  for (int i = 0; i < 20; ++i) {
    auto [nf, nh] = block.step(vol, flow, ctx, h);
    h = nh;
    flow = nf.detach();
  }
  float mx = 0;
  for (float v : h.value()) mx = std::max(mx, std::abs(v));
  CHECK(mx <= 4.f);
}

TEST_CASE("refine_step: zero final layer forces zero flow and zero hidden state") {
  auto rng = make_rng(57);
  auto block = make_block(rng, "gate_free", 8, 8, 9);
  std::fill(block.convs.back().w.value().begin(), block.convs.back().w.value().end(), 0.f);
  std::fill(block.convs.back().b.value().begin(), block.convs.back().b.value().end(), 0.f);
  auto [nf, nh] = block.step(rand_tensor<float>(rng, {9, 4, 4}),
                             rand_tensor<float>(rng, {2, 4, 4}),
                             rand_tensor<float>(rng, {8, 4, 4}),
                             rand_tensor<float>(rng, {8, 4, 4}));
  for (float v : nf.value()) CHECK(v == 0.f);
  for (float v : nh.value()) CHECK(v == 0.f);
}

TEST_CASE("refine_step: deterministic trajectories") {
  auto rng = make_rng(58);
  auto block = make_block(rng, "gate_free", 8, 8, 9);
  auto vol = rand_tensor<float>(rng, {9, 4, 4});
  auto ctx = rand_tensor<float>(rng, {8, 4, 4});
  auto run = [&] {
    auto flow = Tensor<float>::zeros({2, 4, 4});
    auto h = block.initial_hidden(4, 4);
    for (int i = 0; i < 5; ++i) {
      auto cw = ops::warp_zero(vol, flow);
      auto [nf, nh] = block.step(cw, flow, ctx, h);
      flow = nf;
      h = nh;
    }
    return std::pair{flow.value(), h.value()};
  };
  auto [f1, h1] = run();
  auto [f2, h2] = run();
  CHECK(f1 == f2);
  CHECK(h1 == h2);
}

TEST_CASE("upsample_flow_2x: units rescale with resolution") {
  std::vector<float> v(2 * 3 * 3);
  for (int i = 0; i < 9; ++i) {
    v[i] = 1.5f;
    v[9 + i] = -2.f;
  }
  auto up = upsample_flow_2x(Tensor<float>::from_data({2, 3, 3}, std::move(v)));
  CHECK(up.shape() == Shape({2, 6, 6}));
  for (int i = 0; i < 36; ++i) {
    CHECK(up.data()[i] == doctest::Approx(3.f));
    CHECK(up.data()[36 + i] == doctest::Approx(-4.f));
  }

  auto zero = upsample_flow_2x(Tensor<float>::zeros({2, 3, 3}));
  for (float x : zero.value()) CHECK(x == 0.f);
}

TEST_CASE("upsample_flow_2x: 2x2 ramp, hand-checked bilinear values") {
  // u component holds columns [0, 2]; half-pixel bilinear to width 4 gives
  // source coords {-0.25, 0.25, 0.75, 1.25} -> [0, 0.5, 1.5, 2], then the
  // value doubling for the scale change: [0, 1, 3, 4].
  auto flow = Tensor<float>::from_data({2, 2, 2}, {0, 2, 0, 2, 0, 0, 0, 0});
  auto up = upsample_flow_2x(flow);
  const float expect[4] = {0.f, 1.f, 3.f, 4.f};
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 4; ++x) {
      CHECK(up.data()[y * 4 + x] == doctest::Approx(expect[x]));
      CHECK(up.data()[16 + y * 4 + x] == doctest::Approx(0.f));
    }
}

TEST_CASE("conv_gru variant: hidden state bounded by tanh mixing") {
  auto rng = make_rng(59);
  auto block = make_block(rng, "conv_gru", 8, 8, 9);
  auto vol = rand_tensor<float>(rng, {9, 4, 4}, 3.f);
  auto flow = rand_tensor<float>(rng, {2, 4, 4}, 3.f);
  auto ctx = rand_tensor<float>(rng, {8, 4, 4}, 3.f);
  auto h = block.initial_hidden(4, 4);
  for (int i = 0; i < 10; ++i) {
    auto [nf, nh] = block.step(vol, flow, ctx, h);
    h = nh;
  }
  // tanh bounds the candidate to (-1, 1); in float the saturation rounds to
  // exactly +-1, so the representable bound is closed
  for (float v : h.value()) {
    CHECK(v <= 1.f);
    CHECK(v >= -1.f);
  }
}

TEST_CASE("conv_gru variant: zero inputs and zero weights give zero outputs") {
  auto rng = make_rng(60);
  auto block = make_block(rng, "conv_gru", 8, 8, 9);
  auto zero_layer = [](Conv2dLayer<float>& l) {
    std::fill(l.w.value().begin(), l.w.value().end(), 0.f);
    std::fill(l.b.value().begin(), l.b.value().end(), 0.f);
  };
  zero_layer(block.conv_z);
  zero_layer(block.conv_r);
  zero_layer(block.conv_h);
  for (size_t i = 1; i < block.convs.size(); ++i) zero_layer(block.convs[i]);
  auto [nf, nh] = block.step(Tensor<float>::zeros({9, 4, 4}), Tensor<float>::zeros({2, 4, 4}),
                             Tensor<float>::zeros({8, 4, 4}), Tensor<float>::zeros({8, 4, 4}));
  for (float v : nf.value()) CHECK(v == 0.f);
  for (float v : nh.value()) CHECK(v == 0.f);
}

TEST_SUITE_END();
