#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "neuflow/checkpoint.hpp"
#include "neuflow/train.hpp"
#include "testutil.hpp"

using namespace neuflow;
using nftest::rand_tensor;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.dim16 = 16;
  cfg.dim8 = 16;
  cfg.lowlevel_dim = 8;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("sequence length law: 1 + iters16 + iters8 over random schedules") {
  auto rng = make_rng(71);
  NeuFlow<float> model;
  model.init(tiny_cfg(), 7);
  auto i1 = rand_tensor<float>(rng, {3, 48, 48}, 0.4f);
  auto i2 = rand_tensor<float>(rng, {3, 48, 48}, 0.4f);
  std::uniform_int_distribution<int64_t> r16(0, 3), r8(1, 5);
  for (int s = 0; s < 5; ++s) {
    ForwardOptions opt;
    opt.iters16 = r16(rng);
    opt.iters8 = r8(rng);
    auto res = model.forward(i1, i2, opt);
    CHECK(static_cast<int64_t>(res.preds.size()) == 1 + opt.iters16 + opt.iters8);
    CHECK(res.preds.back().value() == res.final_flow.value());
    for (const auto& p : res.preds) CHECK(p.shape() == Shape({2, 48, 48}));
  }
}

TEST_CASE("sequence_loss: exact values on constructed sequences") {
  auto rng = make_rng(72);
  auto gt = rand_tensor<float>(rng, {2, 4, 4}, 2.f);
  auto valid = Tensor<float>::full({4, 4}, 1.f);

  CHECK(sequence_loss<float>({gt}, gt, valid).item() == doctest::Approx(0.f));

  // off by (3, 4) everywhere: L1 per pixel = 7
  std::vector<float> off(gt.value());
  for (int i = 0; i < 16; ++i) {
    off[i] += 3.f;
    off[16 + i] += 4.f;
  }
  auto shifted = Tensor<float>::from_data({2, 4, 4}, std::move(off));
  CHECK(sequence_loss<float>({shifted}, gt, valid).item() == doctest::Approx(7.f));

  // two predictions with per-prediction L1 means 2 and 1 -> 0.8*2 + 1*1
  std::vector<float> a(gt.value()), b(gt.value());
  for (int i = 0; i < 16; ++i) {
    a[i] += 1.f;
    a[16 + i] += 1.f;
    b[i] += 0.5f;
    b[16 + i] += 0.5f;
  }
  auto pa = Tensor<float>::from_data({2, 4, 4}, std::move(a));
  auto pb = Tensor<float>::from_data({2, 4, 4}, std::move(b));
  CHECK(sequence_loss<float>({pa, pb}, gt, valid).item() == doctest::Approx(2.6f));
}

TEST_CASE("sequence_loss: pixels beyond max_flow drop out of supervision") {
  auto gt = Tensor<float>::from_data({2, 1, 2}, {500.f, 1.f, 0.f, 0.f});
  auto valid = Tensor<float>::full({1, 2}, 1.f);
  auto pred = Tensor<float>::zeros({2, 1, 2});
  // only the second pixel (|gt|=1) is supervised: L1 = 1
  CHECK(sequence_loss<float>({pred}, gt, valid, 0.8f, 400.f).item() ==
        doctest::Approx(1.f));
}

TEST_CASE("padding transparency: 100x100 input round-trips through pad and crop") {
  auto rng = make_rng(73);
  NeuFlow<float> model;
  model.init(tiny_cfg(), 3);
  ImageU8 img1{100, 100, std::vector<uint8_t>(100 * 100 * 3)};
  ImageU8 img2 = img1;
  for (auto& v : img1.rgb) v = static_cast<uint8_t>(rng() % 256);
  for (auto& v : img2.rgb) v = static_cast<uint8_t>(rng() % 256);
  NoGradGuard ng;
  auto res = model.forward(image_to_tensor(pad_to_multiple_of_16(img1)),
                           image_to_tensor(pad_to_multiple_of_16(img2)));
  auto flow = tensor_to_flow(res.final_flow);
  CHECK(flow.h == 112);
  auto cropped = crop_flow(flow, 100, 100);
  CHECK(cropped.h == 100);
  CHECK(cropped.w == 100);
}

TEST_CASE("forward rejects bad inputs with informative errors") {
  NeuFlow<float> model;
  model.init(tiny_cfg(), 3);
  auto a = Tensor<float>::zeros({3, 48, 48});
  auto b = Tensor<float>::zeros({3, 64, 64});
  CHECK_THROWS_WITH_AS(model.forward(a, b),
                       doctest::Contains("[3x48x48]"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(model.forward(b, a),
                       doctest::Contains("[3x48x48]"), std::invalid_argument);
  auto c = Tensor<float>::zeros({3, 40, 40});
  CHECK_THROWS(model.forward(c, c));
}

TEST_CASE("non-finite values abort with the stage name") {
  NeuFlow<float> model;
  model.init(tiny_cfg(), 3);
  std::vector<float> v(3 * 48 * 48, 0.1f);
  v[100] = std::numeric_limits<float>::quiet_NaN();
  auto bad = Tensor<float>::from_data({3, 48, 48}, std::move(v));
  CHECK_THROWS_WITH_AS(model.forward(bad, Tensor<float>::zeros({3, 48, 48})),
                       doctest::Contains("input"), std::runtime_error);

  // an exploding weight mid-pipeline is reported with its stage
  NeuFlow<float> broken;
  broken.init(tiny_cfg(), 3);
  auto& w = broken.attn.layers[0].ff2.w;
  w.value()[0] = std::numeric_limits<float>::infinity();
  auto img = Tensor<float>::full({3, 48, 48}, 0.2f);
  CHECK_THROWS_WITH_AS(broken.forward(img, img), doctest::Contains("cross_attention"),
                       std::runtime_error);
}

TEST_CASE("checkpoint: save -> load -> forward is bit-exact") {
  auto rng = make_rng(74);
  NeuFlow<float> model;
  model.init(tiny_cfg(), 99);
  auto params = model.params();
  AdamW<float> adam;
  adam.init(params);

  auto i1 = rand_tensor<float>(rng, {3, 48, 48}, 0.4f);
  auto i2 = rand_tensor<float>(rng, {3, 48, 48}, 0.4f);
  NoGradGuard ng;
  auto before = model.forward(i1, i2);

  const std::string path = temp_path("nf_test_ckpt.nfck");
  save_checkpoint(path, model.cfg, params, &adam, 123);

  NeuFlow<float> loaded;
  AdamW<float> adam2;
  auto info = load_checkpoint(path, loaded, &adam2);
  CHECK(info.step == 123);
  CHECK(info.config.dim16 == 16);
  auto after = loaded.forward(i1, i2);
  CHECK(before.final_flow.value() == after.final_flow.value());
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: corrupt files are rejected") {
  const std::string path = temp_path("nf_bad_ckpt.nfck");
  std::ofstream(path) << "not a checkpoint";
  NeuFlow<float> model;
  CHECK_THROWS(load_checkpoint(path, model));
  std::filesystem::remove(path);
}

TEST_CASE("gradient flow: one training step touches every weight array") {
  auto rng = make_rng(75);
  NeuFlow<float> model;
  model.init(tiny_cfg(), 5);
  auto params = model.params();

  SynthOptions sopt;
  sopt.size = 48;
  sopt.max_disp = 4;
  auto s = generate_sample(1, sopt);
  auto res = model.forward(image_to_tensor(s.img1), image_to_tensor(s.img2));
  auto loss = sequence_loss(res.preds, flow_to_tensor(s.gt),
                            valid_to_tensor(s.valid, 48, 48));
  loss.backward();

  std::vector<std::vector<float>> snapshot;
  for (auto& [name, t] : params.items) {
    double mx = 0;
    for (float g : t.grad()) mx = std::max(mx, std::abs(static_cast<double>(g)));
    CHECK_MESSAGE(mx > 0.0, "zero gradient for " << name);
    snapshot.push_back(t.value());
  }
  AdamW<float> adam;
  adam.init(params);
  adam.step(params, 1e-3f);
  size_t changed = 0;
  for (size_t i = 0; i < params.items.size(); ++i)
    if (params.items[i].second.value() != snapshot[i]) ++changed;
  CHECK(changed == params.items.size());
}

TEST_CASE("train: steps=0 is rejected") {
  NeuFlow<float> model;
  model.init(tiny_cfg(), 5);
  auto params = model.params();
  AdamW<float> adam;
  adam.init(params);
  SynthOptions sopt;
  sopt.size = 48;
  SynthDataset ds(0, 4, sopt);
  TrainOptions topt;
  topt.steps = 0;
  CHECK_THROWS(train_model(model, adam, params, ds, nullptr, topt));
}

TEST_CASE("train: diverging loss aborts after 10 consecutive bad steps") {
  struct PoisonDataset final : Dataset {
    int64_t size() const override { return 1; }
    SynthSample get(int64_t) const override {
      SynthOptions o;
      o.size = 32;
      o.max_disp = 2;
      auto s = generate_sample(3, o);
      // NaN survives the max-flow magnitude filter and poisons the loss
      s.gt.uv[0] = std::numeric_limits<float>::quiet_NaN();
      s.valid.assign(s.valid.size(), 1);
      return s;
    }
  };
  NeuFlow<float> model;
  model.init(tiny_cfg(), 5);
  auto params = model.params();
  AdamW<float> adam;
  adam.init(params);
  PoisonDataset ds;
  TrainOptions topt;
  topt.steps = 50;
  topt.max_flow = 1e30;  // keep the poisoned pixel supervised
  CHECK_THROWS_WITH_AS(train_model(model, adam, params, ds, nullptr, topt),
                       doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("train smoke: 200 steps on 50 samples halve the loss") {
  NeuFlow<float> model;
  model.init(tiny_cfg(), 21);
  auto params = model.params();
  AdamW<float> adam;
  adam.init(params);

  SynthOptions sopt;
  sopt.size = 64;
  sopt.max_disp = 6;
  sopt.min_shapes = 1;
  sopt.max_shapes = 3;
  SynthDataset ds(500, 50, sopt);

  TrainOptions topt;
  topt.steps = 200;
  topt.matching_warmup_steps = 200;  // the first stage of the desk-scale recipe
  topt.peak_lr = 1e-3;
  topt.seed = 9;
  topt.log_every = 50;
  auto stats = train_model(model, adam, params, ds, nullptr, topt);
  CHECK(stats.last_window_loss < 0.5 * stats.first_window_loss);
}

TEST_SUITE_END();
