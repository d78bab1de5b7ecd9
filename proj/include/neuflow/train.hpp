#pragma once

// Desk-scale training loop: AdamW, one-cycle schedule, global-norm gradient
// clipping, optional random crops and brightness jitter, periodic
// validation EPE, and a divergence guard that aborts after ten consecutive
// non-finite losses.

#include <cmath>
#include <functional>
#include <optional>

#include "neuflow/dataio/dataset.hpp"
#include "neuflow/evaluate.hpp"
#include "neuflow/model.hpp"
#include "neuflow/optim.hpp"

namespace neuflow {

struct TrainOptions {
  int64_t steps = 4000;
  double peak_lr = 4e-4;
  double weight_decay = 1e-4;
  double clip = 1.0;
  double gamma = 0.8;
  double max_flow = 400;
  int64_t crop = 0;  // 0 trains on full frames
  int64_t accum = 1; // gradient accumulation (effective batch)
  double brightness_jitter = 0.0;
  uint64_t seed = 1234;
  int64_t log_every = 50;
  int64_t val_every = 0;
  int64_t val_samples = 50;
  int64_t start_step = 0;           // resume offset
  int64_t total_schedule_steps = 0; // 0: start_step + steps
  // Steps (absolute) during which only the global-matching prediction is
  // supervised. Desk-scale training needs the matching stage to settle
  // before the full sequence loss turns on; otherwise gradient noise from
  // the untrained refinement drowns the matching signal in the shared
  // backbone and training stalls in the predict-zero basin.
  int64_t matching_warmup_steps = 0;
  // Steps (absolute) during which the refinement consumers train against a
  // detached matching trunk (the trunk keeps learning from its own
  // global-matching term). Usually set somewhat past the warmup.
  int64_t detach_features_until = 0;
};

struct TrainLogEntry {
  int64_t step = 0;
  double loss = 0, lr = 0, grad_norm = 0;
  std::optional<double> val_epe;
};

struct TrainStats {
  std::vector<TrainLogEntry> log;
  double first_window_loss = 0;  // mean loss over the first 10 logged steps
  double last_window_loss = 0;   // mean loss over the last 10 logged steps
};

inline SynthSample crop_sample(const SynthSample& s, int64_t crop, Rng& rng) {
  const int64_t H = s.img1.h, W = s.img1.w;
  NF_CHECK(crop % 16 == 0 && crop >= 32, "crop must be a multiple of 16 and >= 32");
  NF_CHECK(crop <= H && crop <= W, "crop larger than the source frame");
  std::uniform_int_distribution<int64_t> dy(0, H - crop), dx(0, W - crop);
  const int64_t oy = dy(rng), ox = dx(rng);

  SynthSample out;
  out.motion_params = s.motion_params;
  auto crop_img = [&](const ImageU8& im) {
    ImageU8 r{crop, crop, std::vector<uint8_t>(static_cast<size_t>(crop * crop * 3))};
    for (int64_t y = 0; y < crop; ++y)
      std::copy_n(&im.rgb[((y + oy) * W + ox) * 3], crop * 3, &r.rgb[y * crop * 3]);
    return r;
  };
  out.img1 = crop_img(s.img1);
  out.img2 = crop_img(s.img2);
  out.gt = {crop, crop, std::vector<float>(static_cast<size_t>(2 * crop * crop))};
  out.valid.assign(static_cast<size_t>(crop * crop), 0);
  for (int64_t y = 0; y < crop; ++y)
    for (int64_t x = 0; x < crop; ++x) {
      const int64_t sp = (y + oy) * W + (x + ox), dp = y * crop + x;
      const float u = s.gt.uv[sp], v = s.gt.uv[H * W + sp];
      out.gt.uv[dp] = u;
      out.gt.uv[crop * crop + dp] = v;
      // the frame is now the crop: targets that leave it are unsupervisable
      const float qx = x + u, qy = y + v;
      if (s.valid[sp] && qx >= 0 && qx <= crop - 1 && qy >= 0 && qy <= crop - 1)
        out.valid[dp] = 1;
    }
  return out;
}

inline TrainStats train_model(
    NeuFlow<float>& model, AdamW<float>& opt, ParamMap<float>& params,
    const Dataset& train_ds, const Dataset* val_ds, const TrainOptions& topt,
    const std::function<void(const TrainLogEntry&)>& on_log = nullptr) {
  NF_CHECK(topt.steps >= 1, "train: steps must be >= 1");
  NF_CHECK(train_ds.size() >= 1, "train: empty dataset");
  NF_CHECK(topt.accum >= 1, "train: accum must be >= 1");

  opt.weight_decay = static_cast<float>(topt.weight_decay);
  OneCycleSchedule sched;
  sched.peak_lr = topt.peak_lr;
  sched.total_steps =
      topt.total_schedule_steps > 0 ? topt.total_schedule_steps : topt.start_step + topt.steps;

  Rng rng = make_rng(topt.seed + static_cast<uint64_t>(topt.start_step) * 7919);
  std::uniform_int_distribution<int64_t> pick(0, train_ds.size() - 1);
  std::uniform_real_distribution<double> jit(-topt.brightness_jitter, topt.brightness_jitter);

  TrainStats stats;
  std::vector<double> losses;
  int consecutive_bad = 0;

  for (int64_t k = 0; k < topt.steps; ++k) {
    const int64_t step = topt.start_step + k;
    const double lr = sched.lr(step);
    const bool warmup = step < topt.matching_warmup_steps;
    const int64_t accum = warmup ? 1 : topt.accum;
    double loss_acc = 0;
    bool finite = true;
    for (int64_t a = 0; a < accum; ++a) {
      SynthSample s = train_ds.get(pick(rng));
      if (topt.crop > 0 && (topt.crop < s.img1.h || topt.crop < s.img1.w))
        s = crop_sample(s, topt.crop, rng);
      const float b1 = topt.brightness_jitter > 0 ? static_cast<float>(1 + jit(rng)) : 1.f;
      const float b2 = topt.brightness_jitter > 0 ? static_cast<float>(1 + jit(rng)) : 1.f;
      auto i1 = image_to_tensor(s.img1, b1);
      auto i2 = image_to_tensor(s.img2, b2);
      auto gt = flow_to_tensor(s.gt);
      auto vmask = valid_to_tensor(s.valid, s.gt.h, s.gt.w);
      Tensor<float> loss;
      if (warmup) {
        auto pf1 = model.backbone.forward(i1);
        auto pf2 = model.backbone.forward(i2);
        auto [e1, e2] = model.attn.forward(pf1.feat16, pf2.feat16);
        auto pred = upsample_flow_to_full(global_match(e1, e2), s.gt.h, s.gt.w);
        loss = ops::masked_l1_mean(pred, gt, vmask);
      } else {
        ForwardOptions fopt;
        fopt.detach_features = step < topt.detach_features_until;
        auto res = model.forward(i1, i2, fopt);
        loss = sequence_loss(res.preds, gt, vmask, static_cast<float>(topt.gamma),
                             static_cast<float>(topt.max_flow));
      }
      const double lv = loss.item();
      if (!std::isfinite(lv)) {
        finite = false;
        break;
      }
      loss_acc += lv / accum;
      if (accum > 1) loss = ops::scale(loss, 1.f / static_cast<float>(accum));
      loss.backward();
    }

    if (!finite) {
      opt.zero_grad(params);
      if (++consecutive_bad >= 10)
        throw std::runtime_error("train: loss diverged (non-finite for 10 consecutive steps)");
      continue;
    }
    consecutive_bad = 0;

    const float gnorm = clip_grad_norm(params, static_cast<float>(topt.clip));
    opt.step(params, static_cast<float>(lr));
    opt.zero_grad(params);
    losses.push_back(loss_acc);

    const bool do_val = val_ds && topt.val_every > 0 &&
                        ((k + 1) % topt.val_every == 0 || k + 1 == topt.steps);
    if ((k % topt.log_every == 0) || k + 1 == topt.steps || do_val) {
      TrainLogEntry e;
      e.step = step;
      e.loss = loss_acc;
      e.lr = lr;
      e.grad_norm = gnorm;
      if (do_val) {
        auto rep = evaluate_model(model, *val_ds, -1, -1, topt.val_samples);
        e.val_epe = rep.epe;
      }
      stats.log.push_back(e);
      if (on_log) on_log(e);
    }
  }

  const size_t nwin = std::min<size_t>(10, losses.size());
  if (nwin) {
    for (size_t i = 0; i < nwin; ++i) {
      stats.first_window_loss += losses[i] / nwin;
      stats.last_window_loss += losses[losses.size() - 1 - i] / nwin;
    }
  }
  return stats;
}

}  // namespace neuflow
