// Command-line front end: gen / train / infer / eval / bench.
// Exit codes: 0 success, 2 usage error, 1 runtime failure.
// Every command writes a run manifest next to its outputs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "neuflow/bench.hpp"
#include "neuflow/checkpoint.hpp"
#include "neuflow/dataio/dataset.hpp"
#include "neuflow/dataio/flo.hpp"
#include "neuflow/dataio/flow_color.hpp"
#include "neuflow/dataio/png_io.hpp"
#include "neuflow/device.hpp"
#include "neuflow/evaluate.hpp"
#include "neuflow/train.hpp"

namespace fs = std::filesystem;
using neuflow::ModelConfig;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "neuflow 1.0.0";

void write_run_manifest(const fs::path& dir, const std::string& command,
                        const json& config, uint64_t seed,
                        const std::vector<std::string>& outputs) {
  fs::create_directories(dir);
  // outputs are stored relative to the manifest so identical runs produce
  // identical trees wherever they land
  std::vector<std::string> rel;
  for (const auto& o : outputs)
    rel.push_back(fs::relative(fs::absolute(o), fs::absolute(dir)).string());
  json m{{"command", command},
         {"config", config},
         {"seed", seed},
         {"outputs", rel},
         {"tool_version", kToolVersion}};
  std::ofstream f(dir / "run_manifest.json");
  f << m.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write run manifest in " + dir.string());
}

ModelConfig load_model_config(const std::string& config_path) {
  ModelConfig cfg;
  if (config_path.empty()) return cfg;
  std::ifstream f(config_path);
  if (!f) throw std::runtime_error("cannot open config file: " + config_path);
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("config file is not valid JSON: " + config_path);
  cfg = j.get<ModelConfig>();
  return cfg;
}

int run_gen(int64_t count, int64_t size, double max_disp, uint64_t seed,
            const std::string& out) {
  neuflow::SynthOptions opt;
  opt.size = size;
  opt.max_disp = static_cast<float>(max_disp);
  const std::string manifest = neuflow::save_dataset(out, count, seed, opt);
  json cfg{{"count", count}, {"size", size}, {"max_disp", max_disp}};
  write_run_manifest(out, "gen", cfg, seed, {manifest});
  std::cout << "wrote " << count << " samples under " << out << "\n";
  return 0;
}

int run_train(const std::string& data, const std::string& val_data,
              const std::string& config_path, const std::string& resume,
              neuflow::TrainOptions topt, const std::string& out) {
  ModelConfig cfg = load_model_config(config_path);
  neuflow::NeuFlow<float> model;
  neuflow::AdamW<float> adam;
  int64_t start_step = 0;
  if (!resume.empty()) {
    auto info = neuflow::load_checkpoint(resume, model, &adam);
    cfg = info.config;
    start_step = info.step;
    std::cout << "resumed from " << resume << " at step " << start_step << "\n";
  } else {
    model.init(cfg, topt.seed);
  }
  auto params = model.params();
  if (resume.empty()) adam.init(params);

  neuflow::FileDataset train_ds(data);
  std::optional<neuflow::FileDataset> val_ds;
  if (!val_data.empty()) val_ds.emplace(val_data);

  topt.start_step = start_step;
  fs::create_directories(out);
  std::ofstream curve(fs::path(out) / "loss_curve.jsonl",
                      start_step ? std::ios::app : std::ios::out);
  auto stats = neuflow::train_model(
      model, adam, params, train_ds, val_ds ? &*val_ds : nullptr, topt,
      [&](const neuflow::TrainLogEntry& e) {
        json j{{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}, {"grad_norm", e.grad_norm}};
        if (e.val_epe) j["val_epe"] = *e.val_epe;
        curve << j.dump() << "\n";
        curve.flush();
        std::cout << "step " << e.step << " loss " << e.loss << " lr " << e.lr;
        if (e.val_epe) std::cout << " val_epe " << *e.val_epe;
        std::cout << std::endl;
      });

  const std::string ckpt = (fs::path(out) / "checkpoint.nfck").string();
  neuflow::save_checkpoint(ckpt, cfg, params, &adam, start_step + topt.steps);
  json jcfg;
  to_json(jcfg, cfg);
  jcfg["steps"] = topt.steps;
  jcfg["peak_lr"] = topt.peak_lr;
  jcfg["crop"] = topt.crop;
  jcfg["accum"] = topt.accum;
  write_run_manifest(out, "train", jcfg, topt.seed,
                     {ckpt, (fs::path(out) / "loss_curve.jsonl").string()});
  std::cout << "checkpoint written to " << ckpt << "\n";
  return 0;
}

int run_infer(const std::string& ckpt, const std::string& img1_path,
              const std::string& img2_path, int64_t iters16, int64_t iters8,
              const std::string& flo_out, const std::string& viz_out,
              const std::string& out_dir) {
  neuflow::NeuFlow<float> model;
  auto info = neuflow::load_checkpoint(ckpt, model);

  auto raw1 = neuflow::read_png8(img1_path);
  auto raw2 = neuflow::read_png8(img2_path);
  if (raw1.h != raw2.h || raw1.w != raw2.w)
    throw std::runtime_error("image dims differ: " + img1_path + " is " +
                             std::to_string(raw1.w) + "x" + std::to_string(raw1.h) +
                             ", " + img2_path + " is " + std::to_string(raw2.w) + "x" +
                             std::to_string(raw2.h));
  const auto img1 = neuflow::pad_to_multiple_of_16(raw1);
  const auto img2 = neuflow::pad_to_multiple_of_16(raw2);

  neuflow::ForwardOptions opt;
  opt.iters16 = iters16;
  opt.iters8 = iters8;
  opt.record_sequence = false;
  neuflow::NoGradGuard ng;
  auto res = model.forward(neuflow::image_to_tensor(img1), neuflow::image_to_tensor(img2), opt);
  auto flow = neuflow::tensor_to_flow(res.final_flow);
  if (flow.h != raw1.h || flow.w != raw1.w) flow = neuflow::crop_flow(flow, raw1.h, raw1.w);

  std::vector<std::string> outputs;
  if (!flo_out.empty()) {
    neuflow::write_flo(flow, flo_out);
    outputs.push_back(flo_out);
  }
  if (!viz_out.empty()) {
    neuflow::write_png8(viz_out, neuflow::flow_to_color(flow));
    outputs.push_back(viz_out);
  }
  fs::path mdir = !out_dir.empty()
                      ? fs::path(out_dir)
                      : (!flo_out.empty() ? fs::path(flo_out).parent_path()
                                          : fs::path(viz_out).parent_path());
  if (mdir.empty()) mdir = ".";
  json jcfg;
  to_json(jcfg, info.config);
  jcfg["iters16"] = iters16;
  jcfg["iters8"] = iters8;
  write_run_manifest(mdir, "infer", jcfg, 0, outputs);
  std::cout << "flow " << flow.w << "x" << flow.h << " written ("
            << outputs.size() << " outputs)\n";
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data,
             const std::string& report, int64_t iters16, int64_t iters8,
             int64_t max_iters8, int64_t max_samples) {
  neuflow::NeuFlow<float> model;
  auto info = neuflow::load_checkpoint(ckpt, model);
  neuflow::FileDataset ds(data);

  auto rep = neuflow::evaluate_model(model, ds, iters16, iters8, max_samples);
  rep.per_iteration_epe =
      neuflow::per_iteration_epe(model, ds, max_iters8, iters16, max_samples);

  json j = rep.to_json();
  j["iters16"] = iters16 < 0 ? info.config.iters16 : iters16;
  j["iters8"] = iters8 < 0 ? info.config.iters8 : iters8;
  fs::create_directories(fs::path(report).parent_path().empty()
                             ? "."
                             : fs::path(report).parent_path().string());
  std::ofstream f(report);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write report: " + report);
  json jcfg;
  to_json(jcfg, info.config);
  write_run_manifest(fs::path(report).parent_path().empty()
                         ? "."
                         : fs::path(report).parent_path(),
                     "eval", jcfg, 0, {report});
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_bench(const std::string& ckpt, const std::string& resolution,
              const std::vector<std::string>& variants, int64_t reps,
              int64_t warmup, const std::string& report) {
  neuflow::pin_bench_threads();
  int64_t w = 0, h = 0;
  if (std::sscanf(resolution.c_str(), "%ldx%ld", &w, &h) != 2 || w < 64 || h < 64 ||
      w % 16 || h % 16)
    throw std::runtime_error("bad --resolution '" + resolution +
                             "' (expected WxH, multiples of 16, >= 64)");

  ModelConfig cfg;
  neuflow::NeuFlow<float> model;
  if (!ckpt.empty()) {
    auto info = neuflow::load_checkpoint(ckpt, model);
    cfg = info.config;
  } else {
    model.init(cfg, 0);
  }

  std::vector<neuflow::BenchReport> reports;
  for (const auto& v : variants) {
    if (v == "model") {
      reports.push_back(neuflow::bench_whole_model(model, h, w, cfg.iters16, cfg.iters8,
                                                   reps, warmup));
    } else {
      // refine-step benches run at the 1/8 scale of the requested resolution
      reports.push_back(neuflow::bench_refine_step(v, h / 8, w / 8, cfg.dim8, cfg.dim8,
                                                   cfg.corr_radius, reps, warmup));
    }
  }

  fs::path rp(report);
  fs::create_directories(rp.parent_path().empty() ? "." : rp.parent_path().string());
  std::ofstream f(report);
  for (const auto& r : reports) f << r.to_json().dump() << "\n";
  if (!f) throw std::runtime_error("cannot write report: " + report);
  json jcfg;
  to_json(jcfg, cfg);
  jcfg["variants"] = variants;
  jcfg["resolution"] = resolution;
  write_run_manifest(rp.parent_path().empty() ? "." : rp.parent_path(), "bench", jcfg, 0,
                     {report});
  for (const auto& r : reports)
    std::cout << r.variant << ": median " << r.median_s * 1e3 << " ms over " << r.reps
              << " reps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NeuFlow optical flow toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  int64_t g_count = 0, g_size = 256;
  double g_maxdisp = 32;
  uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--count", g_count, "number of samples")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--size", g_size, "square frame size (multiple of 16)")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            const long v = std::strtol(s.c_str(), nullptr, 10);
            return (v >= 32 && v % 16 == 0) ? "" : "must be a multiple of 16 and >= 32";
          },
          "MULT16"));
  gen->add_option("--max-disp", g_maxdisp, "max translation magnitude in px");
  gen->add_option("--seed", g_seed, "base seed");
  gen->add_option("--out", g_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string t_data, t_val, t_config, t_resume, t_out;
  neuflow::TrainOptions topt;
  train->add_option("--data", t_data, "training dataset manifest")->required();
  train->add_option("--val-data", t_val, "validation dataset manifest");
  train->add_option("--config", t_config, "model config JSON");
  train->add_option("--resume", t_resume, "checkpoint to resume from");
  train->add_option("--steps", topt.steps, "training steps")->check(CLI::PositiveNumber);
  train->add_option("--lr", topt.peak_lr, "one-cycle peak learning rate");
  train->add_option("--crop", topt.crop, "training crop (0 = full frames)");
  train->add_option("--accum", topt.accum, "gradient accumulation");
  train->add_option("--jitter", topt.brightness_jitter, "brightness jitter amplitude");
  train->add_option("--seed", topt.seed, "training seed");
  train->add_option("--val-every", topt.val_every, "validate every N steps");
  train->add_option("--val-samples", topt.val_samples, "validation subset size");
  train->add_option("--matching-warmup", topt.matching_warmup_steps,
                    "steps supervising only the global-matching flow first");
  train->add_option("--detach-until", topt.detach_features_until,
                    "train refinement against a detached matching trunk until this step");
  train->add_option("--log-every", topt.log_every, "log every N steps");
  train->add_option("--out", t_out, "output directory")->required();

  // infer
  auto* infer = app.add_subcommand("infer", "run flow on an image pair");
  std::string i_ckpt, i_img1, i_img2, i_flo, i_viz, i_out;
  int64_t i_iters16 = 1, i_iters8 = 8;
  infer->add_option("--ckpt", i_ckpt, "checkpoint")->required();
  infer->add_option("--img1", i_img1, "first image (PNG)")->required();
  infer->add_option("--img2", i_img2, "second image (PNG)")->required();
  infer->add_option("--iters16", i_iters16, "1/16 refinement iterations");
  infer->add_option("--iters8", i_iters8, "1/8 refinement iterations");
  infer->add_option("--flo-out", i_flo, "write .flo here");
  infer->add_option("--viz-out", i_viz, "write color PNG here");
  infer->add_option("--out", i_out, "manifest directory (default: output dir)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string e_ckpt, e_data, e_report = "eval_report.json";
  int64_t e_iters16 = -1, e_iters8 = -1, e_max_iters8 = 8, e_max_samples = -1;
  eval->add_option("--ckpt", e_ckpt, "checkpoint")->required();
  eval->add_option("--data", e_data, "dataset manifest")->required();
  eval->add_option("--report", e_report, "report JSON path");
  eval->add_option("--iters16", e_iters16, "override 1/16 iterations");
  eval->add_option("--iters8", e_iters8, "override 1/8 iterations");
  eval->add_option("--max-iters8", e_max_iters8, "per-iteration curve length");
  eval->add_option("--max-samples", e_max_samples, "cap on evaluated samples");

  // bench
  auto* bench = app.add_subcommand("bench", "latency micro-benchmarks");
  std::string b_ckpt, b_resolution = "512x384", b_report = "bench_report.jsonl";
  std::vector<std::string> b_variants{"gate_free", "conv_gru", "model"};
  int64_t b_reps = 100, b_warmup = 10;
  bench->add_option("--ckpt", b_ckpt, "checkpoint (optional; random init otherwise)");
  bench->add_option("--resolution", b_resolution, "input resolution WxH");
  bench->add_option("--variants", b_variants, "subset of gate_free, conv_gru, model")
      ->delimiter(',')
      ->check(CLI::IsMember({"gate_free", "conv_gru", "model"}));
  bench->add_option("--reps", b_reps, "timed repetitions")->check(CLI::Range(10, 100000));
  bench->add_option("--warmup", b_warmup, "warmup runs excluded from stats");
  bench->add_option("--report", b_report, "report path (JSON lines)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    neuflow::resolve_device();
    if (gen->parsed()) return run_gen(g_count, g_size, g_maxdisp, g_seed, g_out);
    if (train->parsed()) return run_train(t_data, t_val, t_config, t_resume, topt, t_out);
    if (infer->parsed())
      return run_infer(i_ckpt, i_img1, i_img2, i_iters16, i_iters8, i_flo, i_viz, i_out);
    if (eval->parsed())
      return run_eval(e_ckpt, e_data, e_report, e_iters16, e_iters8, e_max_iters8,
                      e_max_samples);
    if (bench->parsed())
      return run_bench(b_ckpt, b_resolution, b_variants, b_reps, b_warmup, b_report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
