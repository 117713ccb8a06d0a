#include "tcpdm/commands.hpp"

#include <cstdio>
#include <fstream>

#include "tcpdm/image_io.hpp"

namespace fs = std::filesystem;

namespace tcpdm {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

void write_resolved_config(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_text(out_dir / "resolved_config.txt", cfg.resolved_text());
}

TrainOutcome train_denoiser(const std::vector<TrainingFrame>& frames, const DenoiserConfig& config,
                            const NoiseSchedule& schedule, const TrainSettings& settings,
                            const TrainObserver& observer) {
  Rng init = Rng::stream(settings.seed, {0});
  Denoiser den(build_denoiser(config, init));
  TrainOutcome out;
  out.opt = make_optimizer(den.params(), settings.lr);
  Rng rng = Rng::stream(settings.seed, {1});
  out.losses.reserve(static_cast<std::size_t>(settings.iters));
  for (int it = 0; it < settings.iters; ++it) {
    const auto batch = random_patch_batch(frames, settings.n_images, settings.patches_per_image,
                                          config.patch_size, rng);
    const double loss = train_step(den, out.opt, batch, schedule, rng);
    ema_update(den.params().ema, den.params().params, settings.ema_momentum);
    out.losses.push_back(loss);
    if (observer) observer(it, loss, den.params(), out.opt);
  }
  out.params = std::move(den.params());
  return out;
}

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  const auto scene_cfg = cfg.synth();
  const auto scene = synth_scene(scene_cfg);
  write_dataset(out_dir, scene, scene_cfg.num_labels);
  write_resolved_config(cfg, out_dir);
}

fs::path cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
  const auto settings = cfg.train();
  const auto den_cfg = cfg.denoiser();
  const auto schedule = cfg.schedule();
  const fs::path dataset_dir = cfg.get("paths.dataset");
  if (dataset_dir.empty()) throw Error(ErrorCode::InvalidConfig, "paths.dataset is not set");
  const auto data = load_dataset(dataset_dir);
  if (data.num_labels != den_cfg.num_labels) {
    throw Error(ErrorCode::ConfigMismatch, "dataset L = " + std::to_string(data.num_labels) +
                                               " but denoiser.L = " +
                                               std::to_string(den_cfg.num_labels));
  }
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  const fs::path ck_dir =
      cfg.get("paths.checkpoint").empty() ? out_dir / "checkpoint" : fs::path(cfg.get("paths.checkpoint"));
  if (ck_dir.has_parent_path()) fs::create_directories(ck_dir.parent_path());

  {
    // step-0 checkpoint so a diverging run always leaves a usable one behind
    Rng init = Rng::stream(settings.seed, {0});
    const auto p0 = build_denoiser(den_cfg, init);
    save_checkpoint(ck_dir, p0, make_optimizer(p0, settings.lr));
  }

  std::ofstream csv(out_dir / "loss.csv", std::ios::trunc);
  if (!csv) throw Error(ErrorCode::IoError, "cannot write loss.csv");
  csv << "iter,loss\n";
  auto observer = [&](int it, double loss, const DenoiserParams& p, const OptimizerState& opt) {
    char line[64];
    std::snprintf(line, sizeof line, "%d,%.9g\n", it, loss);
    csv << line;
    if (settings.checkpoint_every > 0 && (it + 1) % settings.checkpoint_every == 0) {
      csv.flush();
      save_checkpoint(ck_dir, p, opt);
    }
  };
  const auto result =
      train_denoiser(data.training_frames(), den_cfg, schedule, settings, observer);
  save_checkpoint(ck_dir, result.params, result.opt);
  return ck_dir;
}

VideoResult cmd_translate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& dataset,
                          const fs::path& out_dir) {
  const auto ck = load_checkpoint(checkpoint);
  const auto data = load_dataset(dataset);
  const auto tcfg = cfg.translate();
  const auto schedule = cfg.schedule();
  const auto& dc = ck.params.config;
  if (dc.num_labels != data.num_labels) {
    throw Error(ErrorCode::ConfigMismatch, "checkpoint L = " + std::to_string(dc.num_labels) +
                                               ", dataset L = " + std::to_string(data.num_labels));
  }
  if (dc.patch_size != tcfg.patch.patch) {
    throw Error(ErrorCode::ConfigMismatch, "checkpoint patch size " + std::to_string(dc.patch_size) +
                                               " differs from patch.p " +
                                               std::to_string(tcfg.patch.patch));
  }
  const int cfg_labels = cfg.get_int("denoiser.L");
  if (cfg_labels != dc.num_labels) {
    throw Error(ErrorCode::ConfigMismatch, "denoiser.L = " + std::to_string(cfg_labels) +
                                               " but the checkpoint was trained with L = " +
                                               std::to_string(dc.num_labels));
  }
  const Denoiser den(ck.params);
  const auto result = translate_video(data.ir, data.logits, data.flows,
                                      den.predictor(cfg.get_bool("translate.use_ema")), schedule, tcfg);
  fs::create_directories(out_dir / "gen");
  for (std::size_t i = 0; i < result.frames.size(); ++i) {
    write_png(out_dir / "gen" / frame_name(i, "png"), from_model_range(result.frames[i]));
  }
  write_resolved_config(cfg, out_dir);
  std::string prov = "seed=" + std::to_string(tcfg.seed) + "\nconfig_hash=" + cfg.hash() +
                     "\ncheckpoint=" + checkpoint.string() + "\ndataset=" + dataset.string() +
                     "\nframes=" + std::to_string(result.frames.size()) +
                     "\ncorrespondence_computations=" +
                     std::to_string(result.correspondence_computations) + "\n";
  for (std::size_t i = 0; i < result.verification_skipped.size(); ++i) {
    prov += "pair_" + std::to_string(i) + "=matches:" + std::to_string(result.verified_matches[i]) +
            (result.verification_skipped[i] ? ",verification_skipped" : ",verified") + "\n";
  }
  write_text(out_dir / "provenance.txt", prov);
  return result;
}

MetricReport cmd_eval(const fs::path& generated_dir, const fs::path& reference_dir,
                      const std::optional<fs::path>& flows_dir, const fs::path& out_dir) {
  const auto gen = load_png_frames(generated_dir);
  const auto ref = load_png_frames(reference_dir);
  if (gen.size() != ref.size() || gen.empty()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(gen.size()) + " generated vs " +
                                               std::to_string(ref.size()) + " reference frames");
  }
  std::vector<FlowField> flows;
  if (flows_dir) {
    flows = load_flows(*flows_dir);
    if (flows.size() + 1 != gen.size()) {
      throw Error(ErrorCode::LengthMismatch, "need N-1 flows for N frames");
    }
  }
  const auto report = evaluate_frames(gen, ref, flows_dir ? &flows : nullptr);
  fs::create_directories(out_dir);
  write_text(out_dir / "metrics.csv", report.to_csv());
  write_text(out_dir / "summary.txt", report.to_summary());
  return report;
}

}  // namespace tcpdm
