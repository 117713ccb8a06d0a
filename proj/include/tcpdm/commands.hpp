#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "tcpdm/checkpoint.hpp"
#include "tcpdm/config.hpp"
#include "tcpdm/metrics.hpp"

namespace tcpdm {

struct TrainOutcome {
  DenoiserParams params;
  OptimizerState opt;
  std::vector<double> losses;
};

/// Called after every step with (iteration, loss, state).
using TrainObserver =
    std::function<void(int, double, const DenoiserParams&, const OptimizerState&)>;

/// Builds the network from Rng::stream(seed, {0}) and runs `iters` steps of
/// random_patch_batch -> train_step -> ema_update on stream {1}.
TrainOutcome train_denoiser(const std::vector<TrainingFrame>& frames, const DenoiserConfig& config,
                            const NoiseSchedule& schedule, const TrainSettings& settings,
                            const TrainObserver& observer = {});

/// Writes the synthetic dataset to out_dir.
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Trains on paths.dataset. Writes loss.csv to out_dir and the checkpoint
/// to paths.checkpoint (default out_dir/checkpoint), refreshed every
/// train.checkpoint_every steps.
std::filesystem::path cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Writes out_dir/gen/{i:05}.png and out_dir/provenance.txt.
VideoResult cmd_translate(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& dataset, const std::filesystem::path& out_dir);

/// Writes out_dir/metrics.csv and out_dir/summary.txt.
MetricReport cmd_eval(const std::filesystem::path& generated_dir,
                      const std::filesystem::path& reference_dir,
                      const std::optional<std::filesystem::path>& flows_dir,
                      const std::filesystem::path& out_dir);

void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace tcpdm
