#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcpdm/commands.hpp"
#include "tcpdm/parallel.hpp"

namespace fs = std::filesystem;
using namespace tcpdm;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "config file (key=value)");
  cmd->add_option("--seed", c.seed, "seed for every random stream");
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--set", c.overrides, "key=value override")->allow_extra_args(false);
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (const char* profile = std::getenv("TCPDM_PROFILE"); profile && *profile) cfg.merge_file(profile);
  if (!c.config_path.empty()) cfg.merge_file(c.config_path);
  for (const auto& kv : c.overrides) cfg.set(kv);
  if (c.seed) {
    const auto s = std::to_string(*c.seed);
    cfg.set("train.seed", s);
    cfg.set("translate.seed", s);
    cfg.set("synth.seed", s);
  }
  if (!c.out.empty()) cfg.set("paths.output", c.out);
  thread_count_setting() = c.threads;
  return cfg;
}

fs::path output_dir(const RunConfig& cfg) {
  const auto& out = cfg.get("paths.output");
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no output directory (--out or paths.output)");
  return out;
}

bool is_config_error(ErrorCode code) {
  return code == ErrorCode::InvalidConfig || code == ErrorCode::ConfigMismatch ||
         code == ErrorCode::InvalidSchedule;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Infrared-to-visible video translation with patch diffusion"};
  app.require_subcommand(1);

  Common synth_opts, train_opts, translate_opts, eval_opts;
  auto* synth = app.add_subcommand("synth", "write a synthetic moving-shapes dataset");
  add_common(synth, synth_opts);

  auto* train = app.add_subcommand("train", "train the denoiser");
  add_common(train, train_opts);
  std::string train_dataset;
  train->add_option("--dataset", train_dataset, "dataset directory");

  auto* translate = app.add_subcommand("translate", "translate an infrared video");
  add_common(translate, translate_opts);
  std::string checkpoint, dataset;
  std::string omega;
  translate->add_option("--checkpoint", checkpoint, "checkpoint directory");
  translate->add_option("--dataset", dataset, "dataset directory");
  translate->add_option("--omega", omega, "temporal decay factor")->check(CLI::Number);

  auto* eval = app.add_subcommand("eval", "score generated frames");
  add_common(eval, eval_opts);
  std::string gen_dir, ref_dir, flows_dir;
  eval->add_option("--gen", gen_dir, "generated PNG directory")->required();
  eval->add_option("--ref", ref_dir, "reference PNG directory")->required();
  eval->add_option("--flows", flows_dir, "flow tensor directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      const auto cfg = resolve(synth_opts);
      cmd_synth(cfg, output_dir(cfg));
    } else if (*train) {
      auto cfg = resolve(train_opts);
      if (!train_dataset.empty()) cfg.set("paths.dataset", train_dataset);
      const auto ck = cmd_train(cfg, output_dir(cfg));
      std::cout << "checkpoint " << ck.string() << "\n";
    } else if (*translate) {
      auto cfg = resolve(translate_opts);
      if (!checkpoint.empty()) cfg.set("paths.checkpoint", checkpoint);
      if (!dataset.empty()) cfg.set("paths.dataset", dataset);
      if (!omega.empty()) cfg.set("temporal.omega", omega);
      if (cfg.get("paths.checkpoint").empty() || cfg.get("paths.dataset").empty()) {
        throw Error(ErrorCode::InvalidConfig, "translate needs --checkpoint and --dataset");
      }
      cmd_translate(cfg, cfg.get("paths.checkpoint"), cfg.get("paths.dataset"), output_dir(cfg));
    } else if (*eval) {
      const auto cfg = resolve(eval_opts);
      const auto out = output_dir(cfg);
      std::optional<fs::path> flows;
      if (!flows_dir.empty()) flows = flows_dir;
      const auto report = cmd_eval(gen_dir, ref_dir, flows, out);
      write_resolved_config(cfg, out);
      std::cout << report.to_summary();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
