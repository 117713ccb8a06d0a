#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tcpdm/ddpm.hpp"
#include "tcpdm/patch.hpp"
#include "tcpdm/synth.hpp"
#include "tcpdm/temporal.hpp"
#include "tcpdm/unet.hpp"

namespace tcpdm {

struct TrainSettings {
  double lr = 2e-5;
  int n_images = 8;
  int patches_per_image = 4;
  int iters = 0;
  double ema_momentum = 0.999;
  std::uint64_t seed = 0;
  int checkpoint_every = 1000;
};

/// Flat key=value run configuration. Built-in defaults use the full-scale
/// training constants; profiles and overrides are layered on top. Unknown
/// keys are rejected.
class RunConfig {
 public:
  RunConfig();

  /// Parses `key = value` lines; '#' starts a comment.
  void merge_text(const std::string& text, const std::string& origin);
  void merge_file(const std::filesystem::path& path);
  /// `key=value` from the command line.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  /// Every key, sorted, one `key=value` per line.
  std::string resolved_text() const;
  /// FNV-1a 64 of resolved_text(), hex.
  std::string hash() const;

  NoiseSchedule schedule() const;
  DenoiserConfig denoiser() const;
  PatchConfig patch() const;
  TranslateConfig translate() const;
  TrainSettings train() const;
  SyntheticSceneConfig synth() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& text);

}  // namespace tcpdm
