#include "tcpdm/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tcpdm {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"schedule.T", "1000"},
      {"schedule.beta_start", "0.0001"},
      {"schedule.beta_end", "0.02"},
      {"schedule.sigma_mode", "beta"},
      {"patch.p", "64"},
      {"patch.r", "16"},
      {"patch.blend_mode", "denoised"},
      {"temporal.w_T", "1"},
      {"temporal.omega", "0.9"},
      {"temporal.collision", "average"},
      {"temporal.verify", "true"},
      {"temporal.ransac.iters", "1000"},
      {"temporal.ransac.threshold", "1.0"},
      {"temporal.ransac.confidence", "0.999"},
      {"temporal.min_motion", "0.5"},
      {"denoiser.L", "150"},
      {"denoiser.base_width", "32"},
      {"denoiser.depth", "2"},
      {"denoiser.use_attention", "false"},
      {"denoiser.ir_replicate_3", "false"},
      {"denoiser.time_embed_dim", "64"},
      {"denoiser.num_groups", "8"},
      {"train.lr", "0.00002"},
      {"train.n_images", "8"},
      {"train.patches_per_image", "4"},
      {"train.iters", "2000000"},
      {"train.ema_momentum", "0.999"},
      {"train.seed", "0"},
      {"train.checkpoint_every", "1000"},
      {"translate.seed", "0"},
      {"translate.use_ema", "true"},
      {"synth.scene", "toy"},
      {"synth.H", "32"},
      {"synth.W", "32"},
      {"synth.N", "6"},
      {"synth.shapes", "2"},
      {"synth.tau", "0.5"},
      {"synth.ir_noise", "0"},
      {"synth.seed", "0"},
      {"paths.dataset", ""},
      {"paths.checkpoint", ""},
      {"paths.output", ""},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw Error(ErrorCode::InvalidConfig, key + " = '" + value + "' is not a valid " + kind);
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!defaults().count(key)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
  values_[key] = value;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "expected key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  const auto& s = get(key);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  bad_value(key, s, "integer");
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& s = get(key);
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size() && s.find('-') == std::string::npos) return v;
  } catch (const std::exception&) {
  }
  bad_value(key, s, "unsigned integer");
}

double RunConfig::get_double(const std::string& key) const {
  const auto& s = get(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  bad_value(key, s, "number");
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, s, "boolean");
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const { return fnv1a_hex(resolved_text()); }

NoiseSchedule RunConfig::schedule() const {
  return make_linear_schedule(get_int("schedule.T"), get_double("schedule.beta_start"),
                              get_double("schedule.beta_end"),
                              parse_sigma_mode(get("schedule.sigma_mode")));
}

DenoiserConfig RunConfig::denoiser() const {
  DenoiserConfig d;
  d.patch_size = get_int("patch.p");
  d.num_labels = get_int("denoiser.L");
  d.base_width = get_int("denoiser.base_width");
  d.depth = get_int("denoiser.depth");
  d.use_attention = get_bool("denoiser.use_attention");
  d.ir_replicate_3 = get_bool("denoiser.ir_replicate_3");
  d.time_embed_dim = get_int("denoiser.time_embed_dim");
  d.num_groups = get_int("denoiser.num_groups");
  d.validate();
  return d;
}

PatchConfig RunConfig::patch() const {
  PatchConfig p;
  p.patch = get_int("patch.p");
  p.cell = get_int("patch.r");
  p.blend_mode = parse_blend_mode(get("patch.blend_mode"));
  if (p.patch < 1 || p.cell < 1 || p.cell > p.patch) {
    throw Error(ErrorCode::InvalidConfig, "need 1 <= patch.r <= patch.p");
  }
  return p;
}

TranslateConfig RunConfig::translate() const {
  TranslateConfig t;
  t.patch = patch();
  t.seed = get_u64("translate.seed");
  t.temporal.w_T = get_double("temporal.w_T");
  t.temporal.omega = get_double("temporal.omega");
  if (t.temporal.w_T < 0 || t.temporal.w_T > 1 || t.temporal.omega < 0 || t.temporal.omega > 1) {
    throw Error(ErrorCode::InvalidConfig, "temporal.w_T and temporal.omega must lie in [0,1]");
  }
  t.temporal.collision = parse_collision(get("temporal.collision"));
  t.temporal.verify = get_bool("temporal.verify");
  t.temporal.ransac.max_iterations = get_int("temporal.ransac.iters");
  t.temporal.ransac.threshold = get_double("temporal.ransac.threshold");
  t.temporal.ransac.confidence = get_double("temporal.ransac.confidence");
  t.temporal.ransac.min_motion = get_double("temporal.min_motion");
  t.temporal.ransac.seed = t.seed;
  return t;
}

TrainSettings RunConfig::train() const {
  TrainSettings s;
  s.lr = get_double("train.lr");
  s.n_images = get_int("train.n_images");
  s.patches_per_image = get_int("train.patches_per_image");
  s.iters = get_int("train.iters");
  s.ema_momentum = get_double("train.ema_momentum");
  s.seed = get_u64("train.seed");
  s.checkpoint_every = get_int("train.checkpoint_every");
  if (s.iters < 0 || s.n_images < 1 || s.patches_per_image < 1 || !(s.lr > 0)) {
    throw Error(ErrorCode::InvalidConfig, "invalid train.* settings");
  }
  return s;
}

SyntheticSceneConfig RunConfig::synth() const {
  const auto& kind = get("synth.scene");
  SyntheticSceneConfig c;
  const int L = get_int("denoiser.L");
  if (kind == "toy") {
    c = toy_scene_config();
    if (L < c.num_labels) throw Error(ErrorCode::InvalidConfig, "toy scene needs denoiser.L >= 4");
    c.num_labels = L;
  } else if (kind == "random") {
    c = random_scene_config(get_int("synth.H"), get_int("synth.W"), get_int("synth.N"), L,
                            get_int("synth.shapes"), get_u64("synth.seed"));
  } else {
    throw Error(ErrorCode::InvalidConfig, "synth.scene must be toy | random");
  }
  if (kind == "toy") {
    c.height = get_int("synth.H");
    c.width = get_int("synth.W");
    c.frames = get_int("synth.N");
  }
  c.tau = get_double("synth.tau");
  c.ir_noise = get_double("synth.ir_noise");
  c.seed = get_u64("synth.seed");
  return c;
}

}  // namespace tcpdm
