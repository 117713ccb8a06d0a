#include "tcpdm/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "tcpdm/container.hpp"
#include "tcpdm/image_io.hpp"

namespace fs = std::filesystem;

namespace tcpdm {

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key,
                        const fs::path& where) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorCode::IoError, where.string() + " lacks '" + key + "'");
  return it->second;
}

}  // namespace

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void write_manifest(const fs::path& path, const std::map<std::string, std::string>& kv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

void save_checkpoint(const fs::path& dir, const DenoiserParams& params, const OptimizerState& opt) {
  const auto& c = params.config;
  const std::map<std::string, std::string> kv = {
      {"format", "tcpdm-checkpoint-1"},
      {"patch_size", std::to_string(c.patch_size)},
      {"num_labels", std::to_string(c.num_labels)},
      {"ir_replicate_3", c.ir_replicate_3 ? "true" : "false"},
      {"base_width", std::to_string(c.base_width)},
      {"depth", std::to_string(c.depth)},
      {"time_embed_dim", std::to_string(c.time_embed_dim)},
      {"use_attention", c.use_attention ? "true" : "false"},
      {"num_groups", std::to_string(c.num_groups)},
      {"step", std::to_string(opt.step)},
      {"lr", exact(opt.lr)},
      {"beta1", exact(opt.beta1)},
      {"beta2", exact(opt.beta2)},
      {"eps", exact(opt.eps)},
  };
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_manifest(tmp / "manifest.txt", kv);
  write_tensor(tmp / "params.tct", to_raw(params.params));
  write_tensor(tmp / "ema.tct", to_raw(params.ema));
  write_tensor(tmp / "adam_m.tct", to_raw(opt.m));
  write_tensor(tmp / "adam_v.tct", to_raw(opt.v));
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const auto mpath = dir / "manifest.txt";
  const auto kv = read_manifest(mpath);
  if (need(kv, "format", mpath) != "tcpdm-checkpoint-1") {
    throw Error(ErrorCode::IoError, "unknown checkpoint format in " + mpath.string());
  }
  Checkpoint ck;
  auto& c = ck.params.config;
  c.patch_size = std::stoi(need(kv, "patch_size", mpath));
  c.num_labels = std::stoi(need(kv, "num_labels", mpath));
  c.ir_replicate_3 = need(kv, "ir_replicate_3", mpath) == "true";
  c.base_width = std::stoi(need(kv, "base_width", mpath));
  c.depth = std::stoi(need(kv, "depth", mpath));
  c.time_embed_dim = std::stoi(need(kv, "time_embed_dim", mpath));
  c.use_attention = need(kv, "use_attention", mpath) == "true";
  c.num_groups = std::stoi(need(kv, "num_groups", mpath));
  c.validate();
  ck.params.params = vectorf_from_raw(read_tensor(dir / "params.tct"));
  ck.params.ema = vectorf_from_raw(read_tensor(dir / "ema.tct"));
  ck.opt.m = vectorf_from_raw(read_tensor(dir / "adam_m.tct"));
  ck.opt.v = vectorf_from_raw(read_tensor(dir / "adam_v.tct"));
  ck.opt.step = std::stol(need(kv, "step", mpath));
  ck.opt.lr = std::stod(need(kv, "lr", mpath));
  ck.opt.beta1 = std::stod(need(kv, "beta1", mpath));
  ck.opt.beta2 = std::stod(need(kv, "beta2", mpath));
  ck.opt.eps = std::stod(need(kv, "eps", mpath));
  const auto n = UNet<float>(c).num_params();
  if (ck.params.params.size() != n || ck.params.ema.size() != n || ck.opt.m.size() != n ||
      ck.opt.v.size() != n) {
    throw Error(ErrorCode::ConfigMismatch, "checkpoint tensors do not match its architecture");
  }
  return ck;
}

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu.%s", index, ext);
  return buf;
}

std::vector<TrainingFrame> Dataset::training_frames() const {
  std::vector<TrainingFrame> out;
  for (int i = 0; i < frames; ++i) out.push_back({vis[i], ir[i], logits[i]});
  return out;
}

void write_dataset(const fs::path& dir, const SyntheticScene& scene, int num_labels) {
  for (const char* sub : {"ir", "vis", "logits", "flow", "masks"}) fs::create_directories(dir / sub);
  const std::size_t N = scene.vis.size();
  for (std::size_t i = 0; i < N; ++i) {
    write_png(dir / "ir" / frame_name(i, "png"), from_model_range(scene.ir[i]));
    write_png(dir / "vis" / frame_name(i, "png"), from_model_range(scene.vis[i]));
    write_tensor(dir / "logits" / frame_name(i, "tct"), to_raw(scene.logits[i]));
    write_tensor(dir / "masks" / frame_name(i, "tct"), to_raw(scene.masks[i]));
  }
  for (std::size_t i = 0; i < scene.flows.size(); ++i) {
    write_tensor(dir / "flow" / frame_name(i, "tct"), to_raw(scene.flows[i]));
  }
  write_manifest(dir / "manifest.txt", {{"H", std::to_string(scene.vis.front().height())},
                                        {"W", std::to_string(scene.vis.front().width())},
                                        {"N", std::to_string(N)},
                                        {"L", std::to_string(num_labels)}});
}

std::vector<FrameTensor> load_png_frames(const fs::path& dir) {
  std::vector<FrameTensor> frames;
  for (std::size_t i = 0; fs::exists(dir / frame_name(i, "png")); ++i) {
    frames.push_back(to_model_range(read_png(dir / frame_name(i, "png"))));
  }
  return frames;
}

std::vector<FlowField> load_flows(const fs::path& dir) {
  std::vector<FlowField> flows;
  for (std::size_t i = 0; fs::exists(dir / frame_name(i, "tct")); ++i) {
    flows.push_back(read_frame(dir / frame_name(i, "tct")));
  }
  return flows;
}

Dataset load_dataset(const fs::path& dir) {
  const auto mpath = dir / "manifest.txt";
  const auto kv = read_manifest(mpath);
  Dataset d;
  d.height = std::stoi(need(kv, "H", mpath));
  d.width = std::stoi(need(kv, "W", mpath));
  d.frames = std::stoi(need(kv, "N", mpath));
  d.num_labels = std::stoi(need(kv, "L", mpath));
  for (int i = 0; i < d.frames; ++i) {
    d.ir.push_back(to_model_range(read_png(dir / "ir" / frame_name(i, "png"))));
    d.vis.push_back(to_model_range(read_png(dir / "vis" / frame_name(i, "png"))));
    d.logits.push_back(read_frame(dir / "logits" / frame_name(i, "tct")));
    if (i + 1 < d.frames) d.flows.push_back(read_frame(dir / "flow" / frame_name(i, "tct")));
    const auto& ir = d.ir.back();
    if (ir.height() != d.height || ir.width() != d.width || ir.channels() != 1 ||
        d.vis.back().channels() != 3 || d.logits.back().channels() != d.num_labels) {
      throw Error(ErrorCode::ShapeMismatch, "dataset frame " + std::to_string(i) +
                                                " disagrees with manifest");
    }
  }
  return d;
}

}  // namespace tcpdm
