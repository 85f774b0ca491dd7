// tcr3: command-line front end for the tracker library.
//
//   synth  render synthetic clips to .tcr3 container files
//   train  fit a tracker on a directory of clips, write a checkpoint
//   infer  run a checkpoint over a clip, write a prediction file
//   eval   score a prediction file against a clip's ground truth
//   attn   render where a track token attends, as per-layer heatmap strips
//   sweep  robustness grids over temporal stride and clip length
//
// The TCR3_SEED environment variable supplies a default seed; an explicit
// --seed beats it, and it beats config files and built-in defaults.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tcr3/clipio.hpp"
#include "tcr3/configio.hpp"
#include "tcr3/image.hpp"
#include "tcr3/inference.hpp"
#include "tcr3/metrics.hpp"
#include "tcr3/model.hpp"
#include "tcr3/synthscene.hpp"
#include "tcr3/trainer.hpp"

namespace fs = std::filesystem;
using namespace tcr3;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* text = std::getenv("TCR3_SEED");
  if (text == nullptr || *text == '\0') return std::nullopt;
  std::uint64_t value = 0;
  const char* end = text + std::string_view(text).size();
  const auto [ptr, ec] = std::from_chars(text, end, value);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument(std::string("TCR3_SEED must be an unsigned integer, got '") +
                                text + "'");
  return value;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

std::vector<std::string> list_clip_files(const std::string& dir) {
  require(fs::is_directory(dir), "not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tcr3")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  return paths;
}

TrackClip load_clip_subsampled(const std::string& path, int stride, int length) {
  TrackClip clip = load_clip(path);
  if (stride != 1 || length > 0)
    clip = subsample_clip(clip, stride, length > 0 ? length : clip.frame_count());
  return clip;
}

// Checkpoints carry their scalar type in the parameter entries; dispatch the
// given callable on a model of the matching precision.
Dtype checkpoint_dtype(const TensorContainer& tc) {
  for (const TensorEntry& e : tc.entries())
    if (e.name != "config") return e.dtype;
  throw std::invalid_argument("checkpoint: no parameter entries");
}

template <typename Fn>
int with_checkpoint(const std::string& path, Fn&& fn) {
  const TensorContainer tc = TensorContainer::load(path);
  switch (checkpoint_dtype(tc)) {
    case Dtype::f32: {
      TrackerModel<float> model = checkpoint_from_container<float>(tc);
      return fn(model);
    }
    case Dtype::f64: {
      TrackerModel<double> model = checkpoint_from_container<double>(tc);
      return fn(model);
    }
    case Dtype::u8: break;
  }
  throw std::invalid_argument("checkpoint: parameters have an unsupported dtype");
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::string scene_file;
  int count = 8;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int width = 64;
  int height = 64;
  int frames = 12;
  int stride = 1;
  bool metric_units = false;
  double depth_sigma = 0.0;
  double rotation_sigma = 0.0;
  double translation_sigma = 0.0;
};

int cmd_synth(const SynthArgs& a) {
  std::uint64_t seed = a.seed;
  if (!a.seed_given)
    if (const auto env = env_seed()) seed = *env;

  std::vector<SceneSpec> specs;
  if (!a.scene_file.empty()) {
    // One description from disk, re-seeded per clip.
    SceneSpec base = scene_spec_from_json(read_text_file(a.scene_file));
    for (int i = 0; i < a.count; ++i) {
      SceneSpec spec = base;
      spec.seed = seed + static_cast<std::uint64_t>(i);
      specs.push_back(spec);
    }
  } else {
    specs = make_scene_library(a.count, seed, a.width, a.height, a.frames);
    for (SceneSpec& spec : specs) spec.metric_units = a.metric_units;
  }

  fs::create_directories(a.out_dir);
  const bool perturb =
      a.depth_sigma > 0.0 || a.rotation_sigma > 0.0 || a.translation_sigma > 0.0;
  for (int i = 0; i < a.count; ++i) {
    TrackClip clip = generate_clip(specs[static_cast<size_t>(i)], a.stride);
    clip.scene_json = scene_spec_to_json(specs[static_cast<size_t>(i)]);
    if (perturb) {
      PerturbSpec ps;
      ps.depth_sigma = a.depth_sigma;
      ps.rotation_sigma = a.rotation_sigma;
      ps.translation_sigma = a.translation_sigma;
      clip = perturb_geometry(clip, ps, specs[static_cast<size_t>(i)].seed);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04d.tcr3", i);
    save_clip(clip, (fs::path(a.out_dir) / name).string());
  }
  std::printf("wrote %d clips to %s\n", a.count, a.out_dir.c_str());
  return 0;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data_dir;
  std::string out_path;
  std::string model_config_file;
  std::string train_config_file;
  std::string log_path;
  bool f64 = false;
  // Overrides live in the parsed CLI11 options; see cmd_train.
  int layers = 0, dim = 0, heads = 0, patch = 0, channels = 0;
  int image_h = 0, image_w = 0, max_frames = 0, lora_rank = 0;
  bool no_anchor = false, no_rope_align = false, no_residual = false;
  int steps = 0, batch_size = 0;
  double lr = 0.0, weight_decay = 0.0, vis_weight = 0.0;
  bool mask_mse = false, freeze_codec = false, adapters_only = false;
  std::uint64_t seed = 0;
};

template <typename T>
int train_impl(const TrainArgs& a, const ModelConfig& mc, const TrainConfig& tc,
               const std::vector<TrackClip>& clips) {
  TrackerModel<T> model;
  model.init(mc, tc.seed);

  const std::string log_path = a.log_path.empty() ? a.out_path + ".log.jsonl" : a.log_path;
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot open " + log_path + " for writing");
  const int tick = std::max(1, tc.steps / 10);
  const auto on_step = [&](const TrainLogEntry& e) {
    nlohmann::json j;
    j["step"] = e.step;
    j["loss"] = e.loss;
    j["mse"] = e.mse;
    j["bce"] = e.bce;
    j["wall_ms"] = e.wall_ms;
    log << j.dump() << "\n";
    if (e.step % tick == 0 || e.step == tc.steps)
      std::fprintf(stderr, "step %d/%d loss %.6g\n", e.step, tc.steps, e.loss);
  };

  const std::vector<TrainLogEntry> history = train_model(model, clips, tc, on_step);
  save_checkpoint(model, a.out_path);
  if (history.empty())
    std::printf("wrote initialized checkpoint to %s\n", a.out_path.c_str());
  else
    std::printf("trained %d steps on %zu clips; loss %.6g -> %.6g\n", tc.steps,
                clips.size(), history.front().loss, history.back().loss);
  std::printf("checkpoint written to %s\n", a.out_path.c_str());
  return 0;
}

int cmd_train(const TrainArgs& a, const CLI::App* cmd) {
  ModelConfig mc;
  if (!a.model_config_file.empty())
    mc = model_config_from_json(read_text_file(a.model_config_file));
  const auto given = [cmd](const char* flag) { return cmd->count(flag) > 0; };
  if (given("--layers")) mc.layers = a.layers;
  if (given("--dim")) mc.dim = a.dim;
  if (given("--heads")) mc.heads = a.heads;
  if (given("--patch")) mc.patch = a.patch;
  if (given("--channels")) mc.channels = a.channels;
  if (given("--image-h")) mc.image_h = a.image_h;
  if (given("--image-w")) mc.image_w = a.image_w;
  if (given("--max-frames")) mc.max_frames = a.max_frames;
  if (given("--lora-rank")) mc.lora_rank = a.lora_rank;
  if (a.no_anchor) mc.flags.first_frame_anchoring = false;
  if (a.no_rope_align) mc.flags.temporal_rope_alignment = false;
  if (a.no_residual) mc.flags.residual_head = false;
  mc.validate();

  TrainConfig tc;
  if (!a.train_config_file.empty())
    tc = train_config_from_json(read_text_file(a.train_config_file));
  if (given("--steps")) tc.steps = a.steps;
  if (given("--batch-size")) tc.batch_size = a.batch_size;
  if (given("--lr")) tc.lr = a.lr;
  if (given("--weight-decay")) tc.weight_decay = a.weight_decay;
  if (given("--vis-weight")) tc.visibility_weight = a.vis_weight;
  if (a.mask_mse) tc.mask_mse_by_visibility = true;
  if (a.freeze_codec) tc.freeze_codec = true;
  if (a.adapters_only) tc.group = TrainGroup::kAdaptersProjections;
  if (const auto env = env_seed(); env && !given("--seed")) tc.seed = *env;
  if (given("--seed")) tc.seed = a.seed;
  tc.validate();

  const std::vector<std::string> files = list_clip_files(a.data_dir);
  require(!files.empty(), "train: no .tcr3 clips in " + a.data_dir);
  std::vector<TrackClip> clips;
  for (const std::string& f : files) {
    TrackClip clip = load_clip(f);
    require(clip.width == mc.image_w && clip.height == mc.image_h,
            "train: clip resolution in " + f + " does not match the model");
    require(clip.frame_count() <= mc.max_frames + 1,
            "train: clip " + f + " is longer than the per-pass capacity");
    clips.push_back(std::move(clip));
  }

  return a.f64 ? train_impl<double>(a, mc, tc, clips) : train_impl<float>(a, mc, tc, clips);
}

// --- infer --------------------------------------------------------------------

struct InferArgs {
  std::string model_path;
  std::string clip_path;
  std::string out_path;
  bool single_pass = false;
  bool no_anchor_identity = false;
  int stride = 1;
  int length = 0;
};

int cmd_infer(const InferArgs& a) {
  return with_checkpoint(a.model_path, [&](auto& model) {
    const TrackClip clip = load_clip_subsampled(a.clip_path, a.stride, a.length);
    PredictOptions opts;
    opts.anchor_identity = !a.no_anchor_identity;
    const PredictResult res = a.single_pass ? predict_clip(model, clip, opts)
                                            : predict_long_video(model, clip, opts);

    PredictionFile pred;
    pred.width = clip.width;
    pred.height = clip.height;
    pred.anchor_identity = opts.anchor_identity;
    pred.windowed = !a.single_pass && clip.frame_count() > model.cfg.max_frames + 1;
    pred.stats = res.stats;
    pred.track = res.track;
    pred.visibility = res.visibility;
    for (int j = 0; j < clip.frame_count(); ++j)
      pred.frame_indices.push_back(static_cast<double>(j) * a.stride);
    save_prediction(pred, a.out_path);
    std::printf("wrote prediction for %d frames to %s\n", clip.frame_count(),
                a.out_path.c_str());
    return 0;
  });
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string pred_path;
  std::string clip_path;
  std::string out_path;
  int query_stride = 1;
  bool include_occluded = false;
  double scene_scale = 0.0;
  int stride = 1;
  int length = 0;
};

int cmd_eval(const EvalArgs& a) {
  const TrackClip clip = load_clip_subsampled(a.clip_path, a.stride, a.length);
  const PredictionFile pred = load_prediction(a.pred_path);
  require(pred.width == clip.width && pred.height == clip.height &&
              pred.frame_count() == clip.frame_count(),
          "eval: prediction and clip dimensions differ");

  EvalOptions opts;
  opts.query_stride = a.query_stride;
  opts.include_occluded_in_location = a.include_occluded;
  opts.scene_scale = a.scene_scale;
  const EvalResult r = evaluate_tracking(pred.track, pred.visibility, clip, opts);
  const std::string json = eval_result_to_json(r);
  if (a.out_path.empty()) {
    std::printf("%s\n", json.c_str());
  } else {
    write_text_file(a.out_path, json + "\n");
    std::printf("aj %.10g apd3d %.10g oa %.10g pairs %lld\n", r.aj, r.apd3d, r.oa,
                static_cast<long long>(r.pairs_evaluated));
  }
  return 0;
}

// --- attn ---------------------------------------------------------------------

struct AttnArgs {
  std::string model_path;
  std::string clip_path;
  std::string out_dir;
  int x = -1;
  int y = -1;
  int frame = -1;
  int stride = 1;
  int length = 0;
};

template <typename T>
int attn_impl(const TrackerModel<T>& model, const AttnArgs& a) {
  const TrackClip clip = load_clip_subsampled(a.clip_path, a.stride, a.length);
  const ModelConfig& cfg = model.cfg;
  const int n_frames = clip.frame_count();
  const int x = a.x < 0 ? cfg.image_w / 2 : a.x;
  const int y = a.y < 0 ? cfg.image_h / 2 : a.y;
  const int frame = a.frame < 0 ? n_frames - 1 : a.frame;
  require(x >= 0 && x < cfg.image_w && y >= 0 && y < cfg.image_h,
          "attn: pixel outside the image");
  require(frame >= 0 && frame < n_frames, "attn: frame outside the clip");

  const Eigen::Index hw = static_cast<Eigen::Index>(cfg.latent_h()) * cfg.latent_w();
  const Eigen::Index n_geometry = static_cast<Eigen::Index>(n_frames) * hw;
  const Eigen::Index cell =
      static_cast<Eigen::Index>(y / cfg.patch) * cfg.latent_w() + x / cfg.patch;
  const Eigen::Index row = track_rows(n_geometry, n_frames, frame).first + cell;

  const AttentionTrace<T> trace = capture_attention(model, clip, {row});
  fs::create_directories(a.out_dir);

  // Head-averaged attention over the geometry tokens, one strip per layer
  // (frames left to right at latent resolution, upscaled to pixels).
  const auto strip = [&](const VecX<double>& geo) {
    std::vector<ImageRGB> panels;
    const double hi = geo.maxCoeff();
    for (int f = 0; f < n_frames; ++f) {
      const VecX<double> block = geo.segment(f * hw, hw);
      panels.push_back(upscale_nearest(
          heatmap_image(block, cfg.latent_w(), cfg.latent_h(), 0.0, hi), cfg.patch));
    }
    return hstack(panels);
  };

  nlohmann::json report;
  report["x"] = x;
  report["y"] = y;
  report["frame"] = frame;
  report["row"] = row;
  nlohmann::json layers = nlohmann::json::array();
  VecX<double> mean_geo = VecX<double>::Zero(n_geometry);
  for (size_t L = 0; L < trace.weights.size(); ++L) {
    VecX<double> geo = VecX<double>::Zero(n_geometry);
    for (const MatX<T>& head : trace.weights[L])
      geo += head.row(0).transpose().template cast<double>();
    geo /= static_cast<double>(trace.weights[L].size());
    mean_geo += geo;

    std::vector<double> mass(static_cast<size_t>(n_frames));
    int argmax = 0;
    for (int f = 0; f < n_frames; ++f) {
      mass[static_cast<size_t>(f)] = geo.segment(f * hw, hw).sum();
      if (mass[static_cast<size_t>(f)] > mass[static_cast<size_t>(argmax)]) argmax = f;
    }
    nlohmann::json jl;
    jl["layer"] = L;
    jl["frame_mass"] = mass;
    jl["argmax_frame"] = argmax;
    layers.push_back(jl);

    char name[32];
    std::snprintf(name, sizeof(name), "attn_layer_%02zu.ppm", L);
    write_ppm(strip(geo), (fs::path(a.out_dir) / name).string());
  }
  mean_geo /= static_cast<double>(trace.weights.size());

  std::vector<double> mean_mass(static_cast<size_t>(n_frames));
  int argmax = 0;
  for (int f = 0; f < n_frames; ++f) {
    mean_mass[static_cast<size_t>(f)] = mean_geo.segment(f * hw, hw).sum();
    if (mean_mass[static_cast<size_t>(f)] > mean_mass[static_cast<size_t>(argmax)]) argmax = f;
  }
  report["layers"] = layers;
  report["mean_frame_mass"] = mean_mass;
  report["argmax_frame"] = argmax;
  write_ppm(strip(mean_geo), (fs::path(a.out_dir) / "attn_mean.ppm").string());
  write_text_file((fs::path(a.out_dir) / "attn_report.json").string(), report.dump(2) + "\n");

  std::printf("track token (frame %d, pixel %d,%d): argmax geometry frame %d, mass %.4f\n",
              frame, x, y, argmax, mean_mass[static_cast<size_t>(argmax)]);
  std::printf("report written to %s\n", a.out_dir.c_str());
  return 0;
}

int cmd_attn(const AttnArgs& a) {
  return with_checkpoint(a.model_path, [&](auto& model) { return attn_impl(model, a); });
}

// --- sweep --------------------------------------------------------------------

struct SweepArgs {
  std::string model_path;
  std::string out_path;
  std::uint64_t seed = 7;
  bool seed_given = false;
  int scenes = 1;
  int frames = 12;  // clip length for the stride grid
  int query_stride = 1;
  std::vector<int> strides;
  std::vector<int> lengths;
};

template <typename T>
int sweep_impl(const TrackerModel<T>& model, const SweepArgs& a) {
  std::uint64_t seed = a.seed;
  if (!a.seed_given)
    if (const auto env = env_seed()) seed = *env;

  const ModelConfig& cfg = model.cfg;
  const std::vector<int> strides = a.strides.empty() ? sweep_stride_grid() : a.strides;
  const std::vector<int> lengths = a.lengths.empty() ? sweep_length_grid() : a.lengths;
  const std::vector<SceneSpec> library =
      make_scene_library(a.scenes, seed, cfg.image_w, cfg.image_h, a.frames);

  EvalOptions eopts;
  eopts.query_stride = a.query_stride;

  const auto cell = [&](int stride, int length) {
    std::vector<EvalResult> per_scene;
    for (const SceneSpec& base : library) {
      SceneSpec spec = base;
      spec.frames = length;
      const TrackClip clip = generate_clip(spec, stride);
      const PredictResult res = predict_long_video(model, clip);
      per_scene.push_back(evaluate_tracking(res.track, res.visibility, clip, eopts));
    }
    return mean_results(per_scene);
  };

  std::vector<SweepRow> rows;
  for (const int s : strides) {
    SweepRow row;
    row.mode = "stride";
    row.stride = s;
    row.length = a.frames;
    row.result = cell(s, a.frames);
    rows.push_back(std::move(row));
    std::fprintf(stderr, "stride %d done\n", s);
  }
  for (const int len : lengths) {
    SweepRow row;
    row.mode = "length";
    row.stride = 1;
    row.length = len;
    row.result = cell(1, len);
    rows.push_back(std::move(row));
    std::fprintf(stderr, "length %d done\n", len);
  }

  const std::string csv = sweep_csv(rows);
  if (a.out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_file(a.out_path, csv);
    std::printf("wrote %zu sweep rows to %s\n", rows.size(), a.out_path.c_str());
  }
  return 0;
}

int cmd_sweep(const SweepArgs& a) {
  return with_checkpoint(a.model_path, [&](auto& model) { return sweep_impl(model, a); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference-anchored dense 3D tracker"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "render synthetic clips");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--count", synth.count, "number of clips");
  synth_cmd->add_option("--seed", synth.seed, "base seed");
  synth_cmd->add_option("--scene", synth.scene_file, "scene description JSON to render");
  synth_cmd->add_option("--width", synth.width, "image width");
  synth_cmd->add_option("--height", synth.height, "image height");
  synth_cmd->add_option("--frames", synth.frames, "frames per clip");
  synth_cmd->add_option("--stride", synth.stride, "temporal stride");
  synth_cmd->add_flag("--metric-units", synth.metric_units, "declare metric depth units");
  synth_cmd->add_option("--depth-sigma", synth.depth_sigma, "relative depth noise");
  synth_cmd->add_option("--rotation-sigma", synth.rotation_sigma, "camera rotation noise, radians");
  synth_cmd->add_option("--translation-sigma", synth.translation_sigma,
                        "camera translation noise, world units");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a tracker, write a checkpoint");
  train_cmd->add_option("--data", train.data_dir, "directory of .tcr3 clips")->required();
  train_cmd->add_option("--out", train.out_path, "checkpoint path")->required();
  train_cmd->add_option("--config", train.model_config_file, "model config JSON");
  train_cmd->add_option("--train-config", train.train_config_file, "training config JSON");
  train_cmd->add_option("--log", train.log_path, "training log path (JSON lines)");
  train_cmd->add_flag("--f64", train.f64, "train in double precision");
  train_cmd->add_option("--layers", train.layers, "transformer depth");
  train_cmd->add_option("--dim", train.dim, "transformer width");
  train_cmd->add_option("--heads", train.heads, "attention heads");
  train_cmd->add_option("--patch", train.patch, "patch edge");
  train_cmd->add_option("--channels", train.channels, "latent channels per modality");
  train_cmd->add_option("--image-h", train.image_h, "image height");
  train_cmd->add_option("--image-w", train.image_w, "image width");
  train_cmd->add_option("--max-frames", train.max_frames, "frames per pass");
  train_cmd->add_option("--lora-rank", train.lora_rank, "adapter rank (0 disables)");
  train_cmd->add_flag("--no-anchor", train.no_anchor,
                      "ablation: per-frame track latents instead of the reference");
  train_cmd->add_flag("--no-rope-align", train.no_rope_align,
                      "ablation: track tokens keep the reference timestamp");
  train_cmd->add_flag("--no-residual", train.no_residual,
                      "ablation: regress absolute coordinates");
  train_cmd->add_option("--steps", train.steps, "optimizer steps");
  train_cmd->add_option("--batch-size", train.batch_size, "clips per step");
  train_cmd->add_option("--lr", train.lr, "learning rate");
  train_cmd->add_option("--weight-decay", train.weight_decay, "decoupled weight decay");
  train_cmd->add_option("--vis-weight", train.vis_weight, "visibility loss weight");
  train_cmd->add_flag("--mask-mse", train.mask_mse, "mask coordinate loss by visibility");
  train_cmd->add_flag("--freeze-codec", train.freeze_codec, "do not train the patch codec");
  train_cmd->add_flag("--adapters-only", train.adapters_only,
                      "train adapters and projections only");
  train_cmd->add_option("--seed", train.seed, "training seed");

  InferArgs infer;
  CLI::App* infer_cmd = app.add_subcommand("infer", "run a checkpoint over a clip");
  infer_cmd->add_option("--model", infer.model_path, "checkpoint path")->required();
  infer_cmd->add_option("--clip", infer.clip_path, "clip path")->required();
  infer_cmd->add_option("--out", infer.out_path, "prediction path")->required();
  infer_cmd->add_flag("--single-pass", infer.single_pass,
                      "refuse windowing; clip must fit one pass");
  infer_cmd->add_flag("--no-anchor-identity", infer.no_anchor_identity,
                      "emit the model's reference-frame output instead of the identity");
  infer_cmd->add_option("--stride", infer.stride, "subsample the clip temporally first");
  infer_cmd->add_option("--length", infer.length, "truncate the clip first (0 keeps all)");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a prediction against ground truth");
  eval_cmd->add_option("--pred", eval.pred_path, "prediction path")->required();
  eval_cmd->add_option("--clip", eval.clip_path, "clip path")->required();
  eval_cmd->add_option("--out", eval.out_path, "result JSON path (default: print)");
  eval_cmd->add_option("--query-stride", eval.query_stride, "query pixel grid stride");
  eval_cmd->add_flag("--include-occluded", eval.include_occluded,
                     "count occluded pairs in the location metrics");
  eval_cmd->add_option("--scene-scale", eval.scene_scale,
                       "threshold scale override (0 derives it)");
  eval_cmd->add_option("--stride", eval.stride, "subsample the clip temporally first");
  eval_cmd->add_option("--length", eval.length, "truncate the clip first (0 keeps all)");

  AttnArgs attn;
  CLI::App* attn_cmd = app.add_subcommand("attn", "attention heatmaps for one track token");
  attn_cmd->add_option("--model", attn.model_path, "checkpoint path")->required();
  attn_cmd->add_option("--clip", attn.clip_path, "clip path")->required();
  attn_cmd->add_option("--out", attn.out_dir, "output directory")->required();
  attn_cmd->add_option("--x", attn.x, "pixel x (default: center)");
  attn_cmd->add_option("--y", attn.y, "pixel y (default: center)");
  attn_cmd->add_option("--frame", attn.frame, "frame of the track token (default: last)");
  attn_cmd->add_option("--stride", attn.stride, "subsample the clip temporally first");
  attn_cmd->add_option("--length", attn.length, "truncate the clip first (0 keeps all)");

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "stride and length robustness grids");
  sweep_cmd->add_option("--model", sweep.model_path, "checkpoint path")->required();
  sweep_cmd->add_option("--out", sweep.out_path, "CSV path (default: print)");
  sweep_cmd->add_option("--seed", sweep.seed, "scene seed");
  sweep_cmd->add_option("--scenes", sweep.scenes, "scenes averaged per cell");
  sweep_cmd->add_option("--frames", sweep.frames, "clip length for the stride grid");
  sweep_cmd->add_option("--query-stride", sweep.query_stride, "query pixel grid stride");
  sweep_cmd->add_option("--strides", sweep.strides, "stride grid override")->delimiter(',');
  sweep_cmd->add_option("--lengths", sweep.lengths, "length grid override")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      synth.seed_given = synth_cmd->count("--seed") > 0;
      return cmd_synth(synth);
    }
    if (*train_cmd) return cmd_train(train, train_cmd);
    if (*infer_cmd) return cmd_infer(infer);
    if (*eval_cmd) return cmd_eval(eval);
    if (*attn_cmd) return cmd_attn(attn);
    if (*sweep_cmd) {
      sweep.seed_given = sweep_cmd->count("--seed") > 0;
      return cmd_sweep(sweep);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tcr3: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
