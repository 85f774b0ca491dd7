#pragma once

// Inference: single-pass prediction for short clips and interleaved windowed
// prediction for videos longer than the model's per-pass capacity.
//
// A video of L frames with per-pass capacity F (plus the always-included
// reference frame) is covered by s = ceil((L-1)/F) passes; frame i >= 1 goes
// to pass (i - 1) mod s, so consecutive frames land in different passes and
// every pass sees frames spread across the whole video rather than one
// contiguous chunk. Every pass prepends frame 0, uses consecutive rotary
// time indices 0, 1, ..., and shares one set of normalization statistics
// computed over all L frames, so predicted residuals from different passes
// denormalize identically.

#include <string>
#include <vector>

#include "tcr3/geometry.hpp"
#include "tcr3/model.hpp"
#include "tcr3/synthscene.hpp"

namespace tcr3 {

struct WindowPlan {
  int length = 0;      // total frames L
  int max_frames = 0;  // per-pass capacity F, excluding the reference
  int groups = 0;      // number of passes s
  std::vector<std::vector<int>> frames;  // per pass: covered frame indices (ascending)
};

inline WindowPlan plan_windows(int length, int max_frames) {
  require(length >= 1, "plan_windows: need at least one frame");
  require(max_frames >= 1, "plan_windows: per-pass capacity must be positive");
  WindowPlan plan;
  plan.length = length;
  plan.max_frames = max_frames;
  if (length == 1) return plan;  // only the reference frame; nothing to plan
  plan.groups = (length - 1 + max_frames - 1) / max_frames;
  plan.frames.resize(plan.groups);
  for (int i = 1; i < length; ++i)
    plan.frames[(i - 1) % plan.groups].push_back(i);
  return plan;
}

struct PredictOptions {
  // Keep the reference frame's prediction pinned to its input pointmap
  // (an exact identity); the decoded reference residual is still reported.
  bool anchor_identity = true;
  // Normalization statistics to use instead of computing them from the
  // clip's reconstruction pointmaps.
  const NormalizationStats* stats = nullptr;
};

struct PredictResult {
  NormalizationStats stats;
  std::vector<MatX3<double>> track;      // per frame: recovered P_0(t_j), world units
  std::vector<VecX<double>> visibility;  // per frame: probabilities in (0,1)
  std::vector<MatX3<double>> delta_raw;  // per frame: decoded residual, normalized space
};

namespace detail {

// One forward pass over the given frames (frame_ids[0] must be 0). Writes
// results into the per-original-frame slots; the reference frame's slot is
// written only when write_reference is set (the first pass of a windowed
// run).
template <typename T>
void predict_pass(const TrackerModel<T>& model, const TrackClip& clip,
                  const std::vector<int>& frame_ids,
                  const NormalizationStats& stats, const PredictOptions& opts,
                  bool write_reference, PredictResult* result) {
  const ModelConfig& cfg = model.cfg;
  const Vec3<T> mean = stats.mean.template cast<T>();
  const T scale = static_cast<T>(stats.scale);

  std::vector<MatX<T>> frames, norm_pm;
  std::vector<double> times;
  for (size_t p = 0; p < frame_ids.size(); ++p) {
    const int j = frame_ids[p];
    frames.push_back(clip.frames[j].template cast<T>());
    norm_pm.push_back(normalize_points<T>(
        clip.recon[j].points.template cast<T>(), mean, scale));
    times.push_back(static_cast<double>(p));
  }

  PipelineOutput<T> out = model_forward<T>(model, frames, norm_pm, times, nullptr);

  for (size_t p = 0; p < frame_ids.size(); ++p) {
    const int j = frame_ids[p];
    if (j == 0 && !write_reference) continue;
    MatX3<double> delta(out.delta[p].rows(), 3);
    delta = out.delta[p].template cast<double>();
    result->delta_raw[j] = delta;

    MatX3<double> recovered;
    if (cfg.flags.residual_head) {
      // P_0(t_j) = P_0(t_0) + scale * delta (the mean cancels in the
      // residual, so only the scale re-enters).
      recovered = clip.recon[0].points + stats.scale * delta;
    } else {
      recovered = denormalize_points<double>(delta, stats.mean, stats.scale);
    }
    if (j == 0 && opts.anchor_identity) recovered = clip.recon[0].points;
    if (!recovered.allFinite())
      throw std::runtime_error("predict: non-finite prediction at frame " +
                               std::to_string(j));
    result->track[j] = std::move(recovered);

    VecX<double> vis(out.vis_prob[p].rows());
    for (Eigen::Index i = 0; i < vis.rows(); ++i)
      vis(i) = static_cast<double>(out.vis_prob[p](i, 0));
    result->visibility[j] = std::move(vis);
  }
}

inline void check_clip_against_config(const TrackClip& clip, const ModelConfig& cfg) {
  require(clip.width == cfg.image_w && clip.height == cfg.image_h,
          "predict: clip resolution does not match the model");
  require(clip.frame_count() >= 1, "predict: empty clip");
}

}  // namespace detail

// Single-pass prediction for a clip with at most 1 + max_frames frames.
template <typename T>
PredictResult predict_clip(const TrackerModel<T>& model, const TrackClip& clip,
                           const PredictOptions& opts = {}) {
  detail::check_clip_against_config(clip, model.cfg);
  require(clip.frame_count() <= model.cfg.max_frames + 1,
          "predict_clip: clip longer than the model's per-pass capacity");

  PredictResult result;
  result.stats =
      opts.stats ? *opts.stats : compute_normalization(clip.recon, clip.depths);
  const int n = clip.frame_count();
  result.track.resize(n);
  result.visibility.resize(n);
  result.delta_raw.resize(n);

  std::vector<int> frame_ids(n);
  for (int j = 0; j < n; ++j) frame_ids[j] = j;
  detail::predict_pass(model, clip, frame_ids, result.stats, opts,
                       /*write_reference=*/true, &result);
  return result;
}

// Windowed prediction for arbitrarily long clips. Falls back to a single
// pass when the clip fits; otherwise runs the interleaved window plan with
// shared normalization statistics, taking the reference frame's outputs from
// the first pass.
template <typename T>
PredictResult predict_long_video(const TrackerModel<T>& model, const TrackClip& clip,
                                 const PredictOptions& opts = {}) {
  detail::check_clip_against_config(clip, model.cfg);
  const int length = clip.frame_count();
  if (length <= model.cfg.max_frames + 1) return predict_clip(model, clip, opts);

  PredictResult result;
  result.stats =
      opts.stats ? *opts.stats : compute_normalization(clip.recon, clip.depths);
  result.track.resize(length);
  result.visibility.resize(length);
  result.delta_raw.resize(length);

  const WindowPlan plan = plan_windows(length, model.cfg.max_frames);
  for (int g = 0; g < plan.groups; ++g) {
    std::vector<int> frame_ids = {0};
    frame_ids.insert(frame_ids.end(), plan.frames[g].begin(), plan.frames[g].end());
    detail::predict_pass(model, clip, frame_ids, result.stats, opts,
                         /*write_reference=*/g == 0, &result);
  }
  return result;
}

// Runs one forward pass over a clip that fits the per-pass capacity and
// records, for each requested track-stream row, the attention mass it places
// on the geometry tokens (per layer and head, renormalized to sum to one).
template <typename T>
AttentionTrace<T> capture_attention(const TrackerModel<T>& model,
                                    const TrackClip& clip,
                                    const std::vector<Eigen::Index>& rows,
                                    const PredictOptions& opts = {}) {
  detail::check_clip_against_config(clip, model.cfg);
  require(clip.frame_count() <= model.cfg.max_frames + 1,
          "capture_attention: clip longer than the model's per-pass capacity");

  const NormalizationStats stats =
      opts.stats ? *opts.stats : compute_normalization(clip.recon, clip.depths);
  const Vec3<T> mean = stats.mean.template cast<T>();
  const T scale = static_cast<T>(stats.scale);

  std::vector<MatX<T>> frames, norm_pm;
  std::vector<double> times;
  for (int j = 0; j < clip.frame_count(); ++j) {
    frames.push_back(clip.frames[j].template cast<T>());
    norm_pm.push_back(normalize_points<T>(
        clip.recon[j].points.template cast<T>(), mean, scale));
    times.push_back(static_cast<double>(j));
  }

  const TraceRequest req{rows};
  AttentionTrace<T> trace;
  model_forward<T>(model, frames, norm_pm, times, nullptr, &req, &trace);
  return trace;
}

}  // namespace tcr3
