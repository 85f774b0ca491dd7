#pragma once

// Hand-written training loop: the tracking loss (residual MSE plus weighted
// visibility BCE), AdamW, deterministic batch sampling, and a finite
// difference gradient checker that exercises the entire pipeline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "tcr3/config.hpp"
#include "tcr3/geometry.hpp"
#include "tcr3/model.hpp"
#include "tcr3/rng.hpp"
#include "tcr3/synthscene.hpp"

namespace tcr3 {

// --- Loss ---------------------------------------------------------------

struct LossTerms {
  double total = 0.0;
  double mse = 0.0;
  double bce = 0.0;
};

// Probabilities are clamped away from {0, 1} before the logs so saturated
// predictions yield a large finite loss instead of infinity. The gradient is
// taken w.r.t. the logit as (p - y), which stays exact and bounded without
// the clamp.
inline constexpr double kBceClamp = 1e-7;

// Tracking loss over one pass: MSE over all residual coordinates (all
// frames, reference included) plus vis_weight times the mean visibility BCE.
// When mask_mse is set, pixels with target visibility 0 drop out of the MSE
// (weighted mean over visible pixels). Optionally emits upstream gradients
// for model_backward.
template <typename T>
LossTerms tracking_loss(const PipelineOutput<T>& out,
                        const std::vector<MatX<T>>& target_delta,
                        const std::vector<MatX<T>>& target_vis, double vis_weight,
                        bool mask_mse,
                        std::type_identity_t<std::vector<MatX<T>>>* d_delta,
                        std::type_identity_t<std::vector<MatX<T>>>* d_vis_logit) {
  const int n = static_cast<int>(out.delta.size());
  require(static_cast<int>(target_delta.size()) == n &&
              static_cast<int>(target_vis.size()) == n,
          "tracking_loss: one target per frame required");

  // Normalizers first, so gradients can be scaled in one sweep.
  double mse_weight_total = 0.0;
  double vis_count_total = 0.0;
  for (int j = 0; j < n; ++j) {
    mse_weight_total +=
        mask_mse ? static_cast<double>(target_vis[j].sum())
                 : static_cast<double>(target_vis[j].rows());
    vis_count_total += static_cast<double>(target_vis[j].rows());
  }
  const double mse_denom = 3.0 * std::max(mse_weight_total, 1.0);

  if (d_delta) d_delta->assign(n, MatX<T>());
  if (d_vis_logit) d_vis_logit->assign(n, MatX<T>());

  LossTerms terms;
  for (int j = 0; j < n; ++j) {
    MatX<T> diff = out.delta[j] - target_delta[j];
    if (mask_mse) {
      for (Eigen::Index i = 0; i < diff.rows(); ++i)
        if (target_vis[j](i, 0) == T(0)) diff.row(i).setZero();
    }
    terms.mse += static_cast<double>(diff.squaredNorm()) / mse_denom;
    if (d_delta)
      (*d_delta)[j] = diff * static_cast<T>(2.0 / mse_denom);

    if (d_vis_logit) (*d_vis_logit)[j].setZero(target_vis[j].rows(), 1);
    for (Eigen::Index i = 0; i < target_vis[j].rows(); ++i) {
      const double y = static_cast<double>(target_vis[j](i, 0));
      const double p = std::min(1.0 - kBceClamp,
                                std::max(kBceClamp,
                                         static_cast<double>(out.vis_prob[j](i, 0))));
      terms.bce += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) / vis_count_total;
      if (d_vis_logit)
        (*d_vis_logit)[j](i, 0) = static_cast<T>(
            vis_weight * (static_cast<double>(out.vis_prob[j](i, 0)) - y) /
            vis_count_total);
    }
  }
  terms.total = terms.mse + vis_weight * terms.bce;
  return terms;
}

// --- Optimizer ------------------------------------------------------------

// AdamW with decoupled weight decay, applied uniformly to the parameters it
// is given. Moments are kept in the training scalar type.
template <typename T>
struct AdamW {
  struct Slot {
    MatX<T> m, v;
  };
  std::vector<Slot> slots;
  long steps_taken = 0;

  void init(const std::vector<Param<T>*>& params) {
    slots.clear();
    slots.reserve(params.size());
    for (const Param<T>* p : params) {
      Slot s;
      s.m.setZero(p->value.rows(), p->value.cols());
      s.v.setZero(p->value.rows(), p->value.cols());
      slots.push_back(std::move(s));
    }
    steps_taken = 0;
  }

  void step(const std::vector<Param<T>*>& params, const TrainConfig& tc) {
    require(slots.size() == params.size(), "adamw: parameter set changed");
    ++steps_taken;
    const T b1 = static_cast<T>(tc.beta1), b2 = static_cast<T>(tc.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(tc.beta1, steps_taken));
    const T bc2 = static_cast<T>(1.0 - std::pow(tc.beta2, steps_taken));
    const T lr = static_cast<T>(tc.lr), wd = static_cast<T>(tc.weight_decay);
    const T eps = static_cast<T>(tc.adam_eps);
    for (size_t i = 0; i < params.size(); ++i) {
      Param<T>& p = *params[i];
      Slot& s = slots[i];
      s.m = b1 * s.m + (T(1) - b1) * p.grad;
      s.v = b2 * s.v + (T(1) - b2) * p.grad.cwiseProduct(p.grad);
      for (Eigen::Index k = 0; k < p.value.size(); ++k) {
        const T mhat = s.m.data()[k] / bc1;
        const T vhat = s.v.data()[k] / bc2;
        p.value.data()[k] -=
            lr * (mhat / (std::sqrt(vhat) + eps) + wd * p.value.data()[k]);
      }
    }
  }
};

// Parameters the optimizer updates under a training config: the full set
// (minus the codec when frozen), or only adapters and projections.
template <typename T>
std::vector<Param<T>*> trainable_params(TrackerModel<T>& model,
                                        const TrainConfig& tc) {
  std::vector<Param<T>*> all, selected;
  model.collect(&all);
  for (Param<T>* p : all) {
    const bool is_codec = p->kind == ParamKind::kCodec;
    bool take = false;
    switch (tc.group) {
      case TrainGroup::kAll:
        take = !(is_codec && tc.freeze_codec);
        break;
      case TrainGroup::kAdaptersProjections:
        take = p->kind == ParamKind::kAdapter || p->kind == ParamKind::kProjection;
        break;
    }
    if (take) selected.push_back(p);
  }
  return selected;
}

// --- Sample preparation ------------------------------------------------------

// One clip converted to model inputs and loss targets.
template <typename T>
struct TrainSample {
  std::vector<MatX<T>> frames;        // RGB, (H*W) x 3
  std::vector<MatX<T>> norm_pm;       // normalized reconstruction pointmaps
  std::vector<double> times;          // rotary temporal indices (0, 1, ...)
  std::vector<MatX<T>> target_delta;  // normalized residuals (or absolute
                                      // normalized positions without the
                                      // residual head)
  std::vector<MatX<T>> target_vis;    // {0,1}, (H*W) x 1
  NormalizationStats stats;
};

// Normalization statistics come from the reconstruction pointmaps — the
// same statistics inference has access to — and are reused for the targets
// so predicted residuals denormalize consistently.
template <typename T>
TrainSample<T> prepare_sample(const TrackClip& clip, const AblationFlags& flags) {
  TrainSample<T> sample;
  sample.stats = compute_normalization(clip.recon, clip.depths);
  const Vec3<T> mean = sample.stats.mean.template cast<T>();
  const T scale = static_cast<T>(sample.stats.scale);

  const int n = clip.frame_count();
  MatX3<T> ref_norm = normalize_points<T>(
      clip.gt_track[0].points.template cast<T>(), mean, scale);
  for (int j = 0; j < n; ++j) {
    sample.frames.push_back(clip.frames[j].template cast<T>());
    sample.norm_pm.push_back(normalize_points<T>(
        clip.recon[j].points.template cast<T>(), mean, scale));
    sample.times.push_back(static_cast<double>(j));

    MatX3<T> tj_norm = normalize_points<T>(
        clip.gt_track[j].points.template cast<T>(), mean, scale);
    sample.target_delta.push_back(
        flags.residual_head ? MatX<T>(track_residual<T>(tj_norm, ref_norm))
                            : MatX<T>(tj_norm));

    MatX<T> vis(clip.gt_vis[j].rows(), 1);
    for (Eigen::Index i = 0; i < vis.rows(); ++i)
      vis(i, 0) = static_cast<T>(clip.gt_vis[j](i));
    sample.target_vis.push_back(std::move(vis));
  }
  return sample;
}

// --- Training loop ------------------------------------------------------------

struct TrainLogEntry {
  int step = 0;  // 1-based
  double loss = 0.0;
  double mse = 0.0;
  double bce = 0.0;
  double wall_ms = 0.0;
};

// Forward + loss + backward for one sample; gradients are accumulated scaled
// by `grad_scale` (1 / batch_size for batch averaging).
template <typename T>
LossTerms accumulate_sample_grads(TrackerModel<T>& model, const TrainSample<T>& sample,
                                  const TrainConfig& tc, double grad_scale) {
  PipelineCache<T> cache;
  PipelineOutput<T> out =
      model_forward(model, sample.frames, sample.norm_pm, sample.times, &cache);
  std::vector<MatX<T>> d_delta, d_vis_logit;
  LossTerms terms =
      tracking_loss(out, sample.target_delta, sample.target_vis,
                    tc.visibility_weight, tc.mask_mse_by_visibility, &d_delta,
                    &d_vis_logit);
  if (grad_scale != 1.0) {
    for (auto& g : d_delta) g *= static_cast<T>(grad_scale);
    for (auto& g : d_vis_logit) g *= static_cast<T>(grad_scale);
  }
  model_backward(model, d_delta, d_vis_logit, cache);
  return terms;
}

// Runs tc.steps optimizer steps over the given clips with deterministic,
// seed-driven batch sampling. Returns one log entry per step and invokes
// on_step (when given) as each completes.
template <typename T>
std::vector<TrainLogEntry> train_model(
    TrackerModel<T>& model, const std::vector<TrackClip>& clips,
    const TrainConfig& tc,
    const std::function<void(const TrainLogEntry&)>& on_step = nullptr) {
  tc.validate();
  require(!clips.empty(), "train_model: no clips");

  std::vector<TrainSample<T>> samples;
  samples.reserve(clips.size());
  for (const auto& clip : clips)
    samples.push_back(prepare_sample<T>(clip, model.cfg.flags));

  std::vector<Param<T>*> all_params;
  model.collect(&all_params);
  std::vector<Param<T>*> trainables = trainable_params(model, tc);
  AdamW<T> opt;
  opt.init(trainables);

  Rng rng(tc.seed);
  std::vector<TrainLogEntry> log;
  log.reserve(tc.steps);
  const auto t0 = std::chrono::steady_clock::now();
  for (int step = 1; step <= tc.steps; ++step) {
    for (Param<T>* p : all_params) p->zero_grad();
    LossTerms mean_terms;
    for (int b = 0; b < tc.batch_size; ++b) {
      const auto& sample =
          samples[rng.uniform_int(static_cast<uint64_t>(samples.size()))];
      LossTerms terms =
          accumulate_sample_grads(model, sample, tc, 1.0 / tc.batch_size);
      mean_terms.total += terms.total / tc.batch_size;
      mean_terms.mse += terms.mse / tc.batch_size;
      mean_terms.bce += terms.bce / tc.batch_size;
    }
    opt.step(trainables, tc);

    TrainLogEntry entry;
    entry.step = step;
    entry.loss = mean_terms.total;
    entry.mse = mean_terms.mse;
    entry.bce = mean_terms.bce;
    entry.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    if (on_step) on_step(entry);
    log.push_back(entry);
  }
  return log;
}

// --- Gradient verification -----------------------------------------------------

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int entries_checked = 0;
};

// Verifies the analytic gradient of the full pipeline loss against central
// finite differences, sampling min(samples_per_block, size) entries from
// every parameter tensor. Meant to run with T = double.
template <typename T>
GradCheckResult grad_check(TrackerModel<T>& model, const TrainSample<T>& sample,
                           const TrainConfig& tc, int samples_per_block,
                           double eps, uint64_t seed) {
  auto loss_value = [&]() -> double {
    PipelineOutput<T> out =
        model_forward<T>(model, sample.frames, sample.norm_pm, sample.times, nullptr);
    return tracking_loss<T>(out, sample.target_delta, sample.target_vis,
                            tc.visibility_weight, tc.mask_mse_by_visibility,
                            nullptr, nullptr)
        .total;
  };

  std::vector<Param<T>*> params;
  model.collect(&params);
  for (Param<T>* p : params) p->zero_grad();
  accumulate_sample_grads(model, sample, tc, 1.0);

  GradCheckResult result;
  Rng rng(seed);
  for (Param<T>* p : params) {
    const Eigen::Index block = p->value.size();
    const Eigen::Index count = std::min<Eigen::Index>(block, samples_per_block);
    for (Eigen::Index s = 0; s < count; ++s) {
      const Eigen::Index idx =
          (count == block) ? s
                           : static_cast<Eigen::Index>(
                                 rng.uniform_int(static_cast<uint64_t>(block)));
      T* slot = &p->value.data()[idx];
      const T saved = *slot;
      *slot = saved + static_cast<T>(eps);
      const double hi = loss_value();
      *slot = saved - static_cast<T>(eps);
      const double lo = loss_value();
      *slot = saved;
      const double fd = (hi - lo) / (2.0 * eps);
      const double analytic = static_cast<double>(p->grad.data()[idx]);
      const double err = std::abs(analytic - fd) /
                         std::max({std::abs(analytic), std::abs(fd), 1e-8});
      ++result.entries_checked;
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst_param = p->name;
      }
    }
  }
  return result;
}

}  // namespace tcr3
