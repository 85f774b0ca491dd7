#pragma once

// The full tracker: patch codec + transformer, wired into a differentiable
// pipeline from raw frames and normalized reconstruction pointmaps to decoded
// track residuals and visibility logits.
//
// Forward data flow for one pass over frames j = 0..F (reference first):
//   z_rgb_j = enc_rgb(frame_j),  z_pm_j = enc_pm(normalized pointmap_j)
//   g_j     = [z_rgb_j ; z_pm_j]                     (h*w) x 2c
//   tokens  = geometry stream g_0..g_F, then track stream (g_0 replicated)
//   y       = transformer(tokens)                    N x 2c
//   per frame j, from the track stream's output rows:
//     delta_j     = dec_track(y[track_j][:, :c])     (H*W) x 3
//     vis_logit_j = dec_vis  (y[track_j][:, c:])     (H*W) x 1
//
// The backward pass mirrors this exactly; when first-frame anchoring is on,
// the replicated track inputs all feed their gradients back into g_0.

#include <algorithm>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tcr3/codec.hpp"
#include "tcr3/config.hpp"
#include "tcr3/configio.hpp"
#include "tcr3/container.hpp"
#include "tcr3/dit.hpp"
#include "tcr3/nn.hpp"
#include "tcr3/rng.hpp"

namespace tcr3 {

template <typename T>
struct TrackerModel {
  ModelConfig cfg;
  Codec<T> codec;
  DitModel<T> dit;

  void init(const ModelConfig& config, uint64_t seed) {
    cfg = config;
    cfg.validate();
    Rng rng(seed);
    codec.init_shapes(cfg.patch, cfg.channels);
    codec.init_params(rng);
    dit.init(cfg, rng);
  }

  void collect(std::vector<Param<T>*>* out) {
    codec.collect(out);
    dit.collect(out);
  }
};

template <typename T>
struct PipelineCache {
  int n_frames = 0;  // including the reference
  std::vector<typename Linear<T>::Cache> enc_rgb, enc_pm;
  TokenSequence<T> seq;
  DitTape<T> dit;
  std::vector<typename Linear<T>::Cache> dec_track, dec_vis;
};

template <typename T>
struct PipelineOutput {
  std::vector<MatX<T>> delta;      // per frame: (H*W) x 3 decoded residual
  std::vector<MatX<T>> vis_logit;  // per frame: (H*W) x 1
  std::vector<MatX<T>> vis_prob;   // per frame: (H*W) x 1, logistic(vis_logit)
};

// Runs the full pipeline. frames_rgb and norm_pointmaps hold 1 + F entries of
// shape (H*W) x 3 (reference frame first); time_indices are the rotary
// temporal coordinates, one per frame. Pass a cache to enable backward().
template <typename T>
PipelineOutput<T> model_forward(const TrackerModel<T>& model,
                                const std::vector<MatX<T>>& frames_rgb,
                                const std::vector<MatX<T>>& norm_pointmaps,
                                const std::vector<double>& time_indices,
                                std::type_identity_t<PipelineCache<T>>* cache,
                                const TraceRequest* trace_req = nullptr,
                                std::type_identity_t<AttentionTrace<T>>* trace = nullptr) {
  const ModelConfig& cfg = model.cfg;
  const int n = static_cast<int>(frames_rgb.size());
  require(n >= 1, "model_forward: at least the reference frame is required");
  require(n <= cfg.max_frames + 1,
          "model_forward: more frames than the model's per-pass capacity");
  require(norm_pointmaps.size() == frames_rgb.size() &&
              time_indices.size() == frames_rgb.size(),
          "model_forward: frames, pointmaps, and time indices must align");
  const Eigen::Index pixels =
      static_cast<Eigen::Index>(cfg.image_h) * cfg.image_w;
  for (int j = 0; j < n; ++j)
    require(frames_rgb[j].rows() == pixels && norm_pointmaps[j].rows() == pixels,
            "model_forward: frame size does not match the model config");

  if (cache) {
    cache->n_frames = n;
    cache->enc_rgb.resize(n);
    cache->enc_pm.resize(n);
    cache->dec_track.resize(n);
    cache->dec_vis.resize(n);
  }

  std::vector<MatX<T>> latents(n);
  for (int j = 0; j < n; ++j) {
    MatX<T> z_rgb = model.codec.encode_rgb(frames_rgb[j], cfg.image_h, cfg.image_w,
                                           cache ? &cache->enc_rgb[j] : nullptr);
    MatX<T> z_pm = model.codec.encode_pointmap(
        norm_pointmaps[j], cfg.image_h, cfg.image_w,
        cache ? &cache->enc_pm[j] : nullptr);
    latents[j] = concat_latent_channels(z_rgb, z_pm);
  }

  TokenSequence<T> seq = assemble_tokens(latents, cfg.latent_h(), cfg.latent_w(),
                                         time_indices, cfg.flags);
  MatX<T> y = model.dit.forward(seq, cache ? &cache->dit : nullptr, trace_req, trace);

  PipelineOutput<T> out;
  out.delta.resize(n);
  out.vis_logit.resize(n);
  out.vis_prob.resize(n);
  const int c = cfg.channels;
  for (int j = 0; j < n; ++j) {
    auto [row0, cells] = track_rows(seq.n_geometry, n, j);
    MatX<T> track_latent = y.middleRows(row0, cells).leftCols(c);
    MatX<T> vis_latent = y.middleRows(row0, cells).rightCols(c);
    out.delta[j] = model.codec.decode_track(track_latent, cfg.image_h, cfg.image_w,
                                            cache ? &cache->dec_track[j] : nullptr);
    out.vis_logit[j] = model.codec.decode_visibility_logits(
        vis_latent, cfg.image_h, cfg.image_w, cache ? &cache->dec_vis[j] : nullptr);
    out.vis_prob[j] = out.vis_logit[j];
    for (Eigen::Index i = 0; i < out.vis_prob[j].rows(); ++i)
      out.vis_prob[j](i, 0) = logistic(out.vis_logit[j](i, 0));
  }
  if (cache) cache->seq = std::move(seq);
  return out;
}

// Accumulates parameter gradients for upstream gradients d_delta (per frame,
// (H*W) x 3) and d_vis_logit (per frame, (H*W) x 1).
template <typename T>
void model_backward(TrackerModel<T>& model, const std::vector<MatX<T>>& d_delta,
                    const std::vector<MatX<T>>& d_vis_logit,
                    const PipelineCache<T>& cache) {
  const ModelConfig& cfg = model.cfg;
  const int n = cache.n_frames;
  require(static_cast<int>(d_delta.size()) == n &&
              static_cast<int>(d_vis_logit.size()) == n,
          "model_backward: one gradient per frame required");
  const int c = cfg.channels;

  // Decoders (adjoint of the decode stage), scattered into the transformer's
  // output gradient. Geometry-stream outputs carry no loss.
  MatX<T> d_y = MatX<T>::Zero(cache.seq.tokens.rows(), 2 * c);
  for (int j = 0; j < n; ++j) {
    auto [row0, cells] = track_rows(cache.seq.n_geometry, n, j);
    // Track residual head: unpatchify's adjoint is patchify.
    MatX<T> d_patches = patchify(d_delta[j], cfg.image_h, cfg.image_w, cfg.patch);
    d_y.middleRows(row0, cells).leftCols(c) +=
        model.codec.dec_track.backward(d_patches, cache.dec_track[j]);
    // Visibility head: the per-pixel logit is the mean of three decoded
    // channels, so its adjoint spreads the gradient as d_logit / 3.
    MatX<T> d_three(d_vis_logit[j].rows(), 3);
    for (Eigen::Index i = 0; i < d_three.rows(); ++i)
      d_three.row(i).setConstant(d_vis_logit[j](i, 0) / static_cast<T>(3));
    MatX<T> d_vis_patches = patchify(d_three, cfg.image_h, cfg.image_w, cfg.patch);
    d_y.middleRows(row0, cells).rightCols(c) +=
        model.codec.dec_vis.backward(d_vis_patches, cache.dec_vis[j]);
  }

  MatX<T> d_tokens = model.dit.backward(d_y, cache.dit);

  // Token assembly adjoint: geometry-stream gradients flow to their own
  // frame; track-stream gradients flow to the frame whose latent was
  // replicated (the reference, unless first-frame anchoring is disabled).
  const Eigen::Index cells = cache.seq.n_geometry / n;
  std::vector<MatX<T>> d_latent(n, MatX<T>::Zero(cells, 2 * c));
  for (int j = 0; j < n; ++j)
    d_latent[j] += d_tokens.middleRows(static_cast<Eigen::Index>(j) * cells, cells);
  for (int j = 0; j < n; ++j) {
    auto [row0, cnt] = track_rows(cache.seq.n_geometry, n, j);
    const int target = cfg.flags.first_frame_anchoring ? 0 : j;
    d_latent[target] += d_tokens.middleRows(row0, cnt);
  }

  // Encoders.
  for (int j = 0; j < n; ++j) {
    model.codec.enc_rgb.backward(MatX<T>(d_latent[j].leftCols(c)), cache.enc_rgb[j]);
    model.codec.enc_pm.backward(MatX<T>(d_latent[j].rightCols(c)), cache.enc_pm[j]);
  }
}

// --- Checkpoints -------------------------------------------------------------

// Serializes the config (as JSON bytes) plus every parameter tensor, keyed by
// its dotted name, into a tensor container.
template <typename T>
TensorContainer checkpoint_to_container(TrackerModel<T>& model) {
  TensorContainer tc;
  const std::string json = model_config_to_json(model.cfg);
  tc.add_u8("config", {json.size()},
            reinterpret_cast<const uint8_t*>(json.data()));
  std::vector<Param<T>*> params;
  model.collect(&params);
  for (const Param<T>* p : params) {
    const std::vector<uint64_t> dims = {static_cast<uint64_t>(p->value.rows()),
                                        static_cast<uint64_t>(p->value.cols())};
    if constexpr (std::is_same_v<T, float>) {
      tc.add_f32(p->name, dims, p->value.data());
    } else {
      tc.add_f64(p->name, dims, p->value.data());
    }
  }
  return tc;
}

template <typename T>
TrackerModel<T> checkpoint_from_container(const TensorContainer& tc) {
  require(tc.has("config"), "checkpoint: missing config entry");
  const auto& cfg_entry = tc.get("config");
  const std::string json(reinterpret_cast<const char*>(cfg_entry.as_u8()),
                         cfg_entry.element_count());
  TrackerModel<T> model;
  model.init(model_config_from_json(json), /*seed=*/0);
  std::vector<Param<T>*> params;
  model.collect(&params);
  for (Param<T>* p : params) {
    require(tc.has(p->name), "checkpoint: missing parameter " + p->name);
    const auto& e = tc.get(p->name);
    require(e.dims.size() == 2 &&
                e.dims[0] == static_cast<uint64_t>(p->value.rows()) &&
                e.dims[1] == static_cast<uint64_t>(p->value.cols()),
            "checkpoint: shape mismatch for " + p->name);
    if constexpr (std::is_same_v<T, float>) {
      std::copy(e.as_f32(), e.as_f32() + e.element_count(), p->value.data());
    } else {
      std::copy(e.as_f64(), e.as_f64() + e.element_count(), p->value.data());
    }
  }
  require(tc.entries().size() == params.size() + 1,
          "checkpoint: container holds unexpected extra entries");
  return model;
}

template <typename T>
void save_checkpoint(TrackerModel<T>& model, const std::string& path) {
  checkpoint_to_container(model).save(path);
}

template <typename T>
TrackerModel<T> load_checkpoint(const std::string& path) {
  return checkpoint_from_container<T>(TensorContainer::load(path));
}

}  // namespace tcr3
