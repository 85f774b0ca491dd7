#pragma once

// Plain-data configuration structs for the tracker model and training loop.
// JSON (de)serialization lives in configio.cpp so that public headers do not
// drag in a JSON dependency.

#include <string>

#include "tcr3/common.hpp"

namespace tcr3 {

// Ablation switches. All true = the full method; each flag disables one
// ingredient so its contribution can be measured in isolation.
struct AblationFlags {
  // Track latents start from the reference frame's geometry latent. When
  // disabled, each track latent starts from its own frame's latent instead.
  bool first_frame_anchoring = true;
  // Track tokens carry the temporal rotary index of the frame they describe.
  // When disabled, all track tokens sit at temporal index 0.
  bool temporal_rope_alignment = true;
  // The head predicts residual displacement from the reference pointmap.
  // When disabled, it regresses absolute normalized coordinates directly.
  bool residual_head = true;
};

struct ModelConfig {
  int layers = 4;
  int dim = 64;           // transformer width d
  int heads = 4;
  int patch = 4;          // patch edge p; latent grid is (H/p) x (W/p)
  int channels = 48;      // latent channels c per modality (tokens carry 2c)
  int image_h = 32;
  int image_w = 32;
  int max_frames = 4;     // frames F handled per forward pass (plus the anchor)
  // Rotary channel split per head: (dim_t, dim_x, dim_y). Zeros mean the
  // default split (d_k/2, d_k/4, d_k/4).
  int rope_dim_t = 0;
  int rope_dim_x = 0;
  int rope_dim_y = 0;
  double rope_theta = 10000.0;
  int lora_rank = 4;
  double lora_alpha = 4.0;
  AblationFlags flags;

  int latent_h() const { return image_h / patch; }
  int latent_w() const { return image_w / patch; }
  int head_dim() const { return dim / heads; }
  int patch_dim() const { return 3 * patch * patch; }
  // Token count for a pass with n_frames frames plus the reference:
  // geometry and track streams each contribute (1 + n_frames) * h * w tokens.
  Eigen::Index tokens_per_pass(int n_frames) const {
    return static_cast<Eigen::Index>(2) * (1 + n_frames) * latent_h() * latent_w();
  }

  // Resolved rotary split (applies the default when unset).
  void rope_split(int* dim_t, int* dim_x, int* dim_y) const {
    if (rope_dim_t == 0 && rope_dim_x == 0 && rope_dim_y == 0) {
      *dim_t = head_dim() / 2;
      *dim_x = head_dim() / 4;
      *dim_y = head_dim() / 4;
    } else {
      *dim_t = rope_dim_t;
      *dim_x = rope_dim_x;
      *dim_y = rope_dim_y;
    }
  }

  void validate() const {
    require(layers > 0, "config: layers must be positive");
    require(dim > 0 && heads > 0, "config: dim and heads must be positive");
    require(dim % heads == 0, "config: dim must be divisible by heads");
    require(patch > 0, "config: patch must be positive");
    require(image_h > 0 && image_w > 0, "config: image size must be positive");
    require(image_h % patch == 0 && image_w % patch == 0,
            "config: image size must be divisible by patch");
    require(channels > 0, "config: channels must be positive");
    require(max_frames > 0, "config: max_frames must be positive");
    int dt = 0, dx = 0, dy = 0;
    rope_split(&dt, &dx, &dy);
    require(dt >= 0 && dx >= 0 && dy >= 0, "config: rotary dims must be nonnegative");
    require(dt % 2 == 0 && dx % 2 == 0 && dy % 2 == 0,
            "config: rotary dims must be even");
    require(dt + dx + dy == head_dim(),
            "config: rotary dims must sum to the per-head dim");
    require(rope_theta > 1.0, "config: rope_theta must exceed 1");
    require(lora_rank >= 0, "config: lora_rank must be nonnegative");
    require(lora_rank == 0 || lora_alpha > 0.0,
            "config: lora_alpha must be positive when adapters are enabled");
  }
};

// Which parameters the optimizer updates.
enum class TrainGroup {
  kAll,                  // every parameter (minus the codec when frozen)
  kAdaptersProjections,  // adapter factors + input/output projections only
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 1;          // clips per optimizer step
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double visibility_weight = 0.1;  // BCE term weight
  bool mask_mse_by_visibility = false;
  bool freeze_codec = false;
  TrainGroup group = TrainGroup::kAll;
  uint64_t seed = 0;

  void validate() const {
    require(steps >= 0, "train config: steps must be nonnegative");
    require(batch_size > 0, "train config: batch_size must be positive");
    require(lr >= 0.0, "train config: lr must be nonnegative");
    require(beta1 >= 0.0 && beta1 < 1.0, "train config: beta1 in [0,1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "train config: beta2 in [0,1)");
    require(weight_decay >= 0.0, "train config: weight_decay must be nonnegative");
    require(adam_eps > 0.0, "train config: adam_eps must be positive");
    require(visibility_weight >= 0.0,
            "train config: visibility_weight must be nonnegative");
  }
};

}  // namespace tcr3
