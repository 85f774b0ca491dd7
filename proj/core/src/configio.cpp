#include "tcr3/configio.hpp"

#include <nlohmann/json.hpp>

namespace tcr3 {

using nlohmann::json;

namespace {

// Reads a field if present, keeping the struct's default otherwise — configs
// stay forward-compatible with files that omit newer fields.
template <typename T>
void read(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["layers"] = cfg.layers;
  j["dim"] = cfg.dim;
  j["heads"] = cfg.heads;
  j["patch"] = cfg.patch;
  j["channels"] = cfg.channels;
  j["image_h"] = cfg.image_h;
  j["image_w"] = cfg.image_w;
  j["max_frames"] = cfg.max_frames;
  j["rope_dim_t"] = cfg.rope_dim_t;
  j["rope_dim_x"] = cfg.rope_dim_x;
  j["rope_dim_y"] = cfg.rope_dim_y;
  j["rope_theta"] = cfg.rope_theta;
  j["lora_rank"] = cfg.lora_rank;
  j["lora_alpha"] = cfg.lora_alpha;
  j["first_frame_anchoring"] = cfg.flags.first_frame_anchoring;
  j["temporal_rope_alignment"] = cfg.flags.temporal_rope_alignment;
  j["residual_head"] = cfg.flags.residual_head;
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model config: invalid JSON: ") + e.what());
  }
  ModelConfig cfg;
  read(j, "layers", &cfg.layers);
  read(j, "dim", &cfg.dim);
  read(j, "heads", &cfg.heads);
  read(j, "patch", &cfg.patch);
  read(j, "channels", &cfg.channels);
  read(j, "image_h", &cfg.image_h);
  read(j, "image_w", &cfg.image_w);
  read(j, "max_frames", &cfg.max_frames);
  read(j, "rope_dim_t", &cfg.rope_dim_t);
  read(j, "rope_dim_x", &cfg.rope_dim_x);
  read(j, "rope_dim_y", &cfg.rope_dim_y);
  read(j, "rope_theta", &cfg.rope_theta);
  read(j, "lora_rank", &cfg.lora_rank);
  read(j, "lora_alpha", &cfg.lora_alpha);
  read(j, "first_frame_anchoring", &cfg.flags.first_frame_anchoring);
  read(j, "temporal_rope_alignment", &cfg.flags.temporal_rope_alignment);
  read(j, "residual_head", &cfg.flags.residual_head);
  cfg.validate();
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["steps"] = cfg.steps;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["weight_decay"] = cfg.weight_decay;
  j["adam_eps"] = cfg.adam_eps;
  j["visibility_weight"] = cfg.visibility_weight;
  j["mask_mse_by_visibility"] = cfg.mask_mse_by_visibility;
  j["freeze_codec"] = cfg.freeze_codec;
  j["group"] = cfg.group == TrainGroup::kAdaptersProjections ? "adapters_projections"
                                                             : "all";
  j["seed"] = cfg.seed;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("train config: invalid JSON: ") + e.what());
  }
  TrainConfig cfg;
  read(j, "steps", &cfg.steps);
  read(j, "batch_size", &cfg.batch_size);
  read(j, "lr", &cfg.lr);
  read(j, "beta1", &cfg.beta1);
  read(j, "beta2", &cfg.beta2);
  read(j, "weight_decay", &cfg.weight_decay);
  read(j, "adam_eps", &cfg.adam_eps);
  read(j, "visibility_weight", &cfg.visibility_weight);
  read(j, "mask_mse_by_visibility", &cfg.mask_mse_by_visibility);
  read(j, "freeze_codec", &cfg.freeze_codec);
  if (j.contains("group")) {
    const std::string g = j.at("group").get<std::string>();
    if (g == "all") {
      cfg.group = TrainGroup::kAll;
    } else if (g == "adapters_projections") {
      cfg.group = TrainGroup::kAdaptersProjections;
    } else {
      throw std::invalid_argument("train config: unknown group '" + g + "'");
    }
  }
  read(j, "seed", &cfg.seed);
  cfg.validate();
  return cfg;
}

}  // namespace tcr3
