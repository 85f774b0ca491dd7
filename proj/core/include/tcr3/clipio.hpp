#pragma once

// Clip serialization: a TrackClip travels as one tensor container holding a
// JSON manifest plus fixed-name entries
//   frames        f32 [T, H, W, 3]   RGB in [0, 1]
//   depths        f64 [T, H, W]      camera-frame z
//   cameras       f64 [T, 16]        fx, fy, cx, cy, R row-major (9), t (3)
//   recon         f64 [T, H, W, 3]   reconstruction pointmaps P_j(t_j)
//   gt_track      f64 [T, H, W, 3]   tracking pointmaps P_0(t_j)
//   gt_visibility u8  [T, H, W]      {0, 1}
// The manifest records width/height/stride/units plus every entry's dtype
// and shape, and carries the generating scene description verbatim; loading
// validates the actual entries against it. Also here: SceneSpec <-> JSON for
// the scene files the generator CLI consumes.

#include <string>

#include "tcr3/container.hpp"
#include "tcr3/synthscene.hpp"

namespace tcr3 {

// --- Scene descriptions -----------------------------------------------------

// Round-trippable JSON form of a scene description. Enum kinds serialize as
// strings ("static" | "constant_velocity" | "orbit" | "oscillation" for
// motion, "static" | "linear" | "orbit" for camera paths, "sphere" | "box"
// for primitives). Missing fields keep their defaults; unknown kinds throw.
std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const std::string& json);

// --- Clip container ----------------------------------------------------------

// Packs a clip into a container (manifest + tensor entries above).
TensorContainer clip_to_container(const TrackClip& clip);

// Rebuilds a clip, validating every entry against the manifest (presence,
// dtype, shape) and the container against the clip invariants. Throws
// std::invalid_argument on any mismatch.
TrackClip clip_from_container(const TensorContainer& tc);

// File convenience wrappers around the container forms.
void save_clip(const TrackClip& clip, const std::string& path);
TrackClip load_clip(const std::string& path);

// --- Prediction files ---------------------------------------------------------

// Tracker output for one clip, as stored on disk: reference-anchored
// pointmaps and visibility probabilities for every frame, plus the
// normalization statistics the prediction was produced under. Travels as a
// container with
//   meta                 u8  JSON (dimensions, options, stats)
//   pred_track_pointmaps f64 [T, H, W, 3]
//   pred_visibility      f32 [T, H, W]
//   frame_indices        f64 [T]
struct PredictionFile {
  int width = 0;
  int height = 0;
  bool anchor_identity = true;
  bool windowed = false;
  NormalizationStats stats;
  std::vector<MatX3<double>> track;       // per frame, (H*W) x 3
  std::vector<VecX<double>> visibility;   // per frame, (H*W)
  std::vector<double> frame_indices;      // original frame numbers

  int frame_count() const { return static_cast<int>(track.size()); }
};

TensorContainer prediction_to_container(const PredictionFile& pred);
PredictionFile prediction_from_container(const TensorContainer& tc);
void save_prediction(const PredictionFile& pred, const std::string& path);
PredictionFile load_prediction(const std::string& path);

}  // namespace tcr3
