#pragma once

// Procedural desk-scale scenes with exact ground truth. Frames are rendered
// by analytic ray-primitive intersection (no meshes, no rasterizer), so
// depths, trajectories, and occlusions are known in closed form.
//
// Time convention: frame j of a clip generated at temporal stride s samples
// the scene at t = j * s "scene steps". Motion and camera paths are analytic
// functions of t, which makes the stride-s clip an exact subsample of the
// stride-1 clip.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tcr3/common.hpp"
#include "tcr3/geometry.hpp"
#include "tcr3/rng.hpp"

namespace tcr3 {

// Rigid translation path of a primitive's center: offset_at(t) is the
// displacement of the center relative to t = 0.
struct MotionSpec {
  enum class Kind { kStatic, kConstantVelocity, kOrbit, kOscillation };
  Kind kind = Kind::kStatic;

  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // kConstantVelocity, per step

  Eigen::Vector3d pivot = Eigen::Vector3d::Zero();  // kOrbit: rotation center
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();  // kOrbit: rotation axis
  double angular_velocity = 0.0;                    // kOrbit: radians per step

  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();  // kOscillation
  double amplitude = 0.0;                                // kOscillation
  double frequency = 0.0;  // kOscillation: radians per step
  double phase = 0.0;      // kOscillation

  // Displacement of a center that starts at `center0`.
  Eigen::Vector3d offset_at(double t, const Eigen::Vector3d& center0) const;
};

struct PrimitiveSpec {
  enum class Kind { kSphere, kBox };
  Kind kind = Kind::kSphere;
  Eigen::Vector3d center = Eigen::Vector3d(0, 0, 4);  // at t = 0
  double radius = 0.5;                                 // kSphere
  Eigen::Vector3d half_extents = Eigen::Vector3d(0.5, 0.5, 0.5);  // kBox
  Eigen::Vector3d color = Eigen::Vector3d(0.8, 0.4, 0.3);
  double texture_scale = 4.0;  // noise lattice cells per world unit
  MotionSpec motion;
};

// Camera pose as a function of scene time. World convention: +y points down
// (matching image rows), +z points into the scene; the default static camera
// sits at the origin with identity rotation.
struct CameraPathSpec {
  enum class Kind { kStatic, kLinear, kOrbit };
  Kind kind = Kind::kStatic;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // kLinear, per step

  Eigen::Vector3d target = Eigen::Vector3d(0, 0, 4);  // kOrbit: look-at point
  double radius = 4.0;                                 // kOrbit
  double angular_velocity = 0.0;                       // kOrbit: radians/step
  double phase = 0.0;                                  // kOrbit: start angle
  double height = 0.0;                                 // kOrbit: y offset

  // Pose at time t. Intrinsics are supplied by the SceneSpec.
  void pose_at(double t, Eigen::Matrix3d* R, Eigen::Vector3d* pos) const;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  int frames = 12;  // 1 + F
  std::uint64_t seed = 1;
  bool metric_units = false;

  double fx = 64.0, fy = 64.0;
  double cx = 31.5, cy = 31.5;

  double background_depth = 6.0;  // world plane z = background_depth
  Eigen::Vector3d background_color = Eigen::Vector3d(0.5, 0.55, 0.6);
  double background_texture_scale = 1.5;

  double gt_visibility_tol = 0.01;  // relative depth tolerance

  CameraPathSpec camera_path;
  std::vector<PrimitiveSpec> primitives;
};

// A rendered clip with dense ground truth.
struct TrackClip {
  int width = 0;
  int height = 0;
  int stride = 1;
  bool metric_units = false;
  std::vector<MatX3<float>> frames;   // per frame: (H*W) x 3 RGB in [0,1]
  std::vector<MatXd> depths;          // per frame: H x W camera-z
  std::vector<CameraModel> cameras;   // camera-to-world per frame
  std::vector<Pointmap> recon;        // reconstruction pointmaps P_j(t_j)
  std::vector<Pointmap> gt_track;     // tracking pointmaps P_0(t_j)
  std::vector<VecX<std::uint8_t>> gt_vis;  // per frame: (H*W), {0,1}
  std::string scene_json;             // provenance; may be empty

  int frame_count() const { return static_cast<int>(frames.size()); }
  int pixel_count() const { return width * height; }
};

// Renders a clip at the given temporal stride. Throws if the spec is invalid,
// if any ray escapes the scene (nonpositive depth would result), or if some
// primitive covers no pixel in frame 0.
TrackClip generate_clip(const SceneSpec& spec, int stride = 1);

// Geometry corruption for robustness experiments: multiplicative depth noise
// (clamped at +-3 sigma) and small extrinsics perturbations. Reconstruction
// pointmaps are recomputed from the corrupted inputs; ground truth
// (trajectories, visibility, frames) is untouched.
struct PerturbSpec {
  double depth_sigma = 0.0;        // relative depth noise
  double rotation_sigma = 0.0;     // radians per axis
  double translation_sigma = 0.0;  // world units per axis
};
TrackClip perturb_geometry(const TrackClip& clip, const PerturbSpec& spec, std::uint64_t seed);

// Training-time clip sampling: pick a spec uniformly from the library and a
// stride uniformly from `strides`. The choice is split out so its
// distribution can be tested without rendering anything.
struct ClipChoice {
  int spec_index = 0;
  int stride = 1;
};
ClipChoice choose_training_clip(int library_size, const std::vector<int>& strides, Rng& rng);
TrackClip sample_training_clip(const std::vector<SceneSpec>& library,
                               const std::vector<int>& strides, Rng& rng);

// Temporal subsampling without re-rendering: keeps every `stride`-th frame
// starting at frame 0, truncated to at most `length` frames, and renumbers
// the per-frame indices consecutively. Because scene motion is a function of
// continuous time, the result equals the same scene rendered at the combined
// stride directly (the clip's stride field records the product).
TrackClip subsample_clip(const TrackClip& clip, int stride, int length);

// Seeded value noise in [0,1]: trilinear interpolation of hashed lattice
// values. Exposed for texture tests.
double value_noise(const Eigen::Vector3d& q, std::uint64_t seed);

// A varied library of randomized desk-scale scenes (used by the CLI and the
// training smoke tests).
std::vector<SceneSpec> make_scene_library(int count, std::uint64_t seed, int width = 64,
                                          int height = 64, int frames = 12);

}  // namespace tcr3
