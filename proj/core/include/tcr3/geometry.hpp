#pragma once

// Pointmap geometry: pinhole projection, percentile-based pointmap
// normalization, residual trajectories, Sim(3) alignment, and z-buffer
// visibility tests.
//
// Conventions used throughout:
//  - Pixel (u, v) means column u, row v; integer coordinates address pixel
//    centers directly (no half-pixel offset).
//  - CameraModel extrinsics map camera coordinates to world coordinates:
//    X_world = R * X_cam + t. Camera frame is +x right, +y down, +z forward.
//  - "Depth" is the camera-frame z coordinate, not the ray length.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tcr3/common.hpp"

namespace tcr3 {

struct CameraModel {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // camera-to-world rotation
  Eigen::Vector3d t = Eigen::Vector3d::Zero();      // camera center in world

  // Checks that R is orthonormal with det +1 and the focal lengths are
  // positive; throws std::invalid_argument otherwise.
  void validate() const;
};

// Dense H x W grid of 3D world points, stored one point per row in row-major
// pixel order (row v, column u => index v * width + u).
struct Pointmap {
  int width = 0;
  int height = 0;
  // Index of the frame whose pixel grid anchors this map. A reconstruction
  // pointmap has frame_index == timestamp_index (the points are frame j's
  // own surface at time j); a tracking pointmap keeps frame_index = 0 while
  // timestamp_index advances (frame 0's pixels at time j).
  int frame_index = 0;
  int timestamp_index = 0;
  MatX3<double> points;  // (width*height) x 3

  Eigen::Index size() const { return points.rows(); }
};

// Per-pixel visibility in [0,1]; ground truth uses exactly {0,1}.
struct VisibilityMap {
  int width = 0;
  int height = 0;
  VecX<double> values;  // (width*height)
};

struct NormalizationStats {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double scale = 1.0;  // max distance from mean over inliers, floored
};

// Floor applied to NormalizationStats::scale so degenerate scenes (all inlier
// points identical) normalize to zeros instead of dividing by zero.
inline constexpr double kScaleFloor = 1e-6;

// Similarity transform x -> scale * R * x + t.
struct Sim3Transform {
  double scale = 1.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return scale * (R * x) + t; }
  MatX3<double> apply(const MatX3<double>& pts) const;
};

// --- Projection ---------------------------------------------------------

// Lifts a depth map (H x W, camera-frame z per pixel) to world points.
// Depths must be positive and finite.
Pointmap unproject_to_world(const MatXd& depth, const CameraModel& camera,
                            int frame_index = 0, int timestamp_index = 0);

struct ProjectedPoints {
  MatX<double> uv;          // N x 2 pixel coordinates
  VecX<double> depth;       // N camera-frame z
  std::vector<bool> in_front;  // z > 0
};

// Projects world points into the camera. Points behind the camera are
// flagged rather than rejected; their uv values are not meaningful.
ProjectedPoints project_to_camera(const MatX3<double>& points, const CameraModel& camera);

// --- Normalization ------------------------------------------------------

// Percentile with linear interpolation between order statistics
// (q in [0,100]); `sorted` must be ascending and non-empty.
double percentile_sorted(const std::vector<double>& sorted, double q);

// Computes centering/scaling statistics over a set of pointmaps. A pixel is
// an inlier when its depth lies inside the [lo_pct, hi_pct] percentile
// interval of all depths pooled across the given frames. mean is the inlier
// centroid; scale is the max inlier distance from the mean, floored at
// kScaleFloor.
NormalizationStats compute_normalization(const std::vector<Pointmap>& pointmaps,
                                         const std::vector<MatXd>& depths,
                                         double lo_pct = 2.0, double hi_pct = 98.0);

// (p - mean) / scale, elementwise over rows. Templated so property tests can
// run the exact 32-bit arithmetic used by the training pipeline.
template <typename T>
MatX3<T> normalize_points(const MatX3<T>& pts, const Vec3<T>& mean, T scale) {
  MatX3<T> out = pts;
  out.rowwise() -= mean.transpose();
  out /= scale;
  return out;
}

template <typename T>
MatX3<T> denormalize_points(const MatX3<T>& pts, const Vec3<T>& mean, T scale) {
  MatX3<T> out = pts * scale;
  out.rowwise() += mean.transpose();
  return out;
}

Pointmap normalize_pointmap(const Pointmap& pm, const NormalizationStats& stats);
Pointmap denormalize_pointmap(const Pointmap& pm, const NormalizationStats& stats);

// --- Residual trajectories ----------------------------------------------

// Residual of a tracking pointmap against the reference frame:
// delta_j = P_0(t_j) - P_0(t_0), evaluated per pixel.
template <typename T>
MatX3<T> track_residual(const MatX3<T>& track_tj, const MatX3<T>& track_t0) {
  return track_tj - track_t0;
}

// Inverse of track_residual: P_0(t_j) = P_0(t_0) + delta_j.
template <typename T>
MatX3<T> recover_track(const MatX3<T>& track_t0, const MatX3<T>& delta) {
  return track_t0 + delta;
}

// --- Sim(3) alignment ----------------------------------------------------

// Least-squares similarity aligning src onto dst: minimizes
// sum_i w_i || s R src_i + t - dst_i ||^2. Reflections in the orthogonal
// factor are corrected so R is a proper rotation. Throws on fewer than three
// points, degenerate (collinear or coincident) geometry, or zero variance.
Sim3Transform umeyama_sim3(const MatX3<double>& src, const MatX3<double>& dst,
                           const std::optional<VecX<double>>& weights = std::nullopt);

// --- Visibility ----------------------------------------------------------

// Projects tracked world points into `camera` and tests them against the
// rendered depth buffer of the same frame: a point is visible iff it lands
// in front of the camera, inside the image bounds (nearest-pixel lookup),
// and its depth matches the buffer within a relative tolerance:
// |z - D(u,v)| <= tol * D(u,v).
VisibilityMap visibility_from_projection(const MatX3<double>& points, const MatXd& depth_buffer,
                                         const CameraModel& camera, double tol = 0.01);

}  // namespace tcr3
