#include "tcr3/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace tcr3 {

void CameraModel::validate() const {
  require(fx > 0.0 && fy > 0.0, "camera: focal lengths must be positive");
  const double orto = (R * R.transpose() - Eigen::Matrix3d::Identity()).norm();
  require(orto < 1e-9, "camera: rotation is not orthonormal");
  require(R.determinant() > 0.0, "camera: rotation has negative determinant");
}

MatX3<double> Sim3Transform::apply(const MatX3<double>& pts) const {
  MatX3<double> out = (scale * (R * pts.transpose())).transpose();
  out.rowwise() += t.transpose();
  return out;
}

Pointmap unproject_to_world(const MatXd& depth, const CameraModel& camera, int frame_index,
                            int timestamp_index) {
  camera.validate();
  const int h = static_cast<int>(depth.rows());
  const int w = static_cast<int>(depth.cols());
  require(h > 0 && w > 0, "unproject: empty depth map");

  Pointmap pm;
  pm.width = w;
  pm.height = h;
  pm.frame_index = frame_index;
  pm.timestamp_index = timestamp_index;
  pm.points.resize(static_cast<Eigen::Index>(h) * w, 3);

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double z = depth(v, u);
      require(std::isfinite(z) && z > 0.0, "unproject: depths must be positive and finite");
      const Eigen::Vector3d cam((u - camera.cx) / camera.fx * z, (v - camera.cy) / camera.fy * z,
                                z);
      pm.points.row(static_cast<Eigen::Index>(v) * w + u) =
          (camera.R * cam + camera.t).transpose();
    }
  }
  return pm;
}

ProjectedPoints project_to_camera(const MatX3<double>& points, const CameraModel& camera) {
  camera.validate();
  const Eigen::Index n = points.rows();
  ProjectedPoints out;
  out.uv.resize(n, 2);
  out.depth.resize(n);
  out.in_front.assign(static_cast<size_t>(n), false);

  const Eigen::Matrix3d Rinv = camera.R.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d cam = Rinv * (points.row(i).transpose() - camera.t);
    out.depth(i) = cam.z();
    if (cam.z() > 0.0) {
      out.in_front[static_cast<size_t>(i)] = true;
      out.uv(i, 0) = camera.fx * cam.x() / cam.z() + camera.cx;
      out.uv(i, 1) = camera.fy * cam.y() / cam.z() + camera.cy;
    } else {
      out.uv(i, 0) = 0.0;
      out.uv(i, 1) = 0.0;
    }
  }
  return out;
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "percentile: empty input");
  require(q >= 0.0 && q <= 100.0, "percentile: q out of range");
  const double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

NormalizationStats compute_normalization(const std::vector<Pointmap>& pointmaps,
                                         const std::vector<MatXd>& depths, double lo_pct,
                                         double hi_pct) {
  require(!pointmaps.empty() && pointmaps.size() == depths.size(),
          "compute_normalization: pointmap/depth count mismatch");
  require(lo_pct <= hi_pct, "compute_normalization: percentile bounds inverted");

  std::vector<double> all;
  for (const auto& d : depths) all.insert(all.end(), d.data(), d.data() + d.size());
  std::sort(all.begin(), all.end());
  const double lo = percentile_sorted(all, lo_pct);
  const double hi = percentile_sorted(all, hi_pct);

  // Inlier pass 1: centroid of points whose depth falls inside [lo, hi].
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Index count = 0;
  for (size_t f = 0; f < pointmaps.size(); ++f) {
    const MatXd& d = depths[f];
    require(pointmaps[f].size() == d.size(),
            "compute_normalization: pointmap/depth size mismatch");
    const double* dv = d.data();
    for (Eigen::Index i = 0; i < pointmaps[f].size(); ++i) {
      // MatXd is row-major, same pixel order as Pointmap rows.
      if (dv[i] >= lo && dv[i] <= hi) {
        sum += pointmaps[f].points.row(i).transpose();
        ++count;
      }
    }
  }
  require(count > 0, "compute_normalization: no inlier depths");

  NormalizationStats stats;
  stats.mean = sum / static_cast<double>(count);

  // Inlier pass 2: max distance from the centroid.
  double max_dist = 0.0;
  for (size_t f = 0; f < pointmaps.size(); ++f) {
    const double* dv = depths[f].data();
    for (Eigen::Index i = 0; i < pointmaps[f].size(); ++i) {
      if (dv[i] >= lo && dv[i] <= hi) {
        const double dist = (pointmaps[f].points.row(i).transpose() - stats.mean).norm();
        max_dist = std::max(max_dist, dist);
      }
    }
  }
  stats.scale = std::max(max_dist, kScaleFloor);
  return stats;
}

Pointmap normalize_pointmap(const Pointmap& pm, const NormalizationStats& stats) {
  Pointmap out = pm;
  out.points = normalize_points<double>(pm.points, stats.mean, stats.scale);
  return out;
}

Pointmap denormalize_pointmap(const Pointmap& pm, const NormalizationStats& stats) {
  Pointmap out = pm;
  out.points = denormalize_points<double>(pm.points, stats.mean, stats.scale);
  return out;
}

Sim3Transform umeyama_sim3(const MatX3<double>& src, const MatX3<double>& dst,
                           const std::optional<VecX<double>>& weights) {
  const Eigen::Index n = src.rows();
  require(n == dst.rows(), "umeyama: point count mismatch");
  require(n >= 3, "umeyama: need at least three points");

  VecX<double> w;
  if (weights) {
    require(weights->size() == n, "umeyama: weight count mismatch");
    require((weights->array() >= 0.0).all(), "umeyama: negative weights");
    w = *weights;
  } else {
    w = VecX<double>::Ones(n);
  }
  const double wsum = w.sum();
  require(wsum > 0.0, "umeyama: all weights zero");

  const Eigen::Vector3d mu_src = (src.transpose() * w) / wsum;
  const Eigen::Vector3d mu_dst = (dst.transpose() * w) / wsum;

  // Weighted cross-covariance and source variance.
  Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
  double var_src = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d ds = src.row(i).transpose() - mu_src;
    const Eigen::Vector3d dd = dst.row(i).transpose() - mu_dst;
    sigma += w(i) * dd * ds.transpose();
    var_src += w(i) * ds.squaredNorm();
  }
  sigma /= wsum;
  var_src /= wsum;
  require(var_src > 1e-30, "umeyama: source has zero variance");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  // Collinear sources leave a one-parameter family of rotations.
  require(d(1) > 1e-12 * std::max(d(0), 1e-300), "umeyama: degenerate (collinear) geometry");

  // Reflection correction: flip the smallest singular direction if needed so
  // the recovered orthogonal factor is a proper rotation.
  Eigen::Vector3d s_fix = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s_fix(2) = -1.0;

  Sim3Transform out;
  out.R = svd.matrixU() * s_fix.asDiagonal() * svd.matrixV().transpose();
  out.scale = d.dot(s_fix) / var_src;
  out.t = mu_dst - out.scale * (out.R * mu_src);
  return out;
}

VisibilityMap visibility_from_projection(const MatX3<double>& points, const MatXd& depth_buffer,
                                         const CameraModel& camera, double tol) {
  require(tol >= 0.0, "visibility: negative tolerance");
  const int h = static_cast<int>(depth_buffer.rows());
  const int w = static_cast<int>(depth_buffer.cols());
  const ProjectedPoints proj = project_to_camera(points, camera);

  VisibilityMap vis;
  vis.width = w;
  vis.height = h;
  vis.values = VecX<double>::Zero(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (!proj.in_front[static_cast<size_t>(i)]) continue;
    const int u = static_cast<int>(std::floor(proj.uv(i, 0) + 0.5));
    const int v = static_cast<int>(std::floor(proj.uv(i, 1) + 0.5));
    if (u < 0 || u >= w || v < 0 || v >= h) continue;
    const double buffer_z = depth_buffer(v, u);
    if (std::abs(proj.depth(i) - buffer_z) <= tol * buffer_z) vis.values(i) = 1.0;
  }
  return vis;
}

}  // namespace tcr3
