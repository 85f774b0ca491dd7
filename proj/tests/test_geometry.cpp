#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tcr3/geometry.hpp"
#include "tcr3/rng.hpp"

using namespace tcr3;

namespace {

// Independent forward-projection oracle: maps pixel+depth to a world point
// with scalar arithmetic only (no shared code with the library).
Eigen::Vector3d oracle_unproject(double u, double v, double z, const CameraModel& cam) {
  const double xc = (u - cam.cx) / cam.fx * z;
  const double yc = (v - cam.cy) / cam.fy * z;
  Eigen::Vector3d pc(xc, yc, z);
  return cam.R * pc + cam.t;
}

CameraModel make_camera(double fx, double fy, double cx, double cy) {
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  return cam;
}

Eigen::Matrix3d rot_xyz(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace

TEST_CASE("unproject: principal point maps to the optical axis") {
  CameraModel cam = make_camera(100.0, 100.0, 32.0, 24.0);
  MatXd depth = MatXd::Constant(48, 64, 2.5);
  Pointmap pm = unproject_to_world(depth, cam);
  // Pixel (u=32, v=24) sits on the axis: camera point (0, 0, 2.5).
  const Eigen::Vector3d p = pm.points.row(24 * 64 + 32).transpose();
  CHECK(p.isApprox(Eigen::Vector3d(0.0, 0.0, 2.5), 1e-12));
  CHECK(pm.width == 64);
  CHECK(pm.height == 48);
}

TEST_CASE("unproject: hand-computed pixel with a translated camera") {
  // Frozen oracle values: fx=fy=100, cx=cy=32, pixel (64,32), depth 2,
  // camera at (1,0,0) with identity rotation.
  CameraModel cam = make_camera(100.0, 100.0, 32.0, 32.0);
  cam.t = Eigen::Vector3d(1.0, 0.0, 0.0);
  MatXd depth = MatXd::Constant(64, 65, 2.0);
  Pointmap pm = unproject_to_world(depth, cam);
  const Eigen::Vector3d p = pm.points.row(32 * 65 + 64).transpose();
  // cam point = ((64-32)*2/100, 0, 2) = (0.64, 0, 2); world = +(1,0,0).
  CHECK(p.x() == doctest::Approx(1.64).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.z() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("unproject matches the scalar oracle under random poses") {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    CameraModel cam = make_camera(rng.uniform(40, 200), rng.uniform(40, 200), rng.uniform(10, 30),
                                  rng.uniform(10, 30));
    cam.R = rot_xyz(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    cam.t = Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    MatXd depth(8, 9);
    for (int v = 0; v < 8; ++v)
      for (int u = 0; u < 9; ++u) depth(v, u) = rng.uniform(0.5, 10.0);
    Pointmap pm = unproject_to_world(depth, cam);
    for (int v = 0; v < 8; ++v) {
      for (int u = 0; u < 9; ++u) {
        const Eigen::Vector3d want = oracle_unproject(u, v, depth(v, u), cam);
        const Eigen::Vector3d got = pm.points.row(v * 9 + u).transpose();
        CHECK((got - want).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("unproject rejects nonpositive and nonfinite depths") {
  CameraModel cam = make_camera(100, 100, 2, 2);
  MatXd depth = MatXd::Constant(4, 4, 1.0);
  depth(1, 2) = 0.0;
  CHECK_THROWS_AS(unproject_to_world(depth, cam), std::invalid_argument);
  depth(1, 2) = -3.0;
  CHECK_THROWS_AS(unproject_to_world(depth, cam), std::invalid_argument);
  depth(1, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(unproject_to_world(depth, cam), std::invalid_argument);
}

TEST_CASE("project round-trips unproject") {
  Rng rng(72);
  CameraModel cam = make_camera(120.0, 110.0, 31.5, 23.5);
  cam.R = rot_xyz(0.2, -0.3, 0.1);
  cam.t = Eigen::Vector3d(0.5, -0.2, 1.0);
  MatXd depth(6, 7);
  for (int i = 0; i < depth.size(); ++i) depth.data()[i] = rng.uniform(1.0, 5.0);
  Pointmap pm = unproject_to_world(depth, cam);
  ProjectedPoints proj = project_to_camera(pm.points, cam);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 7; ++u) {
      const Eigen::Index i = v * 7 + u;
      CHECK(proj.in_front[i]);
      CHECK(proj.uv(i, 0) == doctest::Approx(u).epsilon(1e-9));
      CHECK(proj.uv(i, 1) == doctest::Approx(v).epsilon(1e-9));
      CHECK(proj.depth(i) == doctest::Approx(depth(v, u)).epsilon(1e-12));
    }
  }
}

TEST_CASE("project flags points behind the camera") {
  CameraModel cam = make_camera(100, 100, 16, 16);
  MatX3<double> pts(2, 3);
  pts << 0.0, 0.0, 2.0, 0.0, 0.0, -2.0;
  ProjectedPoints proj = project_to_camera(pts, cam);
  CHECK(proj.in_front[0]);
  CHECK_FALSE(proj.in_front[1]);
}

TEST_CASE("project agrees with a composed homogeneous-matrix oracle") {
  // Oracle route: build the 3x4 matrix K [R^T | -R^T t] with Eigen block
  // composition, apply homogeneously, divide -- a different code path than
  // the library's per-point transform.
  Rng rng(73);
  CameraModel cam = make_camera(90.0, 95.0, 20.0, 18.0);
  cam.R = rot_xyz(-0.4, 0.25, 0.6);
  cam.t = Eigen::Vector3d(0.3, 0.7, -0.5);

  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = cam.fx;
  K(1, 1) = cam.fy;
  K(0, 2) = cam.cx;
  K(1, 2) = cam.cy;
  Eigen::Matrix<double, 3, 4> Rt;
  Rt.leftCols<3>() = cam.R.transpose();
  Rt.col(3) = -cam.R.transpose() * cam.t;
  const Eigen::Matrix<double, 3, 4> P = K * Rt;

  for (int i = 0; i < 200; ++i) {
    Eigen::Vector4d hom(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.5, 8), 1.0);
    // Keep the point in front of the camera for a meaningful comparison.
    Eigen::Vector3d world = hom.head<3>();
    Eigen::Vector3d cam_pt = cam.R.transpose() * (world - cam.t);
    if (cam_pt.z() <= 0.1) continue;
    MatX3<double> pts(1, 3);
    pts.row(0) = world.transpose();
    ProjectedPoints proj = project_to_camera(pts, cam);
    Eigen::Vector3d ph = P * Eigen::Vector4d(world.x(), world.y(), world.z(), 1.0);
    CHECK(proj.uv(0, 0) == doctest::Approx(ph.x() / ph.z()).epsilon(1e-10));
    CHECK(proj.uv(0, 1) == doctest::Approx(ph.y() / ph.z()).epsilon(1e-10));
    CHECK(proj.depth(0) == doctest::Approx(ph.z()).epsilon(1e-10));
  }
}

TEST_CASE("percentile: linear interpolation matches a hand case") {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(percentile_sorted(v, 0.0) == doctest::Approx(1.0));
  CHECK(percentile_sorted(v, 100.0) == doctest::Approx(4.0));
  CHECK(percentile_sorted(v, 50.0) == doctest::Approx(2.5));
  // rank = 0.02 * 3 = 0.06 -> 1 + 0.06*(2-1)
  CHECK(percentile_sorted(v, 2.0) == doctest::Approx(1.06));
}

namespace {

// Sort-based normalization oracle, written independently of the library:
// pools depths, finds the interpolated percentile cutoffs, filters, and
// computes mean / max-distance by brute force.
NormalizationStats oracle_normalization(const std::vector<Pointmap>& pms,
                                        const std::vector<MatXd>& depths, double lo_q,
                                        double hi_q) {
  std::vector<double> pool;
  for (const auto& d : depths)
    for (int i = 0; i < d.size(); ++i) pool.push_back(d.data()[i]);
  std::sort(pool.begin(), pool.end());
  auto interp = [&](double q) {
    double r = q / 100.0 * double(pool.size() - 1);
    size_t k = size_t(std::floor(r));
    if (k + 1 >= pool.size()) return pool.back();
    return pool[k] + (r - double(k)) * (pool[k + 1] - pool[k]);
  };
  const double lo = interp(lo_q), hi = interp(hi_q);
  std::vector<Eigen::Vector3d> inliers;
  for (size_t f = 0; f < pms.size(); ++f)
    for (int i = 0; i < depths[f].size(); ++i)
      if (depths[f].data()[i] >= lo && depths[f].data()[i] <= hi)
        inliers.push_back(pms[f].points.row(i).transpose());
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : inliers) mean += p;
  mean /= double(inliers.size());
  double scale = 0.0;
  for (const auto& p : inliers) scale = std::max(scale, (p - mean).norm());
  NormalizationStats s;
  s.mean = mean;
  s.scale = std::max(scale, 1e-6);
  return s;
}

std::pair<std::vector<Pointmap>, std::vector<MatXd>> random_cloud(Rng& rng, int frames, int h,
                                                                  int w) {
  std::vector<Pointmap> pms(frames);
  std::vector<MatXd> depths(frames);
  for (int f = 0; f < frames; ++f) {
    pms[f].width = w;
    pms[f].height = h;
    pms[f].points.resize(h * w, 3);
    depths[f].resize(h, w);
    for (int i = 0; i < h * w; ++i) {
      pms[f].points(i, 0) = rng.uniform(-4, 4);
      pms[f].points(i, 1) = rng.uniform(-4, 4);
      pms[f].points(i, 2) = rng.uniform(-4, 4);
      depths[f].data()[i] = rng.uniform(0.5, 12.0);
    }
  }
  return {pms, depths};
}

}  // namespace

TEST_CASE("compute_normalization: two symmetric points give their midpoint and half-distance") {
  Pointmap pm;
  pm.width = 2;
  pm.height = 1;
  pm.points.resize(2, 3);
  pm.points << 1.0, 0.0, 2.0, 3.0, 0.0, 2.0;
  MatXd depth(1, 2);
  depth << 2.0, 2.0;
  NormalizationStats s = compute_normalization({pm}, {depth});
  CHECK(s.mean.isApprox(Eigen::Vector3d(2.0, 0.0, 2.0), 1e-12));
  CHECK(s.scale == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compute_normalization: identical points floor the scale") {
  Pointmap pm;
  pm.width = 3;
  pm.height = 1;
  pm.points.resize(3, 3);
  pm.points << 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0;
  MatXd depth = MatXd::Constant(1, 3, 5.0);
  NormalizationStats s = compute_normalization({pm}, {depth});
  CHECK(s.scale == doctest::Approx(kScaleFloor));
  // Degenerate normalization maps everything to zeros.
  MatX3<double> norm = normalize_points<double>(pm.points, s.mean, s.scale);
  CHECK(norm.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("compute_normalization: extreme-depth outliers are excluded") {
  // 100 well-behaved pixels plus one with a huge depth; the outlier's point
  // is far away and must not drag the statistics.
  Pointmap pm;
  pm.width = 101;
  pm.height = 1;
  pm.points.resize(101, 3);
  MatXd depth(1, 101);
  for (int i = 0; i < 100; ++i) {
    pm.points.row(i) << 0.01 * i, 0.0, 2.0;
    depth(0, i) = 2.0 + 0.001 * i;
  }
  pm.points.row(100) << 500.0, 500.0, 500.0;
  depth(0, 100) = 900.0;
  NormalizationStats s = compute_normalization({pm}, {depth});
  CHECK(s.mean.norm() < 10.0);
  CHECK(s.scale < 10.0);
}

TEST_CASE("compute_normalization matches the sort-based oracle on random clouds") {
  Rng rng(74);
  for (int trial = 0; trial < 30; ++trial) {
    auto [pms, depths] = random_cloud(rng, 1 + rng.uniform_int(4), 5, 6);
    NormalizationStats got = compute_normalization(pms, depths);
    NormalizationStats want = oracle_normalization(pms, depths, 2.0, 98.0);
    CHECK((got.mean - want.mean).norm() < 1e-12);
    CHECK(got.scale == doctest::Approx(want.scale).epsilon(1e-12));
  }
}

TEST_CASE("normalize/denormalize round-trips in double and float") {
  Rng rng(75);
  // double
  MatX3<double> pts(64, 3);
  for (int i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(-8, 8);
  Vec3<double> mean(0.5, -1.0, 3.0);
  const double scale = 2.75;
  MatX3<double> rt = denormalize_points<double>(normalize_points<double>(pts, mean, scale), mean, scale);
  CHECK((rt - pts).cwiseAbs().maxCoeff() < 1e-12);
  // float, the training dtype
  MatX3<float> ptsf = pts.cast<float>();
  Vec3<float> meanf = mean.cast<float>();
  MatX3<float> rtf =
      denormalize_points<float>(normalize_points<float>(ptsf, meanf, float(scale)), meanf, float(scale));
  CHECK((rtf - ptsf).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("normalization puts inliers inside the unit ball") {
  Rng rng(76);
  auto [pms, depths] = random_cloud(rng, 3, 6, 6);
  NormalizationStats s = compute_normalization(pms, depths);
  std::vector<double> pool;
  for (const auto& d : depths)
    for (int i = 0; i < d.size(); ++i) pool.push_back(d.data()[i]);
  std::sort(pool.begin(), pool.end());
  const double lo = percentile_sorted(pool, 2.0), hi = percentile_sorted(pool, 98.0);
  for (size_t f = 0; f < pms.size(); ++f) {
    MatX3<double> norm = normalize_points<double>(pms[f].points, s.mean, s.scale);
    for (int i = 0; i < norm.rows(); ++i) {
      if (depths[f].data()[i] >= lo && depths[f].data()[i] <= hi) {
        CHECK(norm.row(i).norm() <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("residual/recover are exact inverses; static tracks give zero residual") {
  Rng rng(77);
  MatX3<double> t0(32, 3), tj(32, 3);
  for (int i = 0; i < t0.size(); ++i) {
    t0.data()[i] = rng.uniform(-5, 5);
    tj.data()[i] = rng.uniform(-5, 5);
  }
  MatX3<double> delta = track_residual<double>(tj, t0);
  CHECK((recover_track<double>(t0, delta) - tj).cwiseAbs().maxCoeff() < 1e-12);
  // Static scene: same pointmap at every timestamp.
  CHECK(track_residual<double>(t0, t0).cwiseAbs().maxCoeff() == 0.0);
  // Linearity: residual of (a+b) vs reference = residual(a) + b shift.
  MatX3<double> shift = MatX3<double>::Constant(32, 3, 0.25);
  MatX3<double> d2 = track_residual<double>(tj + shift, t0);
  CHECK((d2 - (delta + shift)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("umeyama: identity when src == dst") {
  Rng rng(78);
  MatX3<double> pts(16, 3);
  for (int i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(-2, 2);
  Sim3Transform sim = umeyama_sim3(pts, pts);
  CHECK(sim.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((sim.R - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(sim.t.norm() < 1e-12);
}

TEST_CASE("umeyama: recovers a hand-built scale-2 translation") {
  MatX3<double> src(4, 3);
  src << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  MatX3<double> dst = 2.0 * src;
  dst.rowwise() += Eigen::RowVector3d(1.0, 0.0, 0.0);
  Sim3Transform sim = umeyama_sim3(src, dst);
  CHECK(sim.scale == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((sim.R - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK((sim.t - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("umeyama: construct-then-recover on random transforms") {
  Rng rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + rng.uniform_int(60);
    MatX3<double> src(n, 3);
    for (int i = 0; i < src.size(); ++i) src.data()[i] = rng.uniform(-3, 3);
    Sim3Transform truth;
    truth.scale = rng.uniform(0.2, 5.0);
    truth.R = rot_xyz(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    truth.t = Eigen::Vector3d(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    MatX3<double> dst = truth.apply(src);
    Sim3Transform got = umeyama_sim3(src, dst);
    // Residual RMSE after alignment.
    const double rmse = std::sqrt((got.apply(src) - dst).rowwise().squaredNorm().mean());
    CHECK(rmse < 1e-9);
    CHECK(got.scale == doctest::Approx(truth.scale).epsilon(1e-9));
    CHECK((got.R - truth.R).norm() < 1e-9);
  }
}

TEST_CASE("umeyama: reflection correction yields a proper rotation") {
  // Near-planar cloud with a reflected target tempts the orthogonal factor
  // into det = -1; the correction must keep det(R) = +1.
  Rng rng(80);
  MatX3<double> src(12, 3);
  for (int i = 0; i < 12; ++i) {
    src(i, 0) = rng.uniform(-2, 2);
    src(i, 1) = rng.uniform(-2, 2);
    src(i, 2) = 0.01 * rng.uniform(-1, 1);
  }
  MatX3<double> dst = src;
  dst.col(2) *= -1.0;  // mirror
  Sim3Transform got = umeyama_sim3(src, dst);
  CHECK(got.R.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("umeyama: degenerate inputs are rejected") {
  MatX3<double> two(2, 3);
  two << 0, 0, 0, 1, 1, 1;
  CHECK_THROWS_AS(umeyama_sim3(two, two), std::invalid_argument);

  MatX3<double> collinear(5, 3);
  for (int i = 0; i < 5; ++i) collinear.row(i) << double(i), 2.0 * i, -1.0 * i;
  CHECK_THROWS_AS(umeyama_sim3(collinear, collinear), std::invalid_argument);

  MatX3<double> same = MatX3<double>::Constant(5, 3, 1.0);
  CHECK_THROWS_AS(umeyama_sim3(same, same), std::invalid_argument);
}

TEST_CASE("umeyama: weights can ignore corrupted points") {
  Rng rng(81);
  MatX3<double> src(20, 3);
  for (int i = 0; i < src.size(); ++i) src.data()[i] = rng.uniform(-2, 2);
  Sim3Transform truth;
  truth.scale = 1.5;
  truth.R = rot_xyz(0.3, -0.2, 0.9);
  truth.t = Eigen::Vector3d(0.4, 0.1, -0.7);
  MatX3<double> dst = truth.apply(src);
  dst.row(0) << 100.0, -50.0, 30.0;  // corrupted correspondence
  VecX<double> w = VecX<double>::Ones(20);
  w(0) = 0.0;
  Sim3Transform got = umeyama_sim3(src, dst, w);
  CHECK(got.scale == doctest::Approx(truth.scale).epsilon(1e-9));
  CHECK((got.R - truth.R).norm() < 1e-9);
  CHECK((got.t - truth.t).norm() < 1e-9);
}

TEST_CASE("visibility: exact depth match is visible, deeper points are occluded") {
  CameraModel cam = make_camera(50.0, 50.0, 8.0, 8.0);
  MatXd depth = MatXd::Constant(16, 16, 4.0);
  Pointmap pm = unproject_to_world(depth, cam);

  VisibilityMap vis = visibility_from_projection(pm.points, depth, cam, 0.01);
  CHECK(vis.values.minCoeff() == doctest::Approx(1.0));

  // Push every point 50% deeper along its ray: occluded by the buffer.
  MatX3<double> deeper = pm.points * 1.5;
  VisibilityMap vis2 = visibility_from_projection(deeper, depth, cam, 0.01);
  CHECK(vis2.values.maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("visibility: relative tolerance boundary matches the scalar inequality") {
  CameraModel cam = make_camera(50.0, 50.0, 4.0, 4.0);
  MatXd depth = MatXd::Constant(9, 9, 2.0);
  const double tol = 0.05;
  for (double ratio : {1.0, 1.04, 1.049, 1.051, 1.2, 0.96, 0.94}) {
    MatX3<double> pt(1, 3);
    pt << 0.0, 0.0, 2.0 * ratio;  // on the optical axis
    VisibilityMap vis = visibility_from_projection(pt, depth, cam, tol);
    const bool want = std::abs(2.0 * ratio - 2.0) <= tol * 2.0;
    CHECK(vis.values(0) == doctest::Approx(want ? 1.0 : 0.0));
  }
}

TEST_CASE("visibility: behind-camera and out-of-bounds points are occluded") {
  CameraModel cam = make_camera(50.0, 50.0, 4.0, 4.0);
  MatXd depth = MatXd::Constant(9, 9, 2.0);
  MatX3<double> pts(2, 3);
  pts << 0.0, 0.0, -1.0,   // behind
      100.0, 0.0, 2.0;     // projects far outside the image
  VisibilityMap vis = visibility_from_projection(pts, depth, cam, 0.01);
  CHECK(vis.values(0) == doctest::Approx(0.0));
  CHECK(vis.values(1) == doctest::Approx(0.0));
}

TEST_CASE("camera validation rejects a non-orthonormal rotation") {
  CameraModel cam = make_camera(10, 10, 1, 1);
  cam.R(0, 0) = 2.0;
  CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
}
