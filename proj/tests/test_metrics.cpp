// Tests for the tracking metrics. The core oracle is a deliberately naive
// per-pair recount of APD3D / OA / AJ written with independent loops; the
// library must match it bit for bit on random instances. Hand cases pin the
// threshold arithmetic (0.2 m error against {0.1, 0.3, 0.5, 1} m -> 0.75),
// and similarity corruption of the predictions must not move any score.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tcr3/metrics.hpp"
#include "tcr3/rng.hpp"
#include "tcr3/synthscene.hpp"

using namespace tcr3;

namespace {

// Independent recount of all three metrics on already-aligned sets. Written
// as flat loops over (point, frame) with its own eligibility logic.
struct BruteForce {
  std::vector<double> apd;      // per threshold
  std::vector<double> jaccard;  // per threshold
  double oa = 0.0;
};

BruteForce brute_force(const TrajectorySet& pred, const TrajectorySet& gt,
                       const std::vector<double>& thresholds,
                       bool include_occluded) {
  const Eigen::Index P = gt.points();
  const Eigen::Index T = gt.frames();
  BruteForce out;
  for (double delta : thresholds) {
    long elig = 0, hit = 0, tp = 0, fp = 0, fn = 0;
    for (Eigen::Index p = 0; p < P; ++p) {
      for (Eigen::Index t = 0; t < T; ++t) {
        if (!pred.valid(p, t) || !gt.valid(p, t)) continue;
        const Eigen::Vector3d d =
            pred.positions[size_t(t)].row(p) - gt.positions[size_t(t)].row(p);
        const double err = std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
        const bool gv = gt.visibility(p, t) >= 0.5;
        const bool pv = pred.visibility(p, t) >= 0.5;
        if (gv || include_occluded) {
          ++elig;
          if (err < delta) ++hit;
        }
        const bool within = err < delta;
        if (pv && gv && within) ++tp;
        if (pv && !(gv && within)) ++fp;
        if (gv && !(pv && within)) ++fn;
      }
    }
    out.apd.push_back(elig == 0 ? 1.0 : double(hit) / double(elig));
    out.jaccard.push_back(tp + fp + fn == 0 ? 1.0 : double(tp) / double(tp + fp + fn));
  }
  long valid = 0, match = 0;
  for (Eigen::Index p = 0; p < P; ++p) {
    for (Eigen::Index t = 0; t < T; ++t) {
      if (!pred.valid(p, t) || !gt.valid(p, t)) continue;
      ++valid;
      if ((pred.visibility(p, t) >= 0.5) == (gt.visibility(p, t) >= 0.5)) ++match;
    }
  }
  out.oa = valid == 0 ? 1.0 : double(match) / double(valid);
  return out;
}

// A trajectory set with every pair valid and visible, positions supplied
// frame-major.
TrajectorySet make_set(const std::vector<MatX3<double>>& positions) {
  TrajectorySet s;
  s.positions = positions;
  const Eigen::Index P = positions.front().rows();
  const Eigen::Index T = static_cast<Eigen::Index>(positions.size());
  s.visibility = MatXd::Ones(P, T);
  s.valid = MatX<std::uint8_t>::Ones(P, T);
  return s;
}

TrajectorySet random_set(Rng& rng, Eigen::Index P, Eigen::Index T,
                         double position_span) {
  std::vector<MatX3<double>> pos;
  for (Eigen::Index t = 0; t < T; ++t) {
    MatX3<double> m(P, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = rng.uniform(-position_span, position_span);
    pos.push_back(m);
  }
  TrajectorySet s = make_set(pos);
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index t = 0; t < T; ++t) s.visibility(p, t) = rng.uniform();
  return s;
}

Sim3Transform random_sim3(Rng& rng) {
  const Eigen::Vector3d axis =
      Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
  Sim3Transform sim;
  sim.scale = rng.uniform(0.3, 3.0);
  sim.R = Eigen::AngleAxisd(rng.uniform(-3.0, 3.0), axis).toRotationMatrix();
  sim.t = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  return sim;
}

SceneSpec tiny_scene() {
  SceneSpec spec;
  spec.width = 8;
  spec.height = 8;
  spec.frames = 3;
  spec.seed = 7;
  spec.fx = spec.fy = 8.0;
  spec.cx = spec.cy = 3.5;
  spec.background_depth = 6.0;
  PrimitiveSpec sphere;
  sphere.center = Eigen::Vector3d(0, 0, 3);
  sphere.radius = 1.2;
  sphere.motion.kind = MotionSpec::Kind::kConstantVelocity;
  sphere.motion.velocity = Eigen::Vector3d(0.05, 0.0, 0.0);
  spec.primitives.push_back(sphere);
  return spec;
}

}  // namespace

TEST_CASE("APD3D hand case: constant 0.2 m error against the canonical set") {
  // One point over four frames, displaced exactly 0.2 along +x everywhere.
  std::vector<MatX3<double>> gt_pos, pred_pos;
  for (int t = 0; t < 4; ++t) {
    MatX3<double> g(1, 3);
    g << 0.3 * t, -0.1 * t, 1.0 + 0.2 * t;
    MatX3<double> p = g;
    p(0, 0) += 0.2;
    gt_pos.push_back(g);
    pred_pos.push_back(p);
  }
  const TrajectorySet gt = make_set(gt_pos);
  const TrajectorySet pred = make_set(pred_pos);

  const std::vector<double> frac = apd3d_fractions(pred, gt, kEvalThresholds);
  REQUIRE(frac.size() == 4);
  CHECK(frac[0] == 0.0);  // 0.2 < 0.1 fails
  CHECK(frac[1] == 1.0);
  CHECK(frac[2] == 1.0);
  CHECK(frac[3] == 1.0);
  const double apd = (frac[0] + frac[1] + frac[2] + frac[3]) / 4.0;
  CHECK(apd == 0.75);

  // Same numbers drive the Jaccard: every pair is predicted and gt visible,
  // so J(delta) = 1 when within and 0 otherwise.
  const std::vector<double> jac = jaccard_fractions(pred, gt, kEvalThresholds);
  CHECK(jac[0] == 0.0);
  CHECK(jac[1] == 1.0);
  CHECK(jac[2] == 1.0);
  CHECK(jac[3] == 1.0);
  const EvalResult res = evaluate_trajectories(pred, gt, kEvalThresholds);
  // Alignment could absorb the offset; the primitive calls above are the
  // hand case. Here just confirm the result wires fractions -> means.
  CHECK(res.apd3d == (res.apd_fractions[0] + res.apd_fractions[1] +
                      res.apd_fractions[2] + res.apd_fractions[3]) /
                         4.0);
  CHECK(res.aj == (res.jaccard_scores[0] + res.jaccard_scores[1] +
                   res.jaccard_scores[2] + res.jaccard_scores[3]) /
                      4.0);
}

TEST_CASE("perfect predictions score 1.0 everywhere; inversions score 0") {
  Rng rng(11);
  const TrajectorySet gt = random_set(rng, 6, 5, 2.0);
  TrajectorySet pred = gt;

  const EvalResult res = evaluate_trajectories(pred, gt, kEvalThresholds);
  CHECK(res.aj == 1.0);
  CHECK(res.apd3d == 1.0);
  CHECK(res.oa == 1.0);
  CHECK(res.pairs_evaluated == 30);

  // Inverted visibility: OA = 0. All gt-visible pairs are predicted
  // occluded, so with random [0,1] gt visibility both FN and FP arise.
  TrajectorySet flipped = gt;
  for (Eigen::Index p = 0; p < gt.points(); ++p)
    for (Eigen::Index t = 0; t < gt.frames(); ++t)
      flipped.visibility(p, t) = gt.visibility(p, t) >= 0.5 ? 0.0 : 1.0;
  CHECK(occlusion_accuracy(flipped, gt) == 0.0);

  // All predicted occluded while all gt visible: zero true positives.
  TrajectorySet occluded = gt;
  occluded.visibility.setZero();
  TrajectorySet all_vis_gt = gt;
  all_vis_gt.visibility.setOnes();
  const std::vector<double> jac =
      jaccard_fractions(occluded, all_vis_gt, kEvalThresholds);
  for (double j : jac) CHECK(j == 0.0);
}

TEST_CASE("metric primitives match the brute-force recount exactly") {
  Rng rng(123);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index P = 1 + Eigen::Index(rng.uniform_int(10));
    const Eigen::Index T = 1 + Eigen::Index(rng.uniform_int(10));
    TrajectorySet gt = random_set(rng, P, T, 1.0);
    TrajectorySet pred = random_set(rng, P, T, 1.0);
    // Snap gt visibility to binary labels, knock out a few pairs entirely,
    // and poison some invalid positions with NaN to prove masking.
    for (Eigen::Index p = 0; p < P; ++p) {
      for (Eigen::Index t = 0; t < T; ++t) {
        gt.visibility(p, t) = gt.visibility(p, t) >= 0.5 ? 1.0 : 0.0;
        if (rng.uniform() < 0.15) {
          pred.valid(p, t) = 0;
          if (rng.uniform() < 0.5) pred.positions[size_t(t)](p, 0) = nan;
        }
        if (rng.uniform() < 0.1) gt.valid(p, t) = 0;
      }
    }
    std::vector<double> thresholds;
    for (int i = 0; i < 4; ++i) thresholds.push_back(rng.uniform(0.05, 2.5));
    std::sort(thresholds.begin(), thresholds.end());
    const bool include_occluded = trial % 3 == 0;

    const BruteForce expect = brute_force(pred, gt, thresholds, include_occluded);
    const std::vector<double> apd =
        apd3d_fractions(pred, gt, thresholds, include_occluded);
    const std::vector<double> jac = jaccard_fractions(pred, gt, thresholds);
    const double oa = occlusion_accuracy(pred, gt);

    bool ok = oa == expect.oa;
    for (size_t i = 0; i < thresholds.size(); ++i) {
      ok = ok && apd[i] == expect.apd[i] && jac[i] == expect.jaccard[i];
      ok = ok && apd[i] >= 0.0 && apd[i] <= 1.0 && jac[i] >= 0.0 && jac[i] <= 1.0;
      if (i > 0) ok = ok && apd[i] >= apd[i - 1];  // monotone in threshold
    }
    if (!ok) {
      CAPTURE(trial);
      REQUIRE(oa == expect.oa);
      for (size_t i = 0; i < thresholds.size(); ++i) {
        REQUIRE(apd[i] == expect.apd[i]);
        REQUIRE(jac[i] == expect.jaccard[i]);
      }
      REQUIRE(false);
    }
  }
}

TEST_CASE("no eligible pairs: ratios fall back to vacuous 1.0") {
  Rng rng(5);
  TrajectorySet gt = random_set(rng, 3, 3, 1.0);
  TrajectorySet pred = random_set(rng, 3, 3, 1.0);

  // Nothing is gt-visible: APD has no eligible pairs. With every prediction
  // occluded too, the Jaccard counts are all zero.
  gt.visibility.setZero();
  pred.visibility.setZero();
  for (double f : apd3d_fractions(pred, gt, kEvalThresholds)) CHECK(f == 1.0);
  for (double j : jaccard_fractions(pred, gt, kEvalThresholds)) CHECK(j == 1.0);

  // No valid pairs at all: every ratio is vacuous, including OA.
  TrajectorySet invalid_pred = pred;
  invalid_pred.valid.setZero();
  CHECK(occlusion_accuracy(invalid_pred, gt) == 1.0);
  for (double f : apd3d_fractions(invalid_pred, gt, kEvalThresholds)) CHECK(f == 1.0);
  const EvalResult res = evaluate_trajectories(invalid_pred, gt, kEvalThresholds);
  CHECK(res.pairs_evaluated == 0);
  CHECK(res.aj == 1.0);
}

TEST_CASE("similarity corruption of predictions does not move any score") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const TrajectorySet gt = random_set(rng, 8, 6, 2.0);
    TrajectorySet pred = gt;
    for (auto& frame : pred.positions)
      for (Eigen::Index i = 0; i < frame.size(); ++i)
        frame.data()[i] += rng.uniform(-0.4, 0.4);
    for (Eigen::Index p = 0; p < pred.points(); ++p)
      for (Eigen::Index t = 0; t < pred.frames(); ++t)
        pred.visibility(p, t) = rng.uniform();

    const EvalResult base = evaluate_trajectories(pred, gt, kEvalThresholds);
    const TrajectorySet corrupted = apply_alignment(pred, random_sim3(rng));
    const EvalResult again = evaluate_trajectories(corrupted, gt, kEvalThresholds);

    CHECK(again.aj == base.aj);
    CHECK(again.apd3d == base.apd3d);
    CHECK(again.oa == base.oa);
    for (size_t i = 0; i < base.apd_fractions.size(); ++i) {
      CHECK(again.apd_fractions[i] == base.apd_fractions[i]);
      CHECK(again.jaccard_scores[i] == base.jaccard_scores[i]);
    }
  }
}

TEST_CASE("alignment recovers an exact similarity corruption") {
  Rng rng(77);
  const TrajectorySet gt = random_set(rng, 10, 4, 2.0);
  const TrajectorySet corrupted = apply_alignment(gt, random_sim3(rng));
  const TrajectorySet restored = align_pred(corrupted, gt);
  double worst = 0.0;
  for (Eigen::Index t = 0; t < gt.frames(); ++t)
    worst = std::max(worst, (restored.positions[size_t(t)] - gt.positions[size_t(t)])
                                .cwiseAbs()
                                .maxCoeff());
  CHECK(worst < 1e-9);

  // Fewer than three usable correspondences: identity fallback.
  TrajectorySet sparse = gt;
  sparse.visibility.setZero();
  sparse.visibility(0, 0) = 1.0;
  sparse.visibility(1, 0) = 1.0;
  TrajectorySet sparse_gt = gt;
  sparse_gt.visibility = sparse.visibility;
  const Sim3Transform sim = fit_alignment(sparse, sparse_gt);
  CHECK(sim.scale == 1.0);
  CHECK((sim.R.array() == Eigen::Matrix3d::Identity().array()).all());
  CHECK((sim.t.array() == 0.0).all());
}

TEST_CASE("query_pixel_rows walks the strided grid in row-major order") {
  const std::vector<Eigen::Index> a = query_pixel_rows(4, 6, 2);
  CHECK(a == std::vector<Eigen::Index>{0, 2, 4, 12, 14, 16});
  const std::vector<Eigen::Index> b = query_pixel_rows(4, 6, 5);
  CHECK(b == std::vector<Eigen::Index>{0, 5});
  const std::vector<Eigen::Index> c = query_pixel_rows(2, 2, 1);
  CHECK(c == std::vector<Eigen::Index>{0, 1, 2, 3});
  CHECK_THROWS_AS(query_pixel_rows(2, 2, 0), std::invalid_argument);
}

TEST_CASE("self-evaluation of clip ground truth scores 1.0 on every metric") {
  const TrackClip clip = generate_clip(tiny_scene());
  std::vector<MatX3<double>> pred_track;
  std::vector<VecX<double>> pred_vis;
  for (int t = 0; t < clip.frame_count(); ++t) {
    pred_track.push_back(clip.gt_track[size_t(t)].points);
    pred_vis.push_back(clip.gt_vis[size_t(t)].cast<double>());
  }
  const EvalResult res = evaluate_tracking(pred_track, pred_vis, clip);
  CHECK(res.aj == 1.0);
  CHECK(res.apd3d == 1.0);
  CHECK(res.oa == 1.0);
  CHECK(res.pairs_evaluated == Eigen::Index(clip.pixel_count()) * clip.frame_count());

  // Strided queries: fewer pairs, still perfect.
  EvalOptions opts;
  opts.query_stride = 3;
  const EvalResult strided = evaluate_tracking(pred_track, pred_vis, clip, opts);
  CHECK(strided.apd3d == 1.0);
  CHECK(strided.pairs_evaluated == 9 * clip.frame_count());  // ceil(8/3)^2 = 9

  // A global similarity corruption of the predictions is absorbed.
  Rng rng(13);
  const Sim3Transform sim = random_sim3(rng);
  std::vector<MatX3<double>> corrupted;
  for (const auto& m : pred_track) corrupted.push_back(sim.apply(m));
  const EvalResult aligned = evaluate_tracking(corrupted, pred_vis, clip);
  CHECK(aligned.aj == 1.0);
  CHECK(aligned.apd3d == 1.0);
  CHECK(aligned.oa == 1.0);
}

TEST_CASE("thresholds scale with the scene unless the clip is metric") {
  TrackClip clip = generate_clip(tiny_scene());
  std::vector<MatX3<double>> pred_track;
  std::vector<VecX<double>> pred_vis;
  for (int t = 0; t < clip.frame_count(); ++t) {
    pred_track.push_back(clip.gt_track[size_t(t)].points);
    pred_vis.push_back(clip.gt_vis[size_t(t)].cast<double>());
  }
  const double scale = compute_normalization(clip.recon, clip.depths).scale;
  REQUIRE(scale > 0.0);

  const EvalResult scaled = evaluate_tracking(pred_track, pred_vis, clip);
  REQUIRE(scaled.thresholds.size() == 4);
  for (size_t i = 0; i < 4; ++i)
    CHECK(scaled.thresholds[i] == kEvalThresholds[i] * scale);

  clip.metric_units = true;
  const EvalResult metric = evaluate_tracking(pred_track, pred_vis, clip);
  for (size_t i = 0; i < 4; ++i) CHECK(metric.thresholds[i] == kEvalThresholds[i]);

  clip.metric_units = false;
  EvalOptions opts;
  opts.scene_scale = 2.0;
  const EvalResult forced = evaluate_tracking(pred_track, pred_vis, clip, opts);
  for (size_t i = 0; i < 4; ++i) CHECK(forced.thresholds[i] == kEvalThresholds[i] * 2.0);
}

TEST_CASE("batch mean equals the hand-computed per-clip average") {
  EvalResult a, b, c;
  a.aj = 0.5; a.apd3d = 0.25; a.oa = 1.0; a.pairs_evaluated = 10;
  a.thresholds = kEvalThresholds;
  a.apd_fractions = {0.0, 0.0, 0.5, 0.5};
  a.jaccard_scores = {0.5, 0.5, 0.5, 0.5};
  b = a;
  b.aj = 1.0; b.apd3d = 0.75; b.pairs_evaluated = 4;
  b.apd_fractions = {0.5, 0.5, 1.0, 1.0};
  b.jaccard_scores = {1.0, 1.0, 1.0, 1.0};
  c = a;
  c.aj = 0.0; c.oa = 0.4;

  const EvalResult mean = mean_results({a, b, c});
  CHECK(mean.aj == (0.5 + 1.0 + 0.0) / 3.0);
  CHECK(mean.apd3d == (0.25 + 0.75 + 0.25) / 3.0);
  CHECK(mean.oa == (1.0 + 1.0 + 0.4) / 3.0);
  CHECK(mean.pairs_evaluated == 24);
  CHECK(mean.apd_fractions[2] == (0.5 + 1.0 + 0.5) / 3.0);
  CHECK(mean.jaccard_scores[0] == (0.5 + 1.0 + 0.5) / 3.0);
  CHECK_THROWS_AS(mean_results({}), std::invalid_argument);
}

TEST_CASE("sweep grids and CSV table format") {
  const std::vector<int> strides = sweep_stride_grid();
  REQUIRE(strides.size() == 12);
  CHECK(strides.front() == 1);
  CHECK(strides.back() == 12);
  const std::vector<int> lengths = sweep_length_grid();
  REQUIRE(lengths.size() == 10);
  CHECK(lengths.front() == 12);
  CHECK(lengths.back() == 120);

  EvalResult r;
  r.aj = 0.5;
  r.apd3d = 0.625;
  r.oa = 0.875;
  r.thresholds = kEvalThresholds;
  r.apd_fractions = {0.25, 0.5, 0.75, 1.0};
  r.jaccard_scores = {0.5, 0.5, 0.5, 0.5};
  SweepRow row_a{"stride", 3, 12, r};
  SweepRow row_b{"length", 1, 48, r};
  const std::string csv = sweep_csv({row_a, row_b});

  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "mode,stride,length,aj,apd3d,oa,frac_0.1,frac_0.3,frac_0.5,frac_1.0");
  REQUIRE(std::getline(in, line));
  CHECK(line == "stride,3,12,0.5,0.625,0.875,0.25,0.5,0.75,1");
  REQUIRE(std::getline(in, line));
  CHECK(line == "length,1,48,0.5,0.625,0.875,0.25,0.5,0.75,1");
  CHECK(!std::getline(in, line));

  SweepRow bad = row_a;
  bad.result.apd_fractions = {0.5};
  CHECK_THROWS_AS(sweep_csv({bad}), std::invalid_argument);
}

TEST_CASE("evaluation results serialize to JSON with the alignment spelled out") {
  EvalResult r;
  r.aj = 0.5;
  r.apd3d = 0.625;
  r.oa = 0.875;
  r.thresholds = {0.1, 0.3, 0.5, 1.0};
  r.apd_fractions = {0.25, 0.5, 0.75, 1.0};
  r.jaccard_scores = {0.2, 0.4, 0.6, 0.8};
  r.pairs_evaluated = 48;
  r.alignment.scale = 2.0;
  r.alignment.R = Eigen::AngleAxisd(0.5, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  r.alignment.t = Eigen::Vector3d(1.0, -2.0, 3.0);

  const std::string text = eval_result_to_json(r);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("aj").get<double>() == 0.5);
  CHECK(j.at("apd3d").get<double>() == 0.625);
  CHECK(j.at("oa").get<double>() == 0.875);
  CHECK(j.at("thresholds").get<std::vector<double>>() == r.thresholds);
  CHECK(j.at("apd_fractions").get<std::vector<double>>() == r.apd_fractions);
  CHECK(j.at("jaccard_scores").get<std::vector<double>>() == r.jaccard_scores);
  CHECK(j.at("pairs_evaluated").get<long long>() == 48);
  CHECK(j.at("alignment").at("scale").get<double>() == 2.0);
  const auto rot = j.at("alignment").at("rotation").get<std::vector<double>>();
  REQUIRE(rot.size() == 9);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col)
      CHECK(rot[static_cast<size_t>(row * 3 + col)] == r.alignment.R(row, col));
  CHECK(j.at("alignment").at("translation").get<std::vector<double>>() ==
        std::vector<double>{1.0, -2.0, 3.0});
}
