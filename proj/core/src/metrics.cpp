#include "tcr3/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tcr3 {

namespace {

bool finite_row(const MatX3<double>& m, Eigen::Index r) {
  return std::isfinite(m(r, 0)) && std::isfinite(m(r, 1)) && std::isfinite(m(r, 2));
}

bool pair_valid(const TrajectorySet& pred, const TrajectorySet& gt,
                Eigen::Index p, Eigen::Index t) {
  return pred.valid(p, t) != 0 && gt.valid(p, t) != 0;
}

double pair_error(const TrajectorySet& pred, const TrajectorySet& gt,
                  Eigen::Index p, Eigen::Index t) {
  return (pred.positions[static_cast<size_t>(t)].row(p) -
          gt.positions[static_cast<size_t>(t)].row(p))
      .norm();
}

void check_pairing(const TrajectorySet& pred, const TrajectorySet& gt) {
  pred.check();
  gt.check();
  require(pred.points() == gt.points() && pred.frames() == gt.frames(),
          "metrics: prediction and ground truth shapes differ");
}

}  // namespace

void TrajectorySet::check() const {
  require(visibility.rows() == valid.rows() && visibility.cols() == valid.cols(),
          "TrajectorySet: visibility and valid shapes differ");
  require(static_cast<Eigen::Index>(positions.size()) == frames(),
          "TrajectorySet: positions count != frame count");
  for (const auto& frame : positions)
    require(frame.rows() == points(), "TrajectorySet: frame point count differs");
}

// --- Alignment -------------------------------------------------------------

Sim3Transform fit_alignment(const TrajectorySet& pred, const TrajectorySet& gt) {
  check_pairing(pred, gt);
  std::vector<Eigen::Vector3d> src, dst;
  for (Eigen::Index t = 0; t < pred.frames(); ++t) {
    for (Eigen::Index p = 0; p < pred.points(); ++p) {
      if (!pair_valid(pred, gt, p, t)) continue;
      if (gt.visibility(p, t) < kVisibilityCut) continue;
      src.push_back(pred.positions[static_cast<size_t>(t)].row(p).transpose());
      dst.push_back(gt.positions[static_cast<size_t>(t)].row(p).transpose());
    }
  }
  if (src.size() < 3) return Sim3Transform{};
  MatX3<double> s(static_cast<Eigen::Index>(src.size()), 3);
  MatX3<double> d(static_cast<Eigen::Index>(dst.size()), 3);
  for (size_t i = 0; i < src.size(); ++i) {
    s.row(static_cast<Eigen::Index>(i)) = src[i].transpose();
    d.row(static_cast<Eigen::Index>(i)) = dst[i].transpose();
  }
  try {
    return umeyama_sim3(s, d);
  } catch (const std::invalid_argument&) {
    return Sim3Transform{};  // degenerate geometry: score unaligned
  }
}

TrajectorySet apply_alignment(const TrajectorySet& traj, const Sim3Transform& sim) {
  TrajectorySet out = traj;
  for (auto& frame : out.positions) frame = sim.apply(frame);
  return out;
}

TrajectorySet align_pred(const TrajectorySet& pred, const TrajectorySet& gt) {
  return apply_alignment(pred, fit_alignment(pred, gt));
}

// --- Metric primitives -------------------------------------------------------

std::vector<double> apd3d_fractions(const TrajectorySet& pred,
                                    const TrajectorySet& gt,
                                    const std::vector<double>& thresholds,
                                    bool include_occluded) {
  check_pairing(pred, gt);
  std::vector<double> fractions;
  fractions.reserve(thresholds.size());
  for (double delta : thresholds) {
    long eligible = 0, hits = 0;
    for (Eigen::Index t = 0; t < pred.frames(); ++t) {
      for (Eigen::Index p = 0; p < pred.points(); ++p) {
        if (!pair_valid(pred, gt, p, t)) continue;
        if (!include_occluded && gt.visibility(p, t) < kVisibilityCut) continue;
        ++eligible;
        if (pair_error(pred, gt, p, t) < delta) ++hits;
      }
    }
    fractions.push_back(eligible == 0
                            ? 1.0
                            : static_cast<double>(hits) / static_cast<double>(eligible));
  }
  return fractions;
}

double occlusion_accuracy(const TrajectorySet& pred, const TrajectorySet& gt) {
  check_pairing(pred, gt);
  long valid = 0, matches = 0;
  for (Eigen::Index t = 0; t < pred.frames(); ++t) {
    for (Eigen::Index p = 0; p < pred.points(); ++p) {
      if (!pair_valid(pred, gt, p, t)) continue;
      ++valid;
      const bool pv = pred.visibility(p, t) >= kVisibilityCut;
      const bool gv = gt.visibility(p, t) >= kVisibilityCut;
      if (pv == gv) ++matches;
    }
  }
  return valid == 0 ? 1.0 : static_cast<double>(matches) / static_cast<double>(valid);
}

std::vector<double> jaccard_fractions(const TrajectorySet& pred,
                                      const TrajectorySet& gt,
                                      const std::vector<double>& thresholds) {
  check_pairing(pred, gt);
  std::vector<double> scores;
  scores.reserve(thresholds.size());
  for (double delta : thresholds) {
    long tp = 0, fp = 0, fn = 0;
    for (Eigen::Index t = 0; t < pred.frames(); ++t) {
      for (Eigen::Index p = 0; p < pred.points(); ++p) {
        if (!pair_valid(pred, gt, p, t)) continue;
        const bool pv = pred.visibility(p, t) >= kVisibilityCut;
        const bool gv = gt.visibility(p, t) >= kVisibilityCut;
        const bool within = pair_error(pred, gt, p, t) < delta;
        if (pv && gv && within) ++tp;
        if (pv && (!gv || !within)) ++fp;
        if (gv && (!pv || !within)) ++fn;
      }
    }
    const long denom = tp + fp + fn;
    scores.push_back(denom == 0
                         ? 1.0
                         : static_cast<double>(tp) / static_cast<double>(denom));
  }
  return scores;
}

// --- Sequence evaluation ------------------------------------------------------

namespace {

double mean_of(const std::vector<double>& v) {
  require(!v.empty(), "metrics: empty threshold list");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

EvalResult evaluate_trajectories(const TrajectorySet& pred,
                                 const TrajectorySet& gt,
                                 const std::vector<double>& thresholds,
                                 bool include_occluded_in_location) {
  check_pairing(pred, gt);
  EvalResult res;
  res.alignment = fit_alignment(pred, gt);
  const TrajectorySet aligned = apply_alignment(pred, res.alignment);
  res.thresholds = thresholds;
  res.apd_fractions =
      apd3d_fractions(aligned, gt, thresholds, include_occluded_in_location);
  res.jaccard_scores = jaccard_fractions(aligned, gt, thresholds);
  res.apd3d = mean_of(res.apd_fractions);
  res.aj = mean_of(res.jaccard_scores);
  res.oa = occlusion_accuracy(aligned, gt);
  for (Eigen::Index t = 0; t < pred.frames(); ++t)
    for (Eigen::Index p = 0; p < pred.points(); ++p)
      if (pair_valid(pred, gt, p, t)) ++res.pairs_evaluated;
  return res;
}

std::vector<Eigen::Index> query_pixel_rows(int height, int width, int stride) {
  require(height > 0 && width > 0, "query_pixel_rows: empty grid");
  require(stride > 0, "query_pixel_rows: stride must be positive");
  std::vector<Eigen::Index> rows;
  for (int y = 0; y < height; y += stride)
    for (int x = 0; x < width; x += stride)
      rows.push_back(static_cast<Eigen::Index>(y) * width + x);
  return rows;
}

EvalResult evaluate_tracking(const std::vector<MatX3<double>>& pred_track,
                             const std::vector<VecX<double>>& pred_visibility,
                             const TrackClip& clip,
                             const EvalOptions& opts) {
  const int frames = clip.frame_count();
  const Eigen::Index pixels = clip.pixel_count();
  require(frames > 0, "evaluate_tracking: empty clip");
  require(static_cast<int>(pred_track.size()) == frames &&
              static_cast<int>(pred_visibility.size()) == frames,
          "evaluate_tracking: prediction frame count != clip frame count");
  require(static_cast<int>(clip.gt_track.size()) == frames &&
              static_cast<int>(clip.gt_vis.size()) == frames,
          "evaluate_tracking: clip ground truth is incomplete");
  for (int t = 0; t < frames; ++t) {
    require(pred_track[t].rows() == pixels && pred_visibility[t].rows() == pixels,
            "evaluate_tracking: prediction pixel count != clip pixel count");
    require(clip.gt_track[t].points.rows() == pixels &&
                clip.gt_vis[t].rows() == pixels,
            "evaluate_tracking: ground truth pixel count != clip pixel count");
  }

  const std::vector<Eigen::Index> queries =
      query_pixel_rows(clip.height, clip.width, opts.query_stride);
  const Eigen::Index n = static_cast<Eigen::Index>(queries.size());

  TrajectorySet pred, gt;
  pred.positions.resize(static_cast<size_t>(frames));
  gt.positions.resize(static_cast<size_t>(frames));
  pred.visibility.resize(n, frames);
  gt.visibility.resize(n, frames);
  pred.valid.resize(n, frames);
  gt.valid.resize(n, frames);
  for (int t = 0; t < frames; ++t) {
    MatX3<double>& pp = pred.positions[static_cast<size_t>(t)];
    MatX3<double>& gp = gt.positions[static_cast<size_t>(t)];
    pp.resize(n, 3);
    gp.resize(n, 3);
    for (Eigen::Index q = 0; q < n; ++q) {
      const Eigen::Index r = queries[static_cast<size_t>(q)];
      pp.row(q) = pred_track[t].row(r);
      gp.row(q) = clip.gt_track[t].points.row(r);
      pred.visibility(q, t) = pred_visibility[t](r);
      gt.visibility(q, t) = static_cast<double>(clip.gt_vis[t](r));
      pred.valid(q, t) = finite_row(pp, q) ? 1 : 0;
      gt.valid(q, t) = finite_row(gp, q) ? 1 : 0;
    }
  }

  double scale = 1.0;
  if (!clip.metric_units) {
    scale = opts.scene_scale > 0.0
                ? opts.scene_scale
                : compute_normalization(clip.recon, clip.depths).scale;
  }
  std::vector<double> thresholds = opts.thresholds;
  for (double& d : thresholds) d *= scale;

  return evaluate_trajectories(pred, gt, thresholds,
                               opts.include_occluded_in_location);
}

EvalResult mean_results(const std::vector<EvalResult>& results) {
  require(!results.empty(), "mean_results: no results");
  EvalResult out;
  const size_t k = results.front().thresholds.size();
  out.thresholds = results.front().thresholds;
  out.apd_fractions.assign(k, 0.0);
  out.jaccard_scores.assign(k, 0.0);
  for (const EvalResult& r : results) {
    require(r.apd_fractions.size() == k && r.jaccard_scores.size() == k,
            "mean_results: threshold counts differ");
    out.aj += r.aj;
    out.apd3d += r.apd3d;
    out.oa += r.oa;
    out.pairs_evaluated += r.pairs_evaluated;
    for (size_t i = 0; i < k; ++i) {
      out.apd_fractions[i] += r.apd_fractions[i];
      out.jaccard_scores[i] += r.jaccard_scores[i];
    }
  }
  const double n = static_cast<double>(results.size());
  out.aj /= n;
  out.apd3d /= n;
  out.oa /= n;
  for (size_t i = 0; i < k; ++i) {
    out.apd_fractions[i] /= n;
    out.jaccard_scores[i] /= n;
  }
  return out;
}

// --- Robustness sweeps --------------------------------------------------------

std::vector<int> sweep_stride_grid() {
  std::vector<int> grid;
  for (int s = 1; s <= 12; ++s) grid.push_back(s);
  return grid;
}

std::vector<int> sweep_length_grid() {
  std::vector<int> grid;
  for (int len = 12; len <= 120; len += 12) grid.push_back(len);
  return grid;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string csv = "mode,stride,length,aj,apd3d,oa,frac_0.1,frac_0.3,frac_0.5,frac_1.0\n";
  char buf[256];
  for (const SweepRow& row : rows) {
    require(row.result.apd_fractions.size() == 4,
            "sweep_csv: rows must carry four threshold fractions");
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  row.mode.c_str(), row.stride, row.length, row.result.aj,
                  row.result.apd3d, row.result.oa, row.result.apd_fractions[0],
                  row.result.apd_fractions[1], row.result.apd_fractions[2],
                  row.result.apd_fractions[3]);
    csv += buf;
  }
  return csv;
}

std::string eval_result_to_json(const EvalResult& result) {
  nlohmann::json j;
  j["aj"] = result.aj;
  j["apd3d"] = result.apd3d;
  j["oa"] = result.oa;
  j["thresholds"] = result.thresholds;
  j["apd_fractions"] = result.apd_fractions;
  j["jaccard_scores"] = result.jaccard_scores;
  j["pairs_evaluated"] = result.pairs_evaluated;

  nlohmann::json align;
  align["scale"] = result.alignment.scale;
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[static_cast<size_t>(r * 3 + c)] = result.alignment.R(r, c);
  align["rotation"] = rot;
  align["translation"] = std::vector<double>{result.alignment.t.x(), result.alignment.t.y(),
                                             result.alignment.t.z()};
  j["alignment"] = align;
  return j.dump(2);
}

}  // namespace tcr3
