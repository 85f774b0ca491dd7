#pragma once

// Tracking evaluation: 3D end-point-error metrics with similarity
// pre-alignment. Predictions are aligned to ground truth with a single
// Sim(3) fit per sequence, then scored as
//   - APD3D: fraction of pairs within each distance threshold, averaged
//     over thresholds,
//   - OA: occlusion-classification accuracy of the binarized visibility,
//   - AJ: average Jaccard, jointly penalizing location and visibility.
// Plus the stride/length robustness-sweep grids and their CSV table format.

#include <string>
#include <vector>

#include "tcr3/common.hpp"
#include "tcr3/geometry.hpp"
#include "tcr3/synthscene.hpp"

namespace tcr3 {

// --- Trajectory bundles ---------------------------------------------------

// A set of P point trajectories over T frames, stored frame-major to match
// per-frame pointmaps. visibility is in [0,1] for predictions and {0,1} for
// ground truth; valid(p, t) gates pairs out of every metric (non-finite or
// otherwise unevaluable samples).
struct TrajectorySet {
  std::vector<MatX3<double>> positions;   // T entries, each P x 3
  MatXd visibility;                       // P x T
  MatX<std::uint8_t> valid;               // P x T

  Eigen::Index points() const { return visibility.rows(); }
  Eigen::Index frames() const { return visibility.cols(); }
  void check() const;  // throws std::invalid_argument on inconsistent shapes
};

// Distance thresholds in meters (scaled by the scene's normalization scale
// for clips that do not declare metric units).
inline const std::vector<double> kEvalThresholds = {0.1, 0.3, 0.5, 1.0};

// Visibility probabilities at or above this value count as "visible".
inline constexpr double kVisibilityCut = 0.5;

// --- Alignment -------------------------------------------------------------

// Least-squares Sim(3) aligning predicted positions onto ground truth, fit
// once over every pair that is valid in both sets and ground-truth visible.
// Falls back to the identity when fewer than three usable pairs exist or the
// correspondence geometry is degenerate (umeyama would throw).
Sim3Transform fit_alignment(const TrajectorySet& pred, const TrajectorySet& gt);

// Applies `sim` to every position of `traj` (visibility/valid unchanged).
TrajectorySet apply_alignment(const TrajectorySet& traj, const Sim3Transform& sim);

// fit_alignment + apply_alignment in one step.
TrajectorySet align_pred(const TrajectorySet& pred, const TrajectorySet& gt);

// --- Metric primitives ------------------------------------------------------
// All three expect alignment to have been applied already. A (point, frame)
// pair participates only when valid in both sets. Ratios with an empty
// denominator are defined as 1.0 (vacuously perfect), so that a clip with no
// eligible pairs does not poison batch means.

// Per threshold: fraction of eligible pairs whose Euclidean end-point error
// is strictly below the threshold. Eligible = valid pairs that are
// ground-truth visible, unless include_occluded is set (then all valid
// pairs). Returns the per-threshold fractions; mean of these is APD3D.
std::vector<double> apd3d_fractions(const TrajectorySet& pred,
                                    const TrajectorySet& gt,
                                    const std::vector<double>& thresholds,
                                    bool include_occluded = false);

// Fraction of valid pairs whose binarized predicted visibility matches the
// ground-truth label.
double occlusion_accuracy(const TrajectorySet& pred, const TrajectorySet& gt);

// Per threshold d: TP = predicted visible and gt visible and error < d;
// FP = predicted visible and (gt occluded or error >= d); FN = gt visible
// and (predicted occluded or error >= d); J(d) = TP / (TP + FP + FN).
// Returns the per-threshold Jaccard scores; mean of these is AJ.
std::vector<double> jaccard_fractions(const TrajectorySet& pred,
                                      const TrajectorySet& gt,
                                      const std::vector<double>& thresholds);

// --- Sequence evaluation ----------------------------------------------------

struct EvalOptions {
  // Evaluate queries on the reference-frame pixel grid at this stride in x
  // and y (1 = every pixel).
  int query_stride = 1;
  // Base thresholds in meters, before any scene scaling.
  std::vector<double> thresholds = kEvalThresholds;
  // Count ground-truth-occluded pairs in the location metrics too.
  bool include_occluded_in_location = false;
  // Override for the scene scale applied to thresholds; 0 derives it from
  // the clip's reconstruction pointmaps. Ignored when the clip declares
  // metric units (thresholds are then literal meters).
  double scene_scale = 0.0;
};

struct EvalResult {
  double aj = 0.0;
  double apd3d = 0.0;
  double oa = 0.0;
  std::vector<double> thresholds;         // effective values used, meters
  std::vector<double> apd_fractions;      // per threshold
  std::vector<double> jaccard_scores;     // per threshold
  Sim3Transform alignment;                // transform applied to predictions
  Eigen::Index pairs_evaluated = 0;       // valid (point, frame) pairs
};

// Aligns and scores one pair of trajectory sets against literal `thresholds`.
EvalResult evaluate_trajectories(const TrajectorySet& pred,
                                 const TrajectorySet& gt,
                                 const std::vector<double>& thresholds,
                                 bool include_occluded_in_location = false);

// Full protocol against a clip's ground truth: subsample query pixels on the
// reference-frame grid, extract predicted and ground-truth trajectories,
// scale thresholds by the scene's normalization scale (unless metric units),
// align once, and score. pred_track holds one (H*W) x 3 pointmap per frame;
// pred_visibility one (H*W) probability vector per frame.
EvalResult evaluate_tracking(const std::vector<MatX3<double>>& pred_track,
                             const std::vector<VecX<double>>& pred_visibility,
                             const TrackClip& clip,
                             const EvalOptions& opts = {});

// Row indices of the query pixels for a height x width grid at `stride`
// (pixels with y % stride == 0 and x % stride == 0, row-major order).
std::vector<Eigen::Index> query_pixel_rows(int height, int width, int stride);

// Macro-average over sequences: aj/apd3d/oa and the per-threshold vectors
// are averaged elementwise; alignment is left at identity. All results must
// share a threshold count; thresholds are taken from the first entry.
EvalResult mean_results(const std::vector<EvalResult>& results);

// --- Robustness sweeps -------------------------------------------------------

// Grids from the robustness protocol: temporal stride 1..12 at fixed clip
// length, and clip length 12..120 in steps of 12 at stride 1.
std::vector<int> sweep_stride_grid();
std::vector<int> sweep_length_grid();

// One row of a sweep table. mode is "stride" or "length" (which grid the row
// belongs to); stride/length record the generating parameters.
struct SweepRow {
  std::string mode;
  int stride = 1;
  int length = 0;
  EvalResult result;
};

// CSV table with column order
//   mode,stride,length,aj,apd3d,oa,frac_0.1,frac_0.3,frac_0.5,frac_1.0
// (frac_* are the APD3D per-threshold fractions; rows must carry exactly
// four). Includes the header line; rows appear in input order.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// JSON form of an evaluation: scores, effective thresholds, per-threshold
// fractions, the fitted alignment (scale, rotation row-major, translation),
// and the pair count.
std::string eval_result_to_json(const EvalResult& result);

}  // namespace tcr3
