// Microbenchmarks for the hot paths: rotary tables and application, full
// attention, the end-to-end forward pass, one optimizer step, scene
// rendering, and metric evaluation. Sizes mirror the smoke-training setup.

#include <benchmark/benchmark.h>

#include <vector>

#include "tcr3/dit.hpp"
#include "tcr3/inference.hpp"
#include "tcr3/metrics.hpp"
#include "tcr3/model.hpp"
#include "tcr3/rng.hpp"
#include "tcr3/synthscene.hpp"
#include "tcr3/trainer.hpp"

using namespace tcr3;

namespace {

ModelConfig bench_config() {
  ModelConfig cfg;
  cfg.layers = 4;
  cfg.dim = 64;
  cfg.heads = 4;
  cfg.patch = 4;
  cfg.channels = 48;
  cfg.image_h = 32;
  cfg.image_w = 32;
  cfg.max_frames = 4;
  return cfg;
}

TrackClip bench_clip() {
  return generate_clip(make_scene_library(1, 42, 32, 32, 4)[0]);
}

void BM_RopeTables(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  RopeConfig rc;
  rc.dim_t = 8;
  rc.dim_x = 4;
  rc.dim_y = 4;
  Rng rng(1);
  MatXd positions(n, 3);
  for (Eigen::Index i = 0; i < positions.size(); ++i)
    positions.data()[i] = rng.uniform(0.0, 16.0);
  for (auto _ : state) {
    MatX<float> cos_tab, sin_tab;
    rope_tables(positions, rc, &cos_tab, &sin_tab);
    benchmark::DoNotOptimize(cos_tab.data());
  }
}
BENCHMARK(BM_RopeTables)->Arg(512)->Arg(2048);

void BM_RopeApply(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const int heads = 4, dim = 64;
  RopeConfig rc;
  rc.dim_t = 8;
  rc.dim_x = 4;
  rc.dim_y = 4;
  Rng rng(2);
  MatXd positions(n, 3);
  for (Eigen::Index i = 0; i < positions.size(); ++i)
    positions.data()[i] = rng.uniform(0.0, 16.0);
  MatX<float> cos_tab, sin_tab;
  rope_tables(positions, rc, &cos_tab, &sin_tab);
  MatX<float> x(n, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
  for (auto _ : state) {
    MatX<float> y = x;
    rope_apply(y, cos_tab, sin_tab, heads);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_RopeApply)->Arg(512)->Arg(2048);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const int head_dim = 16;  // one head of the d=64, 4-head setup
  Rng rng(3);
  MatX<float> q(n, head_dim), k(n, head_dim), v(n, head_dim);
  for (auto* m : {&q, &k, &v})
    for (Eigen::Index i = 0; i < m->size(); ++i)
      m->data()[i] = static_cast<float>(rng.normal());
  for (auto _ : state) {
    MatX<float> out = scaled_dot_attention(q, k, v);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Attention)->Arg(512)->Arg(1024);

void BM_ModelForward(benchmark::State& state) {
  TrackerModel<float> model;
  model.init(bench_config(), 7);
  const TrackClip clip = bench_clip();
  const TrainSample<float> sample = prepare_sample<float>(clip, model.cfg.flags);
  for (auto _ : state) {
    PipelineOutput<float> out =
        model_forward<float>(model, sample.frames, sample.norm_pm, sample.times, nullptr);
    benchmark::DoNotOptimize(out.delta.data());
  }
}
BENCHMARK(BM_ModelForward);

void BM_TrainStep(benchmark::State& state) {
  TrackerModel<float> model;
  model.init(bench_config(), 7);
  const std::vector<TrackClip> clips = {bench_clip()};
  TrainConfig tc;
  tc.steps = 1;
  for (auto _ : state) {
    const std::vector<TrainLogEntry> log = train_model(model, clips, tc);
    benchmark::DoNotOptimize(log.back().loss);
  }
}
BENCHMARK(BM_TrainStep);

void BM_RenderClip(benchmark::State& state) {
  const SceneSpec spec = make_scene_library(1, 42, 32, 32, 4)[0];
  for (auto _ : state) {
    const TrackClip clip = generate_clip(spec);
    benchmark::DoNotOptimize(clip.frames.back().data());
  }
}
BENCHMARK(BM_RenderClip);

void BM_Evaluate(benchmark::State& state) {
  TrackerModel<float> model;
  model.init(bench_config(), 7);
  const TrackClip clip = bench_clip();
  const PredictResult res = predict_long_video(model, clip);
  for (auto _ : state) {
    const EvalResult r = evaluate_tracking(res.track, res.visibility, clip);
    benchmark::DoNotOptimize(r.aj);
  }
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
