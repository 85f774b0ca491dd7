#pragma once

// Dense 3D tracking transformer: a stack of pre-norm attention + MLP blocks
// over latent-pixel tokens with full (unmasked) attention and 3D rotary
// position encoding.
//
// Token layout: a pass over 1 + F frames (reference first) produces two
// streams of (1 + F) * h * w tokens each — the geometry stream (one latent
// pixel per frame cell) followed by the track stream (the reference frame's
// latents replicated once per frame, carrying each frame's temporal rotary
// index so attention can tell which frame a track token describes). Every
// token is a 2c-channel latent pixel: c latent channels from the RGB encoder
// concatenated with c from the pointmap encoder.
//
// Rotary encoding: each head's d_k channels are split into (dim_t, dim_x,
// dim_y) sections, default (d_k/2, d_k/4, d_k/4). Channel pair m of a
// section with dim_a channels rotates by coord * theta^(-2m / dim_a), so
// attention scores depend only on relative (t, x, y) offsets.
//
// The backbone runs at a single fixed denoising timestep, so the timestep
// conditioning reduces to a constant additive vector; it is folded into the
// input embedding's bias rather than kept as a separate input.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tcr3/common.hpp"
#include "tcr3/config.hpp"
#include "tcr3/nn.hpp"
#include "tcr3/rng.hpp"

namespace tcr3 {

// --- Token assembly ---------------------------------------------------------

template <typename T>
struct TokenSequence {
  MatX<T> tokens;      // N x 2c
  MatXd positions;     // N x 3 rotary coordinates, columns (t, x, y)
  Eigen::Index n_geometry = 0;  // rows [0, n_geometry) are geometry tokens
};

// Builds the token sequence for one pass from per-frame geometry latents
// (each (h*w) x 2c, reference frame first) and per-frame temporal indices.
// The track stream replicates the reference latent (or, with first-frame
// anchoring disabled, each frame's own latent) and carries each frame's
// temporal index (or the reference index when temporal alignment is
// disabled).
template <typename T>
TokenSequence<T> assemble_tokens(const std::vector<MatX<T>>& geometry_latents,
                                 int latent_h, int latent_w,
                                 const std::vector<double>& time_indices,
                                 const AblationFlags& flags) {
  require(!geometry_latents.empty(), "assemble_tokens: no frames");
  require(time_indices.size() == geometry_latents.size(),
          "assemble_tokens: one temporal index per frame required");
  const Eigen::Index cells = static_cast<Eigen::Index>(latent_h) * latent_w;
  const Eigen::Index width = geometry_latents[0].cols();
  for (const auto& g : geometry_latents)
    require(g.rows() == cells && g.cols() == width,
            "assemble_tokens: latent grid shape mismatch");

  const int n_frames = static_cast<int>(geometry_latents.size());
  TokenSequence<T> seq;
  seq.n_geometry = static_cast<Eigen::Index>(n_frames) * cells;
  seq.tokens.resize(2 * seq.n_geometry, width);
  seq.positions.resize(2 * seq.n_geometry, 3);

  auto fill_positions = [&](Eigen::Index row0, double t) {
    for (int gy = 0; gy < latent_h; ++gy)
      for (int gx = 0; gx < latent_w; ++gx) {
        const Eigen::Index r = row0 + static_cast<Eigen::Index>(gy) * latent_w + gx;
        seq.positions(r, 0) = t;
        seq.positions(r, 1) = gx;
        seq.positions(r, 2) = gy;
      }
  };

  Eigen::Index row = 0;
  for (int j = 0; j < n_frames; ++j, row += cells) {
    seq.tokens.middleRows(row, cells) = geometry_latents[j];
    fill_positions(row, time_indices[j]);
  }
  for (int j = 0; j < n_frames; ++j, row += cells) {
    const auto& src =
        flags.first_frame_anchoring ? geometry_latents[0] : geometry_latents[j];
    seq.tokens.middleRows(row, cells) = src;
    const double t =
        flags.temporal_rope_alignment ? time_indices[j] : time_indices[0];
    fill_positions(row, t);
  }
  return seq;
}

// Row range of the track stream's tokens for frame j.
inline std::pair<Eigen::Index, Eigen::Index> track_rows(Eigen::Index n_geometry,
                                                        int n_frames, int j) {
  const Eigen::Index cells = n_geometry / n_frames;
  return {n_geometry + static_cast<Eigen::Index>(j) * cells, cells};
}

// --- Rotary position encoding ----------------------------------------------

struct RopeConfig {
  int dim_t = 0, dim_x = 0, dim_y = 0;  // per-head channel split (each even)
  double theta = 10000.0;

  int head_dim() const { return dim_t + dim_x + dim_y; }
  int pairs() const { return head_dim() / 2; }

  // Per-pair rotation frequency and the axis (0=t, 1=x, 2=y) it reads.
  void pair_frequencies(std::vector<double>* freq, std::vector<int>* axis) const {
    freq->clear();
    axis->clear();
    const int dims[3] = {dim_t, dim_x, dim_y};
    for (int a = 0; a < 3; ++a)
      for (int m = 0; m < dims[a] / 2; ++m) {
        freq->push_back(std::pow(theta, -2.0 * m / dims[a]));
        axis->push_back(a);
      }
  }
};

// Precomputes cos/sin tables, one column per channel pair of a single head
// (every head uses the same split, so the table is shared across heads).
// Angles are evaluated in double regardless of T.
template <typename T>
void rope_tables(const MatXd& positions, const RopeConfig& rc, MatX<T>* cos_tab,
                 MatX<T>* sin_tab) {
  std::vector<double> freq;
  std::vector<int> axis;
  rc.pair_frequencies(&freq, &axis);
  const Eigen::Index n = positions.rows();
  const Eigen::Index np = static_cast<Eigen::Index>(freq.size());
  cos_tab->resize(n, np);
  sin_tab->resize(n, np);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index q = 0; q < np; ++q) {
      const double angle = positions(i, axis[q]) * freq[q];
      (*cos_tab)(i, q) = static_cast<T>(std::cos(angle));
      (*sin_tab)(i, q) = static_cast<T>(std::sin(angle));
    }
}

// Rotates each channel pair of every head in place:
// (a, b) -> (a cos - b sin, a sin + b cos); `inverse` applies the opposite
// rotation (also the exact adjoint, since rotations are orthogonal).
template <typename T>
void rope_apply(MatX<T>& x, const MatX<T>& cos_tab, const MatX<T>& sin_tab,
                int heads, bool inverse = false) {
  const Eigen::Index pairs = cos_tab.cols();
  require(x.cols() == static_cast<Eigen::Index>(heads) * pairs * 2,
          "rope_apply: column count must be heads * head_dim");
  require(x.rows() == cos_tab.rows(), "rope_apply: table row mismatch");
  const T sign = inverse ? T(-1) : T(1);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index off = static_cast<Eigen::Index>(h) * pairs * 2;
      for (Eigen::Index q = 0; q < pairs; ++q) {
        const T c = cos_tab(i, q), s = sign * sin_tab(i, q);
        const T a = x(i, off + 2 * q), b = x(i, off + 2 * q + 1);
        x(i, off + 2 * q) = a * c - b * s;
        x(i, off + 2 * q + 1) = a * s + b * c;
      }
    }
}

// --- Projection initializers -------------------------------------------------

// Doubles a projection's input dimension by tiling: the returned (2n) x m
// matrix maps a concatenated input [a ; b] to base(a) + base(b).
template <typename T>
MatX<T> tile_input_projection(const MatX<T>& base) {
  MatX<T> out(2 * base.rows(), base.cols());
  out.topRows(base.rows()) = base;
  out.bottomRows(base.rows()) = base;
  return out;
}

// Doubles a projection's output dimension: the first half of the output
// channels applies the base map, the second half starts at exactly zero.
template <typename T>
MatX<T> extend_output_projection(const MatX<T>& base) {
  MatX<T> out = MatX<T>::Zero(base.rows(), 2 * base.cols());
  out.leftCols(base.cols()) = base;
  return out;
}

// --- Attention ---------------------------------------------------------------

// Single-head scaled dot-product attention. Returns softmax(q k^T / sqrt(d_k)) v
// and optionally exposes the softmax matrix.
template <typename T>
MatX<T> scaled_dot_attention(const MatX<T>& q, const MatX<T>& k, const MatX<T>& v,
                             MatX<T>* attn = nullptr) {
  require(q.cols() == k.cols() && k.rows() == v.rows(),
          "scaled_dot_attention: shape mismatch");
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.cols())));
  MatX<T> a = softmax_rows(MatX<T>(q * k.transpose() * scale));
  MatX<T> y = a * v;
  if (attn) *attn = std::move(a);
  return y;
}

// Capture request for attention maps: which token rows to record.
struct TraceRequest {
  std::vector<Eigen::Index> rows;
};

// Captured attention, restricted to geometry-token columns and renormalized
// so each captured row sums to 1. weights[layer][head] has shape
// (rows.size()) x n_geometry.
template <typename T>
struct AttentionTrace {
  Eigen::Index n_geometry = 0;
  std::vector<Eigen::Index> rows;
  std::vector<std::vector<MatX<T>>> weights;
};

// --- Transformer -------------------------------------------------------------

template <typename T>
struct DitBlock {
  LayerNorm<T> ln1, ln2;
  Linear<T> wq, wk, wv, wo;
  Linear<T> fc1, fc2;  // MLP with 4x expansion and GELU
};

template <typename T>
struct DitTape {
  typename Linear<T>::Cache embed;
  MatX<T> cos_tab, sin_tab;
  struct Block {
    typename LayerNorm<T>::Cache ln1, ln2;
    typename Linear<T>::Cache q, k, v, o, fc1, fc2;
    MatX<T> q_rot, k_rot;          // post-rotation projections, N x d
    MatX<T> v_full;                // value projections, N x d
    std::vector<MatX<T>> attn;     // per-head softmax matrices, N x N
    MatX<T> fc1_out;               // pre-GELU MLP activations
  };
  std::vector<Block> blocks;
  typename LayerNorm<T>::Cache final_ln;
  typename Linear<T>::Cache out;
};

template <typename T>
struct DitModel {
  ModelConfig cfg;
  Linear<T> embed;    // 2c -> d; bias absorbs the constant timestep term
  std::vector<DitBlock<T>> blocks;
  LayerNorm<T> final_ln;
  Linear<T> out_proj;  // d -> 2c: first c channels track residual latent,
                       // last c visibility latent (zero-initialized)

  RopeConfig rope() const {
    RopeConfig rc;
    cfg.rope_split(&rc.dim_t, &rc.dim_x, &rc.dim_y);
    rc.theta = cfg.rope_theta;
    return rc;
  }

  void init(const ModelConfig& config, Rng& rng) {
    cfg = config;
    cfg.validate();
    const int d = cfg.dim;
    const int c = cfg.channels;
    const double stddev = 0.02;
    // Residual-branch output projections are scaled down by sqrt(2 * layers),
    // the usual deep-residual-stack correction.
    const double res_std = stddev / std::sqrt(2.0 * cfg.layers);

    // Input embedding: tile a c -> d base so a fresh model treats the RGB
    // and pointmap halves of each token symmetrically.
    embed.init_shape("dit.embed", ParamKind::kProjection, 2 * c, d);
    {
      Param<T> base;
      base.init_shape("base", ParamKind::kProjection, c, d);
      init_normal(base, rng, stddev);
      embed.W.value = tile_input_projection(base.value);
    }

    blocks.assign(cfg.layers, DitBlock<T>{});
    for (int i = 0; i < cfg.layers; ++i) {
      const std::string prefix = "dit.block" + std::to_string(i) + ".";
      auto& blk = blocks[i];
      blk.ln1.init_shape(prefix + "ln1", ParamKind::kBase, d);
      blk.ln2.init_shape(prefix + "ln2", ParamKind::kBase, d);
      blk.wq.init_shape(prefix + "wq", ParamKind::kBase, d, d);
      blk.wk.init_shape(prefix + "wk", ParamKind::kBase, d, d);
      blk.wv.init_shape(prefix + "wv", ParamKind::kBase, d, d);
      blk.wo.init_shape(prefix + "wo", ParamKind::kBase, d, d);
      blk.fc1.init_shape(prefix + "fc1", ParamKind::kBase, d, 4 * d);
      blk.fc2.init_shape(prefix + "fc2", ParamKind::kBase, 4 * d, d);
      init_normal(blk.wq.W, rng, stddev);
      init_normal(blk.wk.W, rng, stddev);
      init_normal(blk.wv.W, rng, stddev);
      init_normal(blk.wo.W, rng, res_std);
      init_normal(blk.fc1.W, rng, stddev);
      init_normal(blk.fc2.W, rng, res_std);
      if (cfg.lora_rank > 0) {
        for (Linear<T>* lin : {&blk.wq, &blk.wk, &blk.wv, &blk.wo, &blk.fc1, &blk.fc2}) {
          lin->attach_lora(lin->W.name.substr(0, lin->W.name.size() - 2),
                           cfg.lora_rank, cfg.lora_alpha);
          init_normal(lin->A, rng, stddev);  // B stays zero: adapters start neutral
        }
      }
    }

    final_ln.init_shape("dit.final_ln", ParamKind::kBase, d);

    // Output projection: extend a d -> c base so the track-residual half
    // starts from the base map and the visibility half starts at zero.
    out_proj.init_shape("dit.out_proj", ParamKind::kProjection, d, 2 * c);
    {
      Param<T> base;
      base.init_shape("base", ParamKind::kProjection, d, c);
      init_normal(base, rng, stddev);
      out_proj.W.value = extend_output_projection(base.value);
    }
  }

  MatX<T> forward(const TokenSequence<T>& seq, DitTape<T>* tape,
                  const TraceRequest* trace_req = nullptr,
                  AttentionTrace<T>* trace = nullptr) const {
    require(seq.tokens.cols() == embed.in_dim(),
            "dit: token width must be 2 * channels");
    require(seq.positions.rows() == seq.tokens.rows(),
            "dit: one position per token required");
    const Eigen::Index n = seq.tokens.rows();
    const int heads = cfg.heads;
    const Eigen::Index dk = cfg.head_dim();
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));

    MatX<T> cos_tab, sin_tab;
    rope_tables(seq.positions, rope(), &cos_tab, &sin_tab);

    if (tape) tape->blocks.assign(blocks.size(), typename DitTape<T>::Block{});
    if (trace) {
      trace->n_geometry = seq.n_geometry;
      trace->rows = trace_req ? trace_req->rows : std::vector<Eigen::Index>{};
      trace->weights.assign(blocks.size(), {});
    }

    MatX<T> x = embed.forward(seq.tokens, tape ? &tape->embed : nullptr);
    for (size_t layer = 0; layer < blocks.size(); ++layer) {
      const auto& blk = blocks[layer];
      auto* bt = tape ? &tape->blocks[layer] : nullptr;

      MatX<T> h = blk.ln1.forward(x, bt ? &bt->ln1 : nullptr);
      MatX<T> q = blk.wq.forward(h, bt ? &bt->q : nullptr);
      MatX<T> k = blk.wk.forward(h, bt ? &bt->k : nullptr);
      MatX<T> v = blk.wv.forward(h, bt ? &bt->v : nullptr);
      rope_apply(q, cos_tab, sin_tab, heads);
      rope_apply(k, cos_tab, sin_tab, heads);

      MatX<T> attn_cat(n, cfg.dim);
      if (bt) bt->attn.resize(heads);
      if (trace) trace->weights[layer].resize(heads);
      for (int hd = 0; hd < heads; ++hd) {
        const Eigen::Index off = hd * dk;
        MatX<T> scores = q.middleCols(off, dk) * k.middleCols(off, dk).transpose();
        scores *= scale;
        MatX<T> a = softmax_rows(scores);
        attn_cat.middleCols(off, dk).noalias() = a * v.middleCols(off, dk);
        if (trace && trace_req && !trace_req->rows.empty()) {
          MatX<T> sel(static_cast<Eigen::Index>(trace_req->rows.size()),
                      seq.n_geometry);
          for (size_t r = 0; r < trace_req->rows.size(); ++r) {
            require(trace_req->rows[r] >= 0 && trace_req->rows[r] < n,
                    "dit: trace row out of range");
            sel.row(static_cast<Eigen::Index>(r)) =
                a.row(trace_req->rows[r]).head(seq.n_geometry);
            sel.row(static_cast<Eigen::Index>(r)) /=
                sel.row(static_cast<Eigen::Index>(r)).sum();
          }
          trace->weights[layer][hd] = std::move(sel);
        }
        if (bt) bt->attn[hd] = std::move(a);
      }
      MatX<T> o = blk.wo.forward(attn_cat, bt ? &bt->o : nullptr);
      x += o;

      MatX<T> h2 = blk.ln2.forward(x, bt ? &bt->ln2 : nullptr);
      MatX<T> a1 = blk.fc1.forward(h2, bt ? &bt->fc1 : nullptr);
      MatX<T> g = gelu(a1);
      MatX<T> m = blk.fc2.forward(g, bt ? &bt->fc2 : nullptr);
      x += m;

      if (bt) {
        bt->q_rot = std::move(q);
        bt->k_rot = std::move(k);
        bt->v_full = std::move(v);
        bt->fc1_out = std::move(a1);
      }
    }
    MatX<T> y = final_ln.forward(x, tape ? &tape->final_ln : nullptr);
    y = out_proj.forward(y, tape ? &tape->out : nullptr);
    if (tape) {
      tape->cos_tab = std::move(cos_tab);
      tape->sin_tab = std::move(sin_tab);
    }
    return y;
  }

  // Reverse pass; accumulates parameter gradients and returns the gradient
  // w.r.t. the input tokens.
  MatX<T> backward(const MatX<T>& d_out, const DitTape<T>& tape) {
    const int heads = cfg.heads;
    const Eigen::Index dk = cfg.head_dim();
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));

    MatX<T> dx = out_proj.backward(d_out, tape.out);
    dx = final_ln.backward(dx, tape.final_ln);

    for (int layer = static_cast<int>(blocks.size()) - 1; layer >= 0; --layer) {
      auto& blk = blocks[layer];
      const auto& bt = tape.blocks[layer];
      const Eigen::Index n = dx.rows();

      // MLP branch: x_out = x_mid + fc2(gelu(fc1(ln2(x_mid)))).
      {
        MatX<T> dg = blk.fc2.backward(dx, bt.fc2);
        MatX<T> da = gelu_backward(dg, bt.fc1_out);
        MatX<T> dh2 = blk.fc1.backward(da, bt.fc1);
        dx += blk.ln2.backward(dh2, bt.ln2);
      }

      // Attention branch: x_mid = x_in + wo(attention(ln1(x_in))).
      {
        MatX<T> d_attn_cat = blk.wo.backward(dx, bt.o);
        MatX<T> dq(n, cfg.dim), dkm(n, cfg.dim), dv(n, cfg.dim);
        for (int hd = 0; hd < heads; ++hd) {
          const Eigen::Index off = hd * dk;
          const MatX<T>& a = bt.attn[hd];
          auto d_oh = d_attn_cat.middleCols(off, dk);
          MatX<T> d_a = d_oh * bt.v_full.middleCols(off, dk).transpose();
          dv.middleCols(off, dk).noalias() = a.transpose() * d_oh;
          MatX<T> d_scores = softmax_rows_backward(d_a, a);
          d_scores *= scale;
          dq.middleCols(off, dk).noalias() = d_scores * bt.k_rot.middleCols(off, dk);
          dkm.middleCols(off, dk).noalias() =
              d_scores.transpose() * bt.q_rot.middleCols(off, dk);
        }
        rope_apply(dq, tape.cos_tab, tape.sin_tab, heads, /*inverse=*/true);
        rope_apply(dkm, tape.cos_tab, tape.sin_tab, heads, /*inverse=*/true);
        MatX<T> dh = blk.wq.backward(dq, bt.q);
        dh += blk.wk.backward(dkm, bt.k);
        dh += blk.wv.backward(dv, bt.v);
        dx += blk.ln1.backward(dh, bt.ln1);
      }
    }
    return embed.backward(dx, tape.embed);
  }

  void collect(std::vector<Param<T>*>* out) {
    embed.collect(out);
    for (auto& blk : blocks) {
      blk.ln1.collect(out);
      blk.wq.collect(out);
      blk.wk.collect(out);
      blk.wv.collect(out);
      blk.wo.collect(out);
      blk.ln2.collect(out);
      blk.fc1.collect(out);
      blk.fc2.collect(out);
    }
    final_ln.collect(out);
    out_proj.collect(out);
  }
};

}  // namespace tcr3
