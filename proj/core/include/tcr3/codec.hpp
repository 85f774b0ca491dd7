#pragma once

// Linear patch codec: maps images and pointmaps between pixel space and a
// latent grid of patch tokens. Each p x p patch of a 3-channel map flattens
// to a 3p^2 vector and passes through a per-patch linear layer, so the whole
// codec is a pair of matrix multiplies — cheap, exactly invertible when the
// latent width matches the patch dimension, and differentiable by
// construction.
//
// Patch vector layout: entry (py * p + px) * 3 + ch, i.e. pixels in row-major
// order within the patch with channels innermost.

#include <Eigen/QR>

#include <cmath>
#include <string>
#include <vector>

#include "tcr3/common.hpp"
#include "tcr3/nn.hpp"
#include "tcr3/rng.hpp"

namespace tcr3 {

// (H*W) x ch pixel rows -> (h*w) x (ch*p*p) patch rows, h = H/p, w = W/p.
// Patch rows are in row-major latent-grid order.
template <typename T>
MatX<T> patchify(const MatX<T>& image, int height, int width, int p) {
  require(p > 0 && height % p == 0 && width % p == 0,
          "patchify: image size must be divisible by the patch edge");
  require(image.rows() == static_cast<Eigen::Index>(height) * width,
          "patchify: row count must equal height * width");
  const Eigen::Index ch = image.cols();
  const int h = height / p, w = width / p;
  MatX<T> out(static_cast<Eigen::Index>(h) * w, ch * p * p);
  for (int gy = 0; gy < h; ++gy)
    for (int gx = 0; gx < w; ++gx) {
      const Eigen::Index cell = static_cast<Eigen::Index>(gy) * w + gx;
      for (int py = 0; py < p; ++py)
        for (int px = 0; px < p; ++px) {
          const Eigen::Index pixel =
              static_cast<Eigen::Index>(gy * p + py) * width + (gx * p + px);
          for (Eigen::Index c = 0; c < ch; ++c)
            out(cell, (static_cast<Eigen::Index>(py) * p + px) * ch + c) =
                image(pixel, c);
        }
    }
  return out;
}

// Exact inverse of patchify (both are permutations of the same entries, so
// each is also the adjoint of the other).
template <typename T>
MatX<T> unpatchify(const MatX<T>& patches, int height, int width, int p) {
  require(p > 0 && height % p == 0 && width % p == 0,
          "unpatchify: image size must be divisible by the patch edge");
  const int h = height / p, w = width / p;
  require(patches.rows() == static_cast<Eigen::Index>(h) * w,
          "unpatchify: patch row count mismatch");
  require(patches.cols() % (static_cast<Eigen::Index>(p) * p) == 0,
          "unpatchify: column count not a multiple of p*p");
  const Eigen::Index ch = patches.cols() / (static_cast<Eigen::Index>(p) * p);
  MatX<T> out(static_cast<Eigen::Index>(height) * width, ch);
  for (int gy = 0; gy < h; ++gy)
    for (int gx = 0; gx < w; ++gx) {
      const Eigen::Index cell = static_cast<Eigen::Index>(gy) * w + gx;
      for (int py = 0; py < p; ++py)
        for (int px = 0; px < p; ++px) {
          const Eigen::Index pixel =
              static_cast<Eigen::Index>(gy * p + py) * width + (gx * p + px);
          for (Eigen::Index c = 0; c < ch; ++c)
            out(pixel, c) =
                patches(cell, (static_cast<Eigen::Index>(py) * p + px) * ch + c);
        }
    }
  return out;
}

// Patch codec with two encoders (RGB and pointmap, each 3p^2 -> c) and two
// decoders (track residual and visibility, each c -> 3p^2).
template <typename T>
struct Codec {
  int patch = 0;
  int channels = 0;  // latent channels c per modality
  Linear<T> enc_rgb, enc_pm;
  Linear<T> dec_track, dec_vis;

  void init_shapes(int p, int c) {
    require(p > 0 && c > 0, "codec: patch and channels must be positive");
    patch = p;
    channels = c;
    const Eigen::Index pd = static_cast<Eigen::Index>(3) * p * p;
    enc_rgb.init_shape("codec.enc_rgb", ParamKind::kCodec, pd, c);
    enc_pm.init_shape("codec.enc_pm", ParamKind::kCodec, pd, c);
    dec_track.init_shape("codec.dec_track", ParamKind::kCodec, c, pd);
    dec_vis.init_shape("codec.dec_vis", ParamKind::kCodec, c, pd);
  }

  // Random init. When c == 3p^2 the encoders get orthonormal matrices (QR of
  // a seeded Gaussian) and the matching decoder is the transpose, so
  // decode(encode(x)) == x up to round-off; otherwise scaled Gaussian.
  void init_params(Rng& rng) {
    const Eigen::Index pd = static_cast<Eigen::Index>(3) * patch * patch;
    if (channels == pd) {
      enc_rgb.W.value = random_orthonormal(pd, rng);
      enc_pm.W.value = random_orthonormal(pd, rng);
      dec_track.W.value = enc_pm.W.value.transpose();
      dec_vis.W.value = enc_pm.W.value.transpose();
    } else {
      const double stddev = 1.0 / std::sqrt(static_cast<double>(pd));
      init_normal(enc_rgb.W, rng, stddev);
      init_normal(enc_pm.W, rng, stddev);
      const double dec_std = 1.0 / std::sqrt(static_cast<double>(channels));
      init_normal(dec_track.W, rng, dec_std);
      init_normal(dec_vis.W, rng, dec_std);
    }
  }

  // Latent grid side lengths for a given image size.
  int latent_h(int image_h) const { return image_h / patch; }
  int latent_w(int image_w) const { return image_w / patch; }

  // (H*W) x 3 map -> (h*w) x c latent.
  MatX<T> encode_rgb(const MatX<T>& image, int height, int width,
                     typename Linear<T>::Cache* cache = nullptr) const {
    return enc_rgb.forward(patchify(image, height, width, patch), cache);
  }
  MatX<T> encode_pointmap(const MatX<T>& pm, int height, int width,
                          typename Linear<T>::Cache* cache = nullptr) const {
    return enc_pm.forward(patchify(pm, height, width, patch), cache);
  }

  // (h*w) x c latent -> (H*W) x 3 map.
  MatX<T> decode_track(const MatX<T>& latent, int height, int width,
                       typename Linear<T>::Cache* cache = nullptr) const {
    return unpatchify(dec_track.forward(latent, cache), height, width, patch);
  }

  // Visibility logits: decode to a 3-channel map and average the channels
  // into one logit per pixel. Returns (H*W) x 1.
  MatX<T> decode_visibility_logits(const MatX<T>& latent, int height, int width,
                                   typename Linear<T>::Cache* cache = nullptr) const {
    MatX<T> three = unpatchify(dec_vis.forward(latent, cache), height, width, patch);
    MatX<T> logits(three.rows(), 1);
    for (Eigen::Index i = 0; i < three.rows(); ++i)
      logits(i, 0) = three.row(i).mean();
    return logits;
  }

  // Visibility probabilities: logits squashed through the logistic, (0,1).
  MatX<T> decode_visibility(const MatX<T>& latent, int height, int width,
                            typename Linear<T>::Cache* cache = nullptr) const {
    MatX<T> prob = decode_visibility_logits(latent, height, width, cache);
    for (Eigen::Index i = 0; i < prob.rows(); ++i)
      prob(i, 0) = logistic(prob(i, 0));
    return prob;
  }

  void collect(std::vector<Param<T>*>* out) {
    enc_rgb.collect(out);
    enc_pm.collect(out);
    dec_track.collect(out);
    dec_vis.collect(out);
  }

 private:
  static MatX<T> random_orthonormal(Eigen::Index n, Rng& rng) {
    MatXd g(n, n);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    // Fix the sign ambiguity so the factorization is deterministic across
    // reorderings: make each column's pivot entry positive.
    Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q.cast<T>();
  }
};

// Channel-concatenates the RGB and pointmap latents into one (h*w) x 2c
// geometry latent [z_rgb ; z_pm].
template <typename T>
MatX<T> concat_latent_channels(const MatX<T>& z_rgb, const MatX<T>& z_pm) {
  require(z_rgb.rows() == z_pm.rows(),
          "concat_latent_channels: latent grids must match");
  MatX<T> out(z_rgb.rows(), z_rgb.cols() + z_pm.cols());
  out.leftCols(z_rgb.cols()) = z_rgb;
  out.rightCols(z_pm.cols()) = z_pm;
  return out;
}

}  // namespace tcr3
