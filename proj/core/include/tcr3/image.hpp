#pragma once

// Minimal raster output for figures: binary PPM (P6) encoding, RGB frame
// export, and scalar-field heatmaps.
//
// Pixel mapping, exactly: a unit value v in [0, 1] becomes the byte
// round(v * 255) (clamped first); heatmaps normalize each value to
// u = clamp((x - lo) / (hi - lo), 0, 1) and apply the "hot" ramp
//   r = clamp(3u, 0, 1), g = clamp(3u - 1, 0, 1), b = clamp(3u - 2, 0, 1)
// (black -> red -> yellow -> white), then the same byte rounding.

#include <cstdint>
#include <string>
#include <vector>

#include "tcr3/common.hpp"

namespace tcr3 {

// Row-major 8-bit RGB raster; 3 bytes per pixel, rows top to bottom.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3 bytes

  static ImageRGB filled(int width, int height, std::uint8_t r, std::uint8_t g,
                         std::uint8_t b);
};

// "P6\n<width> <height>\n255\n" followed by the raw pixel payload.
std::vector<std::uint8_t> ppm_encode(const ImageRGB& img);

// Inverse of ppm_encode (only the exact header layout above plus arbitrary
// whitespace between tokens is accepted). Throws std::invalid_argument on
// malformed input.
ImageRGB ppm_decode(const std::vector<std::uint8_t>& bytes);

void write_ppm(const ImageRGB& img, const std::string& path);
ImageRGB read_ppm(const std::string& path);

// An (H*W) x 3 matrix of [0, 1] RGB values (one row per pixel, row-major
// pixel order) rendered to bytes with the documented rounding.
ImageRGB image_from_rgb(const MatX<float>& rgb, int width, int height);

// Scalar field (length H*W, row-major) to a "hot" heatmap. lo == hi paints
// the all-black image (degenerate range maps to u = 0).
ImageRGB heatmap_image(const VecX<double>& values, int width, int height,
                       double lo, double hi);

// Integer nearest-neighbor upscaling (each source pixel becomes a
// factor x factor block).
ImageRGB upscale_nearest(const ImageRGB& img, int factor);

// Horizontal concatenation with `gap` separator columns of the given gray
// level between images. All images must share a height.
ImageRGB hstack(const std::vector<ImageRGB>& images, int gap = 1,
                std::uint8_t gap_gray = 255);

}  // namespace tcr3
