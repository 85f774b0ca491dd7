#include "tcr3/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace tcr3 {

namespace {

std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void check_image(const ImageRGB& img) {
  require(img.width > 0 && img.height > 0, "image: empty raster");
  require(img.pixels.size() ==
              static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3,
          "image: payload size does not match dimensions");
}

}  // namespace

ImageRGB ImageRGB::filled(int width, int height, std::uint8_t r, std::uint8_t g,
                          std::uint8_t b) {
  require(width > 0 && height > 0, "image: empty raster");
  ImageRGB img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<size_t>(width) * static_cast<size_t>(height) * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

std::vector<std::uint8_t> ppm_encode(const ImageRGB& img) {
  check_image(img);
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width,
                              img.height);
  std::vector<std::uint8_t> bytes(header, header + n);
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  return bytes;
}

ImageRGB ppm_decode(const std::vector<std::uint8_t>& bytes) {
  size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  };
  auto read_int = [&]() -> long {
    skip_space();
    require(pos < bytes.size() && std::isdigit(bytes[pos]), "ppm: expected an integer");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
    }
    return v;
  };

  require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6', "ppm: not a P6 file");
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  require(maxval == 255, "ppm: only maxval 255 is supported");
  require(pos < bytes.size() && std::isspace(bytes[pos]),
          "ppm: header must end with a whitespace byte");
  ++pos;  // single whitespace separates header from payload

  ImageRGB img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  require(w > 0 && h > 0, "ppm: empty raster");
  const size_t payload = static_cast<size_t>(w) * static_cast<size_t>(h) * 3;
  require(bytes.size() - pos == payload, "ppm: payload size does not match header");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

void write_ppm(const ImageRGB& img, const std::string& path) {
  const std::vector<std::uint8_t> bytes = ppm_encode(img);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "ppm: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(out.good(), "ppm: short write to '" + path + "'");
}

ImageRGB read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "ppm: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return ppm_decode(bytes);
}

ImageRGB image_from_rgb(const MatX<float>& rgb, int width, int height) {
  require(rgb.cols() == 3, "image_from_rgb: expected 3 columns");
  require(rgb.rows() == static_cast<Eigen::Index>(width) * height,
          "image_from_rgb: row count does not match dimensions");
  ImageRGB img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<size_t>(rgb.rows()) * 3);
  for (Eigen::Index i = 0; i < rgb.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      img.pixels[static_cast<size_t>(i) * 3 + static_cast<size_t>(c)] =
          to_byte(static_cast<double>(rgb(i, c)));
  return img;
}

ImageRGB heatmap_image(const VecX<double>& values, int width, int height, double lo,
                       double hi) {
  require(values.rows() == static_cast<Eigen::Index>(width) * height,
          "heatmap_image: value count does not match dimensions");
  ImageRGB img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<size_t>(values.rows()) * 3);
  const double span = hi - lo;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double u =
        span > 0.0 ? std::clamp((values(i) - lo) / span, 0.0, 1.0) : 0.0;
    img.pixels[static_cast<size_t>(i) * 3] = to_byte(3.0 * u);
    img.pixels[static_cast<size_t>(i) * 3 + 1] = to_byte(3.0 * u - 1.0);
    img.pixels[static_cast<size_t>(i) * 3 + 2] = to_byte(3.0 * u - 2.0);
  }
  return img;
}

ImageRGB upscale_nearest(const ImageRGB& img, int factor) {
  check_image(img);
  require(factor > 0, "upscale_nearest: factor must be positive");
  ImageRGB out;
  out.width = img.width * factor;
  out.height = img.height * factor;
  out.pixels.resize(static_cast<size_t>(out.width) * static_cast<size_t>(out.height) * 3);
  for (int y = 0; y < out.height; ++y) {
    const int sy = y / factor;
    for (int x = 0; x < out.width; ++x) {
      const int sx = x / factor;
      const size_t src = (static_cast<size_t>(sy) * img.width + sx) * 3;
      const size_t dst = (static_cast<size_t>(y) * out.width + x) * 3;
      out.pixels[dst] = img.pixels[src];
      out.pixels[dst + 1] = img.pixels[src + 1];
      out.pixels[dst + 2] = img.pixels[src + 2];
    }
  }
  return out;
}

ImageRGB hstack(const std::vector<ImageRGB>& images, int gap, std::uint8_t gap_gray) {
  require(!images.empty(), "hstack: no images");
  require(gap >= 0, "hstack: negative gap");
  const int height = images.front().height;
  int width = 0;
  for (const ImageRGB& img : images) {
    check_image(img);
    require(img.height == height, "hstack: image heights differ");
    width += img.width;
  }
  width += gap * static_cast<int>(images.size() - 1);

  ImageRGB out = ImageRGB::filled(width, height, gap_gray, gap_gray, gap_gray);
  int x0 = 0;
  for (const ImageRGB& img : images) {
    for (int y = 0; y < height; ++y) {
      const size_t src = static_cast<size_t>(y) * img.width * 3;
      const size_t dst = (static_cast<size_t>(y) * width + x0) * 3;
      std::copy(img.pixels.begin() + static_cast<std::ptrdiff_t>(src),
                img.pixels.begin() + static_cast<std::ptrdiff_t>(src + img.width * 3),
                out.pixels.begin() + static_cast<std::ptrdiff_t>(dst));
    }
    x0 += img.width + gap;
  }
  return out;
}

}  // namespace tcr3
