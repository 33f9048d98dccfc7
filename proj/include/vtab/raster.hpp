#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vtab/errors.hpp"

namespace vtab {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster with anti-aliased primitives.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background = {255, 255, 255})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw ConfigError("canvas dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = background.r;
      pixels_[i + 1] = background.g;
      pixels_[i + 2] = background.b;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  void load_pixels(std::vector<std::uint8_t> rgb) {
    if (rgb.size() != pixels_.size()) throw ConfigError("pixel buffer size mismatch");
    pixels_ = std::move(rgb);
  }

  Rgb at(int x, int y) const {
    const auto i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }

  void blend(int x, int y, Rgb c, double alpha) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_ || alpha <= 0) return;
    alpha = std::min(alpha, 1.0);
    const auto i = index(x, y);
    auto mix = [alpha](std::uint8_t dst, std::uint8_t src) {
      return static_cast<std::uint8_t>(std::lround(dst + (src - dst) * alpha));
    };
    pixels_[i] = mix(pixels_[i], c.r);
    pixels_[i + 1] = mix(pixels_[i + 1], c.g);
    pixels_[i + 2] = mix(pixels_[i + 2], c.b);
  }

  void fill_rect(int x, int y, int w, int h, Rgb c) {
    for (int yy = std::max(0, y); yy < std::min(height_, y + h); ++yy) {
      for (int xx = std::max(0, x); xx < std::min(width_, x + w); ++xx) blend(xx, yy, c, 1.0);
    }
  }

  // Capsule of the given stroke width around the segment; coverage from the
  // distance to the centre line gives a one-pixel soft edge.
  void draw_segment(double x0, double y0, double x1, double y1, double stroke, Rgb c) {
    const double half = stroke / 2.0;
    const int xmin = static_cast<int>(std::floor(std::min(x0, x1) - half - 1));
    const int xmax = static_cast<int>(std::ceil(std::max(x0, x1) + half + 1));
    const int ymin = static_cast<int>(std::floor(std::min(y0, y1) - half - 1));
    const int ymax = static_cast<int>(std::ceil(std::max(y0, y1) + half + 1));
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    for (int py = std::max(0, ymin); py <= std::min(height_ - 1, ymax); ++py) {
      for (int px = std::max(0, xmin); px <= std::min(width_ - 1, xmax); ++px) {
        const double cx = px + 0.5;
        const double cy = py + 0.5;
        double t = len2 > 0 ? ((cx - x0) * dx + (cy - y0) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = x0 + t * dx - cx;
        const double ey = y0 + t * dy - cy;
        const double dist = std::sqrt(ex * ex + ey * ey);
        const double coverage = std::clamp(half + 0.5 - dist, 0.0, 1.0);
        if (coverage > 0) set_max(px, py, c, coverage);
      }
    }
  }

  void draw_dot(double x, double y, double radius, Rgb c) { draw_segment(x, y, x, y, 2.0 * radius, c); }

  // Digits, '-', '.', and space in a 5x7 bitmap font; other characters are skipped.
  void draw_text(int x, int y, std::string_view text, int scale, Rgb c) {
    int cursor = x;
    for (char ch : text) {
      const auto* glyph = glyph_for(ch);
      if (glyph) {
        for (int row = 0; row < 7; ++row) {
          for (int col = 0; col < 5; ++col) {
            if ((*glyph)[static_cast<std::size_t>(row)] & (0x10 >> col)) {
              fill_rect(cursor + col * scale, y + row * scale, scale, scale, c);
            }
          }
        }
      }
      cursor += 6 * scale;
    }
  }

  static int text_width(std::string_view text, int scale) {
    return text.empty() ? 0 : static_cast<int>(text.size()) * 6 * scale - scale;
  }

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  // Overlapping strokes of one polyline should not darken joints: each
  // channel moves towards the stroke colour by the strongest coverage seen,
  // measured against a white background.
  void set_max(int x, int y, Rgb c, double coverage) {
    const auto i = index(x, y);
    auto apply = [coverage](std::uint8_t cur, std::uint8_t fg) {
      const auto want = static_cast<std::uint8_t>(std::lround(255.0 + (fg - 255.0) * coverage));
      return std::abs(want - fg) < std::abs(cur - fg) ? want : cur;
    };
    pixels_[i] = apply(pixels_[i], c.r);
    pixels_[i + 1] = apply(pixels_[i + 1], c.g);
    pixels_[i + 2] = apply(pixels_[i + 2], c.b);
  }

  using Glyph = std::array<std::uint8_t, 7>;

  static const Glyph* glyph_for(char ch) {
    static constexpr std::array<Glyph, 10> kDigits{{
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
        {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
        {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
        {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
        {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
        {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    }};
    static constexpr Glyph kMinus{0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
    static constexpr Glyph kDot{0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
    if (ch >= '0' && ch <= '9') return &kDigits[static_cast<std::size_t>(ch - '0')];
    if (ch == '-') return &kMinus;
    if (ch == '.') return &kDot;
    return nullptr;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

// RGB8 PNG via libpng's simplified API. No time or text chunks are written,
// so bytes depend only on pixel content.
inline std::vector<std::uint8_t> encode_png(const Canvas& canvas) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(canvas.width());
  image.height = static_cast<png_uint_32>(canvas.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  const auto* px = canvas.pixels().data();
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, px, 0, nullptr)) {
    throw Error(std::string("png: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, px, 0, nullptr)) {
    throw Error(std::string("png: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline Canvas decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + image.message);
  }
  Canvas canvas(static_cast<int>(image.width), static_cast<int>(image.height));
  canvas.load_pixels(std::move(buffer));
  return canvas;
}

}  // namespace vtab
