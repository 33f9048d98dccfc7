#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "vtab/core.hpp"
#include "vtab/raster.hpp"

namespace vtab {

struct RenderStyle {
  int width = 1200;
  int height = 400;
  int grid_width = 1200;
  int grid_height = 1200;
  double stroke_width = 2.0;
  int dpi = 100;
  // Variate m uses palette[m % size]; a single colour by default.
  std::vector<Rgb> palette{{31, 119, 180}};
  Rgb axis_color{0, 0, 0};

  int font_scale() const { return std::max(1, dpi / 50); }
};

inline void validate(const RenderStyle& s) {
  if (s.width < 64 || s.height < 64 || s.grid_width < 16 || s.grid_height < 16) {
    throw ConfigError("render dimensions too small");
  }
  if (!(s.stroke_width > 0)) throw ConfigError("stroke_width must be > 0");
  if (s.dpi <= 0) throw ConfigError("dpi must be > 0");
  if (s.palette.empty()) throw ConfigError("palette must be nonempty");
}

struct RenderResult {
  std::vector<std::uint8_t> png;
  RenderMeta meta;
  // One vertex per retained point; segments join index-adjacent retained points only.
  std::size_t vertices = 0;
  std::size_t segments = 0;
};

// (rows, cols): n x n when n(n-1) < M <= n^2, n x (n+1) when n^2 < M <= n(n+1).
inline std::pair<int, int> grid_dims(std::int64_t variates) {
  if (variates < 1) throw ConfigError("grid_dims requires M >= 1");
  std::int64_t n = static_cast<std::int64_t>(std::sqrt(static_cast<double>(variates)));
  while (n * n < variates) ++n;
  while (n > 1 && (n - 1) * (n - 1) >= variates) --n;
  if (n * (n - 1) < variates) return {static_cast<int>(n), static_cast<int>(n)};
  return {static_cast<int>(n - 1), static_cast<int>(n)};
}

// Round step (1, 2 or 5 times a power of ten) giving roughly `target` intervals.
inline double nice_step(double span, double target = 8.0) {
  if (!(span > 0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double f = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
  return f * mag;
}

// Integer x tick positions covering [0, T].
inline std::vector<std::int64_t> x_ticks(std::int64_t length) {
  const auto step = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(nice_step(static_cast<double>(length)))));
  std::vector<std::int64_t> out;
  for (std::int64_t t = 0; t <= length; t += step) out.push_back(t);
  return out;
}

namespace detail {

struct ValueRange {
  double lo;
  double hi;
};

// Data range padded by 5% on both sides.
inline ValueRange padded_range(const std::vector<double>& row) {
  auto [mn, mx] = std::minmax_element(row.begin(), row.end());
  double lo = *mn;
  double hi = *mx;
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

inline std::string format_tick(double v, double step) {
  int decimals = 0;
  if (step < 1.0) decimals = static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  if (std::abs(v) < step * 1e-6) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

struct Viewport {
  double x0, y0, x1, y1;  // pixel box
  double t_lo, t_hi;      // time domain mapped to [x0, x1]
  ValueRange v;           // value domain mapped to [y1, y0]

  double px(double t) const { return x0 + (t - t_lo) / (t_hi - t_lo) * (x1 - x0); }
  double py(double v_) const { return y0 + (v.hi - v_) / (v.hi - v.lo) * (y1 - y0); }
};

inline void draw_polyline(Canvas& canvas, const Viewport& vp, const std::vector<std::int64_t>& timestamps,
                          const std::vector<double>& row, double stroke, Rgb color, RenderResult& stats) {
  const std::size_t n = timestamps.size();
  for (std::size_t i = 0; i < n; ++i) {
    ++stats.vertices;
    const bool joins_next = i + 1 < n && timestamps[i + 1] == timestamps[i] + 1;
    const bool joins_prev = i > 0 && timestamps[i] == timestamps[i - 1] + 1;
    const double x = vp.px(static_cast<double>(timestamps[i]));
    const double y = vp.py(row[i]);
    if (joins_next) {
      canvas.draw_segment(x, y, vp.px(static_cast<double>(timestamps[i + 1])), vp.py(row[i + 1]), stroke, color);
      ++stats.segments;
    } else if (!joins_prev) {
      canvas.draw_dot(x, y, stroke / 2.0 + 0.5, color);
    }
  }
}

}  // namespace detail

// Line chart with integer x ticks over [0, T] and an auto-scaled y axis.
// Missing timestamps leave gaps in the line.
inline RenderResult render_univariate(const Series& series, const RenderStyle& style = {}) {
  validate(style);
  if (series.variates() != 1) throw UnsupportedError("render_univariate requires M = 1");
  if (series.timestamps.empty() || series.length <= 0) throw ConfigError("cannot render a zero-length series");
  validate(series);
  const int scale = style.font_scale();
  const int glyph_h = 7 * scale;
  Canvas canvas(style.width, style.height);

  const auto vrange = detail::padded_range(series.values[0]);
  const double ystep = nice_step(vrange.hi - vrange.lo, 5.0);
  std::vector<std::string> ylabels;
  int label_w = 0;
  for (double v = std::ceil(vrange.lo / ystep) * ystep; v <= vrange.hi + 1e-12; v += ystep) {
    ylabels.push_back(detail::format_tick(v, ystep));
    label_w = std::max(label_w, Canvas::text_width(ylabels.back(), scale));
  }
  const double left = label_w + 6.0 * scale + 8;
  const double right = style.width - 12.0 * scale;
  const double top = 6.0 * scale;
  const double bottom = style.height - (glyph_h + 8.0 * scale);
  detail::Viewport vp{left, top, right, bottom, 0.0, static_cast<double>(series.length), vrange};

  // axes
  canvas.fill_rect(static_cast<int>(left), static_cast<int>(bottom), static_cast<int>(right - left) + 1, 1, style.axis_color);
  canvas.fill_rect(static_cast<int>(left), static_cast<int>(top), 1, static_cast<int>(bottom - top) + 1, style.axis_color);
  for (auto t : x_ticks(series.length)) {
    const int x = static_cast<int>(std::lround(vp.px(static_cast<double>(t))));
    canvas.fill_rect(x, static_cast<int>(bottom), 1, 3 * scale, style.axis_color);
    const auto label = std::to_string(t);
    canvas.draw_text(x - Canvas::text_width(label, scale) / 2, static_cast<int>(bottom) + 4 * scale, label, scale,
                     style.axis_color);
  }
  std::size_t li = 0;
  for (double v = std::ceil(vrange.lo / ystep) * ystep; v <= vrange.hi + 1e-12 && li < ylabels.size(); v += ystep, ++li) {
    const int y = static_cast<int>(std::lround(vp.py(v)));
    canvas.fill_rect(static_cast<int>(left) - 3 * scale, y, 3 * scale, 1, style.axis_color);
    canvas.draw_text(static_cast<int>(left) - 4 * scale - Canvas::text_width(ylabels[li], scale), y - glyph_h / 2,
                     ylabels[li], scale, style.axis_color);
  }

  RenderResult result;
  detail::draw_polyline(canvas, vp, series.timestamps, series.values[0], style.stroke_width, style.palette[0], result);
  result.png = encode_png(canvas);
  result.meta = RenderMeta{1, 1, 0, style.width, style.height, true};
  return result;
}

// Grid of axis-free panels, one per variate, filled row-major from the top
// left; trailing cells stay blank. Each panel has its own y scale.
inline RenderResult render_multivariate(const Series& series, const RenderStyle& style = {}) {
  validate(style);
  if (series.variates() < 2) throw UnsupportedError("render_multivariate requires M >= 2");
  if (series.timestamps.empty() || series.length <= 0) throw ConfigError("cannot render zero-length rows");
  validate(series);
  const auto m = static_cast<int>(series.variates());
  const auto [rows, cols] = grid_dims(m);
  Canvas canvas(style.grid_width, style.grid_height);
  const double cell_w = static_cast<double>(style.grid_width) / cols;
  const double cell_h = static_cast<double>(style.grid_height) / rows;
  const double pad_x = 0.06 * cell_w;
  const double pad_y = 0.08 * cell_h;
  const double t_hi = std::max<double>(1.0, static_cast<double>(series.length - 1));

  RenderResult result;
  for (int v = 0; v < m; ++v) {
    const int r = v / cols;
    const int c = v % cols;
    const auto& row = series.values[static_cast<std::size_t>(v)];
    detail::Viewport vp{c * cell_w + pad_x, r * cell_h + pad_y, (c + 1) * cell_w - pad_x, (r + 1) * cell_h - pad_y,
                        0.0, t_hi, detail::padded_range(row)};
    const auto& color = style.palette[static_cast<std::size_t>(v) % style.palette.size()];
    detail::draw_polyline(canvas, vp, series.timestamps, row, style.stroke_width, color, result);
  }
  result.png = encode_png(canvas);
  result.meta = RenderMeta{rows, cols, rows * cols - m, style.grid_width, style.grid_height, false};
  return result;
}

inline RenderResult render(const Series& series, const RenderStyle& style = {}) {
  return series.variates() == 1 ? render_univariate(series, style) : render_multivariate(series, style);
}

// (row, col) of a variate's panel.
inline std::pair<int, int> grid_cell(std::int64_t variate, std::int64_t variates) {
  const auto [rows, cols] = grid_dims(variates);
  (void)rows;
  return {static_cast<int>(variate / cols), static_cast<int>(variate % cols)};
}

}  // namespace vtab
