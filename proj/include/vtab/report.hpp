#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vtab/metrics.hpp"
#include "vtab/raster.hpp"
#include "vtab/render.hpp"

namespace vtab {

struct GroupKey {
  std::string dataset;
  std::string endpoint;
  std::string scenario;
  BaseGenerator base_generator = BaseGenerator::Sine;
  AnomalyType anomaly_type = AnomalyType::Global;
  std::int64_t variates = 1;
  double irregularity_r = 0.0;

  auto tie() const { return std::tie(dataset, endpoint, scenario, base_generator, anomaly_type, variates, irregularity_r); }
  bool operator<(const GroupKey& o) const { return tie() < o.tie(); }
  bool operator==(const GroupKey& o) const { return tie() == o.tie(); }
};

// Means over samples, in percent.
struct AggregateRow {
  GroupKey key;
  std::size_t count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double hallucination_rate = 0.0;

  std::string triple() const;
};

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string AggregateRow::triple() const {
  return format_percent(precision) + " / " + format_percent(recall) + " / " + format_percent(f1);
}

// Unweighted mean per (dataset, endpoint, scenario, generator, type, M, r).
inline std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw ConfigError("aggregate requires at least one record");
  std::map<GroupKey, AggregateRow> groups;
  for (const auto& r : records) {
    GroupKey k{r.dataset, r.endpoint, r.scenario, r.base_generator, r.anomaly_type, r.variates, r.irregularity_r};
    auto& row = groups[k];
    row.key = k;
    ++row.count;
    row.precision += r.precision;
    row.recall += r.recall;
    row.f1 += r.f1;
    row.hallucination_rate += r.hallucinated ? 1.0 : 0.0;
  }
  std::vector<AggregateRow> out;
  for (auto& [k, row] : groups) {
    const auto n = static_cast<double>(row.count);
    row.precision = 100.0 * row.precision / n;
    row.recall = 100.0 * row.recall / n;
    row.f1 = 100.0 * row.f1 / n;
    row.hallucination_rate = 100.0 * row.hallucination_rate / n;
    out.push_back(row);
  }
  return out;
}

namespace detail {

// Bold for the best value and underline for the runner-up among endpoints
// of the same dataset; values equal at two decimals share a mark.
inline std::string marked(double v, const std::vector<double>& column) {
  const auto text = format_percent(v);
  std::set<std::string, std::greater<>> distinct;
  for (double c : column) distinct.insert(format_percent(c));
  if (column.size() < 2 || distinct.size() < 2) return text;
  std::vector<double> ranked;
  for (const auto& s : distinct) ranked.push_back(std::stod(s));
  std::sort(ranked.rbegin(), ranked.rend());
  if (text == format_percent(ranked[0])) return "**" + text + "**";
  if (ranked.size() > 1 && text == format_percent(ranked[1])) return "<u>" + text + "</u>";
  return text;
}

}  // namespace detail

inline std::string format_r(double r) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

inline std::string markdown_report(const std::vector<AggregateRow>& rows) {
  std::map<std::string, std::vector<const AggregateRow*>> by_dataset;
  for (const auto& r : rows) by_dataset[r.key.dataset].push_back(&r);
  std::string out =
      "| Dataset | Scenario | Generator | Type | M | r | Endpoint | N | P | R | F1 | Halluc. % |\n"
      "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& [name, group] : by_dataset) {
    std::vector<double> ps, rs, fs;
    for (const auto* r : group) {
      ps.push_back(r->precision);
      rs.push_back(r->recall);
      fs.push_back(r->f1);
    }
    for (const auto* r : group) {
      const auto& k = r->key;
      out += "| " + k.dataset + " | " + k.scenario + " | " + std::string(to_string(k.base_generator)) + " | " +
             std::string(to_string(k.anomaly_type)) + " | " + std::to_string(k.variates) + " | " +
             format_r(k.irregularity_r) + " | " + k.endpoint + " | " + std::to_string(r->count) + " | " +
             detail::marked(r->precision, ps) + " | " + detail::marked(r->recall, rs) + " | " +
             detail::marked(r->f1, fs) + " | " + format_percent(r->hallucination_rate) + " |\n";
    }
  }
  return out;
}

struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
};

// One line (or bar group) per endpoint.
struct ChartData {
  std::vector<std::string> endpoints;
  std::vector<double> xs;
  std::vector<std::vector<SeriesPoint>> lines;
};

// Mean F1 per endpoint as a function of M (multivariate rows) or r (irregular rows).
inline ChartData chart_data(const std::vector<AggregateRow>& rows, bool by_variates) {
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  std::set<double> xs;
  for (const auto& r : rows) {
    const bool irregular = r.key.irregularity_r > 0.0;
    const bool multivariate = r.key.variates > 1 && !irregular;
    if (by_variates ? !multivariate : !irregular) continue;
    const double x = by_variates ? static_cast<double>(r.key.variates) : r.key.irregularity_r;
    auto& cell = acc[r.key.endpoint][x];
    cell.first += r.f1;
    cell.second += 1;
    xs.insert(x);
  }
  ChartData out;
  out.xs.assign(xs.begin(), xs.end());
  for (const auto& [endpoint, cells] : acc) {
    out.endpoints.push_back(endpoint);
    std::vector<SeriesPoint> line;
    for (const auto& [x, c] : cells) line.push_back({x, c.first / c.second});
    out.lines.push_back(std::move(line));
  }
  return out;
}

inline const std::vector<Rgb>& chart_palette() {
  static const std::vector<Rgb> kPalette{{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                                         {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  return kPalette;
}

// Bar chart (bars == true) or line chart of F1 (0..100) over the x values.
inline std::vector<std::uint8_t> render_chart(const ChartData& data, bool bars, int width = 800, int height = 400) {
  Canvas canvas(width, height);
  const Rgb axis{0, 0, 0};
  const int scale = 2;
  const double left = 60, right = width - 20.0, top = 20, bottom = height - 40.0;
  canvas.fill_rect(static_cast<int>(left), static_cast<int>(bottom), static_cast<int>(right - left), 1, axis);
  canvas.fill_rect(static_cast<int>(left), static_cast<int>(top), 1, static_cast<int>(bottom - top), axis);
  auto py = [&](double f1) { return bottom - f1 / 100.0 * (bottom - top); };
  for (int v = 0; v <= 100; v += 20) {
    const int y = static_cast<int>(std::lround(py(v)));
    canvas.fill_rect(static_cast<int>(left) - 5, y, 5, 1, axis);
    const auto label = std::to_string(v);
    canvas.draw_text(static_cast<int>(left) - 8 - Canvas::text_width(label, scale), y - 7, label, scale, axis);
  }
  const auto nx = data.xs.size();
  if (nx == 0) return encode_png(canvas);
  const double slot = (right - left) / static_cast<double>(nx);
  auto slot_of = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(data.xs.begin(), data.xs.end(), x) - data.xs.begin());
  };
  for (std::size_t i = 0; i < nx; ++i) {
    const double cx = left + (static_cast<double>(i) + 0.5) * slot;
    const auto label = format_r(data.xs[i]);
    canvas.draw_text(static_cast<int>(cx) - Canvas::text_width(label, scale) / 2, static_cast<int>(bottom) + 8, label,
                     scale, axis);
  }
  const auto& palette = chart_palette();
  const auto ne = data.lines.size();
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& color = palette[e % palette.size()];
    const auto& line = data.lines[e];
    for (std::size_t i = 0; i < line.size(); ++i) {
      const auto s = slot_of(line[i].x);
      const double y = py(line[i].y);
      if (bars) {
        const double bw = 0.8 * slot / static_cast<double>(ne);
        const double x0 = left + static_cast<double>(s) * slot + 0.1 * slot + static_cast<double>(e) * bw;
        canvas.fill_rect(static_cast<int>(x0), static_cast<int>(std::lround(y)), std::max(1, static_cast<int>(bw) - 1),
                         static_cast<int>(std::lround(bottom - y)), color);
      } else {
        const double cx = left + (static_cast<double>(s) + 0.5) * slot;
        canvas.draw_dot(cx, y, 3.0, color);
        if (i + 1 < line.size()) {
          const double nx2 = left + (static_cast<double>(slot_of(line[i + 1].x)) + 0.5) * slot;
          canvas.draw_segment(cx, y, nx2, py(line[i + 1].y), 2.0, color);
        }
      }
    }
  }
  return encode_png(canvas);
}

}  // namespace vtab
