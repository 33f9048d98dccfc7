#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vtab/core.hpp"
#include "vtab/rng.hpp"
#include "vtab/stats.hpp"
#include "vtab/synth.hpp"

namespace vtab {

// Inclusive [lo, hi] bounds for a drawn count or length.
struct CountRange {
  std::int64_t lo = 1;
  std::int64_t hi = 1;

  bool operator==(const CountRange&) const = default;
};

enum class ShapeletShape { Triangle, Square, Flat };

inline std::string_view to_string(ShapeletShape s) {
  switch (s) {
    case ShapeletShape::Triangle:
      return "triangle";
    case ShapeletShape::Square:
      return "square";
    default:
      return "flat";
  }
}

inline ShapeletShape parse_shapelet_shape(std::string_view s) {
  if (s == "triangle") return ShapeletShape::Triangle;
  if (s == "square") return ShapeletShape::Square;
  if (s == "flat") return ShapeletShape::Flat;
  throw ConfigError("unknown shapelet shape '" + std::string(s) + "'");
}

struct InjectionConfig {
  double lambda = 3.0;
  std::int64_t context_k = 10;
  CountRange n_point_anomalies{5, 20};
  CountRange n_ranges{1, 3};
  CountRange range_len{10, 40};
  CountRange n_anomalous_variates{1, 3};
  double magnitude = 1.0;
  double irregularity_r = 0.0;
  // Noise added to synthesized replacement waveforms (shapelets, variate rows).
  double noise_sigma = 0.05;
  std::vector<double> seasonal_factors{2.0, 3.0, 0.5};
  double trend_c_lo = 2.0;
  double trend_c_hi = 4.0;
  // false: values after a trend window return to baseline; true: the offset persists.
  bool trend_persist = false;
  std::vector<ShapeletShape> shapelet_shapes{ShapeletShape::Triangle, ShapeletShape::Square, ShapeletShape::Flat};
  std::uint64_t seed = 0;
};

inline void validate(const InjectionConfig& c) {
  auto check_range = [](const CountRange& r, const char* what, std::int64_t min_lo) {
    if (r.lo < min_lo || r.hi < r.lo) {
      throw ConfigError(std::string(what) + " must satisfy " + std::to_string(min_lo) + " <= lo <= hi");
    }
  };
  if (!(c.lambda > 0)) throw ConfigError("lambda must be > 0");
  if (c.context_k < 1) throw ConfigError("context_k must be >= 1");
  check_range(c.n_point_anomalies, "n_point_anomalies", 1);
  check_range(c.n_ranges, "n_ranges", 1);
  check_range(c.range_len, "range_len", 2);
  check_range(c.n_anomalous_variates, "n_anomalous_variates", 1);
  if (!(c.magnitude > 0)) throw ConfigError("magnitude must be > 0");
  if (!(c.irregularity_r >= 0 && c.irregularity_r <= 0.25)) throw ConfigError("irregularity_r must lie in [0, 0.25]");
  if (!(c.noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  if (c.seasonal_factors.empty()) throw ConfigError("seasonal_factors must be nonempty");
  for (double f : c.seasonal_factors) {
    if (!(f > 0) || f == 1.0) throw ConfigError("seasonal factors must be positive and != 1");
  }
  if (!(c.trend_c_lo > 0 && c.trend_c_hi >= c.trend_c_lo)) throw ConfigError("trend slope bounds invalid");
  if (c.shapelet_shapes.empty()) throw ConfigError("shapelet_shapes must be nonempty");
}

struct InjectionResult {
  Series series;
  AnomalyLabel label;
  // Per-anomaly parameters actually drawn (recorded into provenance).
  Json details = Json::object();
};

namespace detail {

inline void require_univariate_regular(const Series& s, const char* op) {
  validate(s);
  if (s.variates() != 1) throw UnsupportedError(std::string(op) + " requires a univariate series");
  if (!s.is_regular()) throw UnsupportedError(std::string(op) + " requires a regular series");
}

// Largest n such that n points with pairwise gap >= gap fit into `slots` positions.
constexpr std::int64_t max_points_with_gap(std::int64_t slots, std::int64_t gap) {
  if (slots <= 0) return 0;
  return (slots + gap - 1) / gap;
}

// n sorted positions in [lo, hi], consecutive differences >= gap, uniform over
// all such configurations (choose from a compressed line, then re-expand).
inline std::vector<std::int64_t> place_with_gap(Rng& rng, std::int64_t lo, std::int64_t hi, std::int64_t n,
                                                std::int64_t gap) {
  const std::int64_t slots = hi - lo + 1 - (n - 1) * (gap - 1);
  auto picks = rng.sample_without_replacement(slots, n);
  for (std::int64_t i = 0; i < n; ++i) picks[static_cast<std::size_t>(i)] += lo + i * (gap - 1);
  return picks;
}

inline std::int64_t draw_count(Rng& rng, const CountRange& r, std::int64_t cap, const char* what) {
  if (r.lo > cap) {
    throw InfeasibleInjection(std::string("cannot place ") + std::to_string(r.lo) + " " + what + " (at most " +
                              std::to_string(cap) + " fit)");
  }
  return rng.uniform_int(r.lo, std::min(r.hi, cap));
}

// Disjoint, non-adjacent windows inside [0, T).
inline std::vector<IndexRange> place_windows(Rng& rng, std::int64_t length, const CountRange& count,
                                             const CountRange& len) {
  const std::int64_t len_hi = std::min(len.hi, length);
  if (len.lo > length) throw InfeasibleInjection("range_len exceeds series length");
  std::int64_t n = rng.uniform_int(count.lo, count.hi);
  std::vector<std::int64_t> lengths;
  for (;;) {
    lengths.clear();
    for (std::int64_t i = 0; i < n; ++i) lengths.push_back(rng.uniform_int(len.lo, len_hi));
    std::int64_t used = (n - 1);
    for (auto l : lengths) used += l;
    if (used <= length) break;
    // Shortest admissible windows, then fewer windows.
    lengths.assign(static_cast<std::size_t>(n), len.lo);
    used = (n - 1) + n * len.lo;
    if (used <= length) break;
    if (n == count.lo) {
      throw InfeasibleInjection("cannot place " + std::to_string(n) + " windows of length >= " +
                                std::to_string(len.lo) + " in " + std::to_string(length) + " samples");
    }
    --n;
  }
  std::int64_t slack = length - (n - 1);
  for (auto l : lengths) slack -= l;
  std::vector<std::int64_t> offsets;
  for (std::int64_t i = 0; i < n; ++i) offsets.push_back(rng.uniform_int(0, slack));
  std::sort(offsets.begin(), offsets.end());
  std::vector<IndexRange> out;
  std::int64_t consumed = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto start = offsets[static_cast<std::size_t>(i)] + consumed;
    const auto l = lengths[static_cast<std::size_t>(i)];
    out.push_back({start, start + l - 1});
    consumed += l + 1;
  }
  return out;
}

inline double window_sigma(const std::vector<double>& x, std::int64_t center, std::int64_t k) {
  const auto lo = static_cast<std::size_t>(std::max<std::int64_t>(0, center - k));
  const auto hi = static_cast<std::size_t>(std::min<std::int64_t>(static_cast<std::int64_t>(x.size()) - 1, center + k));
  return stddev(std::span<const double>(x.data() + lo, hi - lo + 1));
}

inline double frac(double v) { return v - std::floor(v); }

// Periodic shapes on [-1, 1] as a function of phase in cycles.
inline double triangle_wave(double cycles) { return 4.0 * std::abs(frac(cycles) - 0.5) - 1.0; }
inline double square_wave(double cycles) { return frac(cycles) < 0.5 ? 1.0 : -1.0; }
inline double sawtooth_wave(double cycles) { return 2.0 * frac(cycles) - 1.0; }

inline Json ranges_json(const std::vector<IndexRange>& rs) {
  Json out = Json::array();
  for (const auto& r : rs) out.push_back(Json::array({r.first, r.last}));
  return out;
}

// Context window of a contextual anomaly; the whole series when 2k+1 >= T.
inline bool context_covers_series(std::int64_t length, std::int64_t k) { return 2 * k + 1 >= length; }

}  // namespace detail

// Point anomaly threshold check: |after[t] - before[t]| > lambda * sigma, with
// sigma over the whole series (global) or the window [t-k, t+k] (contextual).
// Returns the labeled indices that violate it.
inline std::vector<std::int64_t> point_threshold_violations(const Series& before, const Series& after,
                                                            const AnomalyLabel& label, double lambda,
                                                            std::int64_t context_k) {
  std::vector<std::int64_t> bad;
  const auto& x = before.values.at(0);
  const auto& y = after.values.at(0);
  const double sigma_global = stddev(x);
  for (auto t : label.points) {
    const auto i = static_cast<std::size_t>(t);
    const double sigma = label.anomaly_type == AnomalyType::Contextual
                             ? detail::window_sigma(x, t, context_k)
                             : sigma_global;
    if (!(std::abs(y[i] - x[i]) > lambda * sigma)) bad.push_back(t);
  }
  return bad;
}

namespace detail {

inline InjectionResult inject_point(const Series& series, const InjectionConfig& cfg, AnomalyType type) {
  validate(cfg);
  const bool contextual = type == AnomalyType::Contextual;
  require_univariate_regular(series, contextual ? "inject_contextual" : "inject_global");
  const auto& x = series.values[0];
  const std::int64_t length = series.length;
  const std::int64_t k = cfg.context_k;
  const std::int64_t gap = 2 * k + 1;
  const double sigma_global = stddev(x);
  if (!(sigma_global > 0)) throw InfeasibleInjection("zero variance series: threshold degenerates to 0");

  std::int64_t lo = 0;
  std::int64_t hi = length - 1;
  if (contextual) {
    // Windows must lie inside the series.
    lo = k;
    hi = length - 1 - k;
    if (hi < lo) {
      throw InfeasibleInjection("context window 2k+1 = " + std::to_string(gap) + " exceeds series length " +
                                std::to_string(length));
    }
  }
  Rng rng(derive_seed(cfg.seed, to_string(type)));
  const auto cap = max_points_with_gap(hi - lo + 1, gap);
  const auto n = draw_count(rng, cfg.n_point_anomalies, cap, "point anomalies");

  std::vector<std::int64_t> positions;
  std::vector<double> sigmas;
  for (int attempt = 0;; ++attempt) {
    positions = place_with_gap(rng, lo, hi, n, gap);
    sigmas.clear();
    bool ok = true;
    for (auto t : positions) {
      const double s = contextual ? window_sigma(x, t, k) : sigma_global;
      if (!(s > 0)) ok = false;
      sigmas.push_back(s);
    }
    if (ok) break;
    if (attempt == 100) throw InfeasibleInjection("no placement with nonzero local variance found");
  }

  InjectionResult out{series, AnomalyLabel::of_points(positions, type), Json::object()};
  auto& y = out.series.values[0];
  Json spikes = Json::array();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto t = static_cast<std::size_t>(positions[i]);
    const double delta = cfg.lambda * sigmas[i];
    for (;;) {
      const double u = 1.0 - rng.uniform();  // (0, 1]
      const double sign = rng.coin() ? 1.0 : -1.0;
      y[t] = x[t] + sign * (delta + u * cfg.magnitude * sigmas[i]);
      if (std::abs(y[t] - x[t]) > delta) break;
    }
    spikes.push_back(Json{{"t", positions[i]}, {"delta", y[t] - x[t]}, {"sigma", sigmas[i]}});
  }
  out.details["n"] = n;
  out.details["sigma_global"] = sigma_global;
  out.details["spikes"] = std::move(spikes);
  return out;
}

}  // namespace detail

inline InjectionResult inject_global(const Series& series, const InjectionConfig& cfg) {
  return detail::inject_point(series, cfg, AnomalyType::Global);
}

inline InjectionResult inject_contextual(const Series& series, const InjectionConfig& cfg) {
  return detail::inject_point(series, cfg, AnomalyType::Contextual);
}

// Re-synthesizes each window at a multiplied frequency, phase-matched at the
// window start. The additive residual (noise) of the base series is kept.
inline InjectionResult inject_seasonal(const Series& series, const InjectionConfig& cfg) {
  validate(cfg);
  detail::require_univariate_regular(series, "inject_seasonal");
  if (!is_explicit(series.base_generator) || !series.wave) {
    throw UnsupportedError("seasonal anomalies need an explicit generator with a known period");
  }
  const auto& w = *series.wave;
  Rng rng(derive_seed(cfg.seed, "seasonal"));
  const auto windows = detail::place_windows(rng, series.length, cfg.n_ranges, cfg.range_len);
  InjectionResult out{series, AnomalyLabel::of_ranges(windows, AnomalyType::Seasonal), Json::object()};
  const auto& x = series.values[0];
  auto& y = out.series.values[0];
  Json factors = Json::array();
  for (const auto& win : windows) {
    const double f = cfg.seasonal_factors[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.seasonal_factors.size()) - 1))];
    const double phase0 = 2.0 * std::numbers::pi * static_cast<double>(win.first) / w.period;
    for (auto t = win.first; t <= win.last; ++t) {
      const auto i = static_cast<std::size_t>(t);
      const double clean_old = explicit_wave_value(series.base_generator, w, 0, static_cast<double>(t));
      const double clean_new =
          w.amplitude * std::sin(phase0 + 2.0 * std::numbers::pi * f * static_cast<double>(t - win.first) / w.period);
      y[i] = clean_new + (x[i] - clean_old);
    }
    factors.push_back(f);
  }
  out.details["windows"] = detail::ranges_json(windows);
  out.details["factors"] = std::move(factors);
  return out;
}

// Adds a linear ramp reaching c*sigma at the window end, c in [trend_c_lo, trend_c_hi].
inline InjectionResult inject_trend(const Series& series, const InjectionConfig& cfg) {
  validate(cfg);
  detail::require_univariate_regular(series, "inject_trend");
  const auto& x = series.values[0];
  const double sigma = stddev(x);
  if (!(sigma > 0)) throw InfeasibleInjection("zero variance series: trend scale degenerates to 0");
  Rng rng(derive_seed(cfg.seed, "trend"));
  const auto windows = detail::place_windows(rng, series.length, cfg.n_ranges, cfg.range_len);
  InjectionResult out{series, AnomalyLabel::of_ranges(windows, AnomalyType::Trend), Json::object()};
  auto& y = out.series.values[0];
  Json slopes = Json::array();
  for (const auto& win : windows) {
    const double c = rng.uniform(cfg.trend_c_lo, cfg.trend_c_hi);
    const double slope = (rng.coin() ? 1.0 : -1.0) * c * sigma / static_cast<double>(win.size() - 1);
    for (auto t = win.first; t <= win.last; ++t) {
      y[static_cast<std::size_t>(t)] += slope * static_cast<double>(t - win.first);
    }
    if (cfg.trend_persist) {
      const double offset = slope * static_cast<double>(win.size() - 1);
      for (auto t = win.last + 1; t < series.length; ++t) y[static_cast<std::size_t>(t)] += offset;
    }
    slopes.push_back(slope);
  }
  out.details["windows"] = detail::ranges_json(windows);
  out.details["slopes"] = std::move(slopes);
  out.details["persist"] = cfg.trend_persist;
  return out;
}

// Replaces each window with a different waveform of the series' amplitude
// around the window mean, blended into the original over two samples per end.
inline InjectionResult inject_shapelet(const Series& series, const InjectionConfig& cfg) {
  validate(cfg);
  detail::require_univariate_regular(series, "inject_shapelet");
  const auto& x = series.values[0];
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double amplitude = (*mx - *mn) / 2.0;
  if (!(amplitude > 0)) throw InfeasibleInjection("constant series: shapelet amplitude degenerates to 0");
  Rng rng(derive_seed(cfg.seed, "shapelet"));
  const auto windows = detail::place_windows(rng, series.length, cfg.n_ranges, cfg.range_len);
  InjectionResult out{series, AnomalyLabel::of_ranges(windows, AnomalyType::Shapelet), Json::object()};
  auto& y = out.series.values[0];
  Json shapes = Json::array();
  for (const auto& win : windows) {
    const auto shape = cfg.shapelet_shapes[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.shapelet_shapes.size()) - 1))];
    const auto len = win.size();
    const double level = mean(std::span<const double>(x.data() + win.first, static_cast<std::size_t>(len)));
    const double cycle = std::max<double>(4.0, static_cast<double>(len) / 2.0);
    for (auto t = win.first; t <= win.last; ++t) {
      const double u = static_cast<double>(t - win.first) / cycle;
      double v = level;
      if (shape == ShapeletShape::Triangle) v += amplitude * detail::triangle_wave(u);
      if (shape == ShapeletShape::Square) v += amplitude * detail::square_wave(u);
      if (cfg.noise_sigma > 0) v += rng.normal(0.0, cfg.noise_sigma);
      // Blend weights 1/3, 2/3 on the two outermost samples at each end.
      const auto from_edge = std::min(t - win.first, win.last - t);
      const double wgt = len >= 6 && from_edge < 2 ? static_cast<double>(from_edge + 1) / 3.0 : 1.0;
      const auto i = static_cast<std::size_t>(t);
      y[i] = wgt * v + (1.0 - wgt) * x[i];
    }
    shapes.push_back(to_string(shape));
  }
  out.details["windows"] = detail::ranges_json(windows);
  out.details["shapes"] = std::move(shapes);
  return out;
}

// Upper bound of anomalous variates that keeps normal rows in the majority.
inline CountRange default_variate_count(std::size_t variates) {
  const auto m = static_cast<std::int64_t>(variates);
  const std::int64_t hi = std::max<std::int64_t>(1, std::min(std::max<std::int64_t>(3, m / 4), (m - 1) / 2));
  return {1, hi};
}

// Replaces whole rows with a triangle, square, sawtooth or random-walk signal.
inline InjectionResult inject_variate(const Series& series, const InjectionConfig& cfg, AnomalyType type) {
  validate(cfg);
  validate(series);
  if (granularity_of(type) != Granularity::Variate) {
    throw ConfigError("inject_variate: '" + std::string(to_string(type)) + "' is not a variate anomaly type");
  }
  if (series.variates() < 2) throw UnsupportedError("inject_variate requires a multivariate series (M >= 2)");
  if (!series.is_regular()) throw UnsupportedError("inject_variate requires a regular series");
  const auto m = static_cast<std::int64_t>(series.variates());
  if (cfg.n_anomalous_variates.hi >= m) {
    throw ConfigError("n_anomalous_variates upper bound " + std::to_string(cfg.n_anomalous_variates.hi) +
                      " must be < M = " + std::to_string(m) + " so that normal variates remain");
  }
  Rng rng(derive_seed(cfg.seed, to_string(type)));
  const auto n = rng.uniform_int(cfg.n_anomalous_variates.lo, cfg.n_anomalous_variates.hi);
  const auto ids = rng.sample_without_replacement(m, n);
  InjectionResult out{series, AnomalyLabel::of_variates(ids, type), Json::object()};
  const auto length = static_cast<std::size_t>(series.length);
  Json rows = Json::array();
  for (auto id : ids) {
    auto& row = out.series.values[static_cast<std::size_t>(id)];
    double amplitude = 0.0;
    double offset = 0.0;
    double period = 0.0;
    if (series.wave) {
      amplitude = series.wave->amplitude;
      period = series.wave->period;
    } else {
      const auto [mn, mx] = std::minmax_element(row.begin(), row.end());
      amplitude = (*mx - *mn) / 2.0;
      offset = (*mx + *mn) / 2.0;
      period = std::max(8.0, static_cast<double>(length) / 4.0);
    }
    if (!(amplitude > 0)) amplitude = 1.0;
    const double phase = rng.uniform();
    if (type == AnomalyType::Random) {
      std::vector<double> walk(length, 0.0);
      for (std::size_t t = 1; t < length; ++t) walk[t] = walk[t - 1] + (rng.coin() ? 1.0 : -1.0);
      const auto [mn, mx] = std::minmax_element(walk.begin(), walk.end());
      const double mid = (*mx + *mn) / 2.0;
      const double half = std::max((*mx - *mn) / 2.0, 1.0);
      for (std::size_t t = 0; t < length; ++t) row[t] = offset + amplitude * (walk[t] - mid) / half;
    } else {
      for (std::size_t t = 0; t < length; ++t) {
        const double cycles = static_cast<double>(t) / period + phase;
        double v = type == AnomalyType::Triangle ? detail::triangle_wave(cycles)
                   : type == AnomalyType::Square ? detail::square_wave(cycles)
                                                 : detail::sawtooth_wave(cycles);
        v = offset + amplitude * v;
        if (cfg.noise_sigma > 0) v += rng.normal(0.0, cfg.noise_sigma);
        row[t] = v;
      }
    }
    rows.push_back(Json{{"variate", id}, {"amplitude", amplitude}, {"period", period}, {"phase", phase}});
  }
  out.details["n"] = n;
  out.details["rows"] = std::move(rows);
  return out;
}

// Dispatches on the anomaly type.
inline InjectionResult inject(const Series& series, const InjectionConfig& cfg, AnomalyType type) {
  switch (type) {
    case AnomalyType::Global:
      return inject_global(series, cfg);
    case AnomalyType::Contextual:
      return inject_contextual(series, cfg);
    case AnomalyType::Seasonal:
      return inject_seasonal(series, cfg);
    case AnomalyType::Trend:
      return inject_trend(series, cfg);
    case AnomalyType::Shapelet:
      return inject_shapelet(series, cfg);
    default:
      return inject_variate(series, cfg, type);
  }
}

// ---------------------------------------------------------------------------
// Irregular sampling

inline std::int64_t retained_count(std::int64_t length, double r) {
  return static_cast<std::int64_t>(std::llround((1.0 - r) * static_cast<double>(length)));
}

// Keeps round((1-r)T) timestamps, always including 0 and T-1; the same mask
// applies to every variate.
inline Series drop_irregular(const Series& series, double r, std::uint64_t seed) {
  validate(series);
  if (!(r > 0 && r <= 0.25)) throw ConfigError("irregularity ratio r must lie in (0, 0.25]");
  if (!series.is_regular()) throw UnsupportedError("drop_irregular requires a regular series");
  const std::int64_t length = series.length;
  const std::int64_t keep = retained_count(length, r);
  if (length < 3 || keep < 2) throw ConfigError("series too short to drop points");
  Rng rng(derive_seed(seed, "drop"));
  auto interior = rng.sample_without_replacement(length - 2, keep - 2);
  std::vector<std::int64_t> ts;
  ts.reserve(static_cast<std::size_t>(keep));
  ts.push_back(0);
  for (auto i : interior) ts.push_back(i + 1);
  ts.push_back(length - 1);
  Series out = series;
  out.timestamps = ts;
  for (std::size_t m = 0; m < series.values.size(); ++m) {
    auto& row = out.values[m];
    row.clear();
    for (auto t : ts) row.push_back(series.values[m][static_cast<std::size_t>(t)]);
  }
  return out;
}

// Drops labeled points that were removed and ranges with fewer than half of
// their indices retained. Variate labels pass through.
inline AnomalyLabel filter_label_after_drop(const AnomalyLabel& label, const std::vector<std::int64_t>& timestamps) {
  AnomalyLabel out = label;
  auto retained = [&](std::int64_t t) { return std::binary_search(timestamps.begin(), timestamps.end(), t); };
  if (label.granularity == Granularity::Point) {
    out.points.clear();
    for (auto t : label.points) {
      if (retained(t)) out.points.push_back(t);
    }
  } else if (label.granularity == Granularity::Range) {
    out.ranges.clear();
    for (const auto& r : label.ranges) {
      const auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), r.first);
      const auto hi = std::upper_bound(timestamps.begin(), timestamps.end(), r.last);
      if (2 * (hi - lo) >= r.size()) out.ranges.push_back(r);
    }
  }
  return out;
}

// RMS difference inside each labeled window, in units of the base series'
// standard deviation.
inline std::vector<double> range_dissimilarities(const Series& before, const Series& after,
                                                 const AnomalyLabel& label) {
  std::vector<double> out;
  const auto& x = before.values.at(0);
  const auto& y = after.values.at(0);
  const double sigma = stddev(x);
  for (const auto& r : label.ranges) {
    double acc = 0.0;
    for (auto t = r.first; t <= r.last; ++t) {
      const double d = y[static_cast<std::size_t>(t)] - x[static_cast<std::size_t>(t)];
      acc += d * d;
    }
    const double rms = std::sqrt(acc / static_cast<double>(r.size()));
    out.push_back(sigma > 0 ? rms / sigma : rms);
  }
  return out;
}

// Indices (flattened m * T + t) where values differ outside the labeled region.
inline std::vector<std::int64_t> locality_violations(const Series& before, const Series& after,
                                                     const AnomalyLabel& label) {
  std::vector<std::int64_t> bad;
  const auto length = static_cast<std::int64_t>(before.retained());
  std::vector<bool> mask;
  if (label.granularity != Granularity::Variate) mask = label_as_binary_mask(label, before.length);
  for (std::size_t m = 0; m < before.values.size(); ++m) {
    const bool variate_labeled = label.granularity == Granularity::Variate &&
                                 std::binary_search(label.variates.begin(), label.variates.end(),
                                                    static_cast<std::int64_t>(m));
    for (std::int64_t s = 0; s < length; ++s) {
      const auto t = before.timestamps[static_cast<std::size_t>(s)];
      const bool labeled = variate_labeled || (!mask.empty() && mask[static_cast<std::size_t>(t)]);
      if (labeled) continue;
      if (std::bit_cast<std::uint64_t>(before.values[m][static_cast<std::size_t>(s)]) !=
          std::bit_cast<std::uint64_t>(after.values[m][static_cast<std::size_t>(s)])) {
        bad.push_back(static_cast<std::int64_t>(m) * before.length + t);
      }
    }
  }
  return bad;
}

}  // namespace vtab
