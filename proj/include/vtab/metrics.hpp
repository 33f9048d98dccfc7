#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vtab/core.hpp"

namespace vtab {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the quantity has no defined value and 0 was reported instead.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Set precision/recall over variate IDs. Inputs need not be sorted.
inline PRF vanilla_prf(std::vector<std::int64_t> predicted, std::vector<std::int64_t> truth) {
  std::sort(predicted.begin(), predicted.end());
  predicted.erase(std::unique(predicted.begin(), predicted.end()), predicted.end());
  std::sort(truth.begin(), truth.end());
  truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
  std::vector<std::int64_t> hit;
  std::set_intersection(predicted.begin(), predicted.end(), truth.begin(), truth.end(), std::back_inserter(hit));
  const auto tp = static_cast<double>(hit.size());
  PRF out;
  if (predicted.empty() && truth.empty()) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  if (predicted.empty()) {
    out.precision_undefined = true;
  } else {
    out.precision = tp / static_cast<double>(predicted.size());
  }
  if (truth.empty()) {
    out.recall_undefined = true;
  } else {
    out.recall = tp / static_cast<double>(truth.size());
  }
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

// Half-open interval [start, end) on the real timeline.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

namespace detail::affiliation {

struct Zone {
  Interval area;   // I
  Interval event;  // J, contained in I
};

// Splits the timeline at midpoints between consecutive truth events.
inline std::vector<Zone> zones(const std::vector<Interval>& truth, Interval timeline) {
  std::vector<Zone> out;
  double left = timeline.start;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double right = k + 1 < truth.size() ? (truth[k].end + truth[k + 1].start) / 2.0 : timeline.end;
    out.push_back({{left, right}, truth[k]});
    left = right;
  }
  return out;
}

inline std::vector<Interval> clip(const std::vector<Interval>& events, Interval area) {
  std::vector<Interval> out;
  for (const auto& e : events) {
    const double s = std::max(e.start, area.start);
    const double t = std::min(e.end, area.end);
    if (t > s) out.push_back({s, t});
  }
  return out;
}

// Exact integral of a function that is linear between consecutive cut points.
template <typename F>
double integrate_pieces(std::vector<double> cuts, double lo, double hi, F f) {
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  double prev = lo;
  for (double c : cuts) {
    if (c <= prev) continue;
    if (c > hi) break;
    total += f((prev + c) / 2.0) * (c - prev);
    prev = c;
  }
  return total;
}

// P(dist(X, J) >= d) for X uniform on I.
inline double precision_survival(const Zone& z, double d) {
  if (d <= 0.0) return 1.0;
  const auto& [aI, bI] = z.area;
  const auto& [aJ, bJ] = z.event;
  return (std::max(0.0, aJ - aI - d) + std::max(0.0, bI - bJ - d)) / (bI - aI);
}

inline double distance_to(double y, Interval j) {
  if (y < j.start) return j.start - y;
  if (y > j.end) return y - j.end;
  return 0.0;
}

inline double distance_to(double x, const std::vector<Interval>& ys) {
  double best = INFINITY;
  for (const auto& y : ys) best = std::min(best, distance_to(x, y));
  return best;
}

inline double zone_precision(const Zone& z, const std::vector<Interval>& ys) {
  const auto& [aJ, bJ] = z.event;
  const std::vector<double> cuts{aJ, bJ, aJ + bJ - z.area.end, aJ + bJ - z.area.start};
  double mass = 0.0;
  double total = 0.0;
  for (const auto& y : ys) {
    mass += y.length();
    total += integrate_pieces(cuts, y.start, y.end,
                              [&](double t) { return precision_survival(z, distance_to(t, z.event)); });
  }
  return total / mass;
}

// P(|X - x| >= d) for X uniform on I.
inline double recall_survival(const Zone& z, double x, double d) {
  const auto& [aI, bI] = z.area;
  return (std::max(0.0, x - aI - d) + std::max(0.0, bI - x - d)) / (bI - aI);
}

inline double zone_recall(const Zone& z, const std::vector<Interval>& ys) {
  const auto& [aJ, bJ] = z.event;
  const auto& [aI, bI] = z.area;
  // Cut points where dist(x, Y) changes slope.
  std::vector<double> cuts{aJ, bJ};
  for (std::size_t i = 0; i < ys.size(); ++i) {
    cuts.push_back(ys[i].start);
    cuts.push_back(ys[i].end);
    if (i + 1 < ys.size()) cuts.push_back((ys[i].end + ys[i + 1].start) / 2.0);
  }
  std::sort(cuts.begin(), cuts.end());
  // Within each slope piece the two survival terms are linear; add their zero crossings.
  std::vector<double> all = cuts;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i];
    const double q = cuts[i + 1];
    if (q <= p) continue;
    for (int side = 0; side < 2; ++side) {
      auto h = [&](double x) {
        const double d = distance_to(x, ys);
        return side == 0 ? x - aI - d : bI - x - d;
      };
      const double hp = h(p);
      const double hq = h(q);
      if ((hp < 0.0 && hq > 0.0) || (hp > 0.0 && hq < 0.0)) all.push_back(p + hp / (hp - hq) * (q - p));
    }
  }
  const double total =
      integrate_pieces(all, aJ, bJ, [&](double x) { return recall_survival(z, x, distance_to(x, ys)); });
  return total / (bJ - aJ);
}

}  // namespace detail::affiliation

// Affiliation precision/recall on a continuous timeline. Events in each list
// must be sorted, disjoint, nonempty and inside `timeline`.
inline PRF affiliation_prf(const std::vector<Interval>& predicted, const std::vector<Interval>& truth,
                           Interval timeline) {
  auto check = [&](const std::vector<Interval>& events, const char* what) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (!(e.end > e.start) || e.start < timeline.start || e.end > timeline.end) {
        throw ConfigError(std::string(what) + " event outside the timeline or empty");
      }
      if (i > 0 && e.start < events[i - 1].end) throw ConfigError(std::string(what) + " events overlap or are unsorted");
    }
  };
  check(predicted, "predicted");
  check(truth, "truth");
  PRF out;
  if (truth.empty()) {
    if (predicted.empty()) {
      out.precision = out.recall = out.f1 = 1.0;
    } else {
      out.recall_undefined = true;
    }
    return out;
  }
  namespace af = detail::affiliation;
  double p_sum = 0.0;
  double r_sum = 0.0;
  std::size_t p_zones = 0;
  for (const auto& zone : af::zones(truth, timeline)) {
    const auto ys = af::clip(predicted, zone.area);
    if (ys.empty()) continue;  // recall contribution 0
    p_sum += af::zone_precision(zone, ys);
    ++p_zones;
    r_sum += af::zone_recall(zone, ys);
  }
  if (p_zones == 0) {
    out.precision_undefined = true;
  } else {
    out.precision = p_sum / static_cast<double>(p_zones);
  }
  out.recall = r_sum / static_cast<double>(truth.size());
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

// Inclusive index ranges become half-open events [i, j + 1); adjacent
// ranges are merged into one event.
inline std::vector<Interval> to_events(std::vector<IndexRange> ranges) {
  std::sort(ranges.begin(), ranges.end());
  std::vector<Interval> out;
  for (const auto& r : ranges) {
    const double s = static_cast<double>(r.first);
    const double e = static_cast<double>(r.last) + 1.0;
    if (!out.empty() && s <= out.back().end) {
      if (s < out.back().end) throw ConfigError("events overlap");
      out.back().end = e;
    } else {
      out.push_back({s, e});
    }
  }
  return out;
}

inline std::vector<IndexRange> points_as_ranges(const std::vector<std::int64_t>& points) {
  std::vector<IndexRange> out;
  out.reserve(points.size());
  for (auto p : points) out.push_back({p, p});
  return out;
}

// Affiliation over the discrete timeline [0, T).
inline PRF affiliation_prf(const std::vector<IndexRange>& predicted, const std::vector<IndexRange>& truth,
                           std::int64_t length) {
  for (const auto* list : {&predicted, &truth}) {
    for (const auto& r : *list) {
      if (r.first > r.last || r.first < 0 || r.last >= length) throw ConfigError("event out of bounds");
    }
  }
  return affiliation_prf(to_events(predicted), to_events(truth), Interval{0.0, static_cast<double>(length)});
}

enum class MetricFamily { Affiliation, Vanilla };

inline std::string_view to_string(MetricFamily f) { return f == MetricFamily::Affiliation ? "affiliation" : "vanilla"; }

inline MetricFamily parse_metric_family(std::string_view s) {
  if (s == "affiliation") return MetricFamily::Affiliation;
  if (s == "vanilla") return MetricFamily::Vanilla;
  throw ConfigError("unknown metric family '" + std::string(s) + "'");
}

inline MetricFamily family_of(Granularity g) {
  return g == Granularity::Variate ? MetricFamily::Vanilla : MetricFamily::Affiliation;
}

struct EvalRecord {
  std::string sample_id;
  std::string endpoint;
  std::string dataset;
  std::string scenario;
  BaseGenerator base_generator = BaseGenerator::Sine;
  AnomalyType anomaly_type = AnomalyType::Global;
  std::int64_t variates = 1;
  double irregularity_r = 0.0;
  MetricFamily family = MetricFamily::Affiliation;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool hallucinated = false;
  bool precision_undefined = false;
  ParseStatus parse_status = ParseStatus::Ok;

  bool operator==(const EvalRecord&) const = default;
};

// Hallucinated and malformed replies score zero and are flagged.
inline EvalRecord score_sample(const Sample& sample, const Prediction& prediction, const std::string& endpoint) {
  EvalRecord rec;
  rec.sample_id = sample.id;
  rec.endpoint = endpoint;
  rec.dataset = sample.provenance.value("dataset", std::string());
  rec.scenario = sample.provenance.value("scenario", std::string());
  rec.base_generator = sample.series.base_generator;
  rec.anomaly_type = sample.label.anomaly_type;
  rec.variates = static_cast<std::int64_t>(sample.series.variates());
  rec.irregularity_r = sample.provenance.value("irregularity_r", 0.0);
  rec.family = family_of(sample.label.granularity);
  rec.parse_status = prediction.parse_status;
  if (prediction.granularity != sample.label.granularity) throw ConfigError("prediction granularity mismatch");
  if (prediction.failed()) {
    rec.hallucinated = true;
    return rec;
  }
  PRF prf;
  switch (sample.label.granularity) {
    case Granularity::Point:
      prf = affiliation_prf(points_as_ranges(prediction.points), points_as_ranges(sample.label.points),
                            sample.series.length);
      break;
    case Granularity::Range:
      prf = affiliation_prf(prediction.ranges, sample.label.ranges, sample.series.length);
      break;
    case Granularity::Variate:
      prf = vanilla_prf(prediction.variates, sample.label.variates);
      break;
  }
  rec.precision = prf.precision;
  rec.recall = prf.recall;
  rec.f1 = prf.f1;
  rec.precision_undefined = prf.precision_undefined;
  return rec;
}

inline Json to_json(const EvalRecord& r) {
  return Json{{"sample_id", r.sample_id},
              {"endpoint", r.endpoint},
              {"dataset", r.dataset},
              {"scenario", r.scenario},
              {"base_generator", to_string(r.base_generator)},
              {"anomaly_type", to_string(r.anomaly_type)},
              {"M", r.variates},
              {"r", r.irregularity_r},
              {"metric_family", to_string(r.family)},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"hallucinated", r.hallucinated},
              {"precision_undefined", r.precision_undefined},
              {"parse_status", to_string(r.parse_status)}};
}

inline EvalRecord eval_record_from_json(const Json& j) {
  EvalRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.endpoint = j.at("endpoint").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.scenario = j.at("scenario").get<std::string>();
  r.base_generator = parse_base_generator(j.at("base_generator").get<std::string>());
  r.anomaly_type = parse_anomaly_type(j.at("anomaly_type").get<std::string>());
  r.variates = j.at("M").get<std::int64_t>();
  r.irregularity_r = j.at("r").get<double>();
  r.family = parse_metric_family(j.at("metric_family").get<std::string>());
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.hallucinated = j.at("hallucinated").get<bool>();
  r.precision_undefined = j.at("precision_undefined").get<bool>();
  r.parse_status = parse_parse_status(j.at("parse_status").get<std::string>());
  return r;
}

}  // namespace vtab
