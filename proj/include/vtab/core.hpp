#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vtab/errors.hpp"
#include "vtab/hash.hpp"

namespace vtab {

using Json = nlohmann::ordered_json;

enum class SeriesKind { Univariate, Multivariate };
enum class BaseGenerator { Sine, SineCosine, UcrSymbols, UeaArticulatoryWordRecognition };
enum class Granularity { Point, Range, Variate };
enum class AnomalyType { Global, Contextual, Seasonal, Trend, Shapelet, Triangle, Square, Sawtooth, Random };
enum class ParseStatus { Ok, Empty, Truncated, Hallucinated, Malformed };

namespace detail {

template <typename E, std::size_t N>
struct EnumNames {
  std::array<std::pair<E, std::string_view>, N> entries;

  constexpr std::string_view name(E value) const {
    for (const auto& [e, n] : entries) {
      if (e == value) return n;
    }
    return "?";
  }

  std::optional<E> parse(std::string_view text) const {
    for (const auto& [e, n] : entries) {
      if (n == text) return e;
    }
    return std::nullopt;
  }
};

inline constexpr EnumNames<SeriesKind, 2> kSeriesKinds{{{
    {SeriesKind::Univariate, "univariate"},
    {SeriesKind::Multivariate, "multivariate"},
}}};

inline constexpr EnumNames<BaseGenerator, 4> kGenerators{{{
    {BaseGenerator::Sine, "sine"},
    {BaseGenerator::SineCosine, "sine_cosine"},
    {BaseGenerator::UcrSymbols, "symbols"},
    {BaseGenerator::UeaArticulatoryWordRecognition, "articulary_word_recognition"},
}}};

inline constexpr EnumNames<Granularity, 3> kGranularities{{{
    {Granularity::Point, "point"},
    {Granularity::Range, "range"},
    {Granularity::Variate, "variate"},
}}};

inline constexpr EnumNames<AnomalyType, 9> kAnomalyTypes{{{
    {AnomalyType::Global, "global"},
    {AnomalyType::Contextual, "contextual"},
    {AnomalyType::Seasonal, "seasonal"},
    {AnomalyType::Trend, "trend"},
    {AnomalyType::Shapelet, "shapelet"},
    {AnomalyType::Triangle, "triangle"},
    {AnomalyType::Square, "square"},
    {AnomalyType::Sawtooth, "sawtooth"},
    {AnomalyType::Random, "random"},
}}};

inline constexpr EnumNames<ParseStatus, 5> kParseStatuses{{{
    {ParseStatus::Ok, "ok"},
    {ParseStatus::Empty, "empty"},
    {ParseStatus::Truncated, "truncated"},
    {ParseStatus::Hallucinated, "hallucinated"},
    {ParseStatus::Malformed, "malformed"},
}}};

template <typename E, std::size_t N>
E parse_enum(const EnumNames<E, N>& names, std::string_view text, std::string_view what) {
  if (auto v = names.parse(text)) return *v;
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

}  // namespace detail

inline std::string_view to_string(SeriesKind v) { return detail::kSeriesKinds.name(v); }
inline std::string_view to_string(BaseGenerator v) { return detail::kGenerators.name(v); }
inline std::string_view to_string(Granularity v) { return detail::kGranularities.name(v); }
inline std::string_view to_string(AnomalyType v) { return detail::kAnomalyTypes.name(v); }
inline std::string_view to_string(ParseStatus v) { return detail::kParseStatuses.name(v); }

inline SeriesKind parse_series_kind(std::string_view s) { return detail::parse_enum(detail::kSeriesKinds, s, "series kind"); }
inline BaseGenerator parse_base_generator(std::string_view s) { return detail::parse_enum(detail::kGenerators, s, "base generator"); }
inline Granularity parse_granularity(std::string_view s) { return detail::parse_enum(detail::kGranularities, s, "granularity"); }
inline AnomalyType parse_anomaly_type(std::string_view s) { return detail::parse_enum(detail::kAnomalyTypes, s, "anomaly type"); }
inline ParseStatus parse_parse_status(std::string_view s) { return detail::parse_enum(detail::kParseStatuses, s, "parse status"); }

inline constexpr std::array<AnomalyType, 9> kAllAnomalyTypes{
    AnomalyType::Global,   AnomalyType::Contextual, AnomalyType::Seasonal,
    AnomalyType::Trend,    AnomalyType::Shapelet,   AnomalyType::Triangle,
    AnomalyType::Square,   AnomalyType::Sawtooth,   AnomalyType::Random};

constexpr Granularity granularity_of(AnomalyType type) {
  switch (type) {
    case AnomalyType::Global:
    case AnomalyType::Contextual:
      return Granularity::Point;
    case AnomalyType::Seasonal:
    case AnomalyType::Trend:
    case AnomalyType::Shapelet:
      return Granularity::Range;
    default:
      return Granularity::Variate;
  }
}

constexpr bool is_explicit(BaseGenerator g) {
  return g == BaseGenerator::Sine || g == BaseGenerator::SineCosine;
}

constexpr bool is_multivariate_generator(BaseGenerator g) {
  return g == BaseGenerator::SineCosine || g == BaseGenerator::UeaArticulatoryWordRecognition;
}

// Closed-form parameters of an explicit generator. Absent for archive series.
struct WaveShape {
  double amplitude = 1.0;
  double period = 50.0;

  bool operator==(const WaveShape&) const = default;
};

struct Series {
  SeriesKind kind = SeriesKind::Univariate;
  // values[m][s]: variate m at the s-th retained timestamp.
  std::vector<std::vector<double>> values;
  std::vector<std::int64_t> timestamps;
  // Length of the underlying regular grid.
  std::int64_t length = 0;
  BaseGenerator base_generator = BaseGenerator::Sine;
  std::uint64_t seed = 0;
  std::optional<WaveShape> wave;

  std::size_t variates() const { return values.size(); }
  std::size_t retained() const { return timestamps.size(); }
  bool is_regular() const { return static_cast<std::int64_t>(timestamps.size()) == length; }
  double irregularity_ratio() const {
    return length == 0 ? 0.0 : 1.0 - static_cast<double>(timestamps.size()) / static_cast<double>(length);
  }

  bool operator==(const Series&) const = default;
};

inline std::vector<std::int64_t> regular_timestamps(std::int64_t length) {
  std::vector<std::int64_t> ts(static_cast<std::size_t>(length));
  for (std::int64_t t = 0; t < length; ++t) ts[static_cast<std::size_t>(t)] = t;
  return ts;
}

// Throws ConfigError describing the first violated invariant.
inline void validate(const Series& s) {
  if (s.values.empty()) throw ConfigError("series has no variates");
  if (s.kind == SeriesKind::Univariate && s.values.size() != 1) {
    throw ConfigError("univariate series must have exactly one variate");
  }
  if (s.length <= 0) throw ConfigError("series length must be positive");
  for (std::size_t m = 0; m < s.values.size(); ++m) {
    if (s.values[m].size() != s.timestamps.size()) {
      throw ConfigError("variate " + std::to_string(m) + " has " + std::to_string(s.values[m].size()) +
                        " values but " + std::to_string(s.timestamps.size()) + " timestamps");
    }
    for (double v : s.values[m]) {
      if (!std::isfinite(v)) throw ConfigError("variate " + std::to_string(m) + " has a non-finite value");
    }
  }
  for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
    const auto t = s.timestamps[i];
    if (t < 0 || t >= s.length) throw ConfigError("timestamp " + std::to_string(t) + " outside [0, T)");
    if (i > 0 && t <= s.timestamps[i - 1]) throw ConfigError("timestamps not strictly increasing");
  }
  if (s.timestamps.empty()) throw ConfigError("series has no retained timestamps");
}

// Inclusive index range [first, last].
struct IndexRange {
  std::int64_t first = 0;
  std::int64_t last = 0;

  std::int64_t size() const { return last - first + 1; }
  bool contains(std::int64_t t) const { return first <= t && t <= last; }
  auto operator<=>(const IndexRange&) const = default;
};

struct AnomalyLabel {
  Granularity granularity = Granularity::Point;
  std::vector<std::int64_t> points;
  std::vector<IndexRange> ranges;
  std::vector<std::int64_t> variates;
  AnomalyType anomaly_type = AnomalyType::Global;

  static AnomalyLabel of_points(std::vector<std::int64_t> pts, AnomalyType type) {
    AnomalyLabel l;
    l.granularity = Granularity::Point;
    l.anomaly_type = type;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    l.points = std::move(pts);
    return l;
  }

  static AnomalyLabel of_ranges(std::vector<IndexRange> rs, AnomalyType type) {
    AnomalyLabel l;
    l.granularity = Granularity::Range;
    l.anomaly_type = type;
    std::sort(rs.begin(), rs.end());
    l.ranges = std::move(rs);
    return l;
  }

  static AnomalyLabel of_variates(std::vector<std::int64_t> ids, AnomalyType type) {
    AnomalyLabel l;
    l.granularity = Granularity::Variate;
    l.anomaly_type = type;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    l.variates = std::move(ids);
    return l;
  }

  bool empty() const { return points.empty() && ranges.empty() && variates.empty(); }

  bool operator==(const AnomalyLabel&) const = default;
};

namespace detail {

inline void check_sorted_unique(const std::vector<std::int64_t>& xs, std::int64_t bound, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0 || xs[i] >= bound) {
      throw ConfigError(std::string(what) + " " + std::to_string(xs[i]) + " out of [0, " + std::to_string(bound) + ")");
    }
    if (i > 0 && xs[i] <= xs[i - 1]) throw ConfigError(std::string(what) + " list not sorted and unique");
  }
}

}  // namespace detail

// Checks the label against a series of length T with M variates.
inline void validate(const AnomalyLabel& label, std::int64_t length, std::size_t variates) {
  if (granularity_of(label.anomaly_type) != label.granularity) {
    throw ConfigError("anomaly type '" + std::string(to_string(label.anomaly_type)) +
                      "' inconsistent with granularity '" + std::string(to_string(label.granularity)) + "'");
  }
  const bool has_points = !label.points.empty();
  const bool has_ranges = !label.ranges.empty();
  const bool has_variates = !label.variates.empty();
  switch (label.granularity) {
    case Granularity::Point:
      if (has_ranges || has_variates) throw ConfigError("point label carries ranges or variates");
      detail::check_sorted_unique(label.points, length, "point");
      break;
    case Granularity::Range:
      if (has_points || has_variates) throw ConfigError("range label carries points or variates");
      for (std::size_t i = 0; i < label.ranges.size(); ++i) {
        const auto& r = label.ranges[i];
        if (r.first > r.last) throw ConfigError("range with first > last");
        if (r.first < 0 || r.last >= length) throw ConfigError("range outside [0, T)");
        if (i > 0 && r.first <= label.ranges[i - 1].last) throw ConfigError("ranges overlap or are unsorted");
      }
      break;
    case Granularity::Variate:
      if (has_points || has_ranges) throw ConfigError("variate label carries points or ranges");
      detail::check_sorted_unique(label.variates, static_cast<std::int64_t>(variates), "variate");
      break;
  }
}

inline std::vector<bool> label_as_binary_mask(const AnomalyLabel& label, std::int64_t length) {
  if (label.granularity == Granularity::Variate) {
    throw UnsupportedError("variate labels have no temporal mask");
  }
  std::vector<bool> mask(static_cast<std::size_t>(length), false);
  for (auto t : label.points) {
    if (t >= 0 && t < length) mask[static_cast<std::size_t>(t)] = true;
  }
  for (const auto& r : label.ranges) {
    for (auto t = std::max<std::int64_t>(r.first, 0); t <= std::min(r.last, length - 1); ++t) {
      mask[static_cast<std::size_t>(t)] = true;
    }
  }
  return mask;
}

struct RenderMeta {
  int grid_rows = 1;
  int grid_cols = 1;
  int blanks = 0;
  int width = 0;
  int height = 0;
  bool axes_drawn = true;

  bool operator==(const RenderMeta&) const = default;
};

struct Sample {
  std::string id;
  Series series;
  AnomalyLabel label;
  std::string image_path;
  RenderMeta render_meta;
  Json provenance = Json::object();

  bool operator==(const Sample&) const = default;
};

// Hex SHA-256 over a canonical byte encoding of series content and label.
inline std::string content_id(const Series& s, const AnomalyLabel& label) {
  Sha256 h;
  h.update_str("vtab-sample-v1");
  h.update_str(to_string(s.kind));
  h.update_str(to_string(s.base_generator));
  h.update_u64(s.seed);
  h.update_i64(s.length);
  h.update_u64(s.values.size());
  h.update_u64(s.timestamps.size());
  for (auto t : s.timestamps) h.update_i64(t);
  for (const auto& row : s.values) {
    for (double v : row) h.update_f64(v);
  }
  h.update_str(to_string(label.granularity));
  h.update_str(to_string(label.anomaly_type));
  h.update_u64(label.points.size());
  for (auto p : label.points) h.update_i64(p);
  h.update_u64(label.ranges.size());
  for (const auto& r : label.ranges) h.update_i64(r.first).update_i64(r.last);
  h.update_u64(label.variates.size());
  for (auto v : label.variates) h.update_i64(v);
  return h.hex();
}

struct Prediction {
  Granularity granularity = Granularity::Point;
  std::vector<std::int64_t> points;
  std::vector<IndexRange> ranges;
  std::vector<std::int64_t> variates;
  ParseStatus parse_status = ParseStatus::Malformed;
  std::string raw_excerpt;
  // Parsed entries dropped because they fell outside the valid domain.
  std::size_t discarded = 0;

  bool payload_empty() const { return points.empty() && ranges.empty() && variates.empty(); }
  bool failed() const {
    return parse_status == ParseStatus::Hallucinated || parse_status == ParseStatus::Malformed;
  }

  bool operator==(const Prediction&) const = default;
};

// Truncates to at most `max_bytes` without splitting a UTF-8 sequence.
inline std::string utf8_prefix(std::string_view text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return std::string(text);
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return std::string(text.substr(0, cut));
}

}  // namespace vtab
