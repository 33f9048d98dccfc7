#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "vtab/core.hpp"
#include "vtab/rng.hpp"
#include "vtab/stats.hpp"

namespace vtab {

struct GeneratorConfig {
  BaseGenerator base_generator = BaseGenerator::Sine;
  std::int64_t length = 400;
  std::size_t variates = 1;
  double amplitude = 1.0;
  double period = 50.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

inline void validate(const GeneratorConfig& c) {
  if (c.length < 16) throw ConfigError("generator length T must be >= 16");
  if (c.variates < 1) throw ConfigError("generator needs at least one variate");
  if (c.period < 4) throw ConfigError("generator period must be >= 4");
  if (!(c.noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  if (!std::isfinite(c.amplitude)) throw ConfigError("amplitude must be finite");
}

namespace detail {

// Independent noise stream per variate so adding variates never perturbs earlier rows.
inline std::vector<double> wave_row(const GeneratorConfig& c, std::size_t variate, bool cosine) {
  Rng noise(derive_seed(c.seed, static_cast<std::uint64_t>(variate)));
  std::vector<double> row(static_cast<std::size_t>(c.length));
  for (std::int64_t t = 0; t < c.length; ++t) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / c.period;
    const double clean = c.amplitude * (cosine ? std::cos(phase) : std::sin(phase));
    row[static_cast<std::size_t>(t)] = c.noise_sigma > 0 ? clean + noise.normal(0.0, c.noise_sigma) : clean;
  }
  return row;
}

}  // namespace detail

inline Series gen_sine(const GeneratorConfig& c) {
  validate(c);
  if (c.base_generator != BaseGenerator::Sine) throw ConfigError("gen_sine requires base_generator = sine");
  if (c.variates != 1) throw ConfigError("gen_sine produces a univariate series (M = 1)");
  Series s;
  s.kind = SeriesKind::Univariate;
  s.values.push_back(detail::wave_row(c, 0, false));
  s.timestamps = regular_timestamps(c.length);
  s.length = c.length;
  s.base_generator = BaseGenerator::Sine;
  s.seed = c.seed;
  s.wave = WaveShape{c.amplitude, c.period};
  return s;
}

// Even variates are sine, odd variates cosine.
inline Series gen_sine_cosine(const GeneratorConfig& c) {
  validate(c);
  if (c.base_generator != BaseGenerator::SineCosine) {
    throw ConfigError("gen_sine_cosine requires base_generator = sine_cosine");
  }
  if (c.variates < 2) throw ConfigError("gen_sine_cosine requires M >= 2");
  Series s;
  s.kind = SeriesKind::Multivariate;
  for (std::size_t m = 0; m < c.variates; ++m) s.values.push_back(detail::wave_row(c, m, m % 2 == 1));
  s.timestamps = regular_timestamps(c.length);
  s.length = c.length;
  s.base_generator = BaseGenerator::SineCosine;
  s.seed = c.seed;
  s.wave = WaveShape{c.amplitude, c.period};
  return s;
}

// Value of the clean explicit waveform for variate m at time t.
inline double explicit_wave_value(BaseGenerator g, const WaveShape& w, std::size_t variate, double t) {
  const double phase = 2.0 * std::numbers::pi * t / w.period;
  const bool cosine = g == BaseGenerator::SineCosine && variate % 2 == 1;
  return w.amplitude * (cosine ? std::cos(phase) : std::sin(phase));
}

// ---------------------------------------------------------------------------
// Archive ingestion

struct ArchiveCase {
  Series series;
  std::string class_label;
  std::size_t row = 0;  // 1-based data row in the source file
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits on commas, tabs or runs of spaces. Empty comma-separated fields are kept.
inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  if (line.find(',') != std::string_view::npos) {
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    out.push_back(trim(cur));
    return out;
  }
  std::stringstream ss{std::string(line)};
  std::string field;
  while (ss >> field) out.push_back(field);
  return out;
}

inline double parse_value(const std::string& field, std::size_t row) {
  const std::string t = trim(field);
  double v = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw FormatError("row " + std::to_string(row) + ": unreadable value '" + t + "'", row);
  }
  return v;
}

// Normalization happens after truncation so every used row has zero mean.
inline void truncate(std::vector<double>& xs, std::int64_t max_length) {
  if (max_length > 0 && static_cast<std::int64_t>(xs.size()) > max_length) xs.resize(static_cast<std::size_t>(max_length));
}

inline void z_normalize(std::vector<double>& xs, std::size_t row, std::size_t dimension) {
  const double mu = mean(xs);
  const double sd = stddev(xs);
  if (!(sd > 1e-12)) {
    throw FormatError("zero variance row " + std::to_string(row) +
                          (dimension ? " (dimension " + std::to_string(dimension) + ")" : std::string()),
                      row);
  }
  for (double& x : xs) x = (x - mu) / sd;
}

inline Series archive_series(std::vector<std::vector<double>> rows, BaseGenerator g, std::int64_t max_length,
                             std::uint64_t seed) {
  std::size_t len = rows.front().size();
  if (max_length > 0 && static_cast<std::int64_t>(len) > max_length) len = static_cast<std::size_t>(max_length);
  for (auto& r : rows) r.resize(len);
  Series s;
  s.kind = rows.size() == 1 ? SeriesKind::Univariate : SeriesKind::Multivariate;
  s.values = std::move(rows);
  s.length = static_cast<std::int64_t>(len);
  s.timestamps = regular_timestamps(s.length);
  s.base_generator = g;
  s.seed = seed;
  return s;
}

}  // namespace detail

// UCR layout: one case per line, first field the class label, then values.
inline std::vector<ArchiveCase> parse_ucr(std::istream& in, const GeneratorConfig& c) {
  std::vector<ArchiveCase> out;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = detail::split_fields(t);
    if (fields.size() < 3) throw FormatError("row " + std::to_string(row) + ": fewer than two values", row);
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw FormatError("ragged row " + std::to_string(row) + ": " + std::to_string(fields.size() - 1) +
                            " values, expected " + std::to_string(width - 1),
                        row);
    }
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) values.push_back(detail::parse_value(fields[i], row));
    detail::truncate(values, c.length);
    detail::z_normalize(values, row, 0);
    ArchiveCase ac;
    ac.class_label = detail::trim(fields[0]);
    ac.row = row;
    ac.series = detail::archive_series({std::move(values)}, BaseGenerator::UcrSymbols, c.length, c.seed);
    out.push_back(std::move(ac));
  }
  return out;
}

// UEA .ts layout: '@' header lines, then after @data one case per line with
// dimensions separated by ':' and the class label as the last field.
inline std::vector<ArchiveCase> parse_uea(std::istream& in, const GeneratorConfig& c) {
  std::vector<ArchiveCase> out;
  std::string line;
  std::size_t row = 0;
  std::size_t dims = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#' || t.front() == '@') continue;
    std::vector<std::string> parts;
    std::stringstream ss(t);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() < 2) throw FormatError("row " + std::to_string(row) + ": missing ':' separated label", row);
    const std::string label = detail::trim(parts.back());
    parts.pop_back();
    if (dims == 0) dims = parts.size();
    if (parts.size() != dims) {
      throw FormatError("ragged row " + std::to_string(row) + ": " + std::to_string(parts.size()) +
                            " dimensions, expected " + std::to_string(dims),
                        row);
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t d = 0; d < parts.size(); ++d) {
      std::vector<double> values;
      for (const auto& f : detail::split_fields(parts[d])) values.push_back(detail::parse_value(f, row));
      if (values.size() < 2) throw FormatError("row " + std::to_string(row) + ": dimension with < 2 values", row);
      if (!rows.empty() && values.size() != rows.front().size()) {
        throw FormatError("ragged row " + std::to_string(row) + ": dimensions of unequal length", row);
      }
      detail::truncate(values, c.length);
      detail::z_normalize(values, row, d + 1);
      rows.push_back(std::move(values));
    }
    ArchiveCase ac;
    ac.class_label = label;
    ac.row = row;
    ac.series = detail::archive_series(std::move(rows), BaseGenerator::UeaArticulatoryWordRecognition, c.length,
                                       c.seed);
    out.push_back(std::move(ac));
  }
  return out;
}

// Reads an archive text file. Every case is z-normalized per dimension;
// cases longer than config.length are truncated, shorter ones keep their length.
inline std::vector<ArchiveCase> ingest_archive(const std::filesystem::path& path, BaseGenerator dataset,
                                               const GeneratorConfig& c) {
  if (is_explicit(dataset)) throw ConfigError("ingest_archive: '" + std::string(to_string(dataset)) + "' is not an archive dataset");
  std::ifstream in(path);
  if (!in) throw Error("cannot open archive file: " + path.string());
  return dataset == BaseGenerator::UcrSymbols ? parse_ucr(in, c) : parse_uea(in, c);
}

// Stacks dimensions of consecutive cases, starting at `first_case`, until M
// rows are collected; all rows are cut to the shortest contributing case.
inline Series assemble_multivariate(const std::vector<ArchiveCase>& cases, std::size_t variates,
                                    std::size_t first_case, std::vector<std::size_t>* used_cases = nullptr) {
  if (cases.empty()) throw ConfigError("archive has no cases");
  std::vector<std::vector<double>> rows;
  std::size_t min_len = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; rows.size() < variates; ++k) {
    const auto& ac = cases[(first_case + k) % cases.size()];
    if (used_cases) used_cases->push_back((first_case + k) % cases.size());
    for (const auto& r : ac.series.values) {
      if (rows.size() == variates) break;
      rows.push_back(r);
      min_len = std::min(min_len, r.size());
    }
  }
  for (auto& r : rows) r.resize(min_len);
  Series s;
  s.kind = variates == 1 ? SeriesKind::Univariate : SeriesKind::Multivariate;
  s.values = std::move(rows);
  s.length = static_cast<std::int64_t>(min_len);
  s.timestamps = regular_timestamps(s.length);
  s.base_generator = cases.front().series.base_generator;
  s.seed = cases.front().series.seed;
  return s;
}

}  // namespace vtab
