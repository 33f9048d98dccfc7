#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtab/core.hpp"
#include "vtab/inject.hpp"
#include "vtab/render.hpp"
#include "vtab/synth.hpp"
#include "vtab/toml.hpp"

namespace vtab {

enum class Scenario { Univariate, Multivariate, IrregularUnivariate, IrregularMultivariate };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Univariate:
      return "univariate";
    case Scenario::Multivariate:
      return "multivariate";
    case Scenario::IrregularUnivariate:
      return "irregular_univariate";
    default:
      return "irregular_multivariate";
  }
}

inline Scenario parse_scenario(std::string_view s) {
  for (auto v : {Scenario::Univariate, Scenario::Multivariate, Scenario::IrregularUnivariate,
                 Scenario::IrregularMultivariate}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

inline bool is_irregular(Scenario s) {
  return s == Scenario::IrregularUnivariate || s == Scenario::IrregularMultivariate;
}

inline bool is_multivariate(Scenario s) { return s == Scenario::Multivariate || s == Scenario::IrregularMultivariate; }

inline constexpr std::string_view kRuleIrregularContextual = "irregular-contextual";
inline constexpr std::string_view kRuleImplicitSeasonal = "implicit-seasonal";

// Name of the exclusion rule forbidding this combination, if any.
inline std::optional<std::string> exclusion_rule(Scenario scenario, BaseGenerator generator, AnomalyType type) {
  if (is_irregular(scenario) && type == AnomalyType::Contextual) return std::string(kRuleIrregularContextual);
  if (!is_explicit(generator) && type == AnomalyType::Seasonal) return std::string(kRuleImplicitSeasonal);
  return std::nullopt;
}

inline std::string exclusion_message(std::string_view rule) {
  if (rule == kRuleIrregularContextual) {
    return "contextual anomalies are skipped for irregular series: dropping points around an anomaly damages its "
           "context window (rule " + std::string(rule) + ")";
  }
  return "seasonal anomalies are excluded when the base series uses an implicit generative function (rule " +
         std::string(rule) + ")";
}

// Throws ExclusionError when the combination is excluded.
inline void check_combination(Scenario scenario, BaseGenerator generator, AnomalyType type) {
  if (auto rule = exclusion_rule(scenario, generator, type)) throw ExclusionError(exclusion_message(*rule), *rule);
}

// Shape compatibility, independent of the exclusion rules.
inline bool applicable(Scenario scenario, BaseGenerator generator, AnomalyType type) {
  const bool mv = is_multivariate(scenario);
  return mv == is_multivariate_generator(generator) && mv == (granularity_of(type) == Granularity::Variate);
}

struct ExperimentMatrix {
  std::vector<Scenario> scenarios{Scenario::Univariate, Scenario::Multivariate, Scenario::IrregularUnivariate,
                                  Scenario::IrregularMultivariate};
  std::vector<BaseGenerator> base_generators{BaseGenerator::Sine, BaseGenerator::SineCosine, BaseGenerator::UcrSymbols,
                                             BaseGenerator::UeaArticulatoryWordRecognition};
  std::vector<AnomalyType> anomaly_types{kAllAnomalyTypes.begin(), kAllAnomalyTypes.end()};
  std::vector<std::int64_t> m_values{4, 9, 16, 25, 36};
  std::vector<std::int64_t> irregular_m_values{9};
  std::vector<double> r_values{0.05, 0.10, 0.15, 0.20, 0.25};
  std::int64_t samples_per_dataset = 100;
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  InjectionConfig injection;
  // Unset: scaled with M by default_variate_count.
  std::optional<CountRange> n_anomalous_variates;
  RenderStyle style;
  std::filesystem::path symbols_path;
  std::filesystem::path awr_path;
};

namespace detail {

inline CountRange count_range(const Json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(key) + " must be a [lo, hi] pair");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

template <typename T, typename F>
std::vector<T> list_of(const Json& j, const char* key, F convert) {
  if (!j.is_array()) throw ConfigError(std::string(key) + " must be an array");
  std::vector<T> out;
  for (const auto& v : j) out.push_back(convert(v));
  return out;
}

inline void reject_unknown(const Json& table, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [k, v] : table.items()) {
    bool ok = false;
    for (auto name : known) ok = ok || name == k;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace detail

// Reads a matrix document; relative archive paths resolve against `base_dir`.
inline ExperimentMatrix matrix_from_json(const Json& doc, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  ExperimentMatrix m;
  reject_unknown(doc,
                 {"scenarios", "base_generators", "anomaly_types", "M_values", "irregular_M_values", "r_values",
                  "samples_per_dataset", "seed", "T", "symbols_path", "awr_path", "generator", "injection", "style"},
                 "matrix");
  auto str = [](const Json& v) { return v.get<std::string>(); };
  try {
    if (doc.contains("scenarios")) {
      m.scenarios = list_of<Scenario>(doc["scenarios"], "scenarios", [&](const Json& v) { return parse_scenario(str(v)); });
    }
    if (doc.contains("base_generators")) {
      m.base_generators = list_of<BaseGenerator>(doc["base_generators"], "base_generators",
                                                 [&](const Json& v) { return parse_base_generator(str(v)); });
    }
    if (doc.contains("anomaly_types")) {
      m.anomaly_types = list_of<AnomalyType>(doc["anomaly_types"], "anomaly_types",
                                             [&](const Json& v) { return parse_anomaly_type(str(v)); });
    }
    auto ints = [](const Json& v) { return v.get<std::int64_t>(); };
    if (doc.contains("M_values")) m.m_values = list_of<std::int64_t>(doc["M_values"], "M_values", ints);
    if (doc.contains("irregular_M_values")) {
      m.irregular_m_values = list_of<std::int64_t>(doc["irregular_M_values"], "irregular_M_values", ints);
    }
    if (doc.contains("r_values")) {
      m.r_values = list_of<double>(doc["r_values"], "r_values", [](const Json& v) { return v.get<double>(); });
    }
    m.samples_per_dataset = doc.value("samples_per_dataset", m.samples_per_dataset);
    m.seed = doc.value("seed", m.seed);
    m.generator.length = doc.value("T", m.generator.length);
    auto path_of = [&](const char* key) -> std::filesystem::path {
      if (!doc.contains(key)) return {};
      std::filesystem::path p = str(doc[key]);
      return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    m.symbols_path = path_of("symbols_path");
    m.awr_path = path_of("awr_path");

    if (doc.contains("generator")) {
      const auto& g = doc["generator"];
      reject_unknown(g, {"amplitude", "period", "noise_sigma"}, "[generator]");
      m.generator.amplitude = g.value("amplitude", m.generator.amplitude);
      m.generator.period = g.value("period", m.generator.period);
      m.generator.noise_sigma = g.value("noise_sigma", m.generator.noise_sigma);
    }
    if (doc.contains("injection")) {
      const auto& j = doc["injection"];
      reject_unknown(j,
                     {"lambda", "context_k", "n_point_anomalies", "n_ranges", "range_len", "n_anomalous_variates",
                      "magnitude", "noise_sigma", "seasonal_factors", "trend_c", "trend_persist", "shapelet_shapes"},
                     "[injection]");
      auto& c = m.injection;
      c.lambda = j.value("lambda", c.lambda);
      c.context_k = j.value("context_k", c.context_k);
      if (j.contains("n_point_anomalies")) c.n_point_anomalies = count_range(j["n_point_anomalies"], "n_point_anomalies");
      if (j.contains("n_ranges")) c.n_ranges = count_range(j["n_ranges"], "n_ranges");
      if (j.contains("range_len")) c.range_len = count_range(j["range_len"], "range_len");
      if (j.contains("n_anomalous_variates")) {
        m.n_anomalous_variates = count_range(j["n_anomalous_variates"], "n_anomalous_variates");
      }
      c.magnitude = j.value("magnitude", c.magnitude);
      c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
      if (j.contains("seasonal_factors")) {
        c.seasonal_factors = list_of<double>(j["seasonal_factors"], "seasonal_factors",
                                             [](const Json& v) { return v.get<double>(); });
      }
      if (j.contains("trend_c")) {
        const auto& t = j["trend_c"];
        if (!t.is_array() || t.size() != 2) throw ConfigError("trend_c must be a [lo, hi] pair");
        c.trend_c_lo = t[0].get<double>();
        c.trend_c_hi = t[1].get<double>();
      }
      c.trend_persist = j.value("trend_persist", c.trend_persist);
      if (j.contains("shapelet_shapes")) {
        c.shapelet_shapes = list_of<ShapeletShape>(j["shapelet_shapes"], "shapelet_shapes",
                                                   [&](const Json& v) { return parse_shapelet_shape(str(v)); });
      }
    }
    if (doc.contains("style")) {
      const auto& s = doc["style"];
      reject_unknown(s, {"width", "height", "grid_width", "grid_height", "stroke_width", "dpi"}, "[style]");
      m.style.width = s.value("width", m.style.width);
      m.style.height = s.value("height", m.style.height);
      m.style.grid_width = s.value("grid_width", m.style.grid_width);
      m.style.grid_height = s.value("grid_height", m.style.grid_height);
      m.style.stroke_width = s.value("stroke_width", m.style.stroke_width);
      m.style.dpi = s.value("dpi", m.style.dpi);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("matrix: ") + e.what());
  }
  return m;
}

inline ExperimentMatrix matrix_from_toml(const std::filesystem::path& path) {
  return matrix_from_json(toml::parse_file(path), path.parent_path());
}

inline void validate(const ExperimentMatrix& m) {
  if (m.samples_per_dataset < 1) throw ConfigError("samples_per_dataset must be >= 1");
  for (auto v : m.m_values) {
    if (v < 2) throw ConfigError("M_values entries must be >= 2");
  }
  for (auto v : m.irregular_m_values) {
    if (v < 2) throw ConfigError("irregular_M_values entries must be >= 2");
  }
  for (double r : m.r_values) {
    if (!(r > 0 && r <= 0.25)) throw ConfigError("r_values entries must lie in (0, 0.25]");
  }
  validate(m.injection);
  validate(m.style);
  GeneratorConfig g = m.generator;
  validate(g);
}

struct DatasetPlan {
  std::string name;
  Scenario scenario = Scenario::Univariate;
  BaseGenerator generator = BaseGenerator::Sine;
  AnomalyType type = AnomalyType::Global;
  std::int64_t variates = 1;
  double irregularity_r = 0.0;
  std::int64_t samples = 0;
  InjectionConfig injection;
};

struct ExcludedCombination {
  Scenario scenario;
  BaseGenerator generator;
  AnomalyType type;
  std::string rule;
};

struct PlanResult {
  std::vector<DatasetPlan> datasets;
  std::vector<ExcludedCombination> excluded;
  std::int64_t total_samples = 0;

  // Dataset and image counts per scenario and per anomaly type.
  std::string census() const;
};

inline std::string r_tag(double r) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%02d", static_cast<int>(std::lround(r * 100.0)));
  return buf;
}

inline std::string dataset_name(Scenario s, BaseGenerator g, AnomalyType t, std::int64_t m, double r) {
  std::string name = std::string(to_string(s)) + "-" + std::string(to_string(g)) + "-" + std::string(to_string(t));
  if (is_multivariate(s)) name += "-M" + std::to_string(m);
  if (is_irregular(s)) name += "-" + r_tag(r);
  return name;
}

// Cross product of the matrix minus the exclusion rules. A requested anomaly
// type that survives only in excluded combinations is an error naming the rule.
inline PlanResult plan_datasets(const ExperimentMatrix& m) {
  validate(m);
  PlanResult out;
  std::map<AnomalyType, std::string> blocked_by;
  std::map<AnomalyType, int> planned;
  for (auto scenario : m.scenarios) {
    for (auto generator : m.base_generators) {
      for (auto type : m.anomaly_types) {
        if (!applicable(scenario, generator, type)) continue;
        if (auto rule = exclusion_rule(scenario, generator, type)) {
          out.excluded.push_back({scenario, generator, type, *rule});
          blocked_by.emplace(type, *rule);
          continue;
        }
        const auto& ms = !is_multivariate(scenario) ? std::vector<std::int64_t>{1}
                         : is_irregular(scenario)   ? m.irregular_m_values
                                                    : m.m_values;
        const auto rs = is_irregular(scenario) ? m.r_values : std::vector<double>{0.0};
        for (auto variates : ms) {
          for (double r : rs) {
            DatasetPlan d;
            d.scenario = scenario;
            d.generator = generator;
            d.type = type;
            d.variates = variates;
            d.irregularity_r = r;
            d.samples = m.samples_per_dataset;
            d.injection = m.injection;
            d.injection.irregularity_r = r;
            if (granularity_of(type) == Granularity::Variate) {
              d.injection.n_anomalous_variates =
                  m.n_anomalous_variates.value_or(default_variate_count(static_cast<std::size_t>(variates)));
            }
            d.name = dataset_name(scenario, generator, type, variates, r);
            out.datasets.push_back(std::move(d));
            ++planned[type];
          }
        }
      }
    }
  }
  for (auto type : m.anomaly_types) {
    if (planned[type] == 0 && blocked_by.count(type)) {
      const auto& rule = blocked_by[type];
      throw ExclusionError("requested '" + std::string(to_string(type)) + "' datasets are all excluded: " +
                               exclusion_message(rule),
                           rule);
    }
  }
  if (out.datasets.empty()) throw ConfigError("matrix yields no datasets");
  out.total_samples = static_cast<std::int64_t>(out.datasets.size()) * m.samples_per_dataset;
  return out;
}

inline std::string PlanResult::census() const {
  std::map<std::string, std::pair<int, std::int64_t>> by_scenario;
  std::map<std::string, std::pair<int, std::int64_t>> by_type;
  for (const auto& d : datasets) {
    auto& s = by_scenario[std::string(to_string(d.scenario))];
    ++s.first;
    s.second += d.samples;
    auto& t = by_type[std::string(to_string(d.type))];
    ++t.first;
    t.second += d.samples;
  }
  std::string out = "datasets: " + std::to_string(datasets.size()) + ", images: " + std::to_string(total_samples) + "\n";
  out += "by scenario:\n";
  for (const auto& [k, v] : by_scenario) {
    out += "  " + k + ": " + std::to_string(v.first) + " datasets, " + std::to_string(v.second) + " images\n";
  }
  out += "by anomaly type:\n";
  for (const auto& [k, v] : by_type) {
    out += "  " + k + ": " + std::to_string(v.first) + " datasets, " + std::to_string(v.second) + " images\n";
  }
  if (!excluded.empty()) {
    out += "excluded combinations:\n";
    for (const auto& e : excluded) {
      out += "  " + std::string(to_string(e.scenario)) + " / " + std::string(to_string(e.generator)) + " / " +
             std::string(to_string(e.type)) + " (" + e.rule + ")\n";
    }
  }
  return out;
}

}  // namespace vtab
