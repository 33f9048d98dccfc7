#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "vtab/core.hpp"
#include "vtab/inject.hpp"
#include "vtab/manifest.hpp"
#include "vtab/plan.hpp"
#include "vtab/render.hpp"
#include "vtab/synth.hpp"

namespace vtab {

inline Json count_range_json(const CountRange& r) { return Json::array({r.lo, r.hi}); }

inline Json to_json(const InjectionConfig& c) {
  Json shapes = Json::array();
  for (auto s : c.shapelet_shapes) shapes.push_back(to_string(s));
  return Json{{"lambda", c.lambda},
              {"context_k", c.context_k},
              {"n_point_anomalies", count_range_json(c.n_point_anomalies)},
              {"n_ranges", count_range_json(c.n_ranges)},
              {"range_len", count_range_json(c.range_len)},
              {"n_anomalous_variates", count_range_json(c.n_anomalous_variates)},
              {"magnitude", c.magnitude},
              {"irregularity_r", c.irregularity_r},
              {"noise_sigma", c.noise_sigma},
              {"seasonal_factors", c.seasonal_factors},
              {"trend_c", Json::array({c.trend_c_lo, c.trend_c_hi})},
              {"trend_persist", c.trend_persist},
              {"shapelet_shapes", shapes},
              {"seed", c.seed}};
}

inline InjectionConfig injection_from_json(const Json& j) {
  auto range = [&](const char* k) { return CountRange{j.at(k).at(0).get<std::int64_t>(), j.at(k).at(1).get<std::int64_t>()}; };
  InjectionConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.context_k = j.at("context_k").get<std::int64_t>();
  c.n_point_anomalies = range("n_point_anomalies");
  c.n_ranges = range("n_ranges");
  c.range_len = range("range_len");
  c.n_anomalous_variates = range("n_anomalous_variates");
  c.magnitude = j.at("magnitude").get<double>();
  c.irregularity_r = j.at("irregularity_r").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.seasonal_factors = j.at("seasonal_factors").get<std::vector<double>>();
  c.trend_c_lo = j.at("trend_c").at(0).get<double>();
  c.trend_c_hi = j.at("trend_c").at(1).get<double>();
  c.trend_persist = j.at("trend_persist").get<bool>();
  c.shapelet_shapes.clear();
  for (const auto& s : j.at("shapelet_shapes")) c.shapelet_shapes.push_back(parse_shapelet_shape(s.get<std::string>()));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// Everything needed to regenerate one sample; stored in its provenance.
struct SampleRecipe {
  std::string dataset;
  Scenario scenario = Scenario::Univariate;
  BaseGenerator generator = BaseGenerator::Sine;
  AnomalyType type = AnomalyType::Global;
  std::int64_t variates = 1;
  double irregularity_r = 0.0;
  std::int64_t sample_index = 0;
  std::uint64_t sample_seed = 0;
  GeneratorConfig generator_config;
  InjectionConfig injection;
  std::filesystem::path archive_path;
};

inline std::uint64_t sample_seed(std::uint64_t matrix_seed, const std::string& dataset, std::int64_t index) {
  return derive_seed(derive_seed(matrix_seed, std::string_view(dataset)), static_cast<std::uint64_t>(index));
}

inline SampleRecipe make_recipe(const ExperimentMatrix& m, const DatasetPlan& d, std::int64_t index) {
  SampleRecipe r;
  r.dataset = d.name;
  r.scenario = d.scenario;
  r.generator = d.generator;
  r.type = d.type;
  r.variates = d.variates;
  r.irregularity_r = d.irregularity_r;
  r.sample_index = index;
  r.sample_seed = sample_seed(m.seed, d.name, index);
  r.generator_config = m.generator;
  r.generator_config.base_generator = d.generator;
  r.generator_config.variates = static_cast<std::size_t>(d.variates);
  r.generator_config.seed = derive_seed(r.sample_seed, "base");
  r.injection = d.injection;
  r.injection.seed = derive_seed(r.sample_seed, "inject");
  if (d.generator == BaseGenerator::UcrSymbols) r.archive_path = m.symbols_path;
  if (d.generator == BaseGenerator::UeaArticulatoryWordRecognition) r.archive_path = m.awr_path;
  return r;
}

// Loads each archive file once; shared by worker threads.
class ArchiveStore {
 public:
  const std::vector<ArchiveCase>& get(const std::filesystem::path& path, BaseGenerator g, std::int64_t length) {
    std::lock_guard lock(mutex_);
    const auto key = path.string() + "|" + std::string(to_string(g)) + "|" + std::to_string(length);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (path.empty()) throw ConfigError("no archive file configured for '" + std::string(to_string(g)) + "'");
    GeneratorConfig c;
    c.length = length;
    auto cases = ingest_archive(path, g, c);
    if (cases.empty()) throw ConfigError("archive " + path.string() + " contains no cases");
    return cache_.emplace(key, std::move(cases)).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::vector<ArchiveCase>> cache_;
};

struct BuiltSample {
  Series base;              // pre-injection, regular
  InjectionResult injected;  // regular, before dropping
  Sample sample;             // final series and label; image not yet rendered
};

inline Series make_base(const SampleRecipe& r, ArchiveStore& archives, Json& archive_info) {
  const auto& g = r.generator_config;
  if (r.generator == BaseGenerator::Sine) return gen_sine(g);
  if (r.generator == BaseGenerator::SineCosine) return gen_sine_cosine(g);
  const auto& cases = archives.get(r.archive_path, r.generator, g.length);
  Rng rng(g.seed);
  const auto first = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cases.size()) - 1));
  std::vector<std::size_t> used;
  Series s = assemble_multivariate(cases, static_cast<std::size_t>(r.variates), first, &used);
  s.seed = g.seed;
  s.base_generator = r.generator;
  Json rows = Json::array();
  Json labels = Json::array();
  for (auto u : used) {
    rows.push_back(cases[u].row);
    labels.push_back(cases[u].class_label);
  }
  archive_info = Json{{"path", r.archive_path.generic_string()},
                      {"source_rows", rows},
                      {"class_labels", labels},
                      {"normalization", "z-normalized per series row"}};
  return s;
}

inline constexpr int kMaxInjectionAttempts = 8;
inline constexpr int kMaxDropAttempts = 32;

// Deterministic: the same recipe always yields the same sample.
inline BuiltSample build_sample(const SampleRecipe& r, ArchiveStore& archives) {
  BuiltSample out;
  Json archive_info;
  out.base = make_base(r, archives, archive_info);

  InjectionConfig cfg = r.injection;
  int attempt = 0;
  for (;; ++attempt) {
    cfg.seed = attempt == 0 ? r.injection.seed : derive_seed(r.injection.seed, static_cast<std::uint64_t>(attempt));
    try {
      out.injected = inject(out.base, cfg, r.type);
      break;
    } catch (const InfeasibleInjection&) {
      if (attempt + 1 >= kMaxInjectionAttempts) throw;
    }
  }

  Series final_series = out.injected.series;
  AnomalyLabel final_label = out.injected.label;
  Json drop_info;
  if (is_irregular(r.scenario)) {
    const auto drop_base = derive_seed(r.sample_seed, "drop");
    for (int k = 0;; ++k) {
      const auto seed = k == 0 ? drop_base : derive_seed(drop_base, static_cast<std::uint64_t>(k));
      final_series = drop_irregular(out.injected.series, r.irregularity_r, seed);
      final_label = filter_label_after_drop(out.injected.label, final_series.timestamps);
      if (!final_label.empty()) {
        drop_info = Json{{"seed", seed}, {"attempt", k}, {"retained", final_series.retained()}};
        break;
      }
      if (k + 1 >= kMaxDropAttempts) throw InfeasibleInjection("dropping points removed every labeled anomaly");
    }
  }

  auto& s = out.sample;
  s.series = std::move(final_series);
  s.label = std::move(final_label);
  s.id = content_id(s.series, s.label);
  Json prov{{"dataset", r.dataset},
            {"scenario", to_string(r.scenario)},
            {"sample_index", r.sample_index},
            {"sample_seed", r.sample_seed},
            {"irregularity_r", r.irregularity_r},
            {"generator", Json{{"T", r.generator_config.length},
                               {"M", r.variates},
                               {"amplitude", r.generator_config.amplitude},
                               {"period", r.generator_config.period},
                               {"noise_sigma", r.generator_config.noise_sigma},
                               {"seed", r.generator_config.seed}}},
            {"injection", to_json(r.injection)},
            {"injection_attempt", attempt},
            {"details", out.injected.details}};
  if (!archive_info.is_null()) prov["archive"] = archive_info;
  if (!drop_info.is_null()) prov["drop"] = drop_info;
  s.provenance = std::move(prov);
  return out;
}

// Inverse of the provenance written by build_sample.
inline SampleRecipe recipe_from_provenance(const Sample& s) {
  const auto& p = s.provenance;
  SampleRecipe r;
  r.dataset = p.at("dataset").get<std::string>();
  r.scenario = parse_scenario(p.at("scenario").get<std::string>());
  r.generator = s.series.base_generator;
  r.type = s.label.anomaly_type;
  r.irregularity_r = p.at("irregularity_r").get<double>();
  r.sample_index = p.at("sample_index").get<std::int64_t>();
  r.sample_seed = p.at("sample_seed").get<std::uint64_t>();
  const auto& g = p.at("generator");
  r.variates = g.at("M").get<std::int64_t>();
  r.generator_config.base_generator = r.generator;
  r.generator_config.length = g.at("T").get<std::int64_t>();
  r.generator_config.variates = static_cast<std::size_t>(r.variates);
  r.generator_config.amplitude = g.at("amplitude").get<double>();
  r.generator_config.period = g.at("period").get<double>();
  r.generator_config.noise_sigma = g.at("noise_sigma").get<double>();
  r.generator_config.seed = g.at("seed").get<std::uint64_t>();
  r.injection = injection_from_json(p.at("injection"));
  if (p.contains("archive")) r.archive_path = p["archive"].at("path").get<std::string>();
  return r;
}

struct BuildReport {
  PlanResult plan;
  std::vector<Sample> samples;
  std::filesystem::path manifest_path;
};

// Runs fn(i) for i in [0, n) on `threads` workers; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Generates, injects, renders and writes <out>/manifest.jsonl plus one PNG per
// sample under <out>/<dataset>/<id>.png.
inline BuildReport cmd_build(const ExperimentMatrix& matrix, const std::filesystem::path& out_dir,
                             unsigned threads = default_threads()) {
  BuildReport report;
  report.plan = plan_datasets(matrix);
  std::vector<SampleRecipe> recipes;
  for (const auto& d : report.plan.datasets) {
    for (std::int64_t i = 0; i < d.samples; ++i) recipes.push_back(make_recipe(matrix, d, i));
  }
  std::filesystem::create_directories(out_dir);
  ArchiveStore archives;
  report.samples.resize(recipes.size());
  parallel_for(recipes.size(), threads, [&](std::size_t i) {
    auto built = build_sample(recipes[i], archives);
    auto& s = built.sample;
    const auto rendered = render(s.series, matrix.style);
    s.render_meta = rendered.meta;
    s.image_path = recipes[i].dataset + "/" + s.id + ".png";
    const auto image = out_dir / s.image_path;
    std::filesystem::create_directories(image.parent_path());
    std::ofstream png(image, std::ios::binary | std::ios::trunc);
    png.write(reinterpret_cast<const char*>(rendered.png.data()), static_cast<std::streamsize>(rendered.png.size()));
    if (!png) throw Error("cannot write " + image.string());
    report.samples[i] = std::move(s);
  });
  report.manifest_path = out_dir / "manifest.jsonl";
  manifest_write(report.samples, report.manifest_path);
  return report;
}

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

// Regenerates every sample from its provenance and re-runs the injection
// validators and label invariants. `min_range_dissimilarity` is in units of
// the base series' standard deviation.
inline VerifyReport cmd_verify(const std::filesystem::path& manifest_path, double min_range_dissimilarity = 0.0,
                               unsigned threads = default_threads()) {
  VerifyReport report;
  auto contents = manifest_read(manifest_path);
  report.warnings = contents.warnings;
  const auto base_dir = manifest_path.parent_path();
  ArchiveStore archives;
  std::vector<std::vector<std::string>> problems(contents.samples.size());
  parallel_for(contents.samples.size(), threads, [&](std::size_t i) {
    const auto& s = contents.samples[i];
    auto& bad = problems[i];
    auto fail = [&](const std::string& what) { bad.push_back(s.id.substr(0, 12) + ": " + what); };
    try {
      validate(s.series);
      validate(s.label, s.series.length, s.series.variates());
      if (s.label.empty()) fail("empty label");
      if (content_id(s.series, s.label) != s.id) fail("id does not match content");
      const auto recipe = recipe_from_provenance(s);
      const auto rebuilt = build_sample(recipe, archives);
      if (!(rebuilt.sample.series == s.series)) fail("series differs from regenerated series");
      if (!(rebuilt.sample.label == s.label)) fail("label differs from regenerated label");
      const auto& before = rebuilt.base;
      const auto& after = rebuilt.injected;
      const auto& cfg = recipe.injection;
      const bool locality_applies = !(s.label.anomaly_type == AnomalyType::Trend && cfg.trend_persist);
      if (locality_applies && !locality_violations(before, after.series, after.label).empty()) {
        fail("values changed outside labeled positions");
      }
      if (s.label.granularity == Granularity::Point) {
        const auto v = point_threshold_violations(before, after.series, after.label, cfg.lambda, cfg.context_k);
        if (!v.empty()) fail(std::to_string(v.size()) + " labeled points within the threshold");
      } else if (s.label.granularity == Granularity::Range) {
        for (double d : range_dissimilarities(before, after.series, after.label)) {
          if (!(d > min_range_dissimilarity)) fail("range dissimilarity " + std::to_string(d) + " not above threshold");
        }
      }
      if (is_irregular(recipe.scenario) &&
          static_cast<std::int64_t>(s.series.retained()) != retained_count(s.series.length, recipe.irregularity_r)) {
        fail("retained count does not match r");
      }
      const auto [rows, cols] = s.series.variates() == 1 ? std::pair<int, int>{1, 1} : grid_dims(static_cast<std::int64_t>(s.series.variates()));
      if (s.render_meta.grid_rows != rows || s.render_meta.grid_cols != cols ||
          s.render_meta.blanks != rows * cols - static_cast<int>(s.series.variates())) {
        fail("render_meta grid does not match M");
      }
      if (!std::filesystem::exists(base_dir / s.image_path)) fail("image missing: " + s.image_path);
    } catch (const std::exception& e) {
      fail(e.what());
    }
  });
  for (auto& p : problems) {
    for (auto& msg : p) report.violations.push_back(std::move(msg));
  }
  report.checked = contents.samples.size();
  return report;
}

}  // namespace vtab
