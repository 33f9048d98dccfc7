#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vtab/builder.hpp"
#include "vtab/llm.hpp"
#include "vtab/manifest.hpp"
#include "vtab/metrics.hpp"
#include "vtab/parse.hpp"
#include "vtab/report.hpp"

namespace vtab {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  const auto s = read_file(p);
  return {s.begin(), s.end()};
}

// Writes via a temporary file and rename so readers never see partial output.
inline void write_file_atomic(const std::filesystem::path& p, std::string_view content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline std::vector<Json> read_jsonl(const std::filesystem::path& p) {
  std::vector<Json> out;
  std::istringstream in(read_file(p));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const std::exception& e) {
      throw FormatError(p.string() + ": " + e.what(), n);
    }
  }
  return out;
}

inline Json to_json(const Prediction& p) {
  Json j{{"granularity", to_string(p.granularity)}, {"parse_status", to_string(p.parse_status)}};
  switch (p.granularity) {
    case Granularity::Point:
      j["points"] = p.points;
      break;
    case Granularity::Range:
      j["ranges"] = ranges_to_json(p.ranges);
      break;
    case Granularity::Variate:
      j["variates"] = p.variates;
      break;
  }
  j["discarded"] = p.discarded;
  j["raw_excerpt"] = p.raw_excerpt;
  return j;
}

inline Prediction prediction_from_json(const Json& j) {
  Prediction p;
  p.granularity = parse_granularity(j.at("granularity").get<std::string>());
  p.parse_status = parse_parse_status(j.at("parse_status").get<std::string>());
  if (j.contains("points")) p.points = j["points"].get<std::vector<std::int64_t>>();
  if (j.contains("ranges")) p.ranges = ranges_from_json(j["ranges"]);
  if (j.contains("variates")) p.variates = j["variates"].get<std::vector<std::int64_t>>();
  p.discarded = j.value("discarded", std::size_t{0});
  p.raw_excerpt = j.value("raw_excerpt", std::string());
  return p;
}

inline Json to_json(const ParseLimits& l) {
  return Json{{"max_point_fraction", l.max_point_fraction}, {"min_run_length", l.min_run_length},
              {"run_coverage", l.run_coverage},             {"max_pairs", l.max_pairs},
              {"max_range_coverage", l.max_range_coverage}, {"excerpt_bytes", l.excerpt_bytes}};
}

inline ParseLimits parse_limits_from_json(const Json& j) {
  ParseLimits l;
  l.max_point_fraction = j.value("max_point_fraction", l.max_point_fraction);
  l.min_run_length = j.value("min_run_length", l.min_run_length);
  l.run_coverage = j.value("run_coverage", l.run_coverage);
  l.max_pairs = j.value("max_pairs", l.max_pairs);
  l.max_range_coverage = j.value("max_range_coverage", l.max_range_coverage);
  l.excerpt_bytes = j.value("excerpt_bytes", l.excerpt_bytes);
  return l;
}

struct RunOptions {
  std::filesystem::path manifest;  // may be empty when resuming
  std::string endpoint;            // may be empty when resuming
  std::string run_id;
  std::filesystem::path runs_dir = "runs";
  std::optional<int> concurrency;
  std::optional<double> rate_limit_rpm;
  std::optional<std::string> base_url;
  std::optional<std::string> api_key_env;
  std::optional<int> max_tokens;
  // Empty = only these many samples (0 = all), in manifest order.
  std::size_t limit = 0;
  std::shared_ptr<Transport> transport;  // tests inject a fake
  Sleeper sleeper = real_sleep;
  ParseLimits limits;
};

struct RunSummary {
  std::size_t samples = 0;
  std::size_t cache_hits = 0;
  std::size_t network_calls = 0;
  std::size_t permanent_errors = 0;
  std::size_t transient_failures = 0;
  std::map<std::string, std::size_t> status_counts;
  std::filesystem::path run_dir;

  bool ok() const { return permanent_errors == 0 && transient_failures == 0; }
  std::string text() const {
    std::string out = "samples: " + std::to_string(samples) + ", cache hits: " + std::to_string(cache_hits) +
                      ", network calls: " + std::to_string(network_calls) +
                      ", permanent errors: " + std::to_string(permanent_errors) +
                      ", transient failures: " + std::to_string(transient_failures) + "\nparse status:";
    for (const auto& [k, v] : status_counts) out += " " + k + "=" + std::to_string(v);
    return out + "\n";
  }
};

inline std::filesystem::path run_dir_of(const std::filesystem::path& runs_dir, const std::string& run_id) {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..") {
    throw ConfigError("invalid run id '" + run_id + "'");
  }
  return runs_dir / run_id;
}

// Effective configuration: flags override the stored run config, which
// overrides defaults. The stored endpoint and manifest are immutable.
inline Json resolve_run_config(const RunOptions& o, const std::filesystem::path& run_dir) {
  const auto cfg_path = run_dir / "run_config.json";
  Json stored;
  if (std::filesystem::exists(cfg_path)) stored = Json::parse(read_file(cfg_path));
  Json cfg = stored.is_object() ? stored : Json::object();
  if (!o.endpoint.empty()) {
    if (stored.is_object() && stored.at("endpoint_spec").get<std::string>() != o.endpoint) {
      throw ConfigError("run '" + o.run_id + "' already uses endpoint '" + stored["endpoint_spec"].get<std::string>() +
                        "'; start a new run id");
    }
    cfg["endpoint_spec"] = o.endpoint;
  }
  if (!o.manifest.empty()) {
    const auto m = std::filesystem::absolute(o.manifest).lexically_normal().generic_string();
    if (stored.is_object() && stored.at("manifest").get<std::string>() != m) {
      throw ConfigError("run '" + o.run_id + "' was started on manifest " + stored["manifest"].get<std::string>());
    }
    cfg["manifest"] = m;
  }
  if (!cfg.contains("endpoint_spec")) throw ConfigError("--endpoint is required for a new run");
  if (!cfg.contains("manifest")) throw ConfigError("--manifest is required for a new run");
  auto ep = parse_endpoint(cfg["endpoint_spec"].get<std::string>());
  if (cfg.contains("endpoint")) {
    const auto& e = cfg["endpoint"];
    ep.base_url = e.value("base_url", ep.base_url);
    ep.auth_env = e.value("auth_env", ep.auth_env);
    ep.max_tokens = e.value("max_tokens", ep.max_tokens);
    ep.temperature = e.value("temperature", ep.temperature);
    ep.timeout_s = e.value("timeout_s", ep.timeout_s);
    ep.rate_limit_rpm = e.value("rate_limit_rpm", ep.rate_limit_rpm);
    ep.max_in_flight = e.value("max_in_flight", ep.max_in_flight);
  }
  if (o.base_url) ep.base_url = *o.base_url;
  if (o.api_key_env) ep.auth_env = *o.api_key_env;
  if (o.max_tokens) ep.max_tokens = *o.max_tokens;
  if (o.rate_limit_rpm) ep.rate_limit_rpm = *o.rate_limit_rpm;
  if (o.concurrency) ep.max_in_flight = *o.concurrency;
  cfg["endpoint"] = to_json(ep);
  if (!cfg.contains("parse_limits")) cfg["parse_limits"] = to_json(o.limits);
  return cfg;
}

inline ModelEndpoint endpoint_from_run_config(const Json& cfg) {
  auto ep = parse_endpoint(cfg.at("endpoint_spec").get<std::string>());
  const auto& e = cfg.at("endpoint");
  ep.base_url = e.value("base_url", ep.base_url);
  ep.auth_env = e.value("auth_env", ep.auth_env);
  ep.max_tokens = e.value("max_tokens", ep.max_tokens);
  ep.temperature = e.value("temperature", ep.temperature);
  ep.timeout_s = e.value("timeout_s", ep.timeout_s);
  ep.rate_limit_rpm = e.value("rate_limit_rpm", ep.rate_limit_rpm);
  ep.max_in_flight = e.value("max_in_flight", ep.max_in_flight);
  return ep;
}

// Queries the endpoint for every manifest sample (cached responses are
// reused), then writes predictions.jsonl in manifest order.
inline RunSummary cmd_run(const RunOptions& o) {
  const auto run_dir = run_dir_of(o.runs_dir, o.run_id);
  std::filesystem::create_directories(run_dir);
  const Json cfg = resolve_run_config(o, run_dir);
  write_file_atomic(run_dir / "run_config.json", cfg.dump(2) + "\n");
  const auto endpoint = endpoint_from_run_config(cfg);
  const auto limits = parse_limits_from_json(cfg["parse_limits"]);
  const std::filesystem::path manifest = cfg["manifest"].get<std::string>();
  auto contents = manifest_read(manifest);
  auto& samples = contents.samples;
  if (o.limit > 0 && samples.size() > o.limit) samples.resize(o.limit);

  auto cache = std::make_shared<ResponseCache>(run_dir / "responses.jsonl");
  auto transport = o.transport ? o.transport : std::make_shared<HttplibTransport>();
  LlmClient client(endpoint, cache, transport, RetryPolicy{}, o.sleeper);

  RunSummary summary;
  summary.run_dir = run_dir;
  summary.samples = samples.size();
  std::vector<std::optional<ResponseRecord>> responses(samples.size());
  std::vector<std::string> failures(samples.size());
  const auto base_dir = manifest.parent_path();
  const unsigned workers = static_cast<unsigned>(std::max(1, endpoint.api_style == ApiStyle::LocalMock
                                                                 ? static_cast<int>(default_threads())
                                                                 : endpoint.max_in_flight));
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const auto& s = samples[i];
    try {
      const auto image = read_bytes(base_dir / s.image_path);
      responses[i] = client.query(s, image, build_prompt(s.label.granularity));
    } catch (const TransientFailure& e) {
      failures[i] = e.what();
    }
  });

  std::string predictions;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!responses[i]) {
      ++summary.transient_failures;
      std::cerr << "transient failure on " << s.id << ": " << failures[i] << "\n";
      continue;
    }
    const auto& r = *responses[i];
    if (r.retrieved_from_cache) ++summary.cache_hits;
    Json line{{"sample_id", s.id}, {"endpoint", endpoint.name}};
    if (!r.error.empty()) {
      ++summary.permanent_errors;
      line["error"] = r.error;
    }
    const auto bound = s.label.granularity == Granularity::Variate ? static_cast<std::int64_t>(s.series.variates())
                                                                   : s.series.length;
    const auto pred = parse_answer(r.raw_text, s.label.granularity, bound, limits);
    ++summary.status_counts[std::string(to_string(pred.parse_status))];
    line["prediction"] = to_json(pred);
    predictions += dump_line(line) + "\n";
  }
  summary.network_calls = client.network_calls();
  write_file_atomic(run_dir / "predictions.jsonl", predictions);
  return summary;
}

struct ScoreSummary {
  std::vector<EvalRecord> records;
  std::vector<AggregateRow> rows;
  std::string markdown;
  std::filesystem::path run_dir;
};

inline void write_report_files(const std::filesystem::path& dir, const std::string& stem,
                               const std::vector<AggregateRow>& rows, std::string& markdown) {
  markdown = markdown_report(rows);
  std::string doc = markdown;
  const auto by_m = chart_data(rows, true);
  const auto by_r = chart_data(rows, false);
  auto legend = [](const ChartData& c) {
    std::string out;
    const auto& pal = chart_palette();
    for (std::size_t e = 0; e < c.endpoints.size(); ++e) {
      const auto& col = pal[e % pal.size()];
      char hex[8];
      std::snprintf(hex, sizeof hex, "#%02x%02x%02x", col.r, col.g, col.b);
      out += "- " + std::string(hex) + ": " + c.endpoints[e] + "\n";
    }
    return out;
  };
  if (!by_m.xs.empty()) {
    const auto png = render_chart(by_m, true);
    write_file_atomic(dir / (stem + "_f1_vs_M.png"), std::string(png.begin(), png.end()));
    doc += "\n![F1 vs M](" + stem + "_f1_vs_M.png)\n\n" + legend(by_m);
  }
  if (!by_r.xs.empty()) {
    const auto png = render_chart(by_r, false);
    write_file_atomic(dir / (stem + "_f1_vs_r.png"), std::string(png.begin(), png.end()));
    doc += "\n![F1 vs r](" + stem + "_f1_vs_r.png)\n\n" + legend(by_r);
  }
  write_file_atomic(dir / (stem + ".md"), doc);
}

// Scores predictions.jsonl of a run into scores.jsonl and report.md.
inline ScoreSummary cmd_score(const std::filesystem::path& runs_dir, const std::string& run_id) {
  ScoreSummary out;
  out.run_dir = run_dir_of(runs_dir, run_id);
  const Json cfg = Json::parse(read_file(out.run_dir / "run_config.json"));
  const auto manifest = manifest_read(cfg.at("manifest").get<std::string>());
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : manifest.samples) by_id[s.id] = &s;
  std::string scores;
  for (const auto& line : read_jsonl(out.run_dir / "predictions.jsonl")) {
    const auto id = line.at("sample_id").get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) throw FormatError("prediction for unknown sample " + id);
    const auto pred = prediction_from_json(line.at("prediction"));
    auto rec = score_sample(*it->second, pred, line.at("endpoint").get<std::string>());
    scores += dump_line(to_json(rec)) + "\n";
    out.records.push_back(std::move(rec));
  }
  write_file_atomic(out.run_dir / "scores.jsonl", scores);
  if (out.records.empty()) throw ConfigError("run has no predictions to score");
  out.rows = aggregate(out.records);
  write_report_files(out.run_dir, "report", out.rows, out.markdown);
  return out;
}

// Combined table over several scored runs (endpoints compared per dataset).
inline ScoreSummary cmd_report(const std::filesystem::path& runs_dir, const std::vector<std::string>& run_ids,
                               const std::filesystem::path& out_dir) {
  ScoreSummary out;
  for (const auto& id : run_ids) {
    for (const auto& j : read_jsonl(run_dir_of(runs_dir, id) / "scores.jsonl")) {
      out.records.push_back(eval_record_from_json(j));
    }
  }
  if (out.records.empty()) throw ConfigError("no scores found for the given runs");
  out.rows = aggregate(out.records);
  std::filesystem::create_directories(out_dir);
  write_report_files(out_dir, "combined_report", out.rows, out.markdown);
  out.run_dir = out_dir;
  return out;
}

}  // namespace vtab
