#include <CLI11.hpp>

#include <iostream>

#include "vtab/builder.hpp"
#include "vtab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Time-series image anomaly benchmark: build, run, score, verify, report"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build", "generate series, inject anomalies, render images, write manifest");
  std::string matrix_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = vtab::default_threads();
  build->add_option("--matrix", matrix_path, "experiment matrix (TOML)")->required()->check(CLI::ExistingFile);
  build->add_option("--out", out_dir, "output directory")->required();
  build->add_option("--seed", seed, "override the matrix seed");
  build->add_option("--threads", threads, "worker threads");

  auto* run = app.add_subcommand("run", "query an endpoint for every sample and parse the replies");
  vtab::RunOptions run_opts;
  std::string manifest;
  std::string runs_dir = "runs";
  std::optional<int> concurrency;
  std::optional<double> rate_limit;
  std::optional<std::string> base_url;
  std::optional<std::string> api_key_env;
  std::optional<int> max_tokens;
  std::size_t limit = 0;
  run->add_option("--manifest", manifest, "manifest.jsonl from build");
  run->add_option("--endpoint", run_opts.endpoint,
                  "mock:oracle | mock:empty | mock:runaway | mock:random:<seed> | mock:offbyk:<k> | openai:<model> | "
                  "gemini:<model>");
  run->add_option("--run-id", run_opts.run_id, "run identifier")->required();
  run->add_option("--runs-dir", runs_dir, "directory holding runs");
  run->add_option("--concurrency", concurrency, "maximum requests in flight");
  run->add_option("--rate-limit", rate_limit, "requests per minute (0 = unlimited)");
  run->add_option("--base-url", base_url, "API base URL");
  run->add_option("--api-key-env", api_key_env, "environment variable holding the API key");
  run->add_option("--max-tokens", max_tokens, "reply token limit");
  run->add_option("--limit", limit, "only the first N samples");

  auto* score = app.add_subcommand("score", "score a run and write its report");
  std::string score_run;
  score->add_option("--run-id", score_run, "run identifier")->required();
  score->add_option("--runs-dir", runs_dir, "directory holding runs");

  auto* verify = app.add_subcommand("verify", "re-check injections and label invariants of a manifest");
  std::string verify_manifest;
  double min_diss = 0.0;
  verify->add_option("--manifest", verify_manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  verify->add_option("--min-range-dissimilarity", min_diss, "required RMS difference per range, in base sigma");

  auto* report = app.add_subcommand("report", "combine scored runs into one table");
  std::vector<std::string> report_runs;
  std::string report_out = "reports";
  report->add_option("--run-id", report_runs, "run identifiers")->required();
  report->add_option("--runs-dir", runs_dir, "directory holding runs");
  report->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      auto matrix = vtab::matrix_from_toml(matrix_path);
      if (seed) matrix.seed = *seed;
      const auto result = vtab::cmd_build(matrix, out_dir, threads);
      std::cout << result.plan.census() << "manifest: " << result.manifest_path.string() << "\n";
      return 0;
    }
    if (*run) {
      run_opts.manifest = manifest;
      run_opts.runs_dir = runs_dir;
      run_opts.concurrency = concurrency;
      run_opts.rate_limit_rpm = rate_limit;
      run_opts.base_url = base_url;
      run_opts.api_key_env = api_key_env;
      run_opts.max_tokens = max_tokens;
      run_opts.limit = limit;
      const auto summary = vtab::cmd_run(run_opts);
      std::cout << summary.text();
      return summary.ok() ? 0 : 1;
    }
    if (*score) {
      const auto result = vtab::cmd_score(runs_dir, score_run);
      std::cout << result.markdown;
      return 0;
    }
    if (*verify) {
      const auto result = vtab::cmd_verify(verify_manifest, min_diss);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& v : result.violations) std::cout << "violation: " << v << "\n";
      std::cout << "checked " << result.checked << " samples, " << result.violations.size() << " violations\n";
      return result.ok() ? 0 : 1;
    }
    if (*report) {
      const auto result = vtab::cmd_report(runs_dir, report_runs, report_out);
      std::cout << result.markdown;
      return 0;
    }
  } catch (const vtab::ExclusionError& e) {
    std::cerr << "error [" << e.rule << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
