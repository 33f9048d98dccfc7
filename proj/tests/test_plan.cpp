#include <gtest/gtest.h>

#include <set>

#include "vtab/plan.hpp"

using namespace vtab;

namespace {

const std::filesystem::path kConfigs = VTAB_CONFIGS;

ExperimentMatrix only(std::vector<Scenario> s, std::vector<BaseGenerator> g, std::vector<AnomalyType> t) {
  ExperimentMatrix m;
  m.scenarios = std::move(s);
  m.base_generators = std::move(g);
  m.anomaly_types = std::move(t);
  return m;
}

}  // namespace

TEST(Exclusion, RulesNameTheCombination) {
  try {
    check_combination(Scenario::IrregularUnivariate, BaseGenerator::Sine, AnomalyType::Contextual);
    FAIL();
  } catch (const ExclusionError& e) {
    EXPECT_EQ(e.rule, "irregular-contextual");
  }
  try {
    check_combination(Scenario::Univariate, BaseGenerator::UcrSymbols, AnomalyType::Seasonal);
    FAIL();
  } catch (const ExclusionError& e) {
    EXPECT_EQ(e.rule, "implicit-seasonal");
  }
  EXPECT_NO_THROW(check_combination(Scenario::Univariate, BaseGenerator::Sine, AnomalyType::Seasonal));
  EXPECT_NO_THROW(check_combination(Scenario::Univariate, BaseGenerator::UcrSymbols, AnomalyType::Contextual));
  EXPECT_NO_THROW(check_combination(Scenario::IrregularUnivariate, BaseGenerator::Sine, AnomalyType::Global));
}

TEST(Exclusion, FullyExcludedRequestFails) {
  try {
    plan_datasets(only({Scenario::IrregularUnivariate}, {BaseGenerator::Sine}, {AnomalyType::Contextual}));
    FAIL();
  } catch (const ExclusionError& e) {
    EXPECT_EQ(e.rule, "irregular-contextual");
    EXPECT_NE(std::string(e.what()).find("irregular-contextual"), std::string::npos);
  }
  try {
    plan_datasets(only({Scenario::Univariate}, {BaseGenerator::UcrSymbols}, {AnomalyType::Seasonal}));
    FAIL();
  } catch (const ExclusionError& e) {
    EXPECT_EQ(e.rule, "implicit-seasonal");
  }
}

TEST(Plan, PartlyExcludedRequestIsRecorded) {
  const auto plan = plan_datasets(only({Scenario::Univariate, Scenario::IrregularUnivariate},
                                       {BaseGenerator::Sine}, {AnomalyType::Contextual}));
  EXPECT_EQ(plan.datasets.size(), 1u);
  ASSERT_EQ(plan.excluded.size(), 1u);
  EXPECT_EQ(plan.excluded[0].rule, "irregular-contextual");
  EXPECT_NE(plan.census().find("(irregular-contextual)"), std::string::npos);
}

TEST(Plan, ShapeMismatchesAreSilentlySkipped) {
  EXPECT_THROW(plan_datasets(only({Scenario::Univariate}, {BaseGenerator::SineCosine}, {AnomalyType::Global})),
               ConfigError);
  EXPECT_FALSE(applicable(Scenario::Multivariate, BaseGenerator::SineCosine, AnomalyType::Global));
  EXPECT_TRUE(applicable(Scenario::Multivariate, BaseGenerator::SineCosine, AnomalyType::Square));
}

TEST(Plan, FullMatrixCensus) {
  const auto m = matrix_from_toml(kConfigs / "full.toml");
  const auto plan = plan_datasets(m);
  EXPECT_EQ(plan.datasets.size(), 124u);
  EXPECT_EQ(plan.total_samples, 12400);
  std::map<Scenario, int> per_scenario;
  std::set<std::string> names;
  for (const auto& d : plan.datasets) {
    ++per_scenario[d.scenario];
    names.insert(d.name);
    EXPECT_FALSE(exclusion_rule(d.scenario, d.generator, d.type).has_value());
  }
  EXPECT_EQ(names.size(), plan.datasets.size());
  EXPECT_EQ(per_scenario[Scenario::Univariate], 9);
  EXPECT_EQ(per_scenario[Scenario::Multivariate], 40);
  EXPECT_EQ(per_scenario[Scenario::IrregularUnivariate], 35);
  EXPECT_EQ(per_scenario[Scenario::IrregularMultivariate], 40);
  std::set<std::string> rules;
  for (const auto& e : plan.excluded) rules.insert(e.rule);
  EXPECT_EQ(rules, (std::set<std::string>{"irregular-contextual", "implicit-seasonal"}));
}

TEST(Plan, DeskAndSmokeSizes) {
  const auto desk = plan_datasets(matrix_from_toml(kConfigs / "desk.toml"));
  EXPECT_EQ(desk.datasets.size(), 20u);
  EXPECT_EQ(desk.total_samples, 40);
  const auto smoke = plan_datasets(matrix_from_toml(kConfigs / "smoke.toml"));
  EXPECT_EQ(smoke.datasets.size(), 2u);
  EXPECT_EQ(smoke.total_samples, 10);
}

TEST(Plan, VariateCountsScaleWithM) {
  auto m = only({Scenario::Multivariate}, {BaseGenerator::SineCosine}, {AnomalyType::Square});
  for (const auto& d : plan_datasets(m).datasets) {
    EXPECT_EQ(d.injection.n_anomalous_variates, default_variate_count(static_cast<std::size_t>(d.variates)));
    EXPECT_LT(2 * d.injection.n_anomalous_variates.hi, d.variates);
  }
  m.n_anomalous_variates = CountRange{1, 1};
  for (const auto& d : plan_datasets(m).datasets) EXPECT_EQ(d.injection.n_anomalous_variates, (CountRange{1, 1}));
}

TEST(Plan, DatasetNames) {
  EXPECT_EQ(dataset_name(Scenario::Univariate, BaseGenerator::Sine, AnomalyType::Global, 1, 0.0), "univariate-sine-global");
  EXPECT_EQ(dataset_name(Scenario::IrregularUnivariate, BaseGenerator::Sine, AnomalyType::Trend, 1, 0.10),
            "irregular_univariate-sine-trend-r10");
  EXPECT_EQ(r_tag(0.05), "r05");
  EXPECT_EQ(r_tag(0.25), "r25");
}

TEST(Matrix, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(matrix_from_json(Json{{"sceanrios", Json::array()}}), ConfigError);
  EXPECT_THROW(matrix_from_json(Json{{"generator", Json{{"periodd", 3}}}}), ConfigError);
  EXPECT_THROW(matrix_from_json(Json{{"scenarios", Json::array({"diagonal"})}}), ConfigError);
  EXPECT_THROW(matrix_from_json(Json{{"seed", "abc"}}), ConfigError);
  auto m = matrix_from_json(Json{{"r_values", Json::array({0.3})}});
  EXPECT_THROW(validate(m), ConfigError);
  m = matrix_from_json(Json{{"samples_per_dataset", 0}});
  EXPECT_THROW(validate(m), ConfigError);
}

TEST(Matrix, ReadsTablesAndResolvesPaths) {
  const auto m = matrix_from_json(Json{{"T", 256},
                                       {"seed", 9},
                                       {"symbols_path", "data/symbols.csv"},
                                       {"injection", Json{{"lambda", 4.5}, {"range_len", Json::array({5, 9})}}},
                                       {"style", Json{{"width", 640}}}},
                                  "/base");
  EXPECT_EQ(m.generator.length, 256);
  EXPECT_EQ(m.seed, 9u);
  EXPECT_EQ(m.symbols_path, std::filesystem::path("/base/data/symbols.csv"));
  EXPECT_EQ(m.injection.lambda, 4.5);
  EXPECT_EQ(m.injection.range_len, (CountRange{5, 9}));
  EXPECT_EQ(m.style.width, 640);
}

TEST(Scenario, NamesRoundTrip) {
  for (auto s : {Scenario::Univariate, Scenario::Multivariate, Scenario::IrregularUnivariate,
                 Scenario::IrregularMultivariate}) {
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  }
  EXPECT_THROW(parse_scenario("sideways"), ConfigError);
}
