#include <gtest/gtest.h>

#include "metric_checks.hpp"
#include "test_util.hpp"
#include "vtab/report.hpp"

using namespace vtab;

namespace {

std::vector<IndexRange> random_events(Rng& rng, std::int64_t length, std::int64_t max_events) {
  std::vector<IndexRange> out;
  std::int64_t t = rng.uniform_int(0, 30);
  const auto n = rng.uniform_int(0, max_events);
  for (std::int64_t k = 0; k < n && t < length; ++k) {
    const auto last = std::min(length - 1, t + rng.uniform_int(0, 25));
    out.push_back({t, last});
    t = last + 2 + rng.uniform_int(0, 120);
  }
  return out;
}

}  // namespace

TEST(Vanilla, DocumentedExamples) {
  const auto exact = vanilla_prf({1, 7}, {1, 7});
  EXPECT_DOUBLE_EQ(exact.f1, 1.0);
  const auto worked = vanilla_prf({0, 2, 5}, {0, 5});
  EXPECT_NEAR(worked.precision, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(worked.recall, 1.0, 1e-9);
  EXPECT_NEAR(worked.f1, 0.8, 1e-9);
  const auto none = vanilla_prf({}, {3});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_TRUE(none.precision_undefined);
  const auto both_empty = vanilla_prf({}, {});
  EXPECT_EQ(both_empty.f1, 1.0);
  const auto spurious = vanilla_prf({2}, {});
  EXPECT_EQ(spurious.recall, 0.0);
  EXPECT_TRUE(spurious.recall_undefined);
}

TEST(Vanilla, MatchesConfusionMatrixForSmallUniverses) {
  std::size_t checked = 0;
  EXPECT_EQ(checks::vanilla_mismatches(6, &checked), 0u);
  EXPECT_EQ(checked, 4u + 16 + 64 + 256 + 1024 + 4096);
}

TEST(Vanilla, DuplicatesAndOrderIgnored) {
  const auto a = vanilla_prf({5, 0, 2, 2}, {5, 0});
  const auto b = vanilla_prf({0, 2, 5}, {0, 5});
  EXPECT_EQ(a.precision, b.precision);
  EXPECT_EQ(a.recall, b.recall);
}

TEST(Affiliation, PinnedCasesMatchClosedForm) {
  ASSERT_EQ(kAffiliationPins.size(), 50u);
  EXPECT_LE(checks::pin_max_error(), 1e-9);
}

TEST(Affiliation, HandCheckedCase) {
  const auto prf = affiliation_prf({{12, 17}}, {{10, 19}}, 100);
  EXPECT_NEAR(prf.precision, 1.0, 1e-12);
  EXPECT_NEAR(prf.recall, 0.992, 1e-12);
}

TEST(Affiliation, AgreesWithLiveOracleOnFreshCases) {
  Rng rng(0xA11CE);
  for (int i = 0; i < 300; ++i) {
    const auto length = rng.uniform_int(20, 1500);
    const auto truth = random_events(rng, length, 5);
    auto pred = random_events(rng, length, 6);
    if (truth.empty() || pred.empty()) continue;
    const auto got = affiliation_prf(pred, truth, length);
    const auto want =
        oracle::affiliation(checks::spans(pred), checks::spans(truth), {0.0, static_cast<double>(length)});
    if (want.precision_defined) {
      EXPECT_NEAR(got.precision, want.precision, 1e-9) << i;
    } else {
      EXPECT_TRUE(got.precision_undefined);
    }
    EXPECT_NEAR(got.recall, want.recall, 1e-9) << i;
  }
}

TEST(Affiliation, ExactMatchScoresOne) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto length = rng.uniform_int(10, 2000);
    const auto truth = random_events(rng, length, 8);
    if (truth.empty()) continue;
    const auto prf = affiliation_prf(truth, truth, length);
    EXPECT_NEAR(prf.precision, 1.0, 1e-12);
    EXPECT_NEAR(prf.recall, 1.0, 1e-12);
    EXPECT_NEAR(prf.f1, 1.0, 1e-12);
  }
}

TEST(Affiliation, CloserPredictionScoresHigher) {
  const auto near = affiliation_prf({{99, 99}}, {{100, 120}}, 400);
  const auto far = affiliation_prf({{0, 0}}, {{100, 120}}, 400);
  EXPECT_GT(near.precision, far.precision);
  EXPECT_GT(near.recall, far.recall);
  EXPECT_EQ(checks::ordering_violations(500, 0x0DE5), 0u);
}

TEST(Affiliation, TranslationInvariant) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto length = rng.uniform_int(30, 800);
    const auto truth = to_events(random_events(rng, length, 4));
    const auto pred = to_events(random_events(rng, length, 4));
    if (truth.empty()) continue;
    const double shift = static_cast<double>(rng.uniform_int(-5000, 5000));
    auto moved = [&](std::vector<Interval> xs) {
      for (auto& x : xs) x = {x.start + shift, x.end + shift};
      return xs;
    };
    const auto a = affiliation_prf(pred, truth, {0.0, static_cast<double>(length)});
    const auto b = affiliation_prf(moved(pred), moved(truth), {shift, shift + length});
    EXPECT_NEAR(a.precision, b.precision, 1e-9);
    EXPECT_NEAR(a.recall, b.recall, 1e-9);
  }
}

TEST(Affiliation, OutputsStayInUnitCube) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto length = rng.uniform_int(5, 600);
    const auto prf = affiliation_prf(random_events(rng, length, 6), random_events(rng, length, 6), length);
    for (double v : {prf.precision, prf.recall, prf.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
    if (prf.precision + prf.recall > 0) {
      EXPECT_NEAR(prf.f1, f1_score(prf.precision, prf.recall), 1e-15);
    }
  }
}

TEST(Affiliation, EmptyPredictionFlagsPrecision) {
  const auto prf = affiliation_prf({}, std::vector<IndexRange>{{10, 20}}, 100);
  EXPECT_EQ(prf.precision, 0.0);
  EXPECT_TRUE(prf.precision_undefined);
  EXPECT_EQ(prf.recall, 0.0);
  EXPECT_EQ(prf.f1, 0.0);
}

TEST(Affiliation, RejectsBadEvents) {
  EXPECT_THROW(affiliation_prf({{5, 10}, {8, 12}}, {{1, 2}}, 100), ConfigError);
  EXPECT_THROW(affiliation_prf({{95, 100}}, {{1, 2}}, 100), ConfigError);
  EXPECT_THROW(affiliation_prf(std::vector<Interval>{{3, 3}}, std::vector<Interval>{{1, 2}}, {0, 10}), ConfigError);
}

TEST(Affiliation, AdjacentRangesFormOneEvent) {
  EXPECT_EQ(to_events({{5, 9}, {0, 4}}), (std::vector<Interval>{{0, 10}}));
  const auto split = affiliation_prf({{10, 14}, {15, 19}}, {{10, 19}}, 100);
  EXPECT_NEAR(split.f1, 1.0, 1e-12);
}

namespace {

Sample scored_sample(Granularity g) {
  Sample s;
  s.series = testutil::ramp_series(100, g == Granularity::Variate ? 4 : 1);
  s.label = g == Granularity::Point   ? AnomalyLabel::of_points({10, 50}, AnomalyType::Global)
            : g == Granularity::Range ? AnomalyLabel::of_ranges({{10, 19}}, AnomalyType::Trend)
                                      : AnomalyLabel::of_variates({1, 2}, AnomalyType::Square);
  s.id = content_id(s.series, s.label);
  s.provenance = Json{{"dataset", "d"}, {"scenario", "univariate"}, {"irregularity_r", 0.0}};
  return s;
}

}  // namespace

TEST(ScoreSample, FailedParseScoresZeroAndFlags) {
  for (auto status : {ParseStatus::Hallucinated, ParseStatus::Malformed}) {
    Prediction p;
    p.granularity = Granularity::Range;
    p.parse_status = status;
    const auto rec = score_sample(scored_sample(Granularity::Range), p, "mock:runaway");
    EXPECT_TRUE(rec.hallucinated);
    EXPECT_EQ(rec.precision + rec.recall + rec.f1, 0.0);
  }
}

TEST(ScoreSample, FamilyFollowsGranularity) {
  for (auto g : {Granularity::Point, Granularity::Range, Granularity::Variate}) {
    const auto s = scored_sample(g);
    Prediction p;
    p.granularity = g;
    p.parse_status = ParseStatus::Ok;
    p.points = s.label.points;
    p.ranges = s.label.ranges;
    p.variates = s.label.variates;
    const auto rec = score_sample(s, p, "mock:oracle");
    EXPECT_EQ(rec.family, g == Granularity::Variate ? MetricFamily::Vanilla : MetricFamily::Affiliation);
    EXPECT_NEAR(rec.f1, 1.0, 1e-12);
    EXPECT_EQ(eval_record_from_json(to_json(rec)), rec);
  }
  Prediction wrong;
  wrong.granularity = Granularity::Point;
  EXPECT_THROW(score_sample(scored_sample(Granularity::Range), wrong, "x"), ConfigError);
}

TEST(Aggregate, MeansInPercent) {
  EvalRecord a;
  a.dataset = "d";
  a.endpoint = "e";
  a.precision = a.recall = a.f1 = 1.0;
  auto rows = aggregate({a});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].triple(), "100.00 / 100.00 / 100.00");
  EvalRecord b = a, c = a;
  b.f1 = 0.2;
  c.f1 = 0.4;
  c.hallucinated = true;
  rows = aggregate({b, c});
  EXPECT_EQ(format_percent(rows[0].f1), "30.00");
  EXPECT_EQ(format_percent(rows[0].hallucination_rate), "50.00");
  EXPECT_THROW(aggregate({}), ConfigError);
}

TEST(Aggregate, GroupsByEndpointAndDataset) {
  EvalRecord a;
  a.dataset = "d1";
  a.endpoint = "x";
  EvalRecord b = a;
  b.endpoint = "y";
  EvalRecord c = a;
  c.dataset = "d2";
  EXPECT_EQ(aggregate({a, b, c, a}).size(), 3u);
}

TEST(Report, MarksBestAndSecond) {
  EvalRecord a;
  a.dataset = "d";
  a.endpoint = "x";
  a.f1 = 0.9;
  EvalRecord b = a;
  b.endpoint = "y";
  b.f1 = 0.5;
  EvalRecord c = a;
  c.endpoint = "z";
  c.f1 = 0.1;
  const auto md = markdown_report(aggregate({a, b, c}));
  EXPECT_NE(md.find("**90.00**"), std::string::npos);
  EXPECT_NE(md.find("<u>50.00</u>"), std::string::npos);
  EXPECT_EQ(md.find("**10.00**"), std::string::npos);
  EXPECT_NE(md.find("| Dataset | Scenario |"), std::string::npos);
  const auto single = markdown_report(aggregate({a}));
  EXPECT_EQ(single.find("**"), std::string::npos);
}

TEST(Report, ChartsRenderDeterministically) {
  std::vector<EvalRecord> recs;
  for (std::int64_t m : {4, 9, 16}) {
    EvalRecord r;
    r.dataset = "multivariate-M" + std::to_string(m);
    r.endpoint = "mock:oracle";
    r.variates = m;
    r.f1 = 0.1 * static_cast<double>(m) / 16.0;
    recs.push_back(r);
  }
  const auto rows = aggregate(recs);
  const auto data = chart_data(rows, true);
  const auto png = render_chart(data, false);
  EXPECT_EQ(png, render_chart(data, false));
  const auto canvas = decode_png(png);
  EXPECT_EQ(canvas.width(), 800);
  EXPECT_EQ(canvas.height(), 400);
}
