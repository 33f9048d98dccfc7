#include <gtest/gtest.h>

#include "vtab/inject.hpp"

using namespace vtab;

namespace {

Series sine(std::uint64_t seed, std::int64_t length = 400) {
  GeneratorConfig c;
  c.length = length;
  c.seed = seed;
  return gen_sine(c);
}

Series sine_cosine(std::uint64_t seed, std::size_t variates) {
  GeneratorConfig c;
  c.base_generator = BaseGenerator::SineCosine;
  c.variates = variates;
  c.seed = seed;
  return gen_sine_cosine(c);
}

InjectionConfig cfg(std::uint64_t seed) {
  InjectionConfig c;
  c.seed = seed;
  return c;
}

const std::vector<AnomalyType> kUnivariateTypes{AnomalyType::Global, AnomalyType::Contextual, AnomalyType::Seasonal,
                                                AnomalyType::Trend, AnomalyType::Shapelet};
const std::vector<AnomalyType> kVariateTypes{AnomalyType::Triangle, AnomalyType::Square, AnomalyType::Sawtooth,
                                             AnomalyType::Random};

}  // namespace

TEST(GapCapacity, MatchesBruteForce) {
  for (std::int64_t slots = 1; slots <= 40; ++slots) {
    for (std::int64_t gap = 1; gap <= 12; ++gap) {
      // Greedy leftmost packing is optimal on a line.
      std::int64_t n = 0;
      for (std::int64_t t = 0; t < slots; t += gap) ++n;
      EXPECT_EQ(detail::max_points_with_gap(slots, gap), n) << slots << " " << gap;
    }
  }
}

TEST(PointInjection, ThresholdHoldsAcrossSeeds) {
  for (auto type : {AnomalyType::Global, AnomalyType::Contextual}) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto base = sine(seed);
      const auto c = cfg(seed);
      const auto res = inject(base, c, type);
      ASSERT_EQ(res.label.granularity, Granularity::Point);
      ASSERT_GE(static_cast<std::int64_t>(res.label.points.size()), c.n_point_anomalies.lo);
      EXPECT_TRUE(point_threshold_violations(base, res.series, res.label, c.lambda, c.context_k).empty());
      EXPECT_TRUE(locality_violations(base, res.series, res.label).empty());
      for (std::size_t i = 1; i < res.label.points.size(); ++i) {
        EXPECT_GE(res.label.points[i] - res.label.points[i - 1], 2 * c.context_k + 1);
      }
      if (type == AnomalyType::Contextual) {
        EXPECT_GE(res.label.points.front(), c.context_k);
        EXPECT_LE(res.label.points.back(), base.length - 1 - c.context_k);
      }
    }
  }
}

TEST(PointInjection, CountIsCappedByFeasibility) {
  auto c = cfg(1);
  c.n_point_anomalies = {2, 50};
  const auto base = sine(1, 100);
  const auto res = inject_global(base, c);
  EXPECT_LE(static_cast<std::int64_t>(res.label.points.size()), detail::max_points_with_gap(100, 21));
}

TEST(PointInjection, InfeasibleWhenMinimumCannotFit) {
  auto c = cfg(1);
  c.n_point_anomalies = {10, 20};
  EXPECT_THROW(inject_global(sine(1, 100), c), InfeasibleInjection);
  c.n_point_anomalies = {1, 1};
  c.context_k = 60;
  EXPECT_THROW(inject_contextual(sine(1, 100), c), InfeasibleInjection);
}

TEST(PointInjection, ZeroVarianceIsInfeasible) {
  auto s = sine(1, 64);
  std::fill(s.values[0].begin(), s.values[0].end(), 1.0);
  EXPECT_THROW(inject_global(s, cfg(1)), InfeasibleInjection);
}

TEST(RangeInjection, WindowsAreDisjointNonAdjacentAndLocal) {
  for (auto type : {AnomalyType::Seasonal, AnomalyType::Trend, AnomalyType::Shapelet}) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto base = sine(seed);
      const auto c = cfg(seed);
      const auto res = inject(base, c, type);
      ASSERT_EQ(res.label.granularity, Granularity::Range);
      EXPECT_NO_THROW(validate(res.label, base.length, 1));
      for (std::size_t i = 0; i < res.label.ranges.size(); ++i) {
        const auto& r = res.label.ranges[i];
        EXPECT_GE(r.size(), c.range_len.lo);
        EXPECT_LE(r.size(), c.range_len.hi);
        if (i) {
          EXPECT_GT(r.first, res.label.ranges[i - 1].last + 1);
        }
      }
      EXPECT_TRUE(locality_violations(base, res.series, res.label).empty()) << to_string(type) << " " << seed;
      for (double d : range_dissimilarities(base, res.series, res.label)) EXPECT_GT(d, 0.0);
    }
  }
}

TEST(RangeInjection, TrendReachesConfiguredScale) {
  const auto base = sine(5);
  const auto c = cfg(5);
  const auto res = inject_trend(base, c);
  const double sigma = stddev(base.values[0]);
  for (const auto& r : res.label.ranges) {
    const auto t = static_cast<std::size_t>(r.last);
    const double end_offset = std::abs(res.series.values[0][t] - base.values[0][t]);
    EXPECT_GE(end_offset, c.trend_c_lo * sigma - 1e-9);
    EXPECT_LE(end_offset, c.trend_c_hi * sigma + 1e-9);
    EXPECT_EQ(res.series.values[0][static_cast<std::size_t>(r.first)], base.values[0][static_cast<std::size_t>(r.first)]);
  }
}

TEST(RangeInjection, PersistentTrendShiftsTail) {
  auto c = cfg(2);
  c.trend_persist = true;
  c.n_ranges = {1, 1};
  const auto base = sine(2);
  const auto res = inject_trend(base, c);
  const auto& r = res.label.ranges.front();
  if (r.last + 1 < base.length) {
    const auto t = static_cast<std::size_t>(base.length - 1);
    EXPECT_NE(res.series.values[0][t], base.values[0][t]);
  }
}

TEST(RangeInjection, SeasonalNeedsKnownWave) {
  auto s = sine(1);
  s.wave.reset();
  EXPECT_THROW(inject_seasonal(s, cfg(1)), UnsupportedError);
}

TEST(RangeInjection, WindowLongerThanSeriesIsInfeasible) {
  auto c = cfg(1);
  c.range_len = {80, 90};
  EXPECT_THROW(inject_trend(sine(1, 64), c), InfeasibleInjection);
}

TEST(UnivariateInjection, RejectsMultivariateInput) {
  for (auto type : kUnivariateTypes) EXPECT_THROW(inject(sine_cosine(1, 4), cfg(1), type), UnsupportedError);
}

TEST(VariateInjection, NormalVariatesRemainMajorityAndUntouched) {
  for (std::size_t m : {4u, 9u, 16u, 25u, 36u}) {
    for (auto type : kVariateTypes) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto base = sine_cosine(seed, m);
        auto c = cfg(seed);
        c.n_anomalous_variates = default_variate_count(m);
        const auto res = inject(base, c, type);
        ASSERT_EQ(res.label.granularity, Granularity::Variate);
        EXPECT_GE(res.label.variates.size(), 1u);
        EXPECT_LT(2 * res.label.variates.size(), m);
        EXPECT_TRUE(locality_violations(base, res.series, res.label).empty());
        for (auto id : res.label.variates) {
          EXPECT_NE(res.series.values[static_cast<std::size_t>(id)], base.values[static_cast<std::size_t>(id)]);
        }
      }
    }
  }
}

TEST(VariateInjection, RejectsUnivariateAndOversizedCounts) {
  EXPECT_THROW(inject(sine(1), cfg(1), AnomalyType::Square), UnsupportedError);
  auto c = cfg(1);
  c.n_anomalous_variates = {1, 4};
  EXPECT_THROW(inject(sine_cosine(1, 4), c, AnomalyType::Square), ConfigError);
  EXPECT_THROW(inject_variate(sine_cosine(1, 4), cfg(1), AnomalyType::Trend), ConfigError);
}

TEST(Injection, DeterministicPerSeed) {
  for (auto type : kUnivariateTypes) {
    const auto a = inject(sine(3), cfg(9), type);
    const auto b = inject(sine(3), cfg(9), type);
    EXPECT_EQ(a.series, b.series);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.details, b.details);
  }
}

TEST(Irregular, RetainedCountAndEndpoints) {
  for (double r : {0.05, 0.10, 0.15, 0.20, 0.25}) {
    for (std::int64_t length : {100, 400, 1000}) {
      const auto s = drop_irregular(sine(1, length), r, 77);
      EXPECT_EQ(static_cast<std::int64_t>(s.retained()), retained_count(length, r));
      EXPECT_EQ(s.retained(), static_cast<std::size_t>(std::llround((1 - r) * length)));
      EXPECT_EQ(s.timestamps.front(), 0);
      EXPECT_EQ(s.timestamps.back(), length - 1);
      EXPECT_NO_THROW(validate(s));
      EXPECT_NEAR(s.irregularity_ratio(), r, 0.5 / static_cast<double>(length) + 1e-12);
    }
  }
}

TEST(Irregular, SameMaskForEveryVariate) {
  const auto base = sine_cosine(4, 9);
  const auto s = drop_irregular(base, 0.1, 5);
  for (std::size_t m = 0; m < 9; ++m) {
    ASSERT_EQ(s.values[m].size(), s.timestamps.size());
    for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
      EXPECT_EQ(s.values[m][i], base.values[m][static_cast<std::size_t>(s.timestamps[i])]);
    }
  }
}

TEST(Irregular, RejectsOutOfRangeRatio) {
  EXPECT_THROW(drop_irregular(sine(1), 0.0, 1), ConfigError);
  EXPECT_THROW(drop_irregular(sine(1), 0.3, 1), ConfigError);
}

TEST(Irregular, LabelFilterKeepsRetainedPointsAndMajorityRanges) {
  const std::vector<std::int64_t> ts{0, 1, 3, 4, 5, 8, 9};
  const auto pts = filter_label_after_drop(AnomalyLabel::of_points({1, 2, 8}, AnomalyType::Global), ts);
  EXPECT_EQ(pts.points, (std::vector<std::int64_t>{1, 8}));
  const auto rng = filter_label_after_drop(AnomalyLabel::of_ranges({{3, 5}, {6, 7}, {8, 9}}, AnomalyType::Trend), ts);
  EXPECT_EQ(rng.ranges, (std::vector<IndexRange>{{3, 5}, {8, 9}}));
}
