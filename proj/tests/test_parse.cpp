#include <gtest/gtest.h>

#include "parse_corpus.hpp"
#include "parse_fuzz.hpp"
#include "vtab/parse.hpp"

using namespace vtab;

class Corpus : public ::testing::TestWithParam<corpus::Case> {};

TEST_P(Corpus, ParsesToDocumentedOutcome) {
  const auto& c = GetParam();
  const auto p = parse_answer(c.text, c.granularity, c.bound);
  EXPECT_EQ(p.parse_status, c.status) << "got " << to_string(p.parse_status);
  EXPECT_EQ(p.granularity, c.granularity);
  if (c.ids) {
    EXPECT_EQ(c.granularity == Granularity::Variate ? p.variates : p.points, *c.ids);
  }
  if (c.ranges) {
    EXPECT_EQ(p.ranges, *c.ranges);
  }
  if (c.discarded) {
    EXPECT_EQ(p.discarded, *c.discarded);
  }
  if (p.failed()) {
    EXPECT_TRUE(p.payload_empty());
  }
  EXPECT_EQ(fuzz::structural_problem(p, c.bound), "");
}

INSTANTIATE_TEST_SUITE_P(Replies, Corpus, ::testing::ValuesIn(corpus::cases()),
                         [](const ::testing::TestParamInfo<corpus::Case>& info) {
                           std::string n;
                           for (char ch : info.param.name) n.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
                           return n;
                         });

TEST(Parse, FuzzNeverThrowsAndStaysStructural) {
  Rng rng(0xF0221);
  for (int i = 0; i < 10000; ++i) {
    const auto text = fuzz::random_reply(rng);
    for (auto g : {Granularity::Point, Granularity::Range, Granularity::Variate}) {
      const std::int64_t bound = g == Granularity::Variate ? 9 : 400;
      Prediction p;
      ASSERT_NO_THROW(p = parse_answer(text, g, bound)) << text;
      ASSERT_EQ(fuzz::structural_problem(p, bound), "") << text;
    }
  }
}

TEST(Parse, RoundTripOfCanonicalOutput) {
  Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t length = rng.uniform_int(50, 1000);
    auto pts = rng.sample_without_replacement(length, rng.uniform_int(0, std::min<std::int64_t>(30, length / 2)));
    auto p = parse_points(format_answer(pts), length);
    EXPECT_EQ(p.points, pts);
    EXPECT_EQ(p.parse_status, pts.empty() ? ParseStatus::Empty : ParseStatus::Ok);
    EXPECT_EQ(parse_points(format_prediction(p), length), p);

    std::vector<IndexRange> ranges;
    std::int64_t t = rng.uniform_int(0, 20);
    const auto n = rng.uniform_int(0, 20);
    for (std::int64_t k = 0; k < n && t < length; ++k) {
      const auto last = std::min(length - 1, t + rng.uniform_int(0, 15));
      ranges.push_back({t, last});
      t = last + 2 + rng.uniform_int(0, 30);
    }
    auto rp = parse_ranges(format_answer(ranges), length);
    EXPECT_EQ(rp.ranges, ranges);
    EXPECT_EQ(parse_ranges(format_prediction(rp), length), rp);

    const std::int64_t m = rng.uniform_int(2, 36);
    auto ids = rng.sample_without_replacement(m, rng.uniform_int(0, m));
    auto vp = parse_variates(format_answer(ids), m);
    EXPECT_EQ(vp.variates, ids);
    EXPECT_EQ(parse_variates(format_prediction(vp), m), vp);
  }
}

TEST(Parse, LimitsAreConfigurable) {
  ParseLimits strict;
  strict.max_pairs = 1;
  EXPECT_EQ(parse_ranges("[[1, 2], [5, 6]]", 400, strict).parse_status, ParseStatus::Hallucinated);
  ParseLimits loose;
  loose.max_point_fraction = 1.0;
  loose.min_run_length = 1000;
  EXPECT_EQ(parse_points("[0, 1, ..., 300]", 400, loose).parse_status, ParseStatus::Ok);
  EXPECT_EQ(parse_points("[0, 1, ..., 300]", 400, loose).points.size(), 301u);
}

TEST(Parse, ExpansionIsBounded) {
  const auto p = parse_points("[0, 1, ..., 9000000000000]", 400);
  EXPECT_EQ(p.parse_status, ParseStatus::Hallucinated);
  ParseLimits loose;
  loose.max_point_fraction = 1e18;
  loose.min_run_length = std::numeric_limits<std::int64_t>::max();
  EXPECT_EQ(parse_points("[0, 1, ..., 9000000000000]", 400, loose).parse_status, ParseStatus::Hallucinated);
}

TEST(Parse, ExcerptKeepsReplyPrefix) {
  const std::string reply = "[1, 2] " + std::string(2000, 'x');
  const auto p = parse_points(reply, 400);
  EXPECT_EQ(p.raw_excerpt.size(), 512u);
  EXPECT_EQ(p.raw_excerpt.rfind("[1, 2]", 0), 0u);
}

TEST(Parse, MergeRangesJoinsTouching) {
  EXPECT_EQ(merge_ranges({{5, 8}, {0, 2}, {3, 4}, {10, 12}}), (std::vector<IndexRange>{{0, 8}, {10, 12}}));
}

TEST(Format, CanonicalText) {
  EXPECT_EQ(format_answer(std::vector<std::int64_t>{}), "[]");
  EXPECT_EQ(format_answer(std::vector<std::int64_t>{2, 51, 106}), "[2, 51, 106]");
  EXPECT_EQ(format_answer(std::vector<IndexRange>{{2, 11}, {50, 60}}), "[[2, 11], [50, 60]]");
}
