#include <gtest/gtest.h>

#include "vtab/hash.hpp"
#include "vtab/inject.hpp"
#include "vtab/prompts.hpp"
#include "vtab/render.hpp"

using namespace vtab;

namespace {

Series sine(std::uint64_t seed, std::int64_t length = 400) {
  GeneratorConfig c;
  c.length = length;
  c.seed = seed;
  return gen_sine(c);
}

Series sine_cosine(std::size_t variates) {
  GeneratorConfig c;
  c.base_generator = BaseGenerator::SineCosine;
  c.variates = variates;
  c.seed = 1;
  return gen_sine_cosine(c);
}

// Shape by the defining inequalities, searched over all candidate n.
std::pair<int, int> grid_by_definition(std::int64_t m) {
  for (std::int64_t n = 1;; ++n) {
    if (n * (n - 1) < m && m <= n * n) return {static_cast<int>(n), static_cast<int>(n)};
    if (n * n < m && m <= n * (n + 1)) return {static_cast<int>(n), static_cast<int>(n + 1)};
  }
}

bool is_background(Rgb c) { return c.r == 255 && c.g == 255 && c.b == 255; }

}  // namespace

TEST(GridDims, MatchesDefinitionUpTo10000) {
  for (std::int64_t m = 1; m <= 10000; ++m) {
    const auto dims = grid_dims(m);
    ASSERT_EQ(dims, grid_by_definition(m)) << m;
    ASSERT_GE(static_cast<std::int64_t>(dims.first) * dims.second, m);
  }
}

TEST(GridDims, BenchmarkVariateCounts) {
  EXPECT_EQ(grid_dims(4), std::make_pair(2, 2));
  EXPECT_EQ(grid_dims(9), std::make_pair(3, 3));
  EXPECT_EQ(grid_dims(16), std::make_pair(4, 4));
  EXPECT_EQ(grid_dims(25), std::make_pair(5, 5));
  EXPECT_EQ(grid_dims(36), std::make_pair(6, 6));
  EXPECT_EQ(grid_dims(5), std::make_pair(2, 3));
  EXPECT_EQ(grid_dims(7), std::make_pair(3, 3));
  EXPECT_EQ(grid_dims(1), std::make_pair(1, 1));
  EXPECT_EQ(grid_dims(2), std::make_pair(1, 2));
  EXPECT_THROW(grid_dims(0), ConfigError);
}

TEST(GridCell, RowMajorFromTopLeft) {
  EXPECT_EQ(grid_cell(0, 5), std::make_pair(0, 0));
  EXPECT_EQ(grid_cell(2, 5), std::make_pair(0, 2));
  EXPECT_EQ(grid_cell(3, 5), std::make_pair(1, 0));
}

TEST(NiceStep, OneTwoFive) {
  for (double span : {0.3, 1.0, 7.0, 42.0, 399.0, 12345.0}) {
    const double s = nice_step(span);
    const double mant = s / std::pow(10.0, std::floor(std::log10(s)));
    EXPECT_TRUE(std::abs(mant - 1) < 1e-9 || std::abs(mant - 2) < 1e-9 || std::abs(mant - 5) < 1e-9) << s;
  }
}

TEST(XTicks, IntegerAndWithinDomain) {
  for (std::int64_t length : {20, 100, 400, 1000}) {
    const auto ticks = x_ticks(length);
    ASSERT_GE(ticks.size(), 3u);
    EXPECT_EQ(ticks.front(), 0);
    for (std::size_t i = 0; i < ticks.size(); ++i) {
      EXPECT_LE(ticks[i], length);
      if (i) {
        EXPECT_GT(ticks[i], ticks[i - 1]);
      }
    }
  }
}

TEST(Render, UnivariatePngDecodesWithConfiguredSize) {
  const auto res = render(sine(1));
  const auto canvas = decode_png(res.png);
  EXPECT_EQ(canvas.width(), 1200);
  EXPECT_EQ(canvas.height(), 400);
  EXPECT_EQ(res.meta, (RenderMeta{1, 1, 0, 1200, 400, true}));
  EXPECT_EQ(res.vertices, 400u);
  EXPECT_EQ(res.segments, 399u);
  std::size_t inked = 0;
  for (int y = 0; y < canvas.height(); ++y) {
    for (int x = 0; x < canvas.width(); ++x) inked += !is_background(canvas.at(x, y));
  }
  EXPECT_GT(inked, 2000u);
}

TEST(Render, ByteIdenticalAcrossCalls) {
  const auto s = sine(9);
  EXPECT_EQ(sha256_hex(render(s).png), sha256_hex(render(s).png));
  const auto m = sine_cosine(9);
  EXPECT_EQ(sha256_hex(render(m).png), sha256_hex(render(m).png));
}

TEST(Render, NoTimestampOrTextChunks) {
  const auto png = render(sine(1)).png;
  const std::string bytes(png.begin(), png.end());
  EXPECT_EQ(bytes.rfind("\x89PNG", 0), 0u);
  EXPECT_EQ(bytes.find("tIME"), std::string::npos);
  EXPECT_EQ(bytes.find("tEXt"), std::string::npos);
}

TEST(Render, IrregularSeriesLeavesGaps) {
  const auto s = drop_irregular(sine(2), 0.2, 3);
  std::size_t adjacent = 0;
  for (std::size_t i = 1; i < s.timestamps.size(); ++i) adjacent += s.timestamps[i] == s.timestamps[i - 1] + 1;
  const auto res = render(s);
  EXPECT_EQ(res.vertices, s.retained());
  EXPECT_EQ(res.segments, adjacent);
  EXPECT_LT(res.segments, 399u);
}

TEST(Render, MultivariateGridHasBlankTrailingCells) {
  const auto s = sine_cosine(7);
  const auto res = render(s);
  EXPECT_EQ(res.meta, (RenderMeta{3, 3, 2, 1200, 1200, false}));
  const auto canvas = decode_png(res.png);
  const int cw = 1200 / 3;
  const int ch = 1200 / 3;
  for (int cell = 0; cell < 9; ++cell) {
    const int r = cell / 3;
    const int c = cell % 3;
    std::size_t inked = 0;
    for (int y = r * ch; y < (r + 1) * ch; ++y) {
      for (int x = c * cw; x < (c + 1) * cw; ++x) inked += !is_background(canvas.at(x, y));
    }
    if (cell < 7) {
      EXPECT_GT(inked, 500u) << cell;
    } else {
      EXPECT_EQ(inked, 0u) << cell;
    }
  }
}

TEST(Render, RejectsUnrenderableInput) {
  RenderStyle tiny;
  tiny.width = 10;
  EXPECT_THROW(render(sine(1), tiny), ConfigError);
  EXPECT_THROW(render_univariate(sine_cosine(4)), UnsupportedError);
  EXPECT_THROW(render_multivariate(sine(1)), UnsupportedError);
}

TEST(Png, RoundTripPreservesPixels) {
  Canvas canvas(17, 5);
  canvas.fill_rect(2, 1, 4, 3, Rgb{10, 200, 30});
  const auto back = decode_png(encode_png(canvas));
  EXPECT_EQ(back.width(), 17);
  EXPECT_EQ(back.pixels(), canvas.pixels());
  EXPECT_THROW(decode_png({1, 2, 3}), Error);
}

TEST(Prompts, HashesArePinned) {
  EXPECT_EQ(build_prompt(Granularity::Point).hash(), "04a7a6f4fe8f5306afbca7e783a2bf6f91fa13e26118c04b366d1ce00b06f865");
  EXPECT_EQ(build_prompt(Granularity::Range).hash(), "14d50159095ecc8f876420b4d0992ae96605cc71d37a22ee37d6eb3b4bbfb64f");
  EXPECT_EQ(build_prompt(Granularity::Variate).hash(),
            "2be0d887231ada3e254ed6c3dcbcf2df8daa12304098f2cf0060a171dceb0d67");
}

TEST(Prompts, KeepOriginalSpellings) {
  EXPECT_NE(build_prompt(Granularity::Range).text.find("incluing two endpoints"), std::string::npos);
  EXPECT_NE(build_prompt(Granularity::Variate).text.find("univaraite"), std::string::npos);
  EXPECT_EQ(build_prompt(Granularity::Point).text.rfind("Detect points of anomalies in this time series", 0), 0u);
}
