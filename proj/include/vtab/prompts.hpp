#pragma once

#include <string>
#include <string_view>

#include "vtab/core.hpp"

namespace vtab {

struct PromptTemplate {
  Granularity granularity = Granularity::Point;
  std::string text;

  std::string hash() const { return sha256_hex(text); }
};

// Benchmark prompts, reproduced byte for byte (including their spellings).
inline constexpr std::string_view kPointPrompt =
    "Detect points of anomalies in this time series, in terms of the x-axis coordinate. List one by one in a "
    "list. For example, if points x=2, 51, and 106 are anomalies, then output \"[2, 51, 106]\". If there are no "
    "anomalies, answer with an empty list [].";

inline constexpr std::string_view kRangePrompt =
    "Detect ranges of anomalies in this time series, in terms of the x-axis coordinate. List one by one in a "
    "list. For example, if ranges (incluing two endpoints) [2, 11], [50, 60], and [105, 118], are anomalies, "
    "then output \"[[2, 11], [50, 60], [105, 118]]\". If there are no anomalies, answer with an empty list [].";

inline constexpr std::string_view kVariatePrompt =
    "Detect univaraite time series of anomalies in this multivariate time series, in terms of ID of univaraite "
    "time series. The image is a multivariate time series including multiple subimages to indicate multiple "
    "univariate time series. From left to right and top to bottom, the ID of each subimage increases by 1, "
    "starting from 0. List one by one in a list. For example, if ID=0, 2, and 5 are anomalous univaraite time "
    "series, then output \"[0, 2, 5]\". If there are no anomalies, answer with an empty list [].";

inline PromptTemplate build_prompt(Granularity g) {
  switch (g) {
    case Granularity::Point:
      return {g, std::string(kPointPrompt)};
    case Granularity::Range:
      return {g, std::string(kRangePrompt)};
    case Granularity::Variate:
      return {g, std::string(kVariatePrompt)};
  }
  throw ConfigError("unknown granularity");
}

}  // namespace vtab
