#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vtab/core.hpp"

namespace vtab {

// Hallucination guards. A reply is rejected when it enumerates implausibly
// many entries or long unit-step runs, the typical runaway pattern.
struct ParseLimits {
  double max_point_fraction = 0.5;   // more than T/2 points
  std::int64_t min_run_length = 50;  // unit-step run of at least this many integers...
  double run_coverage = 0.25;        // ...covering more than this fraction of the domain
  std::int64_t max_pairs = 20;
  double max_range_coverage = 0.9;
  std::size_t excerpt_bytes = 512;
  // Ellipsis expansion stops here; anything larger is treated as runaway.
  std::int64_t max_expansion = 1'000'000;
};

namespace detail::listparse {

struct Ellipsis {};
struct Node;
struct Number {
  std::int64_t value = 0;
  bool overflow = false;
};
using Item = std::variant<Number, Ellipsis, Node>;

struct Node {
  std::vector<Item> items;
  bool closed = false;
};

class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  // Position of the first '[' that opens a list of numbers, lists, an
  // ellipsis, or nothing; npos when none exists.
  std::size_t find_list_start() const {
    for (std::size_t p = text_.find('['); p != std::string_view::npos; p = text_.find('[', p + 1)) {
      std::size_t q = p + 1;
      while (q < text_.size() && is_space(text_[q])) ++q;
      if (q >= text_.size()) return p;
      const char c = text_[q];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '[' || c == ']') return p;
      if (c == '-' && q + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q + 1]))) return p;
      if (ellipsis_length(q) > 0) return p;
    }
    return std::string_view::npos;
  }

  Node parse_list(std::size_t open, int depth = 0) {
    pos_ = open + 1;
    return parse_items(depth);
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  std::size_t ellipsis_length(std::size_t at) const {
    const auto rest = text_.substr(at);
    for (std::string_view tok : {std::string_view("..."), std::string_view("\xE2\x80\xA6"),
                                 std::string_view("\xE2\x8B\xAF"), std::string_view("\\dots"),
                                 std::string_view("\\ldots"), std::string_view("\\cdots")}) {
      if (rest.substr(0, tok.size()) == tok) return tok.size();
    }
    return 0;
  }

  Node parse_items(int depth) {
    Node node;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ']') {
        ++pos_;
        node.closed = true;
        return node;
      }
      if (c == '[') {
        ++pos_;
        if (depth >= 3) {
          skip_to_close();
          continue;
        }
        node.items.emplace_back(parse_items(depth + 1));
        if (!std::get<Node>(node.items.back()).closed) return node;
        continue;
      }
      if (const auto n = ellipsis_length(pos_); n > 0) {
        pos_ += n;
        // Collapse repeated dots ("....") into one marker.
        while (pos_ < text_.size() && text_[pos_] == '.') ++pos_;
        node.items.emplace_back(Ellipsis{});
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '-' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        node.items.emplace_back(parse_number());
        continue;
      }
      ++pos_;  // separators and stray prose inside the list
    }
    return node;
  }

  void skip_to_close() {
    int level = 1;
    while (pos_ < text_.size() && level > 0) {
      if (text_[pos_] == '[') ++level;
      if (text_[pos_] == ']') --level;
      ++pos_;
    }
  }

  Number parse_number() {
    bool negative = false;
    if (text_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    Number n;
    std::int64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      const int d = text_[pos_] - '0';
      if (v > (std::numeric_limits<std::int64_t>::max() - d) / 10) {
        n.overflow = true;
      } else {
        v = v * 10 + d;
      }
      ++pos_;
    }
    // Decimal part: round half up on the first fractional digit.
    if (pos_ + 1 < text_.size() && text_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
      ++pos_;
      if (text_[pos_] >= '5' && !n.overflow && v < std::numeric_limits<std::int64_t>::max()) ++v;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    n.value = negative ? -v : v;
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Flat {
  std::vector<std::int64_t> values;  // explicit numbers plus bridged ellipsis runs
  std::int64_t count = 0;            // explicit + implied entries
  bool trailing_ellipsis = false;
  bool runaway = false;              // expansion exceeded the limit
  bool has_sublists = false;
  bool has_overflow = false;
};

// Flattens a list of scalars. An ellipsis between a and b continues the
// arithmetic step seen just before it (step 1 when unknown).
inline Flat flatten_scalars(const Node& node, std::int64_t max_expansion) {
  Flat f;
  bool pending_ellipsis = false;
  for (std::size_t i = 0; i < node.items.size(); ++i) {
    const auto& item = node.items[i];
    if (std::holds_alternative<Node>(item)) {
      f.has_sublists = true;
      continue;
    }
    if (std::holds_alternative<Ellipsis>(item)) {
      pending_ellipsis = !f.values.empty();
      continue;
    }
    const auto& num = std::get<Number>(item);
    if (num.overflow) {
      f.has_overflow = true;
      f.count += 1;
      pending_ellipsis = false;
      continue;
    }
    if (pending_ellipsis) {
      pending_ellipsis = false;
      const std::int64_t a = f.values.back();
      const std::int64_t b = num.value;
      std::int64_t step = f.values.size() >= 2 ? a - f.values[f.values.size() - 2] : 1;
      if (step == 0) step = 1;
      if ((b - a) / step > 0 && (b - a) % step == 0) {
        const std::int64_t implied = (b - a) / step - 1;
        f.count += implied;
        if (f.count > max_expansion) {
          f.runaway = true;
        } else {
          for (std::int64_t k = 1; k <= implied; ++k) f.values.push_back(a + k * step);
        }
      }
    }
    f.values.push_back(num.value);
    f.count += 1;
  }
  f.trailing_ellipsis = pending_ellipsis;
  return f;
}

// Longest run of consecutive integers (step 1) among sorted unique values.
inline std::int64_t longest_unit_run(const std::vector<std::int64_t>& sorted_unique) {
  std::int64_t best = sorted_unique.empty() ? 0 : 1;
  std::int64_t cur = best;
  for (std::size_t i = 1; i < sorted_unique.size(); ++i) {
    cur = sorted_unique[i] == sorted_unique[i - 1] + 1 ? cur + 1 : 1;
    best = std::max(best, cur);
  }
  return best;
}

}  // namespace detail::listparse

namespace detail {

inline Prediction make_prediction(Granularity g, std::string_view raw, const ParseLimits& limits) {
  Prediction p;
  p.granularity = g;
  p.raw_excerpt = utf8_prefix(raw, limits.excerpt_bytes);
  return p;
}

inline Prediction fail(Prediction p, ParseStatus status) {
  p.points.clear();
  p.ranges.clear();
  p.variates.clear();
  p.parse_status = status;
  return p;
}

// Shared path for point indices and variate IDs over the domain [0, bound).
inline Prediction parse_ids(std::string_view raw, std::int64_t bound, Granularity g, double max_count,
                            const ParseLimits& limits) {
  using namespace listparse;
  Prediction p = make_prediction(g, raw, limits);
  Scanner scanner(raw);
  const auto start = scanner.find_list_start();
  if (start == std::string_view::npos) return fail(std::move(p), ParseStatus::Malformed);
  const Node node = scanner.parse_list(start);
  Flat flat = flatten_scalars(node, limits.max_expansion);
  if (flat.has_sublists) return fail(std::move(p), ParseStatus::Malformed);
  if (flat.runaway || flat.trailing_ellipsis || static_cast<double>(flat.count) > max_count) {
    return fail(std::move(p), ParseStatus::Hallucinated);
  }
  std::vector<std::int64_t> kept;
  for (auto v : flat.values) {
    if (v >= 0 && v < bound) {
      kept.push_back(v);
    } else {
      ++p.discarded;
    }
  }
  if (flat.has_overflow) ++p.discarded;
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  const auto run = longest_unit_run(kept);
  if (run >= limits.min_run_length && static_cast<double>(run) > limits.run_coverage * static_cast<double>(bound)) {
    return fail(std::move(p), ParseStatus::Hallucinated);
  }
  (g == Granularity::Variate ? p.variates : p.points) = std::move(kept);
  if (!node.closed) {
    p.parse_status = ParseStatus::Truncated;
  } else if (flat.count == 0) {
    p.parse_status = ParseStatus::Empty;
  } else {
    p.parse_status = ParseStatus::Ok;
  }
  return p;
}

}  // namespace detail

// First bracketed integer list as timestamp indices in [0, T).
inline Prediction parse_points(std::string_view raw, std::int64_t length, const ParseLimits& limits = {}) {
  return detail::parse_ids(raw, length, Granularity::Point, limits.max_point_fraction * static_cast<double>(length),
                           limits);
}

// First bracketed integer list as variate IDs in [0, M).
inline Prediction parse_variates(std::string_view raw, std::int64_t variates, const ParseLimits& limits = {}) {
  return detail::parse_ids(raw, variates, Granularity::Variate, static_cast<double>(variates), limits);
}

// Sorts, then merges ranges that overlap or touch.
inline std::vector<IndexRange> merge_ranges(std::vector<IndexRange> ranges) {
  std::sort(ranges.begin(), ranges.end());
  std::vector<IndexRange> out;
  for (const auto& r : ranges) {
    if (!out.empty() && r.first <= out.back().last + 1) {
      out.back().last = std::max(out.back().last, r.last);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

// First list of integer pairs as inclusive ranges. A bare two-number list is
// read as a single range.
inline Prediction parse_ranges(std::string_view raw, std::int64_t length, const ParseLimits& limits = {}) {
  using namespace detail::listparse;
  Prediction p = detail::make_prediction(Granularity::Range, raw, limits);
  Scanner scanner(raw);
  const auto start = scanner.find_list_start();
  if (start == std::string_view::npos) return detail::fail(std::move(p), ParseStatus::Malformed);
  const Node node = scanner.parse_list(start);

  std::vector<IndexRange> pairs;
  std::int64_t raw_pairs = 0;
  bool has_scalars = false;
  bool has_lists = false;
  bool top_ellipsis = false;
  for (const auto& item : node.items) {
    if (std::holds_alternative<Ellipsis>(item)) top_ellipsis = true;
    if (std::holds_alternative<Number>(item)) has_scalars = true;
    if (!std::holds_alternative<Node>(item)) continue;
    has_lists = true;
    const auto& sub = std::get<Node>(item);
    std::vector<std::int64_t> nums;
    bool bad = !sub.closed;
    for (const auto& x : sub.items) {
      if (!std::holds_alternative<Number>(x) || std::get<Number>(x).overflow) {
        bad = true;
        continue;
      }
      nums.push_back(std::get<Number>(x).value);
    }
    if (!sub.closed) continue;  // truncated trailing pair
    ++raw_pairs;
    if (bad || nums.size() != 2) {
      ++p.discarded;
      continue;
    }
    pairs.push_back({nums[0], nums[1]});
  }
  if (has_scalars && !has_lists) {
    const Flat flat = flatten_scalars(node, limits.max_expansion);
    if (flat.count != 2 || flat.values.size() != 2 || top_ellipsis) {
      return detail::fail(std::move(p), flat.count > 2 * limits.max_pairs || flat.trailing_ellipsis
                                            ? ParseStatus::Hallucinated
                                            : ParseStatus::Malformed);
    }
    pairs.push_back({flat.values[0], flat.values[1]});
    raw_pairs = 1;
  } else if (has_scalars) {
    return detail::fail(std::move(p), ParseStatus::Malformed);
  }
  if (top_ellipsis || raw_pairs > limits.max_pairs) return detail::fail(std::move(p), ParseStatus::Hallucinated);

  std::vector<IndexRange> clipped;
  for (auto r : pairs) {
    if (r.first > r.last) std::swap(r.first, r.last);
    if (r.last < 0 || r.first > length - 1) {
      ++p.discarded;
      continue;
    }
    r.first = std::max<std::int64_t>(r.first, 0);
    r.last = std::min(r.last, length - 1);
    clipped.push_back(r);
  }
  p.ranges = merge_ranges(std::move(clipped));
  std::int64_t covered = 0;
  for (const auto& r : p.ranges) covered += r.size();
  if (static_cast<double>(covered) > limits.max_range_coverage * static_cast<double>(length)) {
    return detail::fail(std::move(p), ParseStatus::Hallucinated);
  }
  if (!node.closed) {
    p.parse_status = ParseStatus::Truncated;
  } else if (raw_pairs == 0) {
    p.parse_status = ParseStatus::Empty;
  } else {
    p.parse_status = ParseStatus::Ok;
  }
  return p;
}

// Dispatches on granularity; `bound` is T for points/ranges and M for variates.
inline Prediction parse_answer(std::string_view raw, Granularity g, std::int64_t bound, const ParseLimits& limits = {}) {
  switch (g) {
    case Granularity::Point:
      return parse_points(raw, bound, limits);
    case Granularity::Range:
      return parse_ranges(raw, bound, limits);
    default:
      return parse_variates(raw, bound, limits);
  }
}

// Canonical answer text in the prompts' list format.
inline std::string format_answer(const std::vector<std::int64_t>& ids) {
  std::string out = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out + "]";
}

inline std::string format_answer(const std::vector<IndexRange>& ranges) {
  std::string out = "[";
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (i) out += ", ";
    out += "[" + std::to_string(ranges[i].first) + ", " + std::to_string(ranges[i].last) + "]";
  }
  return out + "]";
}

inline std::string format_answer(const AnomalyLabel& label) {
  switch (label.granularity) {
    case Granularity::Point:
      return format_answer(label.points);
    case Granularity::Range:
      return format_answer(label.ranges);
    default:
      return format_answer(label.variates);
  }
}

inline std::string format_prediction(const Prediction& p) {
  switch (p.granularity) {
    case Granularity::Point:
      return format_answer(p.points);
    case Granularity::Range:
      return format_answer(p.ranges);
    default:
      return format_answer(p.variates);
  }
}

}  // namespace vtab
