// Regenerates tests/affiliation_pins.hpp from the brute-force oracle.
// Usage: make_affiliation_pins > tests/affiliation_pins.hpp

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "../affiliation_oracle.hpp"

namespace {

struct Case {
  std::int64_t length;
  std::vector<std::pair<std::int64_t, std::int64_t>> pred;
  std::vector<std::pair<std::int64_t, std::int64_t>> truth;
};

// Disjoint, non-adjacent inclusive ranges inside [0, length).
std::vector<std::pair<std::int64_t, std::int64_t>> draw(std::mt19937_64& g, std::int64_t length, int n, int max_len) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (int tries = 0; static_cast<int>(out.size()) < n && tries < 1000; ++tries) {
    const std::int64_t len = 1 + static_cast<std::int64_t>(g() % static_cast<std::uint64_t>(max_len));
    if (len > length) continue;
    const std::int64_t s = static_cast<std::int64_t>(g() % static_cast<std::uint64_t>(length - len + 1));
    const std::int64_t e = s + len - 1;
    bool ok = true;
    for (const auto& [a, b] : out) ok = ok && (e < a - 1 || s > b + 1);
    if (ok) out.push_back({s, e});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string list(const std::vector<std::pair<std::int64_t, std::int64_t>>& rs) {
  std::string s = "{";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) s += ", ";
    s += "{" + std::to_string(rs[i].first) + ", " + std::to_string(rs[i].second) + "}";
  }
  return s + "}";
}

}  // namespace

int main() {
  std::vector<Case> cases;
  cases.push_back({100, {{12, 17}}, {{10, 19}}});
  cases.push_back({400, {{99, 99}}, {{100, 120}}});
  cases.push_back({400, {{0, 0}}, {{100, 120}}});
  cases.push_back({400, {{76, 85}, {131, 140}}, {{76, 85}, {131, 140}}});
  cases.push_back({400, {{2, 11}, {50, 60}}, {{2, 11}, {50, 60}, {105, 118}}});
  cases.push_back({50, {{0, 49}}, {{20, 22}}});
  std::mt19937_64 g(0x5eed'a551'0001ULL);
  while (cases.size() < 50) {
    Case c;
    c.length = 20 + static_cast<std::int64_t>(g() % 481);
    const int nt = 1 + static_cast<int>(g() % 4);
    const int np = 1 + static_cast<int>(g() % 5);
    c.truth = draw(g, c.length, nt, static_cast<int>(std::max<std::int64_t>(1, c.length / 10)));
    // Alternate point-like and range-like predictions.
    c.pred = draw(g, c.length, np, cases.size() % 2 ? 1 : static_cast<int>(std::max<std::int64_t>(1, c.length / 8)));
    if (c.truth.empty() || c.pred.empty()) continue;
    cases.push_back(c);
  }
  std::printf("#pragma once\n\n// Generated by tests/tools/make_affiliation_pins.cpp from the brute-force oracle.\n\n");
  std::printf("#include <cstdint>\n#include <utility>\n#include <vector>\n\n");
  std::printf("struct AffiliationPin {\n  std::int64_t length;\n  std::vector<std::pair<std::int64_t, std::int64_t>> pred;\n"
              "  std::vector<std::pair<std::int64_t, std::int64_t>> truth;\n  double precision;\n  double recall;\n};\n\n");
  std::printf("inline const std::vector<AffiliationPin> kAffiliationPins{\n");
  for (const auto& c : cases) {
    std::vector<oracle::Span> p, t;
    for (const auto& [a, b] : c.pred) p.push_back({static_cast<double>(a), static_cast<double>(b + 1)});
    for (const auto& [a, b] : c.truth) t.push_back({static_cast<double>(a), static_cast<double>(b + 1)});
    const auto r = oracle::affiliation(p, t, {0.0, static_cast<double>(c.length)});
    std::printf("    {%lld, %s, %s, %.17g, %.17g},\n", static_cast<long long>(c.length), list(c.pred).c_str(),
                list(c.truth).c_str(), r.precision, r.recall);
  }
  std::printf("};\n");
}
