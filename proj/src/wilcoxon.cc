// Copyright 2026 The c3kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "c3/error.h"
#include "c3/metrics.h"

namespace c3 {
namespace {

struct RankedDiffs {
  // Ranks are doubled so that average ranks of ties stay integral.
  std::vector<int64_t> doubled_ranks;
  std::vector<bool> positive;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

RankedDiffs RankDifferences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kLengthMismatch, "paired samples differ in length: " +
                                         std::to_string(a.size()) + " vs " +
                                         std::to_string(b.size()));
  }
  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) Fail(ErrorCode::kInvalidArgument, "non-finite difference");
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) Fail(ErrorCode::kAllZeroDifferences, "every difference is zero");

  std::vector<size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });
  RankedDiffs out;
  out.doubled_ranks.resize(diffs.size());
  out.positive.resize(diffs.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    // Ranks i+1..j average to (i+1+j)/2; doubled that is i+1+j.
    const auto doubled = static_cast<int64_t>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      out.doubled_ranks[order[k]] = doubled;
      out.positive[order[k]] = diffs[order[k]] > 0;
    }
    const double t = static_cast<double>(j - i);
    out.tie_term += t * t * t - t;
    i = j;
  }
  return out;
}

int64_t DoubledWPlus(const RankedDiffs& r) {
  int64_t sum = 0;
  for (size_t i = 0; i < r.doubled_ranks.size(); ++i) {
    if (r.positive[i]) sum += r.doubled_ranks[i];
  }
  return sum;
}

double NormalP(const RankedDiffs& r) {
  const double n = static_cast<double>(r.doubled_ranks.size());
  const double w_plus = static_cast<double>(DoubledWPlus(r)) / 2.0;
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_term / 48.0;
  if (!(var > 0)) return 1.0;
  const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

// Two-sided exact p: the share of the 2^n sign assignments whose statistic
// is at least as far from the mean as the observed one.
double ExactP(const RankedDiffs& r) {
  const int64_t total =
      std::accumulate(r.doubled_ranks.begin(), r.doubled_ranks.end(), int64_t{0});
  std::vector<double> counts(static_cast<size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  int64_t reach = 0;
  for (const int64_t rank : r.doubled_ranks) {
    for (int64_t s = reach; s >= 0; --s) {
      if (counts[s] != 0.0) counts[s + rank] += counts[s];
    }
    reach += rank;
  }
  // Compare 2W against the doubled mean so everything stays integral.
  const int64_t observed = std::abs(2 * DoubledWPlus(r) - total);
  double extreme = 0.0;
  for (int64_t s = 0; s <= total; ++s) {
    if (std::abs(2 * s - total) >= observed) extreme += counts[s];
  }
  return std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(r.doubled_ranks.size())));
}

}  // namespace

WilcoxonResult WilcoxonSignedRank(std::span<const double> a, std::span<const double> b) {
  const RankedDiffs r = RankDifferences(a, b);
  WilcoxonResult result;
  result.n = r.doubled_ranks.size();
  const int64_t total =
      std::accumulate(r.doubled_ranks.begin(), r.doubled_ranks.end(), int64_t{0});
  const int64_t plus = DoubledWPlus(r);
  result.w_plus = plus / 2.0;
  result.w_minus = (total - plus) / 2.0;
  result.w = std::min(result.w_plus, result.w_minus);
  result.exact = result.n <= kWilcoxonExactMaxN;
  result.p_value = result.exact ? ExactP(r) : NormalP(r);
  return result;
}

double WilcoxonNormalApproxP(std::span<const double> a, std::span<const double> b) {
  return NormalP(RankDifferences(a, b));
}

}  // namespace c3
