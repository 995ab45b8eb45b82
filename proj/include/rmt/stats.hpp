#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace rmt {

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double stderr_ = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

// Two-pass statistics in input order, so results do not depend on scheduling.
inline SampleStats summarize(const std::vector<double>& xs) {
  SampleStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  s.stderr_ = s.stddev / std::sqrt(static_cast<double>(xs.size()));
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  return s;
}

}  // namespace rmt
