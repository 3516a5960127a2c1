#pragma once

#include <span>
#include <vector>

namespace reentry::testkit {

struct CountedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class P/R/F1 by walking the items once per class.
inline std::vector<CountedMetrics> count_metrics(std::span<const int> gold, std::span<const int> pred, int classes) {
  std::vector<CountedMetrics> out;
  for (int c = 0; c < classes; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (pred[i] == c && gold[i] == c) ++tp;
      if (pred[i] == c && gold[i] != c) ++fp;
      if (pred[i] != c && gold[i] == c) ++fn;
    }
    CountedMetrics m;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    out.push_back(m);
  }
  return out;
}

}  // namespace reentry::testkit
