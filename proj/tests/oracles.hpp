#pragma once

// Slow, direct re-derivations used to check the library. None of this calls
// into the code under test.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double soft(double g, double alpha) {
  const double m = std::max(std::abs(g) - alpha, 0.0);
  return g < 0 ? -m : m;
}

inline double score(double g, double h, double lambda, double alpha) {
  const double t = soft(g, alpha);
  return t * t / (h + lambda);
}

struct Split {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  double left_weight = 0.0, right_weight = 0.0, root_weight = 0.0;
  double runner_up = -1e300;  // best gain of any split on a different partition
};

// Exhaustive search for the first tree of a logistic booster started from
// margin 0: every feature, every cut between consecutive distinct values,
// sums recomputed from scratch for each cut.
inline Split best_first_split(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double lambda,
                              double alpha, double gamma, double min_child_weight) {
  const std::size_t n = x.size(), d = x.empty() ? 0 : x[0].size();
  std::vector<double> g(n), h(n);
  double G = 0, H = 0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = 0.5 - y[i];
    h[i] = 0.25;
    G += g[i];
    H += h[i];
  }
  Split best;
  best.root_weight = -soft(G, alpha) / (H + lambda);
  std::vector<std::pair<double, std::vector<bool>>> seen;  // gain per distinct partition
  for (std::size_t f = 0; f < d; ++f) {
    std::set<double> values;
    for (std::size_t i = 0; i < n; ++i) values.insert(x[i][f]);
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      const double cut = sorted[k] + (sorted[k + 1] - sorted[k]) / 2;
      double gl = 0, hl = 0, gr = 0, hr = 0;
      std::vector<bool> side(n);
      for (std::size_t i = 0; i < n; ++i) {
        side[i] = x[i][f] < cut;
        (side[i] ? gl : gr) += g[i];
        (side[i] ? hl : hr) += h[i];
      }
      if (hl < min_child_weight || hr < min_child_weight) continue;
      const double gain =
          0.5 * (score(gl, hl, lambda, alpha) + score(gr, hr, lambda, alpha) - score(G, H, lambda, alpha)) - gamma;
      seen.emplace_back(gain, side);
      if (gain > 0 && (!best.found || gain > best.gain)) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = cut;
        best.gain = gain;
        best.left_weight = -soft(gl, alpha) / (hl + lambda);
        best.right_weight = -soft(gr, alpha) / (hr + lambda);
      }
    }
  }
  if (best.found) {
    // identify the winning partition to find the best *different* one
    std::vector<bool> win(n);
    for (std::size_t i = 0; i < n; ++i) win[i] = x[i][static_cast<std::size_t>(best.feature)] < best.threshold;
    for (const auto& [gain, side] : seen)
      if (side != win) best.runner_up = std::max(best.runner_up, gain);
  }
  return best;
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

// Confusion counts by enumerating every (instance, label) cell.
inline std::map<std::string, Counts> confusion(const std::vector<std::set<std::string>>& pred,
                                               const std::vector<std::set<std::string>>& truth,
                                               const std::vector<std::string>& labels) {
  std::map<std::string, Counts> out;
  for (const auto& l : labels) {
    Counts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = pred[i].count(l) > 0, t = truth[i].count(l) > 0;
      if (p && t) ++c.tp;
      if (p && !t) ++c.fp;
      if (!p && t) ++c.fn;
    }
    out[l] = c;
  }
  return out;
}

inline double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * tp / denom;
}

}  // namespace oracle
