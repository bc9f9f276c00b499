// Independent reference implementations used only by tests. Everything here
// is computed with naive direct formulas, kept deliberately separate from the
// library's evaluation paths.
#ifndef D2DTO_TESTS_ORACLES_HPP_
#define D2DTO_TESTS_ORACLES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

// e^{-mean} mean^n / n! by direct multiplication.
inline double poisson_pmf(double mean, int n) {
  double p = std::exp(-mean);
  for (int i = 1; i <= n; ++i) {
    p *= mean / static_cast<double>(i);
  }
  return p;
}

inline double prob_exactly(double rate, double theta, int k, int l, int n) {
  if (l < k) {
    return n == 0 ? 1.0 : 0.0;
  }
  return poisson_pmf(rate * theta * static_cast<double>(l - k + 1), n);
}

inline double prob_at_least(double rate, double theta, int k, int l, int n) {
  if (l < k) {
    return n == 0 ? 1.0 : 0.0;
  }
  double below = 0.0;
  for (int i = 0; i < n; ++i) {
    below += prob_exactly(rate, theta, k, l, i);
  }
  return 1.0 - below;
}

// Cost coefficients used by the direct pair-cost formulas below.
struct PairCosts {
  double helper_proc = 0.0;
  double server_proc = 0.0;
  double bs_comm = 0.0;
  double server_comm = 0.0;
};

using CostFn = std::function<double(int)>;

inline std::array<double, 5> event_probs(double rate, double theta, int d,
                                         int t) {
  std::array<double, 5> pi{};
  pi[0] = prob_at_least(rate, theta, 1, t, 2);
  pi[1] = prob_exactly(rate, theta, 1, t, 1) * prob_at_least(rate, theta, t + 1, d, 1);
  pi[2] = prob_exactly(rate, theta, 1, t, 0) * prob_at_least(rate, theta, t + 1, d, 1);
  pi[3] = prob_exactly(rate, theta, 1, t, 1) * prob_exactly(rate, theta, t + 1, d, 0);
  pi[4] = 1.0 - pi[0] - pi[1] - pi[2] - pi[3];
  return pi;
}

inline std::array<double, 5> event_costs(double rate, double theta, int d, int t,
                                         const PairCosts& c, const CostFn& f) {
  const std::array<double, 5> pi = event_probs(rate, theta, d, t);
  std::array<double, 5> delta{};
  for (int k = 0; k <= t; ++k) {
    delta[0] += f(k) * (prob_at_least(rate, theta, 1, k, 2) -
                        prob_at_least(rate, theta, 1, k - 1, 2));
  }
  delta[0] += pi[0] * c.helper_proc;
  for (int k = t + 1; k <= d; ++k) {
    const double hit = prob_at_least(rate, theta, t + 1, k, 1) -
                       prob_at_least(rate, theta, t + 1, k - 1, 1);
    delta[1] += f(k) * prob_exactly(rate, theta, 1, t, 1) * hit;
    delta[2] += f(k) * prob_exactly(rate, theta, 1, t, 0) * hit;
  }
  delta[1] += pi[1] * c.helper_proc;
  delta[2] += pi[2] * (c.helper_proc + 2.0 * c.bs_comm);
  delta[3] = pi[3] * (f(t) + c.helper_proc + 2.0 * c.bs_comm);
  delta[4] = pi[4] * (c.server_proc + 2.0 * c.server_comm);
  return delta;
}

inline double total_cost(double rate, double theta, int d, int t,
                         const PairCosts& c, const CostFn& f) {
  const std::array<double, 5> delta = event_costs(rate, theta, d, t, c, f);
  return delta[0] + delta[1] + delta[2] + delta[3] + delta[4];
}

inline double pair_energy(double rate, double theta, int d, int t,
                          double processing, double bs_comm) {
  const std::array<double, 5> pi = event_probs(rate, theta, d, t);
  return (pi[0] + pi[1]) * processing + (pi[2] + pi[3]) * (processing + bs_comm);
}

// Best timer by full re-scan of the direct formulas (O(d^2)).
struct BestTimer {
  int timer = 0;
  double cost = 0.0;
};

inline BestTimer best_timer(double rate, double theta, int d,
                            const PairCosts& c, const CostFn& f) {
  BestTimer best{0, total_cost(rate, theta, d, 0, c, f)};
  for (int t = 1; t <= d; ++t) {
    const double v = total_cost(rate, theta, d, t, c, f);
    if (v < best.cost) {
      best = {t, v};
    }
  }
  return best;
}

// 0/1 knapsack optimum by dynamic programming over integer capacities.
inline long long knapsack_dp(const std::vector<long long>& weights,
                             const std::vector<long long>& values,
                             long long capacity) {
  std::vector<long long> best(static_cast<size_t>(capacity) + 1, 0);
  for (size_t i = 0; i < weights.size(); ++i) {
    for (long long cap = capacity; cap >= weights[i]; --cap) {
      best[static_cast<size_t>(cap)] =
          std::max(best[static_cast<size_t>(cap)],
                   best[static_cast<size_t>(cap - weights[i])] + values[i]);
    }
  }
  return best[static_cast<size_t>(capacity)];
}

}  // namespace oracle

#endif  // D2DTO_TESTS_ORACLES_HPP_
