#pragma once

// Brute-force reference computations shared by the unit tests and the
// acceptance binary. They enumerate hidden paths or subgraphs directly and
// share no code with the library routines they check.

#include <vector>

#include "latentid/hmm.hpp"
#include "latentid/random_graph.hpp"

namespace oracle {

using latentid::Matrix;
using latentid::Tensor3;
using latentid::Vector;

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  while (exp-- > 0) out *= base;
  return out;
}

// Advances a little-endian odometer; returns false after the last tuple.
inline bool next_tuple(std::vector<std::size_t>& digits, std::size_t radix) {
  for (auto& d : digits) {
    if (++d < radix) return true;
    d = 0;
  }
  return false;
}

struct Blocks {
  Matrix past;
  Matrix future;
};

// P(X_0..X_{k-1} | Z_k) with column (x_{k-1}, ..., x_0), x_0 fastest, and
// P(X_{k+1}..X_2k | Z_k) with column (x_{k+1}, ..., x_2k), x_2k fastest.
inline Blocks hmm_blocks(const Matrix& a, const Matrix& b, const Vector& pi, std::size_t k) {
  const std::size_t r = static_cast<std::size_t>(a.rows());
  const std::size_t kappa = static_cast<std::size_t>(b.cols());
  const std::size_t width = ipow(kappa, k);
  Blocks out{Matrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(width)),
             Matrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(width))};
  std::vector<std::size_t> z(k, 0);  // hidden states before (or after) time k
  do {
    std::vector<std::size_t> x(k, 0);
    do {
      for (std::size_t zk = 0; zk < r; ++zk) {
        const auto ik = static_cast<Eigen::Index>(zk);
        // Past: z[0..k-1] are Z_0..Z_{k-1}.
        double past = pi(static_cast<Eigen::Index>(z[0]));
        for (std::size_t t = 0; t < k; ++t) {
          past *= b(static_cast<Eigen::Index>(z[t]), static_cast<Eigen::Index>(x[t]));
          const std::size_t to = t + 1 < k ? z[t + 1] : zk;
          past *= a(static_cast<Eigen::Index>(z[t]), static_cast<Eigen::Index>(to));
        }
        std::size_t past_col = 0;
        for (std::size_t t = k; t-- > 0;) past_col = past_col * kappa + x[t];
        out.past(ik, static_cast<Eigen::Index>(past_col)) += past / pi(ik);

        // Future: z[0..k-1] are Z_{k+1}..Z_2k.
        double future = 1.0;
        std::size_t from = zk;
        for (std::size_t t = 0; t < k; ++t) {
          future *= a(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(z[t]));
          future *= b(static_cast<Eigen::Index>(z[t]), static_cast<Eigen::Index>(x[t]));
          from = z[t];
        }
        std::size_t future_col = 0;
        for (std::size_t t = 0; t < k; ++t) future_col = future_col * kappa + x[t];
        out.future(ik, static_cast<Eigen::Index>(future_col)) += future;
      }
    } while (next_tuple(x, kappa));
  } while (next_tuple(z, r));
  return out;
}

// Law of ((X_0..X_{k-1}), (X_{k+1}..X_2k), X_k) by summing over every hidden
// path Z_0..Z_2k.
inline Tensor3 hmm_window(const Matrix& a, const Matrix& b, const Vector& pi, std::size_t k) {
  const std::size_t r = static_cast<std::size_t>(a.rows());
  const std::size_t kappa = static_cast<std::size_t>(b.cols());
  const std::size_t n = 2 * k + 1;
  const std::size_t width = ipow(kappa, k);
  Tensor3 t({width, width, kappa});
  std::vector<std::size_t> z(n, 0);
  do {
    double path = pi(static_cast<Eigen::Index>(z[0]));
    for (std::size_t s = 0; s + 1 < n; ++s)
      path *= a(static_cast<Eigen::Index>(z[s]), static_cast<Eigen::Index>(z[s + 1]));
    if (path == 0.0) continue;
    std::vector<std::size_t> x(n, 0);
    do {
      double p = path;
      for (std::size_t s = 0; s < n; ++s) p *= b(static_cast<Eigen::Index>(z[s]), static_cast<Eigen::Index>(x[s]));
      std::size_t u = 0, v = 0;
      for (std::size_t s = k; s-- > 0;) u = u * kappa + x[s];
      for (std::size_t s = k + 1; s < n; ++s) v = v * kappa + x[s];
      t(u, v, x[k]) += p;
    } while (next_tuple(x, kappa));
  } while (next_tuple(z, r));
  return t;
}

// Sum of the conditional-graph-matrix row over every subgraph containing the
// edge, with the row entries computed from the edge-product formula.
inline double edge_marginal_by_summation(const latentid::GraphMixtureModel& model, const std::vector<std::size_t>& states,
                                         std::size_t k, std::size_t l) {
  const std::size_t m = states.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) edges.emplace_back(i, j);
  std::size_t target = 0;
  while (edges[target] != std::make_pair(std::min(k, l), std::max(k, l))) ++target;
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << edges.size()); ++mask) {
    if (!((mask >> target) & 1u)) continue;
    double p = 1.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double pe = model.p(states[edges[e].first], states[edges[e].second]);
      p *= ((mask >> e) & 1u) ? pe : 1.0 - pe;
    }
    total += p;
  }
  return total;
}

}  // namespace oracle
