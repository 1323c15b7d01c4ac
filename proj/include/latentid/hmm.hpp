#pragma once

// Discrete stationary hidden Markov models viewed as three-variable latent
// class models: the window X_0..X_2k is split into the past block
// (X_0..X_{k-1}), the future block (X_{k+1}..X_2k) and X_k, which are
// independent given the hidden state Z_k.
//
// Column order of the conditional blocks follows the nested recursion
//   B1 = A'(B (.) A'(B (.) ... A'B)),   B2 = A(B (.) A(B (.) ... AB))
// so B1's composite digits are (X_{k-1}, ..., X_0) with X_0 fastest, and
// B2's digits are (X_{k+1}, ..., X_2k) with X_2k fastest.

#include <cstddef>

#include "latentid/latent_class.hpp"
#include "latentid/recovery.hpp"
#include "latentid/tensor_core.hpp"

namespace latentid {

/// Tolerance used to decide whether the unit eigenvalue is simple.
inline constexpr double kStationaryGapTol = 1e-8;

class HiddenMarkovModel {
 public:
  /// A: r x r transition P(Z_{n+1} | Z_n); B: r x kappa emission P(X_n | Z_n).
  /// The stationary distribution is derived from A.
  static HiddenMarkovModel make(Matrix transition, Matrix emission);

  std::size_t r() const noexcept { return static_cast<std::size_t>(transition_.rows()); }
  std::size_t kappa() const noexcept { return static_cast<std::size_t>(emission_.cols()); }
  const Matrix& transition() const noexcept { return transition_; }
  const Matrix& emission() const noexcept { return emission_; }
  const Vector& stationary() const noexcept { return stationary_; }

 private:
  HiddenMarkovModel(Matrix a, Matrix b, Vector pi)
      : transition_(std::move(a)), emission_(std::move(b)), stationary_(std::move(pi)) {}

  Matrix transition_;
  Matrix emission_;
  Vector stationary_;
};

struct ConditionalBlocks {
  std::size_t k = 0;
  Matrix past;      // B1: r x kappa^k, P(X_0..X_{k-1} | Z_k)
  Matrix future;    // B2: r x kappa^k, P(X_{k+1}..X_2k | Z_k)
  Matrix reversed;  // A': r x r, P(Z_{n-1} | Z_n)
};

Vector stationary_distribution(const Matrix& transition);

/// A'(i,j) = pi_j A(j,i) / pi_i
Matrix time_reversal(const Matrix& transition, const Vector& pi);

/// Smallest k with C(k + kappa - 1, kappa - 1) >= r. The window is 2k + 1.
std::size_t min_window(std::size_t r, std::size_t kappa);

ConditionalBlocks conditional_blocks(const HiddenMarkovModel& hmm, std::size_t k,
                                     std::size_t entry_cap = kEntryCap);

/// Same recursion for any chain with pi A = pi, including chains whose
/// stationary law is not unique (e.g. A = I).
ConditionalBlocks conditional_blocks(const Matrix& transition, const Matrix& emission, const Vector& pi,
                                     std::size_t k, std::size_t entry_cap = kEntryCap);

/// Holds iff B1 and B2 have full row rank r and B has Kruskal rank >= 2.
/// Reported ranks are the Kruskal ranks of (B1, B2, B).
Certificate hmm_certificate(const HiddenMarkovModel& hmm, std::size_t k, double tol = kRankTol);

/// [diag(pi) B1, B2, B]: the law of (past block, future block, X_k).
Tensor3 window_tensor(const HiddenMarkovModel& hmm, std::size_t k, std::size_t entry_cap = kEntryCap);

struct RecoveredHmm {
  Matrix transition;
  Matrix emission;
  Vector stationary;
  double residual = 0.0;        // tensor reconstruction residual
  double solve_residual = 0.0;  // residual of the transition solve
  std::size_t retries_used = 0;
};

RecoveredHmm recover_hmm(const Tensor3& t, std::size_t r, std::size_t kappa, std::size_t k,
                         const DecomposeOptions& options = {});

/// Max-abs parameter difference after the best relabeling of hidden states.
Alignment align_hmm(const RecoveredHmm& recovered, const HiddenMarkovModel& truth);

}  // namespace latentid
