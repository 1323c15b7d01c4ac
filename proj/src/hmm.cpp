#include "latentid/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

namespace latentid {

HiddenMarkovModel HiddenMarkovModel::make(Matrix transition, Matrix emission) {
  if (transition.rows() != transition.cols() || transition.rows() < 1) {
    throw Error(ErrorCode::InvalidModel, "transition matrix must be square");
  }
  if (emission.rows() != transition.rows()) {
    throw Error(ErrorCode::MismatchedRows, "emission rows must match the number of hidden states");
  }
  if (emission.cols() < 2) throw Error(ErrorCode::InvalidModel, "emission needs >= 2 observed states");
  require_stochastic(transition, "transition matrix");
  require_stochastic(emission, "emission matrix");
  Vector pi = stationary_distribution(transition);
  return HiddenMarkovModel(std::move(transition), std::move(emission), std::move(pi));
}

Vector stationary_distribution(const Matrix& transition) {
  if (transition.rows() != transition.cols()) {
    throw Error(ErrorCode::InvalidModel, "transition matrix must be square");
  }
  require_stochastic(transition, "transition matrix");
  const Eigen::Index r = transition.rows();

  Eigen::EigenSolver<Matrix> eig(transition.transpose(), false);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NonUniqueStationary, "eigenvalue computation failed");
  }
  std::size_t unit = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    if (std::abs(eig.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) < kStationaryGapTol) ++unit;
  if (unit != 1) {
    throw Error(ErrorCode::NonUniqueStationary,
                "unit eigenvalue has multiplicity " + std::to_string(unit));
  }

  // (A^T - I) pi = 0 with the normalization row 1^T pi = 1.
  Matrix system(r + 1, r);
  system.topRows(r) = transition.transpose() - Matrix::Identity(r, r);
  system.row(r).setOnes();
  Vector rhs = Vector::Zero(r + 1);
  rhs(r) = 1.0;
  Vector pi = system.colPivHouseholderQr().solve(rhs);
  if (pi.minCoeff() <= kMinClassWeight) {
    throw Error(ErrorCode::InvalidModel, "stationary distribution has non-positive entries");
  }
  pi /= pi.sum();
  return pi;
}

Matrix time_reversal(const Matrix& transition, const Vector& pi) {
  if (transition.rows() != transition.cols() || pi.size() != transition.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "time_reversal dimension mismatch");
  }
  if (pi.minCoeff() <= 0.0) throw Error(ErrorCode::NotStationary, "pi must be positive");
  const Vector drift = transition.transpose() * pi - pi;
  if (drift.cwiseAbs().maxCoeff() > kRowSumTol) {
    throw Error(ErrorCode::NotStationary, "pi is not stationary for the transition matrix");
  }
  return pi.cwiseInverse().asDiagonal() * transition.transpose() * pi.asDiagonal();
}

std::size_t min_window(std::size_t r, std::size_t kappa) {
  if (r < 1 || kappa < 2) throw Error(ErrorCode::InvalidModel, "min_window needs r >= 1, kappa >= 2");
  for (std::size_t k = 0;; ++k) {
    // C(k + i, i) grows with i, so stop as soon as it reaches r.
    std::size_t binom = 1;
    for (std::size_t i = 1; i < kappa && binom < r; ++i) binom = binom * (k + i) / i;
    if (binom >= r) return k;
  }
}

ConditionalBlocks conditional_blocks(const Matrix& transition, const Matrix& emission, const Vector& pi,
                                     std::size_t k, std::size_t entry_cap) {
  if (k < 1) throw Error(ErrorCode::PreconditionFailed, "window half-length k must be >= 1");
  if (transition.rows() != emission.rows()) throw Error(ErrorCode::MismatchedRows, "A and B row counts differ");
  std::vector<std::size_t> dims(k, static_cast<std::size_t>(emission.cols()));
  dims.push_back(static_cast<std::size_t>(emission.rows()));
  checked_product(dims, entry_cap);

  ConditionalBlocks out;
  out.k = k;
  out.reversed = time_reversal(transition, pi);
  out.past = out.reversed * emission;
  out.future = transition * emission;
  for (std::size_t level = 1; level < k; ++level) {
    out.past = out.reversed * khatri_rao(emission, out.past);
    out.future = transition * khatri_rao(emission, out.future);
  }
  return out;
}

ConditionalBlocks conditional_blocks(const HiddenMarkovModel& hmm, std::size_t k, std::size_t entry_cap) {
  return conditional_blocks(hmm.transition(), hmm.emission(), hmm.stationary(), k, entry_cap);
}

Certificate hmm_certificate(const HiddenMarkovModel& hmm, std::size_t k, double tol) {
  const ConditionalBlocks blocks = conditional_blocks(hmm, k);
  const std::size_t r = hmm.r();
  Certificate cert;
  cert.mode = CertificateMode::ExactMatrix;
  cert.threshold = 2 * r + 2;
  const bool past_full = numerical_rank(blocks.past, tol) == r;
  const bool future_full = numerical_rank(blocks.future, tol) == r;
  cert.kruskal_ranks = {past_full ? r : kruskal_rank(blocks.past, tol),
                        future_full ? r : kruskal_rank(blocks.future, tol),
                        kruskal_rank(hmm.emission(), tol)};
  cert.holds = past_full && future_full && cert.kruskal_ranks[2] >= 2;
  return cert;
}

Tensor3 window_tensor(const HiddenMarkovModel& hmm, std::size_t k, std::size_t entry_cap) {
  const ConditionalBlocks blocks = conditional_blocks(hmm, k, entry_cap);
  return triple_product(scale_rows(hmm.stationary(), blocks.past), blocks.future, hmm.emission());
}

RecoveredHmm recover_hmm(const Tensor3& t, std::size_t r, std::size_t kappa, std::size_t k,
                         const DecomposeOptions& options) {
  if (k < 1 || kappa < 2) throw Error(ErrorCode::PreconditionFailed, "need k >= 1 and kappa >= 2");
  std::vector<std::size_t> block_dims(k, kappa);
  const std::size_t block = checked_product(block_dims);
  if (t.dims() != std::array<std::size_t, 3>{block, block, kappa}) {
    throw Error(ErrorCode::DimensionMismatch, "tensor is not a (kappa^k, kappa^k, kappa) window tensor");
  }
  if (block < r) throw Error(ErrorCode::PreconditionFailed, "kappa^k must be at least r");

  const RecoveredFactors factors = decompose3(t, r, options);
  const Matrix& future = factors.factors[1];
  const Matrix& emission = factors.factors[2];
  const auto rr = static_cast<Eigen::Index>(r);

  // Marginalizing the last future variable leaves the (k-1)-level block.
  Matrix shorter = Matrix::Ones(rr, 1);
  if (k > 1) {
    const auto width = static_cast<Eigen::Index>(block / kappa);
    const auto kk = static_cast<Eigen::Index>(kappa);
    shorter = Matrix::Zero(rr, width);
    for (Eigen::Index c = 0; c < width; ++c)
      for (Eigen::Index x = 0; x < kk; ++x) shorter.col(c) += future.col(c * kk + x);
  }
  const Matrix design = khatri_rao(emission, shorter);  // r x kappa^k
  if (numerical_rank(design, options.rank_tol) < r) {
    throw Error(ErrorCode::IllConditioned, "emission (.) marginal block has rank below r");
  }
  // transition * design = future, solved in least squares.
  Matrix transition =
      design.transpose().colPivHouseholderQr().solve(future.transpose()).transpose();

  RecoveredHmm out;
  out.solve_residual = (transition * design - future).cwiseAbs().maxCoeff();
  if (out.solve_residual > options.tol) {
    throw Error(ErrorCode::ReconstructionFailed,
                "transition solve residual " + std::to_string(out.solve_residual) + " exceeds tol");
  }
  if (transition.minCoeff() < -options.tol) {
    throw Error(ErrorCode::NegativeWeights, "recovered transition has an entry below -tol");
  }
  for (Eigen::Index i = 0; i < rr; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > options.tol) {
      throw Error(ErrorCode::ReconstructionFailed, "recovered transition is not row-stochastic");
    }
  }
  transition = transition.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < rr; ++i) transition.row(i) /= transition.row(i).sum();

  out.transition = std::move(transition);
  out.emission = emission;
  out.stationary = factors.pi;
  out.residual = factors.residual;
  out.retries_used = factors.retries_used;
  return out;
}

Alignment align_hmm(const RecoveredHmm& recovered, const HiddenMarkovModel& truth) {
  const std::size_t r = truth.r();
  if (static_cast<std::size_t>(recovered.stationary.size()) != r ||
      recovered.emission.cols() != truth.emission().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "recovered HMM shape differs from truth");
  }
  auto distance = [&](const std::vector<std::size_t>& perm) {
    double worst = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      const auto ti = static_cast<Eigen::Index>(i);
      const auto ri = static_cast<Eigen::Index>(perm[i]);
      worst = std::max(worst, std::abs(recovered.stationary(ri) - truth.stationary()(ti)));
      worst = std::max(worst, (recovered.emission.row(ri) - truth.emission().row(ti)).cwiseAbs().maxCoeff());
      for (std::size_t j = 0; j < r; ++j)
        worst = std::max(worst, std::abs(recovered.transition(ri, static_cast<Eigen::Index>(perm[j])) -
                                         truth.transition()(ti, static_cast<Eigen::Index>(j))));
    }
    return worst;
  };

  Alignment best;
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (r > 8) {
    const std::vector<Matrix> rec{recovered.emission};
    const std::vector<Matrix> ref{truth.emission()};
    best = align_permutation(recovered.stationary, rec, truth.stationary(), ref);
    best.max_abs_error = distance(best.permutation);
    return best;
  }
  best.max_abs_error = std::numeric_limits<double>::infinity();
  do {
    const double err = distance(perm);
    if (err < best.max_abs_error) {
      best.max_abs_error = err;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace latentid
