#pragma once

// Parameter recovery from exact three-way probability tensors by
// simultaneous diagonalization of two random slice mixtures, plus the
// p-variable path (clump, decompose, de-clump) and label alignment.
//
// The diagonalization needs two factor matrices of full row rank r and a
// third with Kruskal rank >= 2. That is stronger than Kruskal's uniqueness
// condition; inputs between the two are rejected with an error.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "latentid/latent_class.hpp"
#include "latentid/tensor_core.hpp"

namespace latentid {

struct DecomposeOptions {
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::size_t max_retries = 20;
  double rank_tol = kRankTol;
};

struct RecoveredFactors {
  Vector pi;
  std::array<Matrix, 3> factors;
  double residual = 0.0;
  std::size_t retries_used = 0;
};

/// permutation[i] is the recovered class matched to reference class i.
struct Alignment {
  std::vector<std::size_t> permutation;
  double max_abs_error = 0.0;
};

RecoveredFactors decompose3(const Tensor3& t, std::size_t r, const DecomposeOptions& options = {});

/// max |T - [diag(pi) F1, F2, F3]|
double reconstruction_residual(const Tensor3& t, const RecoveredFactors& recovered);

Alignment align_permutation(const Vector& pi, std::span<const Matrix> factors,
                            const Vector& ref_pi, std::span<const Matrix> ref_factors);
Alignment align_permutation(const RecoveredFactors& recovered, const Vector& ref_pi,
                            std::span<const Matrix> ref_factors);

/// Class order that sorts by descending weight, ties broken by the
/// lexicographic order of the first factor's rows.
std::vector<std::size_t> canonical_order(const Vector& pi, std::span<const Matrix> factors);

/// Reorders classes: new class k is old class order[k].
RecoveredFactors permute_classes(const RecoveredFactors& recovered, std::span<const std::size_t> order);
RecoveredFactors canonicalize(const RecoveredFactors& recovered);

struct RecoveredModel {
  Vector pi;
  std::vector<Matrix> emissions;
  double residual = 0.0;
  std::size_t retries_used = 0;
};

/// Clumps the joint table along the tripartition, decomposes it and splits
/// every clumped factor back into per-variable emission matrices.
RecoveredModel recover_latent_class(const TensorP& t, std::size_t r, const Tripartition& tripartition,
                                    const DecomposeOptions& options = {});

/// First tripartition (in search order) whose first two clumped dimensions
/// reach r, so that decompose3's rank preconditions can hold.
std::optional<Tripartition> find_recoverable_tripartition(std::size_t r,
                                                          std::span<const std::size_t> kappas);

}  // namespace latentid
