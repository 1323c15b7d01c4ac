#pragma once

// The r-class, p-variable latent-class model: a mixture of r product
// distributions over p finite variables. Builds joint distributions and
// decides identifiability through Kruskal's rank condition, either on the
// concrete emission matrices or from state-space dimensions alone.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "latentid/tensor_core.hpp"

namespace latentid {

/// Mixing weights below this are rejected at construction.
inline constexpr double kMinClassWeight = 1e-12;
/// Above this many variables tripartition_search switches to a heuristic.
inline constexpr std::size_t kExhaustiveTripartitionLimit = 12;

class LatentClassModel {
 public:
  /// Validates and builds a model. emissions[j] is r x kappa_j; row i is
  /// P(X_j = . | Z = i). Throws InvalidModel / NotStochastic.
  static LatentClassModel make(Vector pi, std::vector<Matrix> emissions);

  std::size_t r() const noexcept { return static_cast<std::size_t>(pi_.size()); }
  std::size_t p() const noexcept { return emissions_.size(); }
  std::vector<std::size_t> kappas() const;

  const Vector& pi() const noexcept { return pi_; }
  const std::vector<Matrix>& emissions() const noexcept { return emissions_; }
  const Matrix& emission(std::size_t j) const { return emissions_.at(j); }

 private:
  LatentClassModel(Vector pi, std::vector<Matrix> emissions)
      : pi_(std::move(pi)), emissions_(std::move(emissions)) {}

  Vector pi_;
  std::vector<Matrix> emissions_;
};

enum class CertificateMode { ExactMatrix, GenericDimension };

std::string_view to_string(CertificateMode mode);

/// Outcome of a Kruskal-type identifiability check.
struct Certificate {
  bool holds = false;
  std::array<std::size_t, 3> kruskal_ranks{0, 0, 0};
  std::size_t threshold = 0;  // 2r + 2
  std::optional<Tripartition> witness;
  CertificateMode mode = CertificateMode::ExactMatrix;
  /// False when a heuristic search produced this result; a failing
  /// certificate is then inconclusive rather than negative.
  bool exhaustive = true;

  std::size_t rank_sum() const { return kruskal_ranks[0] + kruskal_ranks[1] + kruskal_ranks[2]; }
  bool inconclusive() const { return !holds && !exhaustive; }
};

/// entry (l_1..l_p) = sum_i pi_i prod_j M_j(i, l_j)
TensorP joint_distribution(const LatentClassModel& model, std::size_t entry_cap = kEntryCap);

/// Exact-matrix certificate for p = 3: I_j = kruskal_rank(M_j).
Certificate kruskal_certificate(const LatentClassModel& model, double tol = kRankTol);

/// Exact-matrix certificate for any p >= 3 through a given tripartition: the
/// Kruskal ranks are those of the clumped (row tensor product) matrices.
Certificate clumped_kruskal_certificate(const LatentClassModel& model,
                                        const Tripartition& tripartition,
                                        double tol = kRankTol);

/// Generic-dimension certificate: maximises sum_b min(r, kappa_hat_b) over
/// tripartitions.
Certificate tripartition_search(std::size_t r, std::span<const std::size_t> kappas);

/// 2 * ceil(log_kappa r) + 1
std::size_t min_variables_bound(std::size_t r, std::size_t kappa);

struct ParamDimension {
  std::uint64_t free_parameters = 0;  // L = (r-1) + r * sum(kappa_j - 1)
  std::uint64_t table_size = 0;       // K = prod kappa_j
};

ParamDimension param_dimension(std::size_t r, std::span<const std::size_t> kappas);

/// Model with the emissions grouped into three clumped variables.
LatentClassModel clump_model(const LatentClassModel& model, const Tripartition& tripartition);

}  // namespace latentid
