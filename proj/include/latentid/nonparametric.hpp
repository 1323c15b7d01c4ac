#pragma once

// Nonparametric product mixtures: r components, each a product over p
// variates (blocks of dimension b_j) of arbitrary distributions given by
// their CDFs. Continuous variates are binned with well-chosen cut points so
// that the binned model is a finite latent-class model with full-rank
// conditional matrices; decomposing the binned tensor then returns the
// component CDFs at every cut point.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latentid/recovery.hpp"
#include "latentid/tensor_core.hpp"

namespace latentid {

using Point = std::vector<double>;

/// Piecewise-multilinear CDF on a tensor grid of knots. Outside the grid the
/// coordinates clamp to the end knots, so F = 0 as any coordinate goes to
/// -inf and F = 1 when all go to +inf.
class CdfTable {
 public:
  /// values are on the knot grid, last axis fastest.
  static CdfTable make(std::vector<std::vector<double>> knots, std::vector<double> values);
  static CdfTable univariate(std::vector<double> knots, std::vector<double> values);

  std::size_t dimension() const noexcept { return knots_.size(); }
  const std::vector<std::vector<double>>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(std::span<const double> point) const;
  double operator()(double x) const;

 private:
  CdfTable(std::vector<std::vector<double>> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)) {}

  std::vector<std::vector<double>> knots_;
  std::vector<double> values_;
};

/// Sorted cut points per coordinate axis. Axis a yields cuts[a].size() + 1
/// consecutive intervals; a block variate is binned into product intervals.
struct CutPointSet {
  std::vector<std::vector<double>> axes;

  std::size_t dimension() const noexcept { return axes.size(); }
  std::vector<std::size_t> bins_per_axis() const;
  std::size_t kappa() const;  // total bin count
};

class NonparametricMixture {
 public:
  /// components[i][j] is the CDF of variate j under class i.
  static NonparametricMixture make(Vector pi, std::vector<std::vector<CdfTable>> components);

  std::size_t r() const noexcept { return static_cast<std::size_t>(pi_.size()); }
  std::size_t p() const noexcept { return components_.front().size(); }
  const Vector& pi() const noexcept { return pi_; }
  std::vector<std::size_t> block_dims() const;
  const CdfTable& component(std::size_t i, std::size_t j) const { return components_.at(i).at(j); }
  /// The r class CDFs of variate j.
  std::vector<CdfTable> variate(std::size_t j) const;

 private:
  NonparametricMixture(Vector pi, std::vector<std::vector<CdfTable>> components)
      : pi_(std::move(pi)), components_(std::move(components)) {}

  Vector pi_;
  std::vector<std::vector<CdfTable>> components_;
};

/// Matrix of F_i evaluated at every grid point of the cuts, with +inf
/// appended to each axis: r x kappa. For b = 1 row i is
/// (F_i(u_1), ..., F_i(u_{kappa-1}), 1).
Matrix cumulative_matrix(std::span<const CdfTable> components, const CutPointSet& cuts);

/// r x kappa matrix of bin masses (product intervals for blocks).
/// Throws NonMonotoneCdf when a mass is below -1e-12.
Matrix binned_conditional_matrix(std::span<const CdfTable> components, const CutPointSet& cuts);

/// Prefix sums of bin masses along every axis: turns binned rows into
/// cumulative rows (the inverse of the bin differencing).
Matrix cumulative_transform(const Matrix& masses, std::span<const std::size_t> bins_per_axis);

/// Greedy cut selection: starting from the mandatory points, keeps adding
/// the first grid candidate that breaks a left-null vector of the
/// cumulative matrix until it has rank r. Throws GridExhausted.
CutPointSet select_cut_points(std::span<const CdfTable> components, std::span<const Point> mandatory,
                              std::span<const Point> grid, double tol = 1e-9);

/// Knots of all components plus midpoints of consecutive knots, per axis;
/// block variates use the product of the per-axis lists.
std::vector<Point> default_candidate_grid(std::span<const CdfTable> components);

/// Rank of the binned bivariate law M1^T diag(pi) M2.
std::size_t bivariate_rank(const Vector& pi, std::span<const CdfTable> first, std::span<const CdfTable> second,
                           const CutPointSet& first_cuts, const CutPointSet& second_cuts,
                           double tol = kRankTol);

/// Exact binned law of (X_a, X_b, X_c).
Tensor3 binned_tensor(const NonparametricMixture& mixture, std::array<std::size_t, 3> variates,
                      std::span<const CutPointSet, 3> cuts);

struct MixtureRecoveryOptions {
  DecomposeOptions decompose{};
  double cut_tol = 1e-9;
  double chaining_tol = 1e-7;
  /// Candidate grids per variate; an empty entry (or list) means
  /// default_candidate_grid.
  std::vector<std::vector<Point>> grids;
};

struct MixtureRecovery {
  Vector pi;
  std::vector<CutPointSet> cuts;         // per variate
  std::vector<Matrix> cdf_values;        // per variate: r x (query count)
  std::vector<std::vector<std::size_t>> chaining;  // per variate >= 3: new class -> reference class
  double max_residual = 0.0;
};

/// Recovers the weights and every component CDF at the query points, up to
/// a common relabeling of the classes across variates.
MixtureRecovery recover_mixture(const NonparametricMixture& mixture,
                                const std::vector<std::vector<Point>>& query_points,
                                const MixtureRecoveryOptions& options = {});

/// `count` points per variate spread evenly over the interior of the box
/// spanned by the component knots (along its diagonal for blocks).
std::vector<std::vector<Point>> default_query_points(const NonparametricMixture& mixture, std::size_t count);

/// Max-abs error of the recovered weights and CDF values after the best
/// common relabeling of the classes.
Alignment align_mixture(const MixtureRecovery& recovered, const NonparametricMixture& truth,
                        const std::vector<std::vector<Point>>& query_points);

}  // namespace latentid
