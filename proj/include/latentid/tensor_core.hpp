#pragma once

// Dense matrix/tensor algebra used by every identifiability certificate:
// row-wise Khatri-Rao products, triple products, numerical and Kruskal rank,
// and the clumping index algebra that groups several finite variables into one.
//
// Composite index convention (used everywhere in the library): a tuple of
// digits (d_1, ..., d_q) with radices (a_1, ..., a_q) maps to
// ((d_1 * a_2 + d_2) * a_3 + d_3) ... , i.e. mixed radix with the last digit
// varying fastest. khatri_rao, clump_tensor, unclump and the tensor storage
// order all follow it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "latentid/error.hpp"

namespace latentid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kRankTol = 1e-10;
inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kNegTol = 1e-12;
inline constexpr std::size_t kKruskalRowCap = 20;
inline constexpr std::size_t kEntryCap = std::size_t{1} << 24;

/// Dense three-way array, last index fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(std::array<std::size_t, 3> dims);
  Tensor3(std::array<std::size_t, 3> dims, std::vector<double> data);

  const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t u, std::size_t v, std::size_t w) {
    return data_[(u * dims_[1] + v) * dims_[2] + w];
  }
  double operator()(std::size_t u, std::size_t v, std::size_t w) const {
    return data_[(u * dims_[1] + v) * dims_[2] + w];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double sum() const;

  /// Mode-n unfolding: rows indexed by the chosen mode, columns by the
  /// remaining two modes in their original order (last fastest).
  Matrix unfold(int mode) const;

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::vector<double> data_;
};

/// Dense p-way array, last index fastest.
class TensorP {
 public:
  TensorP() = default;
  explicit TensorP(std::vector<std::size_t> dims);
  TensorP(std::vector<std::size_t> dims, std::vector<double> data);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  double at(std::span<const std::size_t> index) const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double sum() const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

/// Three disjoint nonempty variable blocks covering {0, ..., p-1}; each block
/// is kept sorted so its composite state follows the library index convention.
struct Tripartition {
  std::array<std::vector<std::size_t>, 3> blocks;
  std::array<std::size_t, 3> clumped_dims{0, 0, 0};
};

/// Validates the blocks against the state counts and fills in clumped_dims.
/// Throws BadPartition.
Tripartition make_tripartition(std::array<std::vector<std::size_t>, 3> blocks,
                               std::span<const std::size_t> kappas);

// --- products -------------------------------------------------------------

Matrix khatri_rao(const Matrix& lhs, const Matrix& rhs);
Matrix khatri_rao(std::span<const Matrix> factors);

/// entry (u,v,w) = sum_i M1(i,u) M2(i,v) M3(i,w)
Tensor3 triple_product(const Matrix& m1, const Matrix& m2, const Matrix& m3);

/// Rows of `m` scaled by the entries of `weights`.
Matrix scale_rows(const Vector& weights, const Matrix& m);

// --- ranks ----------------------------------------------------------------

Vector singular_values(const Matrix& m);

/// Number of singular values above tol * sigma_1 * max(rows, cols).
std::size_t numerical_rank(const Matrix& m, double tol = kRankTol);

/// Largest I such that every I-row subset has numerical rank I. Exhaustive
/// over row subsets, so capped at `row_cap` rows.
std::size_t kruskal_rank(const Matrix& m, double tol = kRankTol,
                         std::size_t row_cap = kKruskalRowCap);

// --- clumping ---------------------------------------------------------------

/// Inverse of khatri_rao on stochastic factors: factor i entry (r, j) is the
/// sum of the row-r entries whose i-th digit equals j.
std::vector<Matrix> unclump(const Matrix& a, std::span<const std::size_t> col_dims,
                            double tol = kRowSumTol);

/// Regroups the axes of `t` into three composite axes.
Tensor3 clump_tensor(const TensorP& t, const Tripartition& tripartition);

// --- witnesses ------------------------------------------------------------

std::vector<double> first_primes(std::size_t count);

/// r x n matrix with entry (i, j) = values[j]^i.
Matrix vandermonde_witness(std::size_t r, std::span<const double> values);

// --- validation helpers -----------------------------------------------------

bool all_finite(const Matrix& m);
void require_finite(const Matrix& m, const char* what);
bool is_stochastic(const Matrix& m, double tol = kRowSumTol);
void require_stochastic(const Matrix& m, const char* what, double tol = kRowSumTol);
void require_probability_vector(const Vector& pi, const char* what, double tol = kRowSumTol);

/// Product of the entries, throwing TooLarge when it exceeds `cap`.
std::size_t checked_product(std::span<const std::size_t> dims, std::size_t cap = kEntryCap);

/// Digits of `flat` in the given radices (last fastest).
std::vector<std::size_t> mixed_radix_digits(std::size_t flat,
                                            std::span<const std::size_t> radices);

double max_abs_diff(std::span<const double> lhs, std::span<const double> rhs);

}  // namespace latentid
