#include "latentid/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace latentid {

namespace {

std::size_t product_of(std::span<const std::size_t> dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

}  // namespace

// --- Tensor3 ----------------------------------------------------------------

Tensor3::Tensor3(std::array<std::size_t, 3> dims)
    : dims_(dims), data_(dims[0] * dims[1] * dims[2], 0.0) {}

Tensor3::Tensor3(std::array<std::size_t, 3> dims, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_[0] * dims_[1] * dims_[2]) {
    throw Error(ErrorCode::DimensionMismatch, "Tensor3 data length does not match dims");
  }
}

double Tensor3::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Matrix Tensor3::unfold(int mode) const {
  const auto [n1, n2, n3] = dims_;
  switch (mode) {
    case 0: {
      Matrix out(n1, n2 * n3);
      for (std::size_t u = 0; u < n1; ++u)
        for (std::size_t v = 0; v < n2; ++v)
          for (std::size_t w = 0; w < n3; ++w) out(u, v * n3 + w) = (*this)(u, v, w);
      return out;
    }
    case 1: {
      Matrix out(n2, n1 * n3);
      for (std::size_t u = 0; u < n1; ++u)
        for (std::size_t v = 0; v < n2; ++v)
          for (std::size_t w = 0; w < n3; ++w) out(v, u * n3 + w) = (*this)(u, v, w);
      return out;
    }
    case 2: {
      Matrix out(n3, n1 * n2);
      for (std::size_t u = 0; u < n1; ++u)
        for (std::size_t v = 0; v < n2; ++v)
          for (std::size_t w = 0; w < n3; ++w) out(w, u * n2 + v) = (*this)(u, v, w);
      return out;
    }
    default:
      throw Error(ErrorCode::DimensionMismatch, "unfold mode must be 0, 1 or 2");
  }
}

// --- TensorP ----------------------------------------------------------------

TensorP::TensorP(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(product_of(dims_), 0.0) {}

TensorP::TensorP(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (data_.size() != product_of(dims_)) {
    throw Error(ErrorCode::DimensionMismatch, "TensorP data length does not match dims");
  }
}

double TensorP::at(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "TensorP index has wrong arity");
  }
  std::size_t flat = 0;
  for (std::size_t j = 0; j < dims_.size(); ++j) flat = flat * dims_[j] + index[j];
  return data_[flat];
}

double TensorP::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

// --- Tripartition -----------------------------------------------------------

Tripartition make_tripartition(std::array<std::vector<std::size_t>, 3> blocks,
                               std::span<const std::size_t> kappas) {
  const std::size_t p = kappas.size();
  std::vector<int> seen(p, 0);
  Tripartition out;
  for (std::size_t b = 0; b < 3; ++b) {
    auto& block = blocks[b];
    if (block.empty()) throw Error(ErrorCode::BadPartition, "tripartition block is empty");
    std::sort(block.begin(), block.end());
    std::size_t dim = 1;
    for (std::size_t j : block) {
      if (j >= p) throw Error(ErrorCode::BadPartition, "variable index out of range");
      if (seen[j]++) throw Error(ErrorCode::BadPartition, "blocks are not disjoint");
      dim *= kappas[j];
    }
    out.clumped_dims[b] = dim;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::BadPartition, "blocks do not cover every variable");
  }
  out.blocks = std::move(blocks);
  return out;
}

// --- products ---------------------------------------------------------------

Matrix khatri_rao(const Matrix& lhs, const Matrix& rhs) {
  if (lhs.rows() != rhs.rows()) {
    throw Error(ErrorCode::MismatchedRows, "khatri_rao factors have different row counts");
  }
  const Eigen::Index a1 = lhs.cols();
  const Eigen::Index a2 = rhs.cols();
  Matrix out(lhs.rows(), a1 * a2);
  for (Eigen::Index i = 0; i < lhs.rows(); ++i)
    for (Eigen::Index j = 0; j < a1; ++j)
      for (Eigen::Index k = 0; k < a2; ++k) out(i, a2 * j + k) = lhs(i, j) * rhs(i, k);
  return out;
}

Matrix khatri_rao(std::span<const Matrix> factors) {
  if (factors.empty()) throw Error(ErrorCode::EmptyInput, "khatri_rao needs at least one factor");
  Matrix acc = factors.front();
  for (std::size_t f = 1; f < factors.size(); ++f) acc = khatri_rao(acc, factors[f]);
  return acc;
}

Tensor3 triple_product(const Matrix& m1, const Matrix& m2, const Matrix& m3) {
  if (m1.rows() != m2.rows() || m1.rows() != m3.rows()) {
    throw Error(ErrorCode::MismatchedRows, "triple_product factors have different row counts");
  }
  const auto n1 = static_cast<std::size_t>(m1.cols());
  const auto n2 = static_cast<std::size_t>(m2.cols());
  const auto n3 = static_cast<std::size_t>(m3.cols());
  // (M1 (.) M2)^T M3 is the mode-3 view of the tensor.
  const Matrix pair = khatri_rao(m1, m2);
  const Matrix flat = pair.transpose() * m3;
  Tensor3 out({n1, n2, n3});
  for (std::size_t uv = 0; uv < n1 * n2; ++uv)
    for (std::size_t w = 0; w < n3; ++w)
      out.data()[uv * n3 + w] = flat(static_cast<Eigen::Index>(uv), static_cast<Eigen::Index>(w));
  return out;
}

Matrix scale_rows(const Vector& weights, const Matrix& m) {
  if (weights.size() != m.rows()) {
    throw Error(ErrorCode::MismatchedRows, "row weights do not match matrix rows");
  }
  return weights.asDiagonal() * m;
}

// --- ranks ------------------------------------------------------------------

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  if (std::min(m.rows(), m.cols()) > 64) {
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

std::size_t numerical_rank(const Matrix& m, double tol) {
  require_finite(m, "numerical_rank input");
  const Vector sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff =
      tol * sv(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

std::size_t kruskal_rank(const Matrix& m, double tol, std::size_t row_cap) {
  require_finite(m, "kruskal_rank input");
  const auto rows = static_cast<std::size_t>(m.rows());
  if (rows > row_cap) {
    throw Error(ErrorCode::TooManyRows,
                "kruskal_rank enumeration capped at " + std::to_string(row_cap) + " rows");
  }
  const std::size_t upper = numerical_rank(m, tol);
  std::vector<Eigen::Index> pick;
  for (std::size_t size = 1; size <= upper; ++size) {
    pick.resize(size);
    std::iota(pick.begin(), pick.end(), Eigen::Index{0});
    Matrix sub(static_cast<Eigen::Index>(size), m.cols());
    while (true) {
      for (std::size_t s = 0; s < size; ++s) sub.row(static_cast<Eigen::Index>(s)) = m.row(pick[s]);
      if (numerical_rank(sub, tol) != size) return size - 1;
      // next combination in lexicographic order
      std::size_t pos = size;
      while (pos > 0 && pick[pos - 1] == static_cast<Eigen::Index>(rows - size + pos - 1)) --pos;
      if (pos == 0) break;
      ++pick[pos - 1];
      for (std::size_t s = pos; s < size; ++s) pick[s] = pick[s - 1] + 1;
    }
  }
  return upper;
}

// --- clumping ---------------------------------------------------------------

std::vector<Matrix> unclump(const Matrix& a, std::span<const std::size_t> col_dims, double tol) {
  if (col_dims.empty()) throw Error(ErrorCode::EmptyInput, "unclump needs at least one block");
  if (product_of(col_dims) != static_cast<std::size_t>(a.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "product of col_dims does not equal column count");
  }
  require_stochastic(a, "unclump input", tol);

  const std::size_t q = col_dims.size();
  std::vector<Matrix> factors;
  factors.reserve(q);
  for (std::size_t dim : col_dims) factors.emplace_back(Matrix::Zero(a.rows(), static_cast<Eigen::Index>(dim)));

  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const auto digits = mixed_radix_digits(static_cast<std::size_t>(c), col_dims);
    for (std::size_t f = 0; f < q; ++f)
      factors[f].col(static_cast<Eigen::Index>(digits[f])) += a.col(c);
  }

  const Matrix rebuilt = khatri_rao(factors);
  const double residual = (rebuilt - a).cwiseAbs().maxCoeff();
  if (residual > tol) {
    throw Error(ErrorCode::NotKhatriRao,
                "row tensor product residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return factors;
}

Tensor3 clump_tensor(const TensorP& t, const Tripartition& tripartition) {
  const auto kappas = std::span<const std::size_t>(t.dims());
  // Re-validate against this tensor's shape.
  const Tripartition part = make_tripartition(tripartition.blocks, kappas);
  Tensor3 out({part.clumped_dims[0], part.clumped_dims[1], part.clumped_dims[2]});

  const std::size_t p = kappas.size();
  std::vector<std::size_t> digits(p, 0);
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    std::array<std::size_t, 3> composite{0, 0, 0};
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t j : part.blocks[b]) composite[b] = composite[b] * kappas[j] + digits[j];
    out(composite[0], composite[1], composite[2]) = t[flat];
    // odometer increment, last axis fastest
    for (std::size_t j = p; j-- > 0;) {
      if (++digits[j] < kappas[j]) break;
      digits[j] = 0;
    }
  }
  return out;
}

// --- witnesses --------------------------------------------------------------

std::vector<double> first_primes(std::size_t count) {
  std::vector<double> primes;
  primes.reserve(count);
  for (std::uint64_t candidate = 2; primes.size() < count; ++candidate) {
    bool prime = true;
    for (std::uint64_t d = 2; d * d <= candidate; ++d) {
      if (candidate % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(static_cast<double>(candidate));
  }
  return primes;
}

Matrix vandermonde_witness(std::size_t r, std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::DuplicateValues, "witness values must be distinct");
  }
  if (!sorted.empty() && !(sorted.front() > 0.0)) {
    throw Error(ErrorCode::DuplicateValues, "witness values must be positive");
  }
  Matrix out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(values.size()));
  for (std::size_t j = 0; j < values.size(); ++j) {
    double power = 1.0;
    for (std::size_t i = 0; i < r; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = power;
      power *= values[j];
    }
  }
  return out;
}

// --- validation -------------------------------------------------------------

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFiniteEntries, std::string(what) + " has non-finite entries");
}

bool is_stochastic(const Matrix& m, double tol) {
  if (m.size() == 0 || !m.allFinite()) return false;
  if (m.minCoeff() < -kNegTol || m.maxCoeff() > 1.0 + kNegTol) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (std::abs(m.row(i).sum() - 1.0) > tol) return false;
  return true;
}

void require_stochastic(const Matrix& m, const char* what, double tol) {
  if (!is_stochastic(m, tol)) {
    throw Error(ErrorCode::NotStochastic, std::string(what) + " is not row-stochastic");
  }
}

void require_probability_vector(const Vector& pi, const char* what, double tol) {
  if (pi.size() == 0 || !pi.allFinite() || pi.minCoeff() <= 0.0 || pi.maxCoeff() > 1.0 + kNegTol ||
      std::abs(pi.sum() - 1.0) > tol) {
    throw Error(ErrorCode::InvalidModel, std::string(what) + " is not a positive probability vector");
  }
}

std::size_t checked_product(std::span<const std::size_t> dims, std::size_t cap) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d != 0 && n > cap / d) throw Error(ErrorCode::TooLarge, "entry count exceeds cap");
    n *= d;
  }
  if (n > cap) throw Error(ErrorCode::TooLarge, "entry count exceeds cap");
  return n;
}

std::vector<std::size_t> mixed_radix_digits(std::size_t flat, std::span<const std::size_t> radices) {
  std::vector<std::size_t> digits(radices.size());
  for (std::size_t j = radices.size(); j-- > 0;) {
    digits[j] = flat % radices[j];
    flat /= radices[j];
  }
  return digits;
}

double max_abs_diff(std::span<const double> lhs, std::span<const double> rhs) {
  if (lhs.size() != rhs.size()) throw Error(ErrorCode::DimensionMismatch, "max_abs_diff length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
  return worst;
}

}  // namespace latentid
