#include "latentid/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

namespace latentid {

namespace {

// Eigenvalue ratios closer than this (relative to the largest magnitude) are
// treated as colliding.
constexpr double kSpectralGapFloor = 1e-8;
constexpr std::size_t kPolishSweeps = 3;

Matrix leading_left_singular_vectors(const Matrix& m, std::size_t count) {
  if (std::min(m.rows(), m.cols()) > 64) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(static_cast<Eigen::Index>(count));
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(static_cast<Eigen::Index>(count));
}

Matrix slice_mixture(const Tensor3& t, const Vector& weights) {
  const auto [n1, n2, n3] = t.dims();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(n2));
  for (std::size_t u = 0; u < n1; ++u)
    for (std::size_t v = 0; v < n2; ++v) {
      double acc = 0.0;
      for (std::size_t w = 0; w < n3; ++w) acc += weights(static_cast<Eigen::Index>(w)) * t(u, v, w);
      out(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = acc;
    }
  return out;
}

enum class AttemptStatus { Ok, Degenerate, Residual };

struct Attempt {
  AttemptStatus status = AttemptStatus::Degenerate;
  RecoveredFactors result;
};

// Clamps entries in [-tol, 0) to zero and renormalizes each row; anything
// more negative is an error.
void clean_stochastic_rows(Matrix& m, double tol, const char* what) {
  if (m.minCoeff() < -tol) {
    throw Error(ErrorCode::NegativeWeights,
                std::string("recovered ") + what + " has an entry below -tol");
  }
  m = m.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
}

// Splits unnormalized r-row factors into row-stochastic factors and weights.
std::optional<RecoveredFactors> normalize_factors(const Matrix& f1, const Matrix& f2, const Matrix& f3,
                                                  const DecomposeOptions& options) {
  const Eigen::Index rr = f1.rows();
  RecoveredFactors out;
  out.pi.resize(rr);
  out.factors = {Matrix(rr, f1.cols()), Matrix(rr, f2.cols()), Matrix(rr, f3.cols())};
  for (Eigen::Index i = 0; i < rr; ++i) {
    const double s1 = f1.row(i).sum();
    const double s2 = f2.row(i).sum();
    const double s3 = f3.row(i).sum();
    if (std::abs(s1) < 1e-300 || std::abs(s2) < 1e-300 || std::abs(s3) < 1e-300) return std::nullopt;
    out.factors[0].row(i) = f1.row(i) / s1;
    out.factors[1].row(i) = f2.row(i) / s2;
    out.factors[2].row(i) = f3.row(i) / s3;
    out.pi(i) = s1 * s2 * s3;
  }
  if (!out.pi.allFinite()) return std::nullopt;

  if (out.pi.minCoeff() < -options.tol) {
    throw Error(ErrorCode::NegativeWeights, "recovered mixing weight below -tol");
  }
  clean_stochastic_rows(out.factors[0], options.tol, "mode-1 factor");
  clean_stochastic_rows(out.factors[1], options.tol, "mode-2 factor");
  clean_stochastic_rows(out.factors[2], options.tol, "mode-3 factor");
  out.pi = out.pi.cwiseMax(0.0);
  out.pi /= out.pi.sum();
  return out;
}

// Alternating least-squares sweeps on unnormalized r-row factors.
void polish_factors(const Tensor3& t, std::array<Matrix, 3>& f, std::size_t sweeps) {
  const std::array<Matrix, 3> unfolded{t.unfold(0), t.unfold(1), t.unfold(2)};
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (int mode = 0; mode < 3; ++mode) {
      const Matrix& lo = f[mode == 0 ? 1 : 0];
      const Matrix& hi = f[mode == 2 ? 1 : 2];
      const Matrix design = khatri_rao(lo, hi).transpose();
      f[mode] = design.colPivHouseholderQr().solve(unfolded[mode].transpose());
      if (!f[mode].allFinite()) return;
    }
  }
}

Attempt attempt_decomposition(const Tensor3& t, std::size_t r, const Matrix& u_basis,
                              const Matrix& v_basis, const Vector& a, const Vector& b,
                              const DecomposeOptions& options) {
  Attempt attempt;
  const auto rr = static_cast<Eigen::Index>(r);
  const Matrix ra = u_basis.transpose() * slice_mixture(t, a) * v_basis;
  const Matrix rb = u_basis.transpose() * slice_mixture(t, b) * v_basis;
  if (numerical_rank(rb, options.rank_tol) < r) return attempt;

  const Matrix pencil = ra * rb.fullPivLu().inverse();
  Eigen::EigenSolver<Matrix> eig(pencil);
  if (eig.info() != Eigen::Success) return attempt;

  const Eigen::VectorXcd values = eig.eigenvalues();
  const double scale = values.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return attempt;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < rr; ++i) {
    if (std::abs(values(i).imag()) > kSpectralGapFloor * scale) return attempt;
    for (Eigen::Index j = i + 1; j < rr; ++j) gap = std::min(gap, std::abs(values(i) - values(j)));
  }
  if (r > 1 && gap < kSpectralGapFloor * scale) return attempt;

  const Matrix directions = eig.eigenvectors().real();  // columns: reduced mode-1 factors
  Eigen::FullPivLU<Matrix> lu(directions);
  if (!lu.isInvertible()) return attempt;
  const Matrix second = lu.solve(ra);  // rows: scaled reduced mode-2 factors

  const Matrix a1 = u_basis * directions;           // n1 x r
  const Matrix a2 = v_basis * second.transpose();   // n2 x r

  // Mode-3 factors by least squares against the rank-one pairs.
  const auto [n1, n2, n3] = t.dims();
  Matrix pairs(static_cast<Eigen::Index>(n1 * n2), rr);
  for (Eigen::Index i = 0; i < rr; ++i)
    for (std::size_t u = 0; u < n1; ++u)
      for (std::size_t v = 0; v < n2; ++v)
        pairs(static_cast<Eigen::Index>(u * n2 + v), i) =
            a1(static_cast<Eigen::Index>(u), i) * a2(static_cast<Eigen::Index>(v), i);
  const Matrix mode3 = t.unfold(2).transpose();  // (n1 n2) x n3
  const Matrix a3 = pairs.colPivHouseholderQr().solve(mode3).transpose();  // n3 x r

  const Matrix raw1 = a1.transpose(), raw2 = a2.transpose(), raw3 = a3.transpose();
  std::optional<RecoveredFactors> out = normalize_factors(raw1, raw2, raw3, options);
  if (!out) return attempt;
  out->residual = reconstruction_residual(t, *out);

  std::array<Matrix, 3> polished{raw1, raw2, raw3};
  polish_factors(t, polished, kPolishSweeps);
  if (std::optional<RecoveredFactors> refined = normalize_factors(polished[0], polished[1], polished[2], options)) {
    refined->residual = reconstruction_residual(t, *refined);
    if (refined->residual < out->residual) out = std::move(refined);
  }

  attempt.result = std::move(*out);
  attempt.status = attempt.result.residual <= options.tol ? AttemptStatus::Ok : AttemptStatus::Residual;
  return attempt;
}

double factor_distance(const Vector& pi, std::span<const Matrix> factors, const Vector& ref_pi,
                       std::span<const Matrix> ref_factors, std::span<const std::size_t> perm) {
  double worst = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto ref = static_cast<Eigen::Index>(i);
    const auto rec = static_cast<Eigen::Index>(perm[i]);
    worst = std::max(worst, std::abs(pi(rec) - ref_pi(ref)));
    for (std::size_t f = 0; f < factors.size(); ++f)
      worst = std::max(worst, (factors[f].row(rec) - ref_factors[f].row(ref)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

double reconstruction_residual(const Tensor3& t, const RecoveredFactors& recovered) {
  const Tensor3 rebuilt = triple_product(scale_rows(recovered.pi, recovered.factors[0]),
                                         recovered.factors[1], recovered.factors[2]);
  if (rebuilt.dims() != t.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "recovered factors do not match tensor dims");
  }
  return max_abs_diff(t.data(), rebuilt.data());
}

RecoveredFactors decompose3(const Tensor3& t, std::size_t r, const DecomposeOptions& options) {
  const auto [n1, n2, n3] = t.dims();
  if (r < 1) throw Error(ErrorCode::PreconditionFailed, "r must be positive");
  if (n1 < r || n2 < r) {
    throw Error(ErrorCode::PreconditionFailed,
                "decompose3 needs the first two dimensions to be at least r = " + std::to_string(r));
  }
  for (double x : t.data()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteEntries, "tensor has non-finite entries");
    if (x < -kNegTol) throw Error(ErrorCode::PreconditionFailed, "tensor has negative entries");
  }
  if (std::abs(t.sum() - 1.0) > kRowSumTol) {
    throw Error(ErrorCode::PreconditionFailed, "tensor does not sum to 1");
  }

  const Matrix unfold1 = t.unfold(0);
  const Matrix unfold2 = t.unfold(1);
  if (numerical_rank(unfold1, options.rank_tol) < r || numerical_rank(unfold2, options.rank_tol) < r) {
    throw Error(ErrorCode::RankDeficient, "slice mixtures have numerical rank below r");
  }
  const Matrix u_basis = leading_left_singular_vectors(unfold1, r);
  const Matrix v_basis = leading_left_singular_vectors(unfold2, r);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::optional<RecoveredFactors> best;
  for (std::size_t round = 0; round <= options.max_retries; ++round) {
    Vector a(static_cast<Eigen::Index>(n3));
    Vector b(static_cast<Eigen::Index>(n3));
    for (Eigen::Index w = 0; w < a.size(); ++w) a(w) = normal(rng);
    for (Eigen::Index w = 0; w < b.size(); ++w) b(w) = normal(rng);

    Attempt attempt = attempt_decomposition(t, r, u_basis, v_basis, a, b, options);
    if (attempt.status == AttemptStatus::Ok) {
      attempt.result.retries_used = round;
      return attempt.result;
    }
    if (attempt.status == AttemptStatus::Residual &&
        (!best || attempt.result.residual < best->residual)) {
      best = std::move(attempt.result);
    }
  }
  if (best) {
    throw Error(ErrorCode::ReconstructionFailed,
                "best reconstruction residual " + std::to_string(best->residual) + " exceeds tol");
  }
  throw Error(ErrorCode::DegenerateSpectrum,
              "eigenvalue ratios collided in all " + std::to_string(options.max_retries + 1) + " draws");
}

Alignment align_permutation(const Vector& pi, std::span<const Matrix> factors, const Vector& ref_pi,
                            std::span<const Matrix> ref_factors) {
  const auto r = static_cast<std::size_t>(pi.size());
  if (ref_pi.size() != pi.size() || factors.size() != ref_factors.size()) {
    throw Error(ErrorCode::DimensionMismatch, "alignment inputs have different shapes");
  }
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (factors[f].rows() != pi.size() || ref_factors[f].rows() != pi.size() ||
        factors[f].cols() != ref_factors[f].cols()) {
      throw Error(ErrorCode::DimensionMismatch, "alignment factor shapes differ");
    }
  }

  Alignment best;
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (r <= 8) {
    best.max_abs_error = std::numeric_limits<double>::infinity();
    do {
      const double err = factor_distance(pi, factors, ref_pi, ref_factors, perm);
      if (err < best.max_abs_error) {
        best.max_abs_error = err;
        best.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }

  // Greedy matching on the correlation of concatenated class profiles.
  auto profile = [&](const Vector& w, std::span<const Matrix> fs, std::size_t i) {
    std::vector<double> out{w(static_cast<Eigen::Index>(i))};
    for (const Matrix& f : fs)
      for (Eigen::Index c = 0; c < f.cols(); ++c) out.push_back(f(static_cast<Eigen::Index>(i), c));
    Eigen::Map<Vector> v(out.data(), static_cast<Eigen::Index>(out.size()));
    Vector centered = v.array() - v.mean();
    const double norm = centered.norm();
    return norm > 0.0 ? Vector(centered / norm) : centered;
  };
  Matrix corr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) {
    const Vector ref = profile(ref_pi, ref_factors, i);
    for (std::size_t k = 0; k < r; ++k)
      corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = ref.dot(profile(pi, factors, k));
  }
  std::vector<bool> ref_used(r, false), rec_used(r, false);
  for (std::size_t step = 0; step < r; ++step) {
    double top = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bk = 0;
    for (std::size_t i = 0; i < r; ++i) {
      if (ref_used[i]) continue;
      for (std::size_t k = 0; k < r; ++k) {
        if (rec_used[k]) continue;
        const double c = corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (c > top) {
          top = c;
          bi = i;
          bk = k;
        }
      }
    }
    ref_used[bi] = rec_used[bk] = true;
    perm[bi] = bk;
  }
  best.permutation = perm;
  best.max_abs_error = factor_distance(pi, factors, ref_pi, ref_factors, perm);
  return best;
}

Alignment align_permutation(const RecoveredFactors& recovered, const Vector& ref_pi,
                            std::span<const Matrix> ref_factors) {
  return align_permutation(recovered.pi, recovered.factors, ref_pi, ref_factors);
}

std::vector<std::size_t> canonical_order(const Vector& pi, std::span<const Matrix> factors) {
  constexpr double kTieTol = 1e-9;
  std::vector<std::size_t> order(static_cast<std::size_t>(pi.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    if (std::abs(pi(ia) - pi(ib)) > kTieTol) return pi(ia) > pi(ib);
    if (factors.empty()) return false;
    const Matrix& f = factors.front();
    for (Eigen::Index c = 0; c < f.cols(); ++c)
      if (std::abs(f(ia, c) - f(ib, c)) > kTieTol) return f(ia, c) < f(ib, c);
    return false;
  });
  return order;
}

RecoveredFactors permute_classes(const RecoveredFactors& recovered, std::span<const std::size_t> order) {
  RecoveredFactors out = recovered;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto dst = static_cast<Eigen::Index>(k);
    const auto src = static_cast<Eigen::Index>(order[k]);
    out.pi(dst) = recovered.pi(src);
    for (std::size_t f = 0; f < 3; ++f) out.factors[f].row(dst) = recovered.factors[f].row(src);
  }
  return out;
}

RecoveredFactors canonicalize(const RecoveredFactors& recovered) {
  return permute_classes(recovered, canonical_order(recovered.pi, recovered.factors));
}

RecoveredModel recover_latent_class(const TensorP& t, std::size_t r, const Tripartition& tripartition,
                                    const DecomposeOptions& options) {
  const auto& kappas = t.dims();
  const Tripartition part = make_tripartition(tripartition.blocks, kappas);
  if (part.clumped_dims[0] < r || part.clumped_dims[1] < r) {
    throw Error(ErrorCode::PreconditionFailed,
                "clumped dimensions of the first two blocks must be at least r");
  }
  const Tensor3 clumped = clump_tensor(t, part);
  const RecoveredFactors factors = decompose3(clumped, r, options);

  RecoveredModel out;
  out.pi = factors.pi;
  out.retries_used = factors.retries_used;
  out.emissions.resize(kappas.size());
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<std::size_t> block_dims;
    for (std::size_t j : part.blocks[b]) block_dims.push_back(kappas[j]);
    const double split_tol = std::max(options.tol, kRowSumTol);
    std::vector<Matrix> split = unclump(factors.factors[b], block_dims, split_tol);
    for (std::size_t s = 0; s < split.size(); ++s) out.emissions[part.blocks[b][s]] = std::move(split[s]);
  }

  const Matrix conditional = khatri_rao(out.emissions);
  const Vector joint = conditional.transpose() * out.pi;
  out.residual = max_abs_diff(t.data(), std::span<const double>(joint.data(), static_cast<std::size_t>(joint.size())));
  if (out.residual > options.tol) {
    throw Error(ErrorCode::ReconstructionFailed,
                "joint reconstruction residual " + std::to_string(out.residual) + " exceeds tol");
  }
  return out;
}

namespace {

void visit_partitions(std::size_t p, std::vector<int>& labels, std::size_t pos, int max_label,
                      const std::function<void(const std::vector<int>&)>& visit) {
  if (pos == p) {
    if (max_label == 2) visit(labels);
    return;
  }
  if (static_cast<int>(p - pos) < 2 - max_label) return;
  for (int label = 0; label <= std::min(max_label + 1, 2); ++label) {
    labels[pos] = label;
    visit_partitions(p, labels, pos + 1, std::max(max_label, label), visit);
  }
}

}  // namespace

std::optional<Tripartition> find_recoverable_tripartition(std::size_t r,
                                                          std::span<const std::size_t> kappas) {
  if (kappas.size() < 3 || kappas.size() > kExhaustiveTripartitionLimit) return std::nullopt;
  std::optional<Tripartition> best;
  std::size_t best_score = 0;
  std::vector<int> labels(kappas.size(), 0);
  visit_partitions(kappas.size(), labels, 0, -1, [&](const std::vector<int>& lab) {
    std::array<std::vector<std::size_t>, 3> blocks;
    std::array<std::size_t, 3> dims{1, 1, 1};
    for (std::size_t j = 0; j < lab.size(); ++j) {
      const auto b = static_cast<std::size_t>(lab[j]);
      blocks[b].push_back(j);
      dims[b] *= kappas[j];
    }
    // Put the two largest blocks first.
    std::array<std::size_t, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return dims[x] > dims[y]; });
    if (dims[idx[1]] < r) return;
    const std::size_t score = std::min(dims[idx[0]], dims[idx[1]]);
    if (!best || score > best_score) {
      best_score = score;
      best = make_tripartition({blocks[idx[0]], blocks[idx[1]], blocks[idx[2]]}, kappas);
    }
  });
  return best;
}

}  // namespace latentid
