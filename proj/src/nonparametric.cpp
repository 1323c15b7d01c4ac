#include "latentid/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace latentid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> axis_sizes(const std::vector<std::vector<double>>& axes, std::size_t extra) {
  std::vector<std::size_t> out;
  out.reserve(axes.size());
  for (const auto& axis : axes) out.push_back(axis.size() + extra);
  return out;
}

void require_same_dimension(std::span<const CdfTable> components) {
  if (components.empty()) throw Error(ErrorCode::EmptyInput, "no components given");
  for (const CdfTable& c : components)
    if (c.dimension() != components.front().dimension()) {
      throw Error(ErrorCode::DimensionMismatch, "components have different block dimensions");
    }
}

bool insert_sorted(std::vector<double>& axis, double value) {
  auto it = std::lower_bound(axis.begin(), axis.end(), value);
  if (it != axis.end() && *it == value) return false;
  axis.insert(it, value);
  return true;
}

}  // namespace

// --- CdfTable ---------------------------------------------------------------

CdfTable CdfTable::make(std::vector<std::vector<double>> knots, std::vector<double> values) {
  if (knots.empty()) throw Error(ErrorCode::InvalidModel, "CDF table needs at least one axis");
  std::vector<std::size_t> dims;
  for (const auto& axis : knots) {
    if (axis.size() < 2) throw Error(ErrorCode::InvalidModel, "each CDF axis needs at least two knots");
    for (std::size_t k = 0; k < axis.size(); ++k) {
      if (!std::isfinite(axis[k])) throw Error(ErrorCode::InvalidModel, "CDF knots must be finite");
      if (k > 0 && !(axis[k] > axis[k - 1])) {
        throw Error(ErrorCode::InvalidModel, "CDF knots must be strictly increasing");
      }
    }
    dims.push_back(axis.size());
  }
  std::size_t count = 1;
  for (std::size_t d : dims) count *= d;
  if (values.size() != count) throw Error(ErrorCode::InvalidModel, "CDF values do not match the knot grid");

  for (std::size_t flat = 0; flat < count; ++flat) {
    const double v = values[flat];
    if (!std::isfinite(v) || v < -kNegTol || v > 1.0 + kRowSumTol) {
      throw Error(ErrorCode::NonMonotoneCdf, "CDF values must lie in [0, 1]");
    }
    const auto digits = mixed_radix_digits(flat, dims);
    std::size_t stride = 1;
    for (std::size_t a = dims.size(); a-- > 0;) {
      if (digits[a] == 0) {
        if (std::abs(v) > kNegTol) {
          throw Error(ErrorCode::NonMonotoneCdf, "CDF must vanish at the lower end of every axis");
        }
      } else if (v < values[flat - stride] - kNegTol) {
        throw Error(ErrorCode::NonMonotoneCdf, "CDF values decrease along an axis");
      }
      stride *= dims[a];
    }
  }
  if (std::abs(values.back() - 1.0) > kRowSumTol) {
    throw Error(ErrorCode::NonMonotoneCdf, "CDF must reach 1 at the upper corner");
  }
  return CdfTable(std::move(knots), std::move(values));
}

CdfTable CdfTable::univariate(std::vector<double> knots, std::vector<double> values) {
  return make({std::move(knots)}, std::move(values));
}

double CdfTable::operator()(std::span<const double> point) const {
  const std::size_t b = knots_.size();
  if (point.size() != b) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from CDF");
  std::vector<std::size_t> cell(b);
  std::vector<double> weight(b);
  for (std::size_t a = 0; a < b; ++a) {
    const auto& axis = knots_[a];
    const double x = point[a];
    if (std::isnan(x)) throw Error(ErrorCode::NonFiniteEntries, "CDF evaluated at NaN");
    if (x <= axis.front()) {
      cell[a] = 0;
      weight[a] = 0.0;
    } else if (x >= axis.back()) {
      cell[a] = axis.size() - 2;
      weight[a] = 1.0;
    } else {
      const auto it = std::upper_bound(axis.begin(), axis.end(), x);
      cell[a] = static_cast<std::size_t>(it - axis.begin()) - 1;
      weight[a] = (x - axis[cell[a]]) / (axis[cell[a] + 1] - axis[cell[a]]);
    }
  }
  double out = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << b); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t a = 0; a < b; ++a) {
      const bool upper = (corner >> (b - 1 - a)) & 1U;
      w *= upper ? weight[a] : 1.0 - weight[a];
      flat = flat * knots_[a].size() + cell[a] + (upper ? 1 : 0);
    }
    if (w != 0.0) out += w * values_[flat];
  }
  return out;
}

double CdfTable::operator()(double x) const {
  const double point[1] = {x};
  return (*this)(std::span<const double>(point, 1));
}

// --- CutPointSet ------------------------------------------------------------

std::vector<std::size_t> CutPointSet::bins_per_axis() const { return axis_sizes(axes, 1); }

std::size_t CutPointSet::kappa() const {
  std::size_t n = 1;
  for (std::size_t k : bins_per_axis()) n *= k;
  return n;
}

// --- NonparametricMixture ---------------------------------------------------

NonparametricMixture NonparametricMixture::make(Vector pi, std::vector<std::vector<CdfTable>> components) {
  require_probability_vector(pi, "pi");
  if (pi.minCoeff() <= kMinClassWeight) throw Error(ErrorCode::InvalidModel, "class weights must exceed 1e-12");
  if (components.size() != static_cast<std::size_t>(pi.size())) {
    throw Error(ErrorCode::InvalidModel, "need one component row per class");
  }
  const std::size_t p = components.front().size();
  if (p == 0) throw Error(ErrorCode::InvalidModel, "mixture needs at least one variate");
  for (const auto& row : components) {
    if (row.size() != p) throw Error(ErrorCode::InvalidModel, "every class needs p components");
    for (std::size_t j = 0; j < p; ++j)
      if (row[j].dimension() != components.front()[j].dimension()) {
        throw Error(ErrorCode::InvalidModel, "block dimensions differ across classes");
      }
  }
  return NonparametricMixture(std::move(pi), std::move(components));
}

std::vector<std::size_t> NonparametricMixture::block_dims() const {
  std::vector<std::size_t> out;
  for (const CdfTable& c : components_.front()) out.push_back(c.dimension());
  return out;
}

std::vector<CdfTable> NonparametricMixture::variate(std::size_t j) const {
  std::vector<CdfTable> out;
  for (const auto& row : components_) out.push_back(row.at(j));
  return out;
}

// --- binning ----------------------------------------------------------------

Matrix cumulative_matrix(std::span<const CdfTable> components, const CutPointSet& cuts) {
  require_same_dimension(components);
  if (cuts.dimension() != components.front().dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "cut axes differ from block dimension");
  }
  const auto bins = cuts.bins_per_axis();
  const std::size_t cols = checked_product(bins);
  Matrix out(static_cast<Eigen::Index>(components.size()), static_cast<Eigen::Index>(cols));
  Point point(bins.size());
  for (std::size_t c = 0; c < cols; ++c) {
    const auto digits = mixed_radix_digits(c, bins);
    for (std::size_t a = 0; a < bins.size(); ++a)
      point[a] = digits[a] < cuts.axes[a].size() ? cuts.axes[a][digits[a]] : kInf;
    for (std::size_t i = 0; i < components.size(); ++i)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = components[i](point);
  }
  return out;
}

Matrix binned_conditional_matrix(std::span<const CdfTable> components, const CutPointSet& cuts) {
  require_same_dimension(components);
  const std::size_t b = components.front().dimension();
  if (cuts.dimension() != b) throw Error(ErrorCode::DimensionMismatch, "cut axes differ from block dimension");
  for (const auto& axis : cuts.axes)
    for (std::size_t k = 1; k < axis.size(); ++k)
      if (!(axis[k] > axis[k - 1])) throw Error(ErrorCode::InvalidModel, "cut points must be strictly increasing");

  const auto bins = cuts.bins_per_axis();
  const std::size_t cols = checked_product(bins);
  Matrix out(static_cast<Eigen::Index>(components.size()), static_cast<Eigen::Index>(cols));
  Point corner_point(b);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto digits = mixed_radix_digits(c, bins);
    for (std::size_t i = 0; i < components.size(); ++i) {
      double mass = 0.0;
      // inclusion-exclusion over the 2^b corners of the product interval
      for (std::size_t corner = 0; corner < (std::size_t{1} << b); ++corner) {
        int lower_count = 0;
        for (std::size_t a = 0; a < b; ++a) {
          const bool lower = (corner >> a) & 1U;
          const std::size_t k = digits[a];
          if (lower) {
            ++lower_count;
            corner_point[a] = k == 0 ? -kInf : cuts.axes[a][k - 1];
          } else {
            corner_point[a] = k < cuts.axes[a].size() ? cuts.axes[a][k] : kInf;
          }
        }
        const double f = components[i](corner_point);
        mass += (lower_count % 2 == 0) ? f : -f;
      }
      if (mass < -kNegTol) {
        throw Error(ErrorCode::NonMonotoneCdf, "negative bin mass " + std::to_string(mass));
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::max(mass, 0.0);
    }
  }
  return out;
}

Matrix cumulative_transform(const Matrix& masses, std::span<const std::size_t> bins_per_axis) {
  if (checked_product(bins_per_axis) != static_cast<std::size_t>(masses.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "bins do not match matrix columns");
  }
  Matrix out = masses;
  std::size_t stride = 1;
  for (std::size_t a = bins_per_axis.size(); a-- > 0;) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const std::size_t digit = (static_cast<std::size_t>(c) / stride) % bins_per_axis[a];
      if (digit > 0) out.col(c) += out.col(c - static_cast<Eigen::Index>(stride));
    }
    stride *= bins_per_axis[a];
  }
  return out;
}

CutPointSet select_cut_points(std::span<const CdfTable> components, std::span<const Point> mandatory,
                              std::span<const Point> grid, double tol) {
  require_same_dimension(components);
  if (grid.empty()) throw Error(ErrorCode::GridExhausted, "candidate grid is empty");
  const std::size_t b = components.front().dimension();
  const std::size_t r = components.size();

  CutPointSet cuts;
  cuts.axes.assign(b, {});
  for (const Point& t : mandatory) {
    if (t.size() != b) throw Error(ErrorCode::DimensionMismatch, "mandatory point has wrong dimension");
    for (std::size_t a = 0; a < b; ++a) {
      if (!std::isfinite(t[a])) throw Error(ErrorCode::NonFiniteEntries, "mandatory point is not finite");
      insert_sorted(cuts.axes[a], t[a]);
    }
  }
  for (const Point& t : grid)
    if (t.size() != b) throw Error(ErrorCode::DimensionMismatch, "grid point has wrong dimension");

  for (std::size_t iteration = 0; iteration <= grid.size(); ++iteration) {
    const Matrix cumulative = cumulative_matrix(components, cuts);
    if (numerical_rank(cumulative) == r) {
      for (std::size_t a = 0; a < b; ++a)
        if (cuts.axes[a].empty()) insert_sorted(cuts.axes[a], grid.front()[a]);
      return cuts;
    }
    // A left-null direction of the current matrix.
    Eigen::JacobiSVD<Matrix> svd(cumulative, Eigen::ComputeFullU);
    const Vector alpha = svd.matrixU().col(static_cast<Eigen::Index>(r) - 1);

    bool added = false;
    for (const Point& t : grid) {
      double combo = 0.0;
      for (std::size_t i = 0; i < r; ++i) combo += alpha(static_cast<Eigen::Index>(i)) * components[i](t);
      if (std::abs(combo) <= tol) continue;
      bool changed = false;
      for (std::size_t a = 0; a < b; ++a) changed = insert_sorted(cuts.axes[a], t[a]) || changed;
      if (changed) {
        added = true;
        break;
      }
    }
    if (!added) {
      throw Error(ErrorCode::GridExhausted,
                  "no grid candidate separates the components; they may be linearly dependent on the grid");
    }
  }
  throw Error(ErrorCode::GridExhausted, "cut selection did not reach full rank");
}

std::vector<Point> default_candidate_grid(std::span<const CdfTable> components) {
  require_same_dimension(components);
  const std::size_t b = components.front().dimension();
  std::vector<std::vector<double>> per_axis(b);
  for (std::size_t a = 0; a < b; ++a) {
    std::vector<double> knots;
    for (const CdfTable& c : components) knots.insert(knots.end(), c.knots()[a].begin(), c.knots()[a].end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> axis = knots;
    for (std::size_t k = 1; k < knots.size(); ++k) axis.push_back(0.5 * (knots[k - 1] + knots[k]));
    std::sort(axis.begin(), axis.end());
    per_axis[a] = std::move(axis);
  }
  const auto sizes = axis_sizes(per_axis, 0);
  const std::size_t count = checked_product(sizes);
  std::vector<Point> grid;
  grid.reserve(count);
  for (std::size_t flat = 0; flat < count; ++flat) {
    const auto digits = mixed_radix_digits(flat, sizes);
    Point t(b);
    for (std::size_t a = 0; a < b; ++a) t[a] = per_axis[a][digits[a]];
    grid.push_back(std::move(t));
  }
  return grid;
}

std::size_t bivariate_rank(const Vector& pi, std::span<const CdfTable> first, std::span<const CdfTable> second,
                           const CutPointSet& first_cuts, const CutPointSet& second_cuts, double tol) {
  const Matrix m1 = binned_conditional_matrix(first, first_cuts);
  const Matrix m2 = binned_conditional_matrix(second, second_cuts);
  if (m1.rows() != pi.size() || m2.rows() != pi.size()) {
    throw Error(ErrorCode::MismatchedRows, "component count differs from weight count");
  }
  const Matrix joint = m1.transpose() * pi.asDiagonal() * m2;
  return numerical_rank(joint, tol);
}

Tensor3 binned_tensor(const NonparametricMixture& mixture, std::array<std::size_t, 3> variates,
                      std::span<const CutPointSet, 3> cuts) {
  std::array<Matrix, 3> binned;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto comps = mixture.variate(variates[m]);
    binned[m] = binned_conditional_matrix(comps, cuts[m]);
  }
  return triple_product(scale_rows(mixture.pi(), binned[0]), binned[1], binned[2]);
}

namespace {

// F_i(x) at every query point of variate j, solved from
// P(X_j <= x, X_a in u, X_b in v) = sum_i pi_i F_i(x) M_a(i, u) M_b(i, v)
// with the recovered weights and the binned factors of variates a and b.
Matrix cdf_at_queries(const NonparametricMixture& mixture, std::size_t j, std::array<std::size_t, 2> others,
                      const Vector& pi, const std::array<Matrix, 2>& factors,
                      const std::array<CutPointSet, 2>& cuts, const std::vector<Point>& queries) {
  const Matrix design = scale_rows(pi, khatri_rao(factors[0], factors[1])).transpose();
  const auto qr = design.colPivHouseholderQr();
  if (static_cast<Eigen::Index>(qr.rank()) < pi.size()) {
    throw Error(ErrorCode::IllConditioned, "recovered factors do not separate the classes");
  }
  Matrix out(pi.size(), static_cast<Eigen::Index>(queries.size()));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    CutPointSet below;
    for (double coordinate : queries[q]) below.axes.push_back({coordinate});
    const std::array<CutPointSet, 3> all{cuts[0], cuts[1], below};
    const Tensor3 joint = binned_tensor(mixture, {others[0], others[1], j}, all);
    Vector observed(design.rows());
    for (std::size_t u = 0; u < joint.dims()[0]; ++u)
      for (std::size_t v = 0; v < joint.dims()[1]; ++v)
        observed(static_cast<Eigen::Index>(u * joint.dims()[1] + v)) = joint(u, v, 0);
    out.col(static_cast<Eigen::Index>(q)) = qr.solve(observed);
  }
  return out;
}

}  // namespace

MixtureRecovery recover_mixture(const NonparametricMixture& mixture,
                                const std::vector<std::vector<Point>>& query_points,
                                const MixtureRecoveryOptions& options) {
  const std::size_t p = mixture.p();
  const std::size_t r = mixture.r();
  if (p < 3) throw Error(ErrorCode::TooFewVariables, "recover_mixture needs at least 3 variates");
  if (query_points.size() != p) throw Error(ErrorCode::DimensionMismatch, "need one query list per variate");

  MixtureRecovery out;
  out.cuts.resize(p);
  out.cdf_values.resize(p);
  out.chaining.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto comps = mixture.variate(j);
    const bool custom = j < options.grids.size() && !options.grids[j].empty();
    const std::vector<Point> grid = custom ? options.grids[j] : default_candidate_grid(comps);
    out.cuts[j] = select_cut_points(comps, {}, grid, options.cut_tol);
  }

  const std::array<CutPointSet, 3> first_cuts{out.cuts[0], out.cuts[1], out.cuts[2]};
  const Tensor3 first_tensor = binned_tensor(mixture, {0, 1, 2}, first_cuts);
  const RecoveredFactors reference = decompose3(first_tensor, r, options.decompose);
  out.pi = reference.pi;
  out.max_residual = reference.residual;
  for (std::size_t j = 0; j < 3; ++j) {
    const std::size_t a = j == 0 ? 1 : 0, b = j == 2 ? 1 : 2;
    out.cdf_values[j] = cdf_at_queries(mixture, j, {a, b}, out.pi, {reference.factors[a], reference.factors[b]},
                                       {out.cuts[a], out.cuts[b]}, query_points[j]);
    out.chaining[j].resize(r);
    std::iota(out.chaining[j].begin(), out.chaining[j].end(), std::size_t{0});
  }

  for (std::size_t j = 3; j < p; ++j) {
    const std::array<CutPointSet, 3> cuts{out.cuts[0], out.cuts[1], out.cuts[j]};
    const Tensor3 tensor = binned_tensor(mixture, {0, 1, j}, cuts);
    DecomposeOptions run_options = options.decompose;
    run_options.seed = options.decompose.seed + j;
    const RecoveredFactors run = decompose3(tensor, r, run_options);
    out.max_residual = std::max(out.max_residual, run.residual);

    // Match classes through the shared variates 1 and 2.
    std::vector<std::size_t> mapping(r, r);
    std::vector<std::size_t> hits(r, 0);
    for (std::size_t k = 0; k < r; ++k) {
      std::size_t matches = 0;
      for (std::size_t i = 0; i < r; ++i) {
        const auto ki = static_cast<Eigen::Index>(k);
        const auto ii = static_cast<Eigen::Index>(i);
        const double d0 = (run.factors[0].row(ki) - reference.factors[0].row(ii)).cwiseAbs().maxCoeff();
        const double d1 = (run.factors[1].row(ki) - reference.factors[1].row(ii)).cwiseAbs().maxCoeff();
        if (std::max(d0, d1) <= options.chaining_tol) {
          mapping[k] = i;
          ++matches;
        }
      }
      if (matches != 1) {
        throw Error(ErrorCode::AmbiguousChaining,
                    "class " + std::to_string(k) + " of variate " + std::to_string(j) + " matched " +
                        std::to_string(matches) + " reference classes");
      }
      if (hits[mapping[k]]++) {
        throw Error(ErrorCode::AmbiguousChaining, "chaining is not a bijection");
      }
    }
    out.cdf_values[j] = cdf_at_queries(mixture, j, {0, 1}, out.pi, {reference.factors[0], reference.factors[1]},
                                       {out.cuts[0], out.cuts[1]}, query_points[j]);
    out.chaining[j] = std::move(mapping);
  }
  return out;
}

std::vector<std::vector<Point>> default_query_points(const NonparametricMixture& mixture, std::size_t count) {
  std::vector<std::vector<Point>> out(mixture.p());
  for (std::size_t j = 0; j < mixture.p(); ++j) {
    const auto comps = mixture.variate(j);
    const std::size_t b = comps.front().dimension();
    std::vector<double> lo(b, std::numeric_limits<double>::infinity());
    std::vector<double> hi(b, -std::numeric_limits<double>::infinity());
    for (const CdfTable& cdf : comps) {
      for (std::size_t a = 0; a < b; ++a) {
        lo[a] = std::min(lo[a], cdf.knots()[a].front());
        hi[a] = std::max(hi[a], cdf.knots()[a].back());
      }
    }
    for (std::size_t q = 0; q < count; ++q) {
      const double t = static_cast<double>(q + 1) / static_cast<double>(count + 1);
      Point point(b);
      for (std::size_t a = 0; a < b; ++a) point[a] = lo[a] + t * (hi[a] - lo[a]);
      out[j].push_back(std::move(point));
    }
  }
  return out;
}

Alignment align_mixture(const MixtureRecovery& recovered, const NonparametricMixture& truth,
                        const std::vector<std::vector<Point>>& query_points) {
  const std::size_t r = truth.r();
  if (static_cast<std::size_t>(recovered.pi.size()) != r || recovered.cdf_values.size() != truth.p()) {
    throw Error(ErrorCode::DimensionMismatch, "recovery does not match the mixture shape");
  }
  std::vector<Matrix> reference(truth.p());
  for (std::size_t j = 0; j < truth.p(); ++j) {
    reference[j].resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(query_points[j].size()));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t q = 0; q < query_points[j].size(); ++q)
        reference[j](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) =
            truth.component(i, j)(std::span<const double>(query_points[j][q]));
  }
  return align_permutation(recovered.pi, recovered.cdf_values, truth.pi(), reference);
}

}  // namespace latentid
