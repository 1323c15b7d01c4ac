#include "latentid/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace latentid {

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix random_stochastic(std::size_t rows, std::size_t cols, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = unit(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

Vector random_probability_vector(std::size_t size, Rng& rng) {
  return random_stochastic(1, size, rng).row(0).transpose();
}

LatentClassModel random_latent_class(std::size_t r, std::span<const std::size_t> kappas, Rng& rng) {
  Vector pi = random_probability_vector(r, rng);
  std::vector<Matrix> emissions;
  for (std::size_t k : kappas) emissions.push_back(random_stochastic(r, k, rng));
  return LatentClassModel::make(std::move(pi), std::move(emissions));
}

HiddenMarkovModel random_hmm(std::size_t r, std::size_t kappa, Rng& rng, double min_relative_sv) {
  auto relative_sv = [](const Matrix& m) {
    const Vector sv = singular_values(m);
    return sv(sv.size() - 1) / sv(0);
  };
  for (;;) {
    Matrix a = random_stochastic(r, r, rng);
    Matrix b = random_stochastic(r, kappa, rng);
    if (min_relative_sv > 0.0 && (relative_sv(a) < min_relative_sv || relative_sv(b) < min_relative_sv)) continue;
    return HiddenMarkovModel::make(std::move(a), std::move(b));
  }
}

GraphMixtureModel random_graph_mixture(bool equal_mixing, Rng& rng, double min_gap) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double p11 = 0.0, p12 = 0.0, p22 = 0.0;
  do {
    p11 = unit(rng);
    p12 = unit(rng);
    p22 = unit(rng);
  } while (std::abs(p11 - p12) < min_gap || std::abs(p11 - p22) < min_gap || std::abs(p12 - p22) < min_gap);
  Vector pi(2);
  if (equal_mixing) {
    pi << 0.5, 0.5;
  } else {
    double w = 0.5;
    do {
      w = unit(rng);
    } while (std::abs(w - 0.5) < min_gap || w < min_gap || w > 1.0 - min_gap);
    pi << w, 1.0 - w;
  }
  Matrix p(2, 2);
  p << p11, p12, p12, p22;
  return GraphMixtureModel::make(std::move(pi), std::move(p));
}

CdfTable random_univariate_cdf(std::size_t intervals, Rng& rng) {
  const Vector mass = random_probability_vector(intervals, rng);
  std::vector<double> knots(intervals + 1);
  std::vector<double> values(intervals + 1, 0.0);
  for (std::size_t t = 0; t <= intervals; ++t) knots[t] = static_cast<double>(t);
  for (std::size_t t = 1; t <= intervals; ++t) values[t] = values[t - 1] + mass(static_cast<Eigen::Index>(t - 1));
  values.back() = 1.0;
  return CdfTable::univariate(std::move(knots), std::move(values));
}

namespace {

CdfTable random_block_cdf(std::size_t b, std::size_t intervals, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.2, 0.8);
  const double w = unit(rng);
  std::array<std::vector<CdfTable>, 2> terms;
  for (auto& term : terms)
    for (std::size_t a = 0; a < b; ++a) term.push_back(random_univariate_cdf(intervals, rng));

  std::vector<std::vector<double>> knots(b, terms[0][0].knots()[0]);
  const std::vector<std::size_t> radices(b, intervals + 1);
  const std::size_t total = checked_product(radices);
  std::vector<double> values(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    const auto digits = mixed_radix_digits(flat, radices);
    double first = 1.0, second = 1.0;
    for (std::size_t a = 0; a < b; ++a) {
      first *= terms[0][a].values()[digits[a]];
      second *= terms[1][a].values()[digits[a]];
    }
    values[flat] = w * first + (1.0 - w) * second;
  }
  values.back() = 1.0;
  return CdfTable::make(std::move(knots), std::move(values));
}

}  // namespace

NonparametricMixture random_piecewise_mixture(std::size_t r, std::span<const std::size_t> block_dims,
                                              std::size_t intervals, Rng& rng) {
  Vector pi = random_probability_vector(r, rng);
  std::vector<std::vector<CdfTable>> components(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t b : block_dims)
      components[i].push_back(b == 1 ? random_univariate_cdf(intervals, rng) : random_block_cdf(b, intervals, rng));
  return NonparametricMixture::make(std::move(pi), std::move(components));
}

}  // namespace latentid
