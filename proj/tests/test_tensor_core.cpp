#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "latentid/simulation.hpp"
#include "latentid/tensor_core.hpp"

using namespace latentid;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double x : row) m(i, c++) = x;
    ++i;
  }
  return m;
}

Matrix random_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = unit(rng);
  return m;
}

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("khatri_rao: defining formula") {
  const Matrix got = khatri_rao(mat({{1, 2}, {3, 4}}), mat({{5, 6}, {7, 8}}));
  CHECK(max_diff(got, mat({{5, 6, 10, 12}, {21, 24, 28, 32}})) == 0.0);
}

TEST_CASE("khatri_rao: single factor is unchanged") {
  const Matrix a = mat({{0.2, 0.8}, {0.6, 0.4}});
  const std::vector<Matrix> one{a};
  CHECK(max_diff(khatri_rao(one), a) == 0.0);
}

TEST_CASE("khatri_rao: stochastic rows multiply") {
  const Matrix got = khatri_rao(mat({{0.5, 0.5}}), mat({{0.3, 0.7}}));
  CHECK(max_diff(got, mat({{0.15, 0.35, 0.15, 0.35}})) < 1e-15);
  CHECK(got.sum() == doctest::Approx(1.0));
}

TEST_CASE("khatri_rao: mismatched rows rejected") {
  CHECK_THROWS_AS(khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(3, 2)), Error);
  try {
    khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(3, 2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MismatchedRows);
  }
}

TEST_CASE("khatri_rao: stochastic factors give stochastic product") {
  Rng rng(7);
  const std::vector<Matrix> fs{random_stochastic(3, 2, rng), random_stochastic(3, 4, rng), random_stochastic(3, 3, rng)};
  const Matrix kr = khatri_rao(fs);
  CHECK(kr.cols() == 24);
  CHECK(is_stochastic(kr));
}

TEST_CASE("triple_product: identity factors") {
  const Matrix id = Matrix::Identity(2, 2);
  const Tensor3 t = triple_product(id, id, id);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t w = 0; w < 2; ++w) CHECK(t(u, v, w) == ((u == v && v == w) ? 1.0 : 0.0));
}

TEST_CASE("triple_product: single outer product") {
  const Tensor3 t = triple_product(mat({{0.5, 0.5}}), mat({{0.3, 0.7}}), mat({{1, 0}}));
  CHECK(t(0, 0, 0) == doctest::Approx(0.15));
  CHECK(t(1, 1, 0) == doctest::Approx(0.35));
  CHECK(t(0, 1, 1) == 0.0);
}

TEST_CASE("triple_product: matches triple-loop oracle") {
  Rng rng(11);
  const Matrix m1 = random_stochastic(3, 3, rng), m2 = random_stochastic(3, 3, rng), m3 = random_stochastic(3, 3, rng);
  const Tensor3 t = triple_product(m1, m2, m3);
  double worst = 0.0;
  for (Eigen::Index u = 0; u < 3; ++u)
    for (Eigen::Index v = 0; v < 3; ++v)
      for (Eigen::Index w = 0; w < 3; ++w) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < 3; ++i) acc += m1(i, u) * m2(i, v) * m3(i, w);
        worst = std::max(worst, std::abs(acc - t(static_cast<std::size_t>(u), static_cast<std::size_t>(v),
                                                 static_cast<std::size_t>(w))));
      }
  CHECK(worst <= 1e-14);
}

TEST_CASE("triple_product: row permutation and balanced rescaling invariance") {
  Rng rng(3);
  const Matrix m1 = random_stochastic(3, 4, rng), m2 = random_stochastic(3, 3, rng), m3 = random_stochastic(3, 2, rng);
  const Tensor3 base = triple_product(m1, m2, m3);

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;
  const Tensor3 permuted = triple_product(perm * m1, perm * m2, perm * m3);
  CHECK(max_abs_diff(base.data(), permuted.data()) <= 1e-15);

  Vector s1(3), s2(3);
  s1 << 2.0, 0.5, 3.0;
  s2 << 0.25, 4.0, 1.5;
  const Vector s3 = (s1.array() * s2.array()).inverse();
  const Tensor3 scaled = triple_product(scale_rows(s1, m1), scale_rows(s2, m2), scale_rows(s3, m3));
  CHECK(max_abs_diff(base.data(), scaled.data()) <= 1e-15);
}

TEST_CASE("triple_product: mismatched rows rejected") {
  CHECK_THROWS_AS(triple_product(Matrix::Ones(2, 2), Matrix::Ones(2, 2), Matrix::Ones(3, 2)), Error);
}

TEST_CASE("Tensor3 unfolding layout") {
  Tensor3 t({2, 3, 2});
  std::iota(t.data().begin(), t.data().end(), 0.0);
  const Matrix m0 = t.unfold(0);
  CHECK(m0.rows() == 2);
  CHECK(m0.cols() == 6);
  CHECK(m0(1, 5) == t(1, 2, 1));
  const Matrix m1 = t.unfold(1);
  CHECK(m1(2, 3) == t(1, 2, 1));
  const Matrix m2 = t.unfold(2);
  CHECK(m2(1, 4) == t(1, 1, 1));
}

TEST_CASE("numerical_rank examples") {
  CHECK(numerical_rank(Matrix::Identity(3, 3)) == 3);
  CHECK(numerical_rank(mat({{1, 2}, {2, 4}})) == 1);
  CHECK(numerical_rank(Matrix::Zero(3, 4)) == 0);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(numerical_rank(bad), Error);
}

TEST_CASE("kruskal_rank examples") {
  CHECK(kruskal_rank(mat({{1, 0}, {0, 1}, {1, 1}})) == 2);
  CHECK(kruskal_rank(mat({{1, 0}, {1, 0}})) == 1);
  CHECK(kruskal_rank(mat({{1, 0}, {0, 0}, {0, 1}})) == 0);
  CHECK(kruskal_rank(Matrix::Identity(4, 4)) == 4);
}

TEST_CASE("kruskal_rank: row cap") {
  CHECK_THROWS_AS(kruskal_rank(Matrix::Identity(21, 21)), Error);
  CHECK_THROWS_AS(kruskal_rank(Matrix::Identity(3, 3), kRankTol, 2), Error);
  CHECK(kruskal_rank(Matrix::Identity(20, 20)) == 20);
}

TEST_CASE("kruskal_rank <= numerical_rank <= min dimension") {
  Rng rng(5);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 60; ++trial) {
    Matrix m = random_uniform(static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng)), rng);
    if (trial % 3 == 0 && m.rows() > 1) m.row(1) = m.row(0);
    if (trial % 5 == 0) m.row(0).setZero();
    const std::size_t nr = numerical_rank(m);
    CHECK(kruskal_rank(m) <= nr);
    CHECK(nr <= static_cast<std::size_t>(std::min(m.rows(), m.cols())));
  }
}

TEST_CASE("unclump: column-sum recovery") {
  const std::vector<std::size_t> dims{2, 2};
  const auto parts = unclump(mat({{0.15, 0.35, 0.15, 0.35}}), dims);
  REQUIRE(parts.size() == 2);
  CHECK(max_diff(parts[0], mat({{0.5, 0.5}})) < 1e-15);
  CHECK(max_diff(parts[1], mat({{0.3, 0.7}})) < 1e-15);
}

TEST_CASE("unclump inverts khatri_rao") {
  Rng rng(17);
  const std::vector<Matrix> fs{random_stochastic(4, 2, rng), random_stochastic(4, 2, rng), random_stochastic(4, 2, rng)};
  const std::vector<std::size_t> dims{2, 2, 2};
  const auto back = unclump(khatri_rao(fs), dims);
  for (std::size_t q = 0; q < 3; ++q) CHECK(max_diff(back[q], fs[q]) <= 1e-14);
}

TEST_CASE("unclump: identity split and errors") {
  Rng rng(2);
  const Matrix a = random_stochastic(3, 5, rng);
  const std::vector<std::size_t> whole{5};
  CHECK(max_diff(unclump(a, whole).front(), a) == 0.0);
  const std::vector<std::size_t> wrong{2, 2};
  CHECK_THROWS_AS(unclump(a, wrong), Error);
  const std::vector<std::size_t> dims{2, 2};
  try {
    unclump(mat({{0.5, 0.0, 0.0, 0.5}}), dims);
    FAIL("expected NotKhatriRao");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotKhatriRao);
  }
}

TEST_CASE("clump_tensor: identity reshape and regrouping") {
  Rng rng(9);
  TensorP t3({2, 3, 2});
  for (double& x : t3.data()) x = std::uniform_real_distribution<double>(0, 1)(rng);
  const std::vector<std::size_t> k3{2, 3, 2};
  const Tensor3 same = clump_tensor(t3, make_tripartition({{{0}, {1}, {2}}}, k3));
  CHECK(max_abs_diff(same.data(), t3.data()) == 0.0);

  TensorP t4({2, 2, 2, 2});
  for (double& x : t4.data()) x = std::uniform_real_distribution<double>(0, 1)(rng);
  const std::vector<std::size_t> k4{2, 2, 2, 2};
  const Tensor3 c = clump_tensor(t4, make_tripartition({{{0, 1}, {2}, {3}}}, k4));
  CHECK(c.dims() == std::array<std::size_t, 3>{4, 2, 2});
  CHECK(c.sum() == doctest::Approx(t4.sum()).epsilon(1e-15));
  std::vector<double> a(t4.data().begin(), t4.data().end()), b(c.data().begin(), c.data().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("clump_tensor: agrees with clumped triple product") {
  Rng rng(21);
  const std::vector<std::size_t> kappas{2, 3, 2, 2, 3};
  Vector pi = random_probability_vector(2, rng);
  std::vector<Matrix> ms;
  for (std::size_t k : kappas) ms.push_back(random_stochastic(2, k, rng));

  // Joint by nested loops over (i, l1..l5).
  TensorP joint({2, 3, 2, 2, 3});
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    const auto digits = mixed_radix_digits(flat, kappas);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < 2; ++i) {
      double term = pi(i);
      for (std::size_t j = 0; j < 5; ++j) term *= ms[j](i, static_cast<Eigen::Index>(digits[j]));
      acc += term;
    }
    joint[flat] = acc;
  }
  const Tripartition tp = make_tripartition({{{0, 3}, {1, 4}, {2}}}, kappas);
  const Tensor3 clumped = clump_tensor(joint, tp);
  const std::vector<Matrix> b1{ms[0], ms[3]}, b2{ms[1], ms[4]};
  const Tensor3 direct = triple_product(scale_rows(pi, khatri_rao(b1)), khatri_rao(b2), ms[2]);
  CHECK(max_abs_diff(clumped.data(), direct.data()) <= 1e-14);
}

TEST_CASE("make_tripartition validation") {
  const std::vector<std::size_t> kappas{2, 2, 2, 2};
  CHECK_THROWS_AS(make_tripartition({{{0}, {1}, {}}}, kappas), Error);
  CHECK_THROWS_AS(make_tripartition({{{0, 1}, {1}, {2, 3}}}, kappas), Error);
  CHECK_THROWS_AS(make_tripartition({{{0}, {1}, {2}}}, kappas), Error);
  CHECK_THROWS_AS(make_tripartition({{{0}, {1}, {2, 7}}}, kappas), Error);
  const Tripartition t = make_tripartition({{{1, 0}, {2}, {3}}}, kappas);
  CHECK(t.blocks[0] == std::vector<std::size_t>{0, 1});
  CHECK(t.clumped_dims == std::array<std::size_t, 3>{4, 2, 2});
}

TEST_CASE("vandermonde_witness") {
  const std::vector<double> v2{2, 3};
  CHECK(max_diff(vandermonde_witness(2, v2), mat({{1, 1}, {2, 3}})) == 0.0);
  CHECK(numerical_rank(vandermonde_witness(2, v2)) == 2);
  const std::vector<double> v3{2, 3, 5};
  CHECK(numerical_rank(vandermonde_witness(3, v3)) == 3);
  const std::vector<double> dup{2, 2};
  CHECK_THROWS_AS(vandermonde_witness(2, dup), Error);
}

TEST_CASE("khatri_rao of prime witnesses has rank min(r, prod a)") {
  const auto primes = first_primes(12);
  CHECK(primes == std::vector<double>{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37});
  struct Case {
    std::size_t r;
    std::vector<std::size_t> a;
  };
  for (const Case& c : {Case{4, {2, 2}}, Case{5, {2, 2}}, Case{4, {2, 3}}, Case{3, {2, 2}}, Case{3, {2, 2, 2}}}) {
    std::vector<Matrix> fs;
    std::size_t offset = 0, prod = 1;
    for (std::size_t ai : c.a) {
      fs.push_back(vandermonde_witness(c.r, std::span<const double>(primes).subspan(offset, ai)));
      offset += ai;
      prod *= ai;
    }
    CHECK(numerical_rank(khatri_rao(fs)) == std::min(c.r, prod));
  }
}

TEST_CASE("generic khatri_rao rank over uniform samples") {
  Rng rng(2024);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> rpick(1, 8), apick(2, 3), qpick(2, 3);
    const std::size_t r = rpick(rng), q = qpick(rng);
    std::vector<Matrix> fs;
    std::size_t prod = 1;
    for (std::size_t t = 0; t < q; ++t) {
      const std::size_t a = apick(rng);
      fs.push_back(random_uniform(r, a, rng));
      prod *= a;
    }
    if (numerical_rank(khatri_rao(fs)) == std::min(r, prod)) ++hits;
  }
  CHECK(hits == 100);
}

TEST_CASE("validation helpers") {
  CHECK(is_stochastic(mat({{0.5, 0.5}})));
  CHECK_FALSE(is_stochastic(mat({{0.5, 0.6}})));
  CHECK_FALSE(is_stochastic(mat({{1.5, -0.5}})));
  CHECK_THROWS_AS(require_stochastic(mat({{0.5, 0.6}}), "m"), Error);
  const std::vector<std::size_t> huge{1u << 12, 1u << 12, 2};
  CHECK_THROWS_AS(checked_product(huge), Error);
  const std::vector<std::size_t> radices{2, 3, 4};
  CHECK(mixed_radix_digits(23, radices) == std::vector<std::size_t>{1, 2, 3});
  CHECK(mixed_radix_digits(5, radices) == std::vector<std::size_t>{0, 1, 1});
}
