// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--expect-fail N]...
// A criterion listed with --expect-fail still prints its real verdict; it is
// only left out of the exit status. If it unexpectedly passes, the run fails
// so the expectation gets revisited.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "latentid/hmm.hpp"
#include "latentid/latent_class.hpp"
#include "latentid/nonparametric.hpp"
#include "latentid/random_graph.hpp"
#include "latentid/recovery.hpp"
#include "latentid/simulation.hpp"
#include "oracles.hpp"

using namespace latentid;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Verdict three_way_round_trip() {
  Rng rng(101);
  const std::vector<std::size_t> kappas{4, 4, 3};
  const Tripartition singletons = make_tripartition({{{0}, {1}, {2}}}, kappas);
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_latent_class(3, kappas, rng);
    DecomposeOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial);
    const RecoveredModel rec = recover_latent_class(joint_distribution(model), 3, singletons, opts);
    const double err = align_permutation(rec.pi, rec.emissions, model.pi(), model.emissions()).max_abs_error;
    worst = std::max(worst, err);
    ok += err <= 1e-8;
  }
  std::ostringstream s;
  s << ok << "/100 within 1e-8, worst " << worst;
  return {ok == 100, s.str()};
}

std::size_t smallest_certified_p(std::size_t r, std::size_t kappa) {
  for (std::size_t p = 3;; ++p) {
    const std::vector<std::size_t> kappas(p, kappa);
    if (tripartition_search(r, kappas).holds) return p;
  }
}

Verdict bound_agreement() {
  std::ostringstream s;
  bool all = true;
  for (std::size_t kappa : {2u, 3u})
    for (std::size_t r = 2; r <= 8; ++r) {
      const std::size_t found = smallest_certified_p(r, kappa);
      const std::size_t bound = min_variables_bound(r, kappa);
      if (found != bound) {
        all = false;
        s << "(r=" << r << ",kappa=" << kappa << ": search " << found << ", bound " << bound << ") ";
      }
    }
  if (all) s << "all 14 cells agree";
  return {all, s.str()};
}

Verdict four_binary_case() {
  const std::vector<std::size_t> kappas{2, 2, 2, 2};
  const Certificate c = tripartition_search(3, kappas);
  std::ostringstream s;
  s << "max sum " << c.rank_sum() << " vs threshold " << c.threshold;
  return {!c.holds && c.exhaustive && c.rank_sum() == 7 && c.threshold == 8, s.str()};
}

Verdict hmm_block_oracle() {
  Rng rng(404);
  double worst = 0.0;
  for (std::size_t r = 1; r <= 3; ++r)
    for (std::size_t kappa = 2; kappa <= 3; ++kappa)
      for (std::size_t k = 1; k <= 3; ++k) {
        const auto hmm = random_hmm(r, kappa, rng);
        const ConditionalBlocks blocks = conditional_blocks(hmm, k);
        const auto ref = oracle::hmm_blocks(hmm.transition(), hmm.emission(), hmm.stationary(), k);
        worst = std::max({worst, diff(blocks.past, ref.past), diff(blocks.future, ref.future)});
        const Tensor3 t = window_tensor(hmm, k);
        const Tensor3 tref = oracle::hmm_window(hmm.transition(), hmm.emission(), hmm.stationary(), k);
        worst = std::max(worst, max_abs_diff(t.data(), tref.data()));
      }
  std::ostringstream s;
  s << "max-abs difference " << worst;
  return {worst <= 1e-12, s.str()};
}

// Draws with sigma_min / sigma_1 below this in A or B are redrawn for the
// judged run; the unscreened run is reported alongside.
constexpr double kHmmConditionFloor = 1e-2;

int hmm_trials_within(std::size_t r, double floor, std::uint64_t seed, double& worst) {
  Rng rng(seed);
  int ok = 0;
  worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto hmm = random_hmm(r, r, rng, floor);
    DecomposeOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial);
    double err = std::numeric_limits<double>::infinity();
    try {
      err = align_hmm(recover_hmm(window_tensor(hmm, 1), r, r, 1, opts), hmm).max_abs_error;
    } catch (const Error&) {
    }
    worst = std::max(worst, err);
    ok += err <= 1e-6;
  }
  return ok;
}

Verdict hmm_round_trip() {
  std::ostringstream s;
  bool all = true;
  for (std::size_t r : {2u, 3u}) {
    double worst = 0.0, raw_worst = 0.0;
    const int ok = hmm_trials_within(r, kHmmConditionFloor, 505 + r, worst);
    const int raw = hmm_trials_within(r, 0.0, 505 + r, raw_worst);
    all = all && ok == 100;
    s << "r=kappa=" << r << ": " << ok << "/100 (worst " << worst << "), unscreened " << raw << "/100; ";
  }
  bool windows = true;
  for (std::size_t r = 2; r <= 6; ++r) windows = windows && 2 * min_window(r, 2) + 1 == 2 * r - 1;
  s << "window 2r-1 for r in 2..6: " << (windows ? "yes" : "no");
  return {all && windows, s.str()};
}

GraphMixtureModel two_class(double pi1, double p11, double p12, double p22) {
  Vector pi(2);
  pi << pi1, 1.0 - pi1;
  Matrix p(2, 2);
  p << p11, p12, p12, p22;
  return GraphMixtureModel::make(pi, p);
}

Verdict graph_rank_witness() {
  const std::size_t fixed = numerical_rank(conditional_graph_matrix(two_class(0.4, 0.2, 0.5, 0.8), 4));
  Rng rng(606);
  int full = 0;
  for (int trial = 0; trial < 50; ++trial)
    full += numerical_rank(conditional_graph_matrix(random_graph_mixture(false, rng), 4)) == 16;
  const std::size_t flat = numerical_rank(conditional_graph_matrix(two_class(0.4, 0.5, 0.5, 0.5), 4));
  std::ostringstream s;
  s << "rank " << fixed << " at (0.2,0.5,0.8), " << full << "/50 random rank 16, equal p rank " << flat;
  return {fixed == 16 && full == 50 && flat == 1, s.str()};
}

Verdict lattice_construction() {
  bool ok = true;
  for (std::size_t m = 2; m <= 5; ++m) {
    const PartitionFamily fam = lattice_partitions(m);
    ok = ok && edge_disjoint(fam);
    for (std::size_t f = 0; f < 3; ++f) ok = ok && family_edges(fam, f).size() == m * m * (m - 1) / 2;
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t g = f + 1; g < 3; ++g)
        for (const auto& a : fam.families[f])
          for (const auto& b : fam.families[g]) {
            const std::set<std::size_t> sa(a.begin(), a.end());
            std::size_t shared = 0;
            for (std::size_t x : b) shared += sa.count(x);
            ok = ok && shared == 1;
          }
  }
  return {ok, "m in 2..5"};
}

Verdict graph_extraction() {
  Rng rng(808);
  const std::size_t n = 4;
  int ok[2] = {0, 0};
  for (int branch = 0; branch < 2; ++branch)
    for (int trial = 0; trial < 50; ++trial) {
      const auto model = random_graph_mixture(branch == 1, rng);
      const Vector prior = node_state_prior(model.pi(), n);
      std::vector<std::size_t> rows(static_cast<std::size_t>(prior.size()));
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      std::shuffle(rows.begin(), rows.end(), rng);
      std::vector<double> hidden;
      for (std::size_t row : rows) hidden.push_back(prior(static_cast<Eigen::Index>(row)));
      try {
        const GraphParameters got = extract_parameters(hidden, [&](std::size_t row, Edge e) {
          return single_edge_marginal(model, assignment_from_index(rows[row], 2, n), e);
        }, n);
        ok[branch] += graph_parameter_error(got, model) <= 1e-10;
      } catch (const Error&) {
      }
    }
  std::ostringstream s;
  s << "distinct weights " << ok[0] << "/50, equal weights " << ok[1] << "/50";
  return {ok[0] == 50 && ok[1] == 50, s.str()};
}

Verdict nonparametric_round_trip() {
  Rng rng(909);
  std::ostringstream s;
  bool all = true;
  double worst = 0.0;
  int runs = 0;
  auto run = [&](std::size_t r, const std::vector<std::size_t>& dims, std::uint64_t seed) {
    const auto mixture = random_piecewise_mixture(r, dims, 6, rng);
    const auto queries = default_query_points(mixture, 20);
    MixtureRecoveryOptions opts;
    opts.decompose.seed = seed;
    ++runs;
    try {
      const MixtureRecovery rec = recover_mixture(mixture, queries, opts);
      const double err = align_mixture(rec, mixture, queries).max_abs_error;
      worst = std::max(worst, err);
      bool chained = true;
      for (std::size_t j = 3; j < dims.size(); ++j) {
        std::vector<std::size_t> sorted = rec.chaining[j];
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < r; ++i) chained = chained && sorted.size() == r && sorted[i] == i;
      }
      all = all && err <= 1e-6 && chained;
    } catch (const Error& e) {
      all = false;
      s << "error: " << e.what() << "; ";
    }
  };
  for (std::size_t r : {2u, 3u})
    for (std::size_t p : {3u, 5u})
      for (std::uint64_t trial = 0; trial < 5; ++trial) run(r, std::vector<std::size_t>(p, 1), trial);
  run(2, {2, 1, 2}, 0);
  run(2, {2, 2, 1, 1, 2}, 1);
  s << runs << " mixtures, worst error " << worst;
  return {all, s.str()};
}

Verdict structural_invariants() {
  Rng rng(1010);
  std::ostringstream s;
  bool ok = true;

  Matrix m = random_stochastic(4, 5, rng);
  Matrix dup = m;
  dup.row(2) = dup.row(0);
  Matrix zero = m;
  zero.row(1).setZero();
  ok = ok && kruskal_rank(dup) == 1 && kruskal_rank(zero) == 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_stochastic(5, 3, rng);
    ok = ok && kruskal_rank(x) <= numerical_rank(x);
  }
  if (!ok) s << "kruskal rank; ";

  bool unclumped = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Matrix> factors{random_stochastic(3, 2, rng), random_stochastic(3, 3, rng),
                                      random_stochastic(3, 2, rng)};
    const std::vector<std::size_t> dims{2, 3, 2};
    const auto back = unclump(khatri_rao(factors), dims);
    for (std::size_t i = 0; i < 3; ++i) unclumped = unclumped && diff(back[i], factors[i]) <= 1e-14;
  }
  if (!unclumped) s << "unclump; ";

  bool invariant = true;
  {
    const Matrix a = random_stochastic(3, 4, rng), b = random_stochastic(3, 3, rng), c = random_stochastic(3, 2, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
    perm.indices() << 2, 0, 1;
    const Tensor3 t = triple_product(a, b, c);
    const Tensor3 tp = triple_product(perm * a, perm * b, perm * c);
    invariant = max_abs_diff(t.data(), tp.data()) <= 1e-15;
    Vector scale(3);
    scale << 2.0, 0.5, 4.0;
    const Vector inv = scale.cwiseInverse();
    const Tensor3 ts = triple_product(scale_rows(scale, a), scale_rows(inv, b), c);
    invariant = invariant && max_abs_diff(t.data(), ts.data()) <= 1e-14;
  }
  if (!invariant) s << "triple product; ";

  int generic = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<std::pair<std::size_t, std::vector<std::size_t>>> shapes{
      {3, {2, 2}}, {5, {2, 2}}, {4, {3, 2}}, {6, {2, 2, 2}}, {10, {3, 3}}};
  for (int trial = 0; trial < 100; ++trial) {
    const auto& [r, widths] = shapes[static_cast<std::size_t>(trial) % shapes.size()];
    std::vector<Matrix> factors;
    std::size_t prod = 1;
    for (std::size_t w : widths) {
      Matrix f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w));
      for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = unit(rng);
      factors.push_back(f);
      prod *= w;
    }
    generic += numerical_rank(khatri_rao(factors)) == std::min(r, prod);
  }
  if (generic != 100) s << "generic rank " << generic << "/100; ";

  bool bivariate = true;
  {
    std::vector<CdfTable> a, b;
    for (int i = 0; i < 3; ++i) {
      a.push_back(random_univariate_cdf(6, rng));
      b.push_back(random_univariate_cdf(6, rng));
    }
    const Vector pi = random_probability_vector(3, rng);
    const CutPointSet ca = select_cut_points(a, {}, default_candidate_grid(a));
    const CutPointSet cb = select_cut_points(b, {}, default_candidate_grid(b));
    bivariate = bivariate_rank(pi, a, b, ca, cb) == 3;
    const std::vector<CdfTable> one_a(3, a[0]), one_b(3, b[0]);
    bivariate = bivariate && bivariate_rank(pi, one_a, one_b, ca, cb) == 1;
  }
  if (!bivariate) s << "bivariate rank; ";

  const bool all = ok && unclumped && invariant && generic == 100 && bivariate;
  if (all) s << "all hold";
  return {all, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      expected_failures.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--expect-fail N]...\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"three-way round trip, M(3;4,4,3)", three_way_round_trip},
      {"smallest certified p equals the variable bound", bound_agreement},
      {"r=3, kappa=(2,2,2,2) has no certificate", four_binary_case},
      {"hmm blocks and window match path enumeration", hmm_block_oracle},
      {"hmm round trip and window length", hmm_round_trip},
      {"graph matrix rank witness", graph_rank_witness},
      {"lattice partition construction", lattice_construction},
      {"graph parameter extraction", graph_extraction},
      {"nonparametric round trip", nonparametric_round_trip},
      {"structural invariants", structural_invariants},
  };

  int status = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    const auto begin = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const bool expected_fail = expected_failures.count(id) > 0;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << v.detail;
    std::cout << " (" << std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count() << " s)";
    if (expected_fail) std::cout << (v.pass ? " (expected FAIL, now passes)" : " (expected)");
    std::cout << '\n';
    if (v.pass == expected_fail) status = 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "elapsed " << seconds << " s\n";
  return status;
}
