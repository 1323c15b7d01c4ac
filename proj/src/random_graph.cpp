#include "latentid/random_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace latentid {

GraphMixtureModel GraphMixtureModel::make(Vector pi, Matrix connection) {
  require_probability_vector(pi, "pi");
  if (connection.rows() != pi.size() || connection.cols() != pi.size()) {
    throw Error(ErrorCode::DimensionMismatch, "connection matrix must be r x r");
  }
  require_finite(connection, "connection matrix");
  if (connection.minCoeff() < 0.0 || connection.maxCoeff() > 1.0) {
    throw Error(ErrorCode::InvalidModel, "connection probabilities must lie in [0, 1]");
  }
  if ((connection - connection.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorCode::InvalidModel, "connection matrix must be symmetric");
  }
  return GraphMixtureModel(std::move(pi), std::move(connection));
}

std::vector<Edge> complete_graph_edges(std::size_t nodes) {
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < nodes; ++k)
    for (std::size_t l = k + 1; l < nodes; ++l) edges.emplace_back(k, l);
  return edges;
}

Vector node_state_prior(const Vector& pi, std::size_t n, std::size_t entry_cap) {
  std::vector<std::size_t> dims(n, static_cast<std::size_t>(pi.size()));
  checked_product(dims, entry_cap);
  Vector out = Vector::Ones(1);
  for (std::size_t node = 0; node < n; ++node) {
    Vector next(out.size() * pi.size());
    for (Eigen::Index s = 0; s < out.size(); ++s)
      for (Eigen::Index z = 0; z < pi.size(); ++z) next(s * pi.size() + z) = out(s) * pi(z);
    out = std::move(next);
  }
  return out;
}

NodeAssignment assignment_from_index(std::size_t index, std::size_t r, std::size_t n) {
  std::vector<std::size_t> radices(n, r);
  return mixed_radix_digits(index, radices);
}

Matrix conditional_graph_matrix(const GraphMixtureModel& model, std::size_t m, std::size_t entry_cap) {
  const std::size_t r = model.r();
  const auto edges = complete_graph_edges(m);
  if (edges.size() >= 8 * sizeof(std::size_t) - 1) throw Error(ErrorCode::TooLarge, "too many edges");
  std::vector<std::size_t> dims(m, r);
  const std::size_t rows = checked_product(dims, entry_cap);
  const std::size_t cols = std::size_t{1} << edges.size();
  const std::array<std::size_t, 2> shape{rows, cols};
  checked_product(shape, entry_cap);

  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t row = 0; row < rows; ++row) {
    const NodeAssignment states = assignment_from_index(row, r, m);
    std::vector<double> present(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
      present[e] = model.p(states[edges[e].first], states[edges[e].second]);
    for (std::size_t mask = 0; mask < cols; ++mask) {
      double prob = 1.0;
      for (std::size_t e = 0; e < edges.size(); ++e)
        prob *= ((mask >> e) & 1U) ? present[e] : 1.0 - present[e];
      out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(mask)) = prob;
    }
  }
  return out;
}

PartitionFamily lattice_partitions(std::size_t m) {
  if (m < 2) throw Error(ErrorCode::PreconditionFailed, "lattice_partitions needs m >= 2");
  PartitionFamily out;
  out.m = m;
  for (auto& family : out.families) family.assign(m, {});
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      out.families[0][j].push_back(j * m + i);              // grid row j
      out.families[1][j].push_back(i * m + j);              // grid column j
      out.families[2][j].push_back(i * m + (i + j) % m);    // wrapped diagonal j
    }
  }
  for (auto& family : out.families)
    for (auto& group : family) std::sort(group.begin(), group.end());
  return out;
}

std::vector<Edge> family_edges(const PartitionFamily& partitions, std::size_t family) {
  std::vector<Edge> edges;
  for (const auto& group : partitions.families.at(family))
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b)
        edges.emplace_back(std::min(group[a], group[b]), std::max(group[a], group[b]));
  std::sort(edges.begin(), edges.end());
  return edges;
}

bool edge_disjoint(const PartitionFamily& partitions) {
  std::set<Edge> seen;
  std::size_t total = 0;
  for (std::size_t f = 0; f < 3; ++f) {
    const auto edges = family_edges(partitions, f);
    total += edges.size();
    seen.insert(edges.begin(), edges.end());
  }
  return seen.size() == total;
}

Certificate graph_certificate(const GraphMixtureModel& model, std::size_t m, double tol) {
  const std::size_t r = model.r();
  const std::size_t n = m * m;
  const Matrix small = conditional_graph_matrix(model, m);
  const std::size_t rank = numerical_rank(small, tol);
  const bool disjoint = edge_disjoint(lattice_partitions(m));

  auto saturating_power = [](std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
      if (base != 0 && out > std::numeric_limits<std::size_t>::max() / base) {
        return std::numeric_limits<std::size_t>::max() / 4;
      }
      out *= base;
    }
    return out;
  };

  Certificate cert;
  cert.mode = CertificateMode::ExactMatrix;
  const std::size_t full = saturating_power(r, n);
  cert.threshold = 2 * full + 2;
  // rank of an m-fold Kronecker power is rank^m
  const std::size_t lattice_rank = disjoint ? saturating_power(rank, m) : 0;
  cert.kruskal_ranks = {lattice_rank, lattice_rank, lattice_rank};
  cert.holds = disjoint && rank == saturating_power(r, m) && cert.rank_sum() >= cert.threshold;
  return cert;
}

double single_edge_marginal(const GraphMixtureModel& model, const NodeAssignment& states, Edge edge) {
  const auto [k, l] = edge;
  if (k == l || k >= states.size() || l >= states.size()) {
    throw Error(ErrorCode::BadEdge, "edge endpoints must be distinct nodes of the assignment");
  }
  if (states[k] >= model.r() || states[l] >= model.r()) {
    throw Error(ErrorCode::BadEdge, "node state out of range");
  }
  return model.p(states[k], states[l]);
}

namespace {

// Distinct values up to `tol`, in first-seen order.
void add_cluster(std::vector<double>& clusters, double value, double tol) {
  for (double c : clusters)
    if (std::abs(c - value) <= tol) return;
  clusters.push_back(value);
}

}  // namespace

GraphParameters extract_parameters(std::span<const double> permuted_prior, const EdgeOracle& oracle,
                                   std::size_t n, double tol) {
  if (n < 2 || n >= 8 * sizeof(std::size_t) - 1) {
    throw Error(ErrorCode::PreconditionFailed, "node count out of range");
  }
  const std::size_t rows = std::size_t{1} << n;
  if (permuted_prior.size() != rows) {
    throw Error(ErrorCode::DimensionMismatch, "prior vector must have 2^n entries");
  }
  const auto edges = complete_graph_edges(n);
  const auto [lo_it, hi_it] = std::minmax_element(permuted_prior.begin(), permuted_prior.end());
  const double vmin = *lo_it;
  const double vmax = *hi_it;
  if (!(vmin > 0.0)) throw Error(ErrorCode::InconsistentOracle, "prior entries must be positive");

  GraphParameters out;
  out.pi.resize(2);

  auto uniform_value = [&](std::size_t row) {
    const double first = oracle(row, edges.front());
    for (const Edge& e : edges)
      if (std::abs(oracle(row, e) - first) > tol) {
        throw Error(ErrorCode::InconsistentOracle, "homogeneous row has differing edge marginals");
      }
    return first;
  };

  if (vmax - vmin > tol * vmax) {
    const double pi1 = std::pow(vmin, 1.0 / static_cast<double>(n));
    const double pi2 = std::pow(vmax, 1.0 / static_cast<double>(n));
    if (std::abs(pi1 + pi2 - 1.0) > 1e-6) {
      throw Error(ErrorCode::InconsistentOracle, "extreme prior entries are not pi1^n and pi2^n");
    }
    out.pi << pi1, pi2;
    out.pi /= out.pi.sum();
    const auto all_one = static_cast<std::size_t>(lo_it - permuted_prior.begin());
    const auto all_two = static_cast<std::size_t>(hi_it - permuted_prior.begin());
    out.p11 = uniform_value(all_one);
    out.p22 = uniform_value(all_two);

    // A row with exactly one node in the heavier state.
    const double target = std::pow(out.pi(0), static_cast<double>(n - 1)) * out.pi(1);
    std::size_t deviant = rows;
    for (std::size_t s = 0; s < rows; ++s) {
      if (std::abs(permuted_prior[s] - target) <= 1e-9 * target) {
        deviant = s;
        break;
      }
    }
    if (deviant == rows) throw Error(ErrorCode::InconsistentOracle, "no single-deviant row found");

    std::vector<double> values;
    for (const Edge& e : edges) add_cluster(values, oracle(deviant, e), tol);
    std::vector<double> others;
    for (double v : values)
      if (std::abs(v - out.p11) > tol) others.push_back(v);
    if (others.empty()) throw Error(ErrorCode::NotDistinct, "p12 is indistinguishable from p11");
    if (others.size() > 1 || values.size() > 2) {
      throw Error(ErrorCode::InconsistentOracle, "single-deviant row shows more than two edge values");
    }
    out.p12 = others.front();
    if (std::abs(out.p11 - out.p22) <= tol || std::abs(out.p12 - out.p22) <= tol) {
      throw Error(ErrorCode::NotDistinct, "connection probabilities are not pairwise distinct");
    }
    return out;
  }

  // Equal mixing weights: every row has the same prior mass.
  out.pi << 0.5, 0.5;
  if (std::abs(vmin - std::pow(0.5, static_cast<double>(n))) > tol * vmin) {
    throw Error(ErrorCode::InconsistentOracle, "uniform prior entries are not 2^-n");
  }
  std::vector<double> all_values;
  std::vector<double> uniform_values;
  for (std::size_t s = 0; s < rows; ++s) {
    std::vector<double> row_values;
    for (const Edge& e : edges) {
      const double v = oracle(s, e);
      add_cluster(row_values, v, tol);
      add_cluster(all_values, v, tol);
    }
    if (row_values.size() == 1) add_cluster(uniform_values, row_values.front(), tol);
  }
  if (all_values.size() < 3) throw Error(ErrorCode::NotDistinct, "fewer than 3 distinct edge values");
  if (all_values.size() > 3) throw Error(ErrorCode::InconsistentOracle, "more than 3 distinct edge values");
  if (uniform_values.size() != 2) {
    throw Error(ErrorCode::InconsistentOracle, "expected exactly two homogeneous edge values");
  }
  std::sort(uniform_values.begin(), uniform_values.end());
  out.p11 = uniform_values[0];
  out.p22 = uniform_values[1];
  for (double v : all_values)
    if (std::abs(v - out.p11) > tol && std::abs(v - out.p22) > tol) out.p12 = v;
  return out;
}

double graph_parameter_error(const GraphParameters& recovered, const GraphMixtureModel& truth) {
  if (truth.r() != 2 || recovered.pi.size() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "graph parameter comparison needs r = 2");
  }
  auto err = [&](bool swap) {
    const Eigen::Index a = swap ? 1 : 0;
    const Eigen::Index b = swap ? 0 : 1;
    double worst = std::abs(recovered.pi(0) - truth.pi()(a));
    worst = std::max(worst, std::abs(recovered.pi(1) - truth.pi()(b)));
    worst = std::max(worst, std::abs(recovered.p11 - truth.connection()(a, a)));
    worst = std::max(worst, std::abs(recovered.p12 - truth.connection()(a, b)));
    worst = std::max(worst, std::abs(recovered.p22 - truth.connection()(b, b)));
    return worst;
  };
  return std::min(err(false), err(true));
}

}  // namespace latentid
