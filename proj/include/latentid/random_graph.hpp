#pragma once

// Random graph mixtures: each node draws a hidden state from pi, and edge
// {k,l} is present independently with probability P(z_k, z_l).
//
// Conventions: nodes are 0-based. Node-state assignments are indexed in
// mixed radix with node 0 as the most significant digit. Edges of K_m are
// ordered lexicographically, (0,1), (0,2), ..., and a subgraph is the bitmask
// with edge (0,1) as the least significant bit.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "latentid/latent_class.hpp"
#include "latentid/tensor_core.hpp"

namespace latentid {

class GraphMixtureModel {
 public:
  /// connection must be symmetric with entries in [0, 1].
  static GraphMixtureModel make(Vector pi, Matrix connection);

  std::size_t r() const noexcept { return static_cast<std::size_t>(pi_.size()); }
  const Vector& pi() const noexcept { return pi_; }
  const Matrix& connection() const noexcept { return connection_; }
  double p(std::size_t a, std::size_t b) const {
    return connection_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }

 private:
  GraphMixtureModel(Vector pi, Matrix connection) : pi_(std::move(pi)), connection_(std::move(connection)) {}

  Vector pi_;
  Matrix connection_;
};

using Edge = std::pair<std::size_t, std::size_t>;
using NodeAssignment = std::vector<std::size_t>;

/// Three partitions of the m*m grid nodes into m groups of m: rows, columns
/// and wrapped diagonals. Node (i, j) has label i*m + j.
struct PartitionFamily {
  std::size_t m = 0;
  std::array<std::vector<std::vector<std::size_t>>, 3> families;

  std::size_t node_count() const noexcept { return m * m; }
};

/// Lexicographic edge list of the complete graph on `nodes` nodes.
std::vector<Edge> complete_graph_edges(std::size_t nodes);

/// Entry for assignment I is prod_k pi_{i_k}; length r^n.
Vector node_state_prior(const Vector& pi, std::size_t n, std::size_t entry_cap = kEntryCap);

NodeAssignment assignment_from_index(std::size_t index, std::size_t r, std::size_t n);

/// r^m x 2^C(m,2) matrix of subgraph probabilities given node states.
Matrix conditional_graph_matrix(const GraphMixtureModel& model, std::size_t m,
                                std::size_t entry_cap = kEntryCap);

PartitionFamily lattice_partitions(std::size_t m);

/// Edge set of the union of complete graphs on the groups of one family.
std::vector<Edge> family_edges(const PartitionFamily& partitions, std::size_t family);

/// True when the three implied subgraphs share no edge.
bool edge_disjoint(const PartitionFamily& partitions);

/// Holds iff the lattice subgraphs are edge-disjoint and the m-node matrix
/// has full row rank r^m; the n = m^2 node matrices B_i are then m-fold
/// Kronecker powers of it and have rank r^n, which is reported as each I_i.
Certificate graph_certificate(const GraphMixtureModel& model, std::size_t m, double tol = kRankTol);

/// Marginal probability that edge (k, l) is present given the node states.
double single_edge_marginal(const GraphMixtureModel& model, const NodeAssignment& states, Edge edge);

/// Answers P(edge present | node-state row) for a row of a permuted B_i.
using EdgeOracle = std::function<double(std::size_t row, Edge edge)>;

struct GraphParameters {
  Vector pi;  // (pi_1, pi_2), pi_1 <= pi_2 when they differ
  double p11 = 0.0;
  double p12 = 0.0;
  double p22 = 0.0;
};

/// Reads off (pi, p11, p12, p22) for r = 2 from the node-state prior in an
/// unknown row order and single-edge marginals of the matching rows.
GraphParameters extract_parameters(std::span<const double> permuted_prior, const EdgeOracle& oracle,
                                   std::size_t n, double tol = 1e-9);

/// Max-abs difference after the better of the two labelings.
double graph_parameter_error(const GraphParameters& recovered, const GraphMixtureModel& truth);

}  // namespace latentid
