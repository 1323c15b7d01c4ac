#pragma once

// Random model generators and deterministic seed splitting for the
// simulation harness and the tests.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

#include "latentid/hmm.hpp"
#include "latentid/latent_class.hpp"
#include "latentid/nonparametric.hpp"
#include "latentid/random_graph.hpp"
#include "latentid/tensor_core.hpp"

namespace latentid {

using Rng = std::mt19937_64;

/// Per-trial seed: splitmix64 of master + (index + 1) * golden gamma, so
/// each trial's stream depends only on (master, index).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index);

/// Independent uniform(0,1) entries, each row renormalized to sum 1.
Matrix random_stochastic(std::size_t rows, std::size_t cols, Rng& rng);
Vector random_probability_vector(std::size_t size, Rng& rng);

LatentClassModel random_latent_class(std::size_t r, std::span<const std::size_t> kappas, Rng& rng);
/// Redraws until A and B both have sigma_min / sigma_1 >= min_relative_sv
/// (0 accepts every draw).
HiddenMarkovModel random_hmm(std::size_t r, std::size_t kappa, Rng& rng, double min_relative_sv = 0.0);

/// r = 2 graph mixture with p11, p12, p22 drawn uniform and separated by at
/// least `min_gap`; equal_mixing forces pi = (1/2, 1/2).
GraphMixtureModel random_graph_mixture(bool equal_mixing, Rng& rng, double min_gap = 0.05);

/// Piecewise-linear CDF on knots 0, 1, ..., intervals with random interval
/// masses.
CdfTable random_univariate_cdf(std::size_t intervals, Rng& rng);

/// Mixture whose variate j has dimension block_dims[j]. Univariate components
/// are random piecewise-linear CDFs; block components are two-term mixtures
/// of products of those, so they are not product laws themselves.
NonparametricMixture random_piecewise_mixture(std::size_t r, std::span<const std::size_t> block_dims,
                                              std::size_t intervals, Rng& rng);

}  // namespace latentid
