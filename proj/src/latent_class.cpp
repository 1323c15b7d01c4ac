#include "latentid/latent_class.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace latentid {

LatentClassModel LatentClassModel::make(Vector pi, std::vector<Matrix> emissions) {
  if (emissions.empty()) throw Error(ErrorCode::InvalidModel, "model needs at least one variable");
  if (pi.size() < 1) throw Error(ErrorCode::InvalidModel, "model needs at least one class");
  require_probability_vector(pi, "pi");
  if (pi.minCoeff() <= kMinClassWeight) {
    throw Error(ErrorCode::InvalidModel, "class weights must exceed 1e-12");
  }
  for (std::size_t j = 0; j < emissions.size(); ++j) {
    const Matrix& m = emissions[j];
    if (m.rows() != pi.size()) {
      throw Error(ErrorCode::MismatchedRows,
                  "emission " + std::to_string(j) + " row count differs from class count");
    }
    if (m.cols() < 2) {
      throw Error(ErrorCode::InvalidModel, "emission " + std::to_string(j) + " needs >= 2 states");
    }
    require_stochastic(m, "emission matrix");
  }
  return LatentClassModel(std::move(pi), std::move(emissions));
}

std::vector<std::size_t> LatentClassModel::kappas() const {
  std::vector<std::size_t> out;
  out.reserve(emissions_.size());
  for (const Matrix& m : emissions_) out.push_back(static_cast<std::size_t>(m.cols()));
  return out;
}

std::string_view to_string(CertificateMode mode) {
  return mode == CertificateMode::ExactMatrix ? "exact-matrix" : "generic-dimension";
}

TensorP joint_distribution(const LatentClassModel& model, std::size_t entry_cap) {
  const auto kappas = model.kappas();
  checked_product(kappas, entry_cap);
  // Row i of the row tensor product is the conditional joint law given Z = i.
  const Matrix conditional = khatri_rao(model.emissions());
  const Vector joint = conditional.transpose() * model.pi();
  return TensorP(kappas, std::vector<double>(joint.data(), joint.data() + joint.size()));
}

Certificate kruskal_certificate(const LatentClassModel& model, double tol) {
  if (model.p() != 3) {
    throw Error(ErrorCode::NotThreeVariables,
                "kruskal_certificate needs exactly 3 variables, got " + std::to_string(model.p()));
  }
  Certificate cert;
  cert.mode = CertificateMode::ExactMatrix;
  cert.threshold = 2 * model.r() + 2;
  for (std::size_t j = 0; j < 3; ++j) cert.kruskal_ranks[j] = kruskal_rank(model.emission(j), tol);
  cert.holds = cert.rank_sum() >= cert.threshold;
  return cert;
}

LatentClassModel clump_model(const LatentClassModel& model, const Tripartition& tripartition) {
  const auto kappas = model.kappas();
  const Tripartition part = make_tripartition(tripartition.blocks, kappas);
  std::vector<Matrix> clumped;
  for (const auto& block : part.blocks) {
    std::vector<Matrix> factors;
    for (std::size_t j : block) factors.push_back(model.emission(j));
    clumped.push_back(khatri_rao(factors));
  }
  return LatentClassModel::make(model.pi(), std::move(clumped));
}

Certificate clumped_kruskal_certificate(const LatentClassModel& model,
                                        const Tripartition& tripartition, double tol) {
  const Tripartition part = make_tripartition(tripartition.blocks, model.kappas());
  Certificate cert = kruskal_certificate(clump_model(model, part), tol);
  cert.witness = part;
  return cert;
}

namespace {

std::size_t generic_rank_sum(std::size_t r, const std::array<std::size_t, 3>& dims) {
  return std::min(r, dims[0]) + std::min(r, dims[1]) + std::min(r, dims[2]);
}

// Saturating product so huge blocks compare correctly against r.
std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

struct SearchBest {
  std::size_t score = 0;
  std::array<std::vector<std::size_t>, 3> blocks;
  std::array<std::size_t, 3> dims{0, 0, 0};
  bool found = false;
};

// Restricted growth strings over labels {0,1,2}: each unordered
// tripartition is visited exactly once, in lexicographic order.
void enumerate_partitions(std::size_t r, std::span<const std::size_t> kappas,
                          std::vector<int>& labels, std::size_t pos, int max_label,
                          SearchBest& best) {
  const std::size_t p = kappas.size();
  if (pos == p) {
    if (max_label != 2) return;
    std::array<std::size_t, 3> dims{1, 1, 1};
    for (std::size_t j = 0; j < p; ++j)
      dims[static_cast<std::size_t>(labels[j])] = saturating_mul(dims[static_cast<std::size_t>(labels[j])], kappas[j]);
    const std::size_t score = generic_rank_sum(r, dims);
    if (!best.found || score > best.score) {
      best.found = true;
      best.score = score;
      best.dims = dims;
      for (auto& b : best.blocks) b.clear();
      for (std::size_t j = 0; j < p; ++j) best.blocks[static_cast<std::size_t>(labels[j])].push_back(j);
    }
    return;
  }
  // Not enough variables left to open the remaining blocks.
  if (static_cast<int>(p - pos) < 2 - max_label) return;
  for (int label = 0; label <= std::min(max_label + 1, 2); ++label) {
    labels[pos] = label;
    enumerate_partitions(r, kappas, labels, pos + 1, std::max(max_label, label), best);
  }
}

// Fills the first two blocks until each reaches r states (largest state
// counts first), the third takes the rest; then compares with a balanced
// log-product split and keeps the better one.
SearchBest heuristic_partition(std::size_t r, std::span<const std::size_t> kappas) {
  const std::size_t p = kappas.size();
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return kappas[a] > kappas[b]; });

  auto evaluate = [&](const std::vector<int>& labels) {
    SearchBest out;
    out.found = true;
    out.dims = {1, 1, 1};
    for (std::size_t j = 0; j < p; ++j) {
      auto b = static_cast<std::size_t>(labels[j]);
      out.dims[b] = saturating_mul(out.dims[b], kappas[j]);
      out.blocks[b].push_back(j);
    }
    out.score = generic_rank_sum(r, out.dims);
    return out;
  };

  std::vector<int> fill(p, 2);
  {
    std::array<std::size_t, 2> dims{1, 1};
    std::size_t idx = 0;
    for (int b = 0; b < 2; ++b) {
      // keep at least one variable per remaining block
      while (idx < p - static_cast<std::size_t>(2 - b) && dims[static_cast<std::size_t>(b)] < r) {
        fill[order[idx]] = b;
        dims[static_cast<std::size_t>(b)] = saturating_mul(dims[static_cast<std::size_t>(b)], kappas[order[idx]]);
        ++idx;
      }
      if (dims[static_cast<std::size_t>(b)] == 1) fill[order[idx++]] = b;
    }
  }

  std::vector<int> balanced(p, 0);
  {
    std::array<double, 3> logs{0.0, 0.0, 0.0};
    for (std::size_t idx = 0; idx < p; ++idx) {
      const auto b = static_cast<std::size_t>(std::min_element(logs.begin(), logs.end()) - logs.begin());
      balanced[order[idx]] = static_cast<int>(b);
      logs[b] += std::log(static_cast<double>(kappas[order[idx]]));
    }
  }

  SearchBest a = evaluate(fill);
  SearchBest b = evaluate(balanced);
  return b.score > a.score ? b : a;
}

}  // namespace

Certificate tripartition_search(std::size_t r, std::span<const std::size_t> kappas) {
  if (kappas.size() < 3) {
    throw Error(ErrorCode::TooFewVariables, "tripartition_search needs at least 3 variables");
  }
  if (r < 1) throw Error(ErrorCode::InvalidModel, "r must be positive");
  for (std::size_t k : kappas)
    if (k < 2) throw Error(ErrorCode::InvalidModel, "every variable needs >= 2 states");

  SearchBest best;
  Certificate cert;
  cert.mode = CertificateMode::GenericDimension;
  cert.threshold = 2 * r + 2;
  if (kappas.size() <= kExhaustiveTripartitionLimit) {
    std::vector<int> labels(kappas.size(), 0);
    enumerate_partitions(r, kappas, labels, 0, -1, best);
  } else {
    best = heuristic_partition(r, kappas);
    cert.exhaustive = false;
  }
  for (std::size_t b = 0; b < 3; ++b) cert.kruskal_ranks[b] = std::min(r, best.dims[b]);
  Tripartition witness;
  witness.blocks = best.blocks;
  witness.clumped_dims = best.dims;
  cert.witness = std::move(witness);
  cert.holds = cert.rank_sum() >= cert.threshold;
  return cert;
}

std::size_t min_variables_bound(std::size_t r, std::size_t kappa) {
  if (r < 1 || kappa < 2) throw Error(ErrorCode::InvalidModel, "min_variables_bound needs r >= 1, kappa >= 2");
  // integer ceil(log_kappa r)
  std::size_t exponent = 0;
  std::size_t power = 1;
  while (power < r) {
    power = saturating_mul(power, kappa);
    ++exponent;
  }
  return 2 * exponent + 1;
}

ParamDimension param_dimension(std::size_t r, std::span<const std::size_t> kappas) {
  if (r < 1 || kappas.empty()) throw Error(ErrorCode::InvalidModel, "param_dimension needs r >= 1, p >= 1");
  ParamDimension out;
  std::uint64_t state_sum = 0;
  std::uint64_t table = 1;
  for (std::size_t k : kappas) {
    if (k < 1) throw Error(ErrorCode::InvalidModel, "state counts must be positive");
    state_sum += k - 1;
    if (table > std::numeric_limits<std::uint64_t>::max() / k) {
      throw Error(ErrorCode::TooLarge, "table size overflows 64 bits");
    }
    table *= k;
  }
  out.free_parameters = (r - 1) + r * state_sum;
  out.table_size = table;
  return out;
}

}  // namespace latentid
