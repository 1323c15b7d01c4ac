#include "latentid/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "latentid/model_io.hpp"
#include "latentid/simulation.hpp"

namespace latentid::cli {

namespace {

constexpr const char* kKruskalAnchor = "Kruskal condition, I1+I2+I3 >= 2r+2";

struct Common {
  std::string model;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  bool json = false;
};

struct Outcome {
  int code = 0;
  json result = json::object();
  std::string text;
};

template <typename T>
T load_as(const std::string& path, const char* kind) {
  if (path.empty()) throw Error(ErrorCode::ParseError, "--model is required");
  AnyModel any = load_model(path);
  if (auto* model = std::get_if<T>(&any)) return std::move(*model);
  throw Error(ErrorCode::InvalidModel, std::string("model file is not a ") + kind + " model");
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

std::string format_matrix(const Matrix& m, const std::string& indent = "  ") {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << indent;
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << std::setw(14) << fmt(m(i, c));
    os << '\n';
  }
  return os.str();
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << fmt(v(i));
  os << ')';
  return os.str();
}

std::string format_blocks(const Tripartition& t) {
  std::ostringstream os;
  for (std::size_t b = 0; b < 3; ++b) {
    os << (b ? " " : "") << '{';
    for (std::size_t q = 0; q < t.blocks[b].size(); ++q) os << (q ? "," : "") << t.blocks[b][q] + 1;
    os << '}';
  }
  return os.str();
}

json certificate_json(const Certificate& c) {
  json out{{"holds", c.holds},
           {"mode", std::string(to_string(c.mode))},
           {"kruskal_ranks", c.kruskal_ranks},
           {"rank_sum", c.rank_sum()},
           {"threshold", c.threshold},
           {"exhaustive", c.exhaustive}};
  if (c.witness) {
    out["tripartition"] = c.witness->blocks;
    out["clumped_dims"] = c.witness->clumped_dims;
  }
  out["status"] = c.holds ? "certified" : (c.inconclusive() ? "unknown" : "no certificate");
  return out;
}

std::string certificate_text(const Certificate& c, const std::string& label) {
  std::ostringstream os;
  if (c.holds) {
    os << label << ": certified (" << to_string(c.mode) << ")\n";
  } else if (c.inconclusive()) {
    os << label << ": unknown (heuristic search found no certificate)\n";
  } else {
    os << label << ": no certificate\n";
  }
  os << kKruskalAnchor << ": " << c.kruskal_ranks[0] << "+" << c.kruskal_ranks[1] << "+" << c.kruskal_ranks[2]
     << " = " << c.rank_sum() << (c.rank_sum() >= c.threshold ? " >= " : " < ") << c.threshold << '\n';
  if (c.witness) {
    os << "tripartition: " << format_blocks(*c.witness) << "  clumped dims " << c.witness->clumped_dims[0] << "x"
       << c.witness->clumped_dims[1] << "x" << c.witness->clumped_dims[2] << '\n';
  }
  return os.str();
}

Tripartition parse_tripartition(const std::string& spec, std::span<const std::size_t> kappas) {
  std::array<std::vector<std::size_t>, 3> blocks;
  std::size_t b = 0;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '|')) {
    if (b >= 3) throw Error(ErrorCode::BadPartition, "tripartition needs exactly three blocks");
    std::stringstream ps(part);
    std::string item;
    while (std::getline(ps, item, ',')) {
      try {
        const long v = std::stol(item);
        if (v < 1) throw Error(ErrorCode::BadPartition, "variables are numbered from 1");
        blocks[b].push_back(static_cast<std::size_t>(v - 1));
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::BadPartition, "cannot parse tripartition \"" + spec + "\"");
      }
    }
    ++b;
  }
  if (b != 3) throw Error(ErrorCode::BadPartition, "tripartition needs exactly three blocks");
  return make_tripartition(std::move(blocks), kappas);
}

// --- latent class -------------------------------------------------------------

Outcome certify_lc(const Common& c) {
  const auto model = load_as<LatentClassModel>(c.model, "latent-class");
  Certificate cert;
  if (model.p() == 3) {
    cert = kruskal_certificate(model);
  } else {
    const auto kappas = model.kappas();
    const Certificate generic = tripartition_search(model.r(), kappas);
    if (!generic.witness) throw Error(ErrorCode::TooFewVariables, "no tripartition exists");
    cert = clumped_kruskal_certificate(model, *generic.witness);
  }
  Outcome o;
  o.code = cert.holds ? 0 : 1;
  o.result = certificate_json(cert);
  o.result["r"] = model.r();
  o.result["kappas"] = model.kappas();
  o.text = "latent-class model r=" + std::to_string(model.r()) + ", p=" + std::to_string(model.p()) + "\n" +
           certificate_text(cert, "identifiability");
  return o;
}

Outcome search(std::size_t r, const std::vector<std::size_t>& kappas) {
  const Certificate cert = tripartition_search(r, kappas);
  const ParamDimension dim = param_dimension(r, kappas);
  Outcome o;
  o.code = cert.holds ? 0 : 1;
  o.result = certificate_json(cert);
  o.result["r"] = r;
  o.result["kappas"] = kappas;
  o.result["free_parameters"] = dim.free_parameters;
  o.result["table_size"] = dim.table_size;
  o.text = certificate_text(cert, "generic identifiability") + "free parameters " +
           std::to_string(dim.free_parameters) + ", table size " + std::to_string(dim.table_size) + "\n";
  return o;
}

Outcome bound(std::size_t r, std::size_t kappa) {
  const std::size_t p = min_variables_bound(r, kappa);
  Outcome o;
  o.result = json{{"r", r}, {"kappa", kappa}, {"min_variables", p}};
  o.text = std::to_string(p) + "\n";
  return o;
}

Outcome recover_lc(const Common& c, const std::string& tripartition_spec) {
  const auto model = load_as<LatentClassModel>(c.model, "latent-class");
  const auto kappas = model.kappas();
  Tripartition t;
  if (tripartition_spec.empty()) {
    auto found = find_recoverable_tripartition(model.r(), kappas);
    if (!found) {
      throw Error(ErrorCode::PreconditionFailed, "no tripartition gives two clumped variables with r states");
    }
    t = *found;
  } else {
    t = parse_tripartition(tripartition_spec, kappas);
  }
  DecomposeOptions options;
  options.seed = c.seed;
  options.tol = c.tol;
  const RecoveredModel rec = recover_latent_class(joint_distribution(model), model.r(), t, options);
  const Alignment align = align_permutation(rec.pi, rec.emissions, model.pi(), model.emissions());

  Outcome o;
  json emissions = json::array();
  for (const Matrix& m : rec.emissions) emissions.push_back(matrix_to_rows(m));
  o.result = json{{"tripartition", t.blocks},
                  {"pi", vector_to_json(rec.pi)},
                  {"emissions", emissions},
                  {"residual", rec.residual},
                  {"retries", rec.retries_used},
                  {"alignment", {{"permutation", align.permutation}, {"max_abs_error", align.max_abs_error}}},
                  {"seed", c.seed}};
  std::ostringstream os;
  os << "recovered via tripartition " << format_blocks(t) << "\n";
  os << "pi = " << format_vector(rec.pi) << "\n";
  for (std::size_t j = 0; j < rec.emissions.size(); ++j) os << "M" << j + 1 << ":\n" << format_matrix(rec.emissions[j]);
  os << "reconstruction residual " << fmt(rec.residual) << ", alignment error " << fmt(align.max_abs_error) << "\n";
  o.text = os.str();
  return o;
}

// --- hmm ----------------------------------------------------------------------

std::size_t window_k(std::size_t r, std::size_t kappa, std::size_t k) {
  if (k > 0) return k;
  return std::max<std::size_t>(1, min_window(r, kappa));
}

Outcome hmm_window(std::size_t r, std::size_t kappa) {
  const std::size_t k = min_window(r, kappa);
  Outcome o;
  o.result = json{{"r", r}, {"kappa", kappa}, {"k", k}, {"window", 2 * k + 1}};
  o.text = "k=" + std::to_string(k) + ", window " + std::to_string(2 * k + 1) + "\n";
  return o;
}

Outcome hmm_certify(const Common& c, std::size_t k_opt) {
  const auto hmm = load_as<HiddenMarkovModel>(c.model, "hmm");
  const std::size_t k = window_k(hmm.r(), hmm.kappa(), k_opt);
  const Certificate cert = hmm_certificate(hmm, k);
  Outcome o;
  o.code = cert.holds ? 0 : 1;
  o.result = certificate_json(cert);
  o.result["k"] = k;
  o.result["window"] = 2 * k + 1;
  o.text = "hmm r=" + std::to_string(hmm.r()) + ", kappa=" + std::to_string(hmm.kappa()) + ", k=" +
           std::to_string(k) + " (window " + std::to_string(2 * k + 1) + ")\n" +
           certificate_text(cert, "identifiability");
  return o;
}

Outcome hmm_recover(const Common& c, std::size_t k_opt) {
  const auto hmm = load_as<HiddenMarkovModel>(c.model, "hmm");
  const std::size_t k = window_k(hmm.r(), hmm.kappa(), k_opt);
  DecomposeOptions options;
  options.seed = c.seed;
  options.tol = c.tol;
  const RecoveredHmm rec = recover_hmm(window_tensor(hmm, k), hmm.r(), hmm.kappa(), k, options);
  const Alignment align = align_hmm(rec, hmm);
  Outcome o;
  o.result = json{{"k", k},
                  {"A", matrix_to_rows(rec.transition)},
                  {"B", matrix_to_rows(rec.emission)},
                  {"pi", vector_to_json(rec.stationary)},
                  {"residual", rec.residual},
                  {"solve_residual", rec.solve_residual},
                  {"retries", rec.retries_used},
                  {"alignment", {{"permutation", align.permutation}, {"max_abs_error", align.max_abs_error}}},
                  {"seed", c.seed}};
  std::ostringstream os;
  os << "recovered from window " << 2 * k + 1 << "\nA:\n"
     << format_matrix(rec.transition) << "B:\n"
     << format_matrix(rec.emission) << "pi = " << format_vector(rec.stationary) << "\n"
     << "reconstruction residual " << fmt(rec.residual) << ", solve residual " << fmt(rec.solve_residual)
     << ", alignment error " << fmt(align.max_abs_error) << "\n";
  o.text = os.str();
  return o;
}

// --- random graphs ------------------------------------------------------------

Outcome graph_certify(const Common& c, std::size_t m) {
  const auto model = load_as<GraphMixtureModel>(c.model, "graph-mixture");
  const Certificate cert = graph_certificate(model, m);
  Outcome o;
  o.code = cert.holds ? 0 : 1;
  o.result = certificate_json(cert);
  o.result["m"] = m;
  o.result["nodes"] = m * m;
  o.text = "graph mixture r=" + std::to_string(model.r()) + ", lattice m=" + std::to_string(m) + " (" +
           std::to_string(m * m) + " nodes)\n" + certificate_text(cert, "identifiability");
  return o;
}

struct HiddenGraphInstance {
  std::vector<double> prior;
  std::vector<std::size_t> row_to_assignment;
};

HiddenGraphInstance hide_assignments(const GraphMixtureModel& model, std::size_t n, std::uint64_t seed) {
  const Vector prior = node_state_prior(model.pi(), n);
  HiddenGraphInstance h;
  h.row_to_assignment.resize(static_cast<std::size_t>(prior.size()));
  std::iota(h.row_to_assignment.begin(), h.row_to_assignment.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(h.row_to_assignment.begin(), h.row_to_assignment.end(), rng);
  for (std::size_t row : h.row_to_assignment) h.prior.push_back(prior(static_cast<Eigen::Index>(row)));
  return h;
}

GraphParameters extract_hidden(const GraphMixtureModel& model, std::size_t n, std::uint64_t seed) {
  if (model.r() != 2) throw Error(ErrorCode::PreconditionFailed, "parameter extraction needs r = 2");
  const HiddenGraphInstance h = hide_assignments(model, n, seed);
  const EdgeOracle oracle = [&](std::size_t row, Edge e) {
    return single_edge_marginal(model, assignment_from_index(h.row_to_assignment.at(row), 2, n), e);
  };
  return extract_parameters(h.prior, oracle, n);
}

Outcome graph_extract(const Common& c, std::size_t n) {
  const auto model = load_as<GraphMixtureModel>(c.model, "graph-mixture");
  const GraphParameters got = extract_hidden(model, n, c.seed);
  const double err = graph_parameter_error(got, model);
  Outcome o;
  o.code = err <= c.tol ? 0 : 1;
  o.result = json{{"n", n},       {"pi", vector_to_json(got.pi)}, {"p11", got.p11}, {"p12", got.p12},
                  {"p22", got.p22}, {"max_abs_error", err},       {"seed", c.seed}};
  o.text = "extracted from " + std::to_string(n) + "-node marginals with hidden row order\npi = " +
           format_vector(got.pi) + "\np11 = " + fmt(got.p11) + ", p12 = " + fmt(got.p12) + ", p22 = " + fmt(got.p22) +
           "\nerror up to label swap " + fmt(err) + "\n";
  return o;
}

// --- nonparametric ------------------------------------------------------------

json cuts_json(const CutPointSet& cuts) { return json{{"axes", cuts.axes}, {"kappa", cuts.kappa()}}; }

Outcome nonparam_cuts(const Common& c) {
  const auto mixture = load_as<NonparametricMixture>(c.model, "nonparametric");
  std::vector<CutPointSet> cuts;
  std::vector<std::vector<CdfTable>> variates;
  Outcome o;
  o.result["variates"] = json::array();
  std::ostringstream os;
  for (std::size_t j = 0; j < mixture.p(); ++j) {
    variates.push_back(mixture.variate(j));
    const auto grid = default_candidate_grid(variates.back());
    cuts.push_back(select_cut_points(variates.back(), {}, grid));
    o.result["variates"].push_back(cuts_json(cuts.back()));
    os << "variate " << j + 1 << ": kappa " << cuts.back().kappa() << ", cuts";
    for (const auto& axis : cuts.back().axes) {
      os << " [";
      for (std::size_t q = 0; q < axis.size(); ++q) os << (q ? " " : "") << fmt(axis[q]);
      os << "]";
    }
    os << '\n';
  }
  json ranks = json::array();
  for (std::size_t j = 0; j + 1 < mixture.p(); ++j) {
    const std::size_t rank = bivariate_rank(mixture.pi(), variates[j], variates[j + 1], cuts[j], cuts[j + 1]);
    ranks.push_back({{"variates", {j, j + 1}}, {"rank", rank}});
    os << "bivariate rank of variates " << j + 1 << "," << j + 2 << ": " << rank << '\n';
  }
  o.result["bivariate_ranks"] = ranks;
  o.text = os.str();
  return o;
}

Outcome nonparam_recover(const Common& c, std::size_t queries) {
  const auto mixture = load_as<NonparametricMixture>(c.model, "nonparametric");
  const auto points = default_query_points(mixture, queries);
  MixtureRecoveryOptions options;
  options.decompose.seed = c.seed;
  options.decompose.tol = c.tol;
  const MixtureRecovery rec = recover_mixture(mixture, points, options);
  const Alignment align = align_mixture(rec, mixture, points);
  Outcome o;
  json cdfs = json::array();
  for (const Matrix& m : rec.cdf_values) cdfs.push_back(matrix_to_rows(m));
  json cuts = json::array();
  for (const CutPointSet& s : rec.cuts) cuts.push_back(cuts_json(s));
  o.result = json{{"pi", vector_to_json(rec.pi)},
                  {"query_points", points},
                  {"cdf_values", cdfs},
                  {"cuts", cuts},
                  {"chaining", rec.chaining},
                  {"residual", rec.max_residual},
                  {"alignment", {{"permutation", align.permutation}, {"max_abs_error", align.max_abs_error}}},
                  {"seed", c.seed}};
  std::ostringstream os;
  os << "pi = " << format_vector(rec.pi) << "\n";
  for (std::size_t j = 0; j < rec.cdf_values.size(); ++j)
    os << "variate " << j + 1 << " CDFs at " << points[j].size() << " query points:\n" << format_matrix(rec.cdf_values[j]);
  os << "max residual " << fmt(rec.max_residual) << ", alignment error " << fmt(align.max_abs_error) << "\n";
  o.text = os.str();
  return o;
}

// --- simulation ---------------------------------------------------------------

struct SimConfig {
  std::string family;
  std::size_t trials = 100;
  std::size_t r = 3;
  std::vector<std::size_t> kappas{3, 3, 3};
  std::size_t kappa = 2;
  std::size_t k = 1;
  std::size_t n = 4;
  std::size_t threads = 1;
};

struct TrialResult {
  std::uint64_t seed = 0;
  bool ok = false;
  bool threw = false;
  double error = 0.0;
  std::string message;
};

double run_trial(const SimConfig& cfg, std::uint64_t seed, std::size_t index, double tol) {
  Rng rng(seed);
  DecomposeOptions options;
  options.seed = seed;
  options.tol = tol;
  if (cfg.family == "latent-class") {
    const auto model = random_latent_class(cfg.r, cfg.kappas, rng);
    auto t = find_recoverable_tripartition(cfg.r, cfg.kappas);
    if (!t) throw Error(ErrorCode::PreconditionFailed, "no recoverable tripartition");
    const RecoveredModel rec = recover_latent_class(joint_distribution(model), cfg.r, *t, options);
    return align_permutation(rec.pi, rec.emissions, model.pi(), model.emissions()).max_abs_error;
  }
  if (cfg.family == "hmm") {
    const auto hmm = random_hmm(cfg.r, cfg.kappa, rng);
    const RecoveredHmm rec = recover_hmm(window_tensor(hmm, cfg.k), cfg.r, cfg.kappa, cfg.k, options);
    return align_hmm(rec, hmm).max_abs_error;
  }
  // graph-extract: even trials use equal mixing weights.
  const auto model = random_graph_mixture(index % 2 == 0, rng);
  return graph_parameter_error(extract_hidden(model, cfg.n, seed), model);
}

Outcome simulate(const Common& c, const SimConfig& cfg) {
  if (cfg.trials < 1) throw Error(ErrorCode::PreconditionFailed, "--trials must be at least 1");
  std::vector<TrialResult> results(cfg.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.trials; i = next++) {
      TrialResult& res = results[i];
      res.seed = trial_seed(c.seed, i);
      try {
        res.error = run_trial(cfg, res.seed, i, c.tol);
        res.ok = res.error <= c.tol;
        if (!res.ok) res.message = "alignment error above tolerance";
      } catch (const Error& e) {
        res.ok = false;
        res.threw = true;
        res.message = std::string(to_string(e.code())) + ": " + e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.trials);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::size_t failures = 0;
  double max_error = 0.0;
  json trials = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const TrialResult& res = results[i];
    if (!res.ok) ++failures;
    if (!res.threw) max_error = std::max(max_error, res.error);
    json entry{{"trial", i}, {"seed", res.seed}, {"ok", res.ok}, {"error", res.error}};
    if (!res.message.empty()) entry["message"] = res.message;
    trials.push_back(entry);
  }
  Outcome o;
  o.code = failures == 0 ? 0 : 1;
  o.result = json{{"family", cfg.family}, {"trials", cfg.trials}, {"failures", failures},
                  {"max_error", max_error}, {"seed", c.seed},       {"per_trial", trials}};
  std::ostringstream os;
  os << cfg.family << ": " << cfg.trials << " trials, " << failures << " failures, max alignment error "
     << fmt(max_error) << "\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    if (!results[i].ok) os << "  trial " << i << " (seed " << results[i].seed << "): " << results[i].message << "\n";
  o.text = os.str();
  return o;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotKhatriRao:
    case ErrorCode::PreconditionFailed:
    case ErrorCode::DegenerateSpectrum:
    case ErrorCode::RankDeficient:
    case ErrorCode::NegativeWeights:
    case ErrorCode::ReconstructionFailed:
    case ErrorCode::IllConditioned:
    case ErrorCode::InconsistentOracle:
    case ErrorCode::NotDistinct:
    case ErrorCode::GridExhausted:
    case ErrorCode::AmbiguousChaining:
      return 1;
    default:
      return 2;
  }
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identifiability certificates and exact-moment recovery for latent structure models", "latentid"};
  app.require_subcommand(1);

  Common common;
  SimConfig sim;
  std::size_t r = 0, kappa = 0, k = 0, m = 4, n = 4, queries = 20;
  std::vector<std::size_t> kappas;
  std::string tripartition;

  auto add_common = [&](CLI::App* sub, bool needs_model) {
    if (needs_model) sub->add_option("--model", common.model, "model file (JSON)")->required();
    sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
    sub->add_option("--tol", common.tol, "numerical tolerance")->capture_default_str();
    sub->add_flag("--json", common.json, "write a JSON report");
  };

  auto* certify_lc_cmd = app.add_subcommand("certify-lc", "Kruskal certificate for a latent-class model");
  add_common(certify_lc_cmd, true);

  auto* search_cmd = app.add_subcommand("search-tripartition", "generic certificate from state counts");
  add_common(search_cmd, false);
  search_cmd->add_option("--r", r, "number of classes")->required()->check(CLI::PositiveNumber);
  search_cmd->add_option("--kappas", kappas, "state counts, comma separated")->required()->delimiter(',');

  auto* bound_cmd = app.add_subcommand("bound", "variables needed for generic identifiability");
  add_common(bound_cmd, false);
  bound_cmd->add_option("--r", r, "number of classes")->required()->check(CLI::PositiveNumber);
  bound_cmd->add_option("--kappa", kappa, "states per variable")->required()->check(CLI::Range(2, 1 << 20));

  auto* recover_lc_cmd = app.add_subcommand("recover-lc", "recover a latent-class model from its joint law");
  add_common(recover_lc_cmd, true);
  recover_lc_cmd->add_option("--tripartition", tripartition, "blocks as 1,2|3,4|5 (1-based)");

  auto* hmm_window_cmd = app.add_subcommand("hmm-window", "smallest window for an HMM certificate");
  add_common(hmm_window_cmd, false);
  hmm_window_cmd->add_option("--r", r, "hidden states")->required()->check(CLI::PositiveNumber);
  hmm_window_cmd->add_option("--kappa", kappa, "output symbols")->required()->check(CLI::Range(2, 1 << 20));

  auto* hmm_certify_cmd = app.add_subcommand("hmm-certify", "certificate for an HMM window");
  add_common(hmm_certify_cmd, true);
  hmm_certify_cmd->add_option("--k", k, "half window (default: smallest sufficient)");

  auto* hmm_recover_cmd = app.add_subcommand("hmm-recover", "recover an HMM from its window law");
  add_common(hmm_recover_cmd, true);
  hmm_recover_cmd->add_option("--k", k, "half window (default: smallest sufficient)");

  auto* graph_certify_cmd = app.add_subcommand("graph-certify", "lattice certificate for a random graph mixture");
  add_common(graph_certify_cmd, true);
  graph_certify_cmd->add_option("--m", m, "lattice side")->capture_default_str()->check(CLI::Range(2, 8));

  auto* graph_extract_cmd = app.add_subcommand("graph-extract", "read off two-class graph parameters");
  add_common(graph_extract_cmd, true);
  graph_extract_cmd->add_option("--n", n, "nodes")->capture_default_str()->check(CLI::Range(3, 16));

  auto* cuts_cmd = app.add_subcommand("nonparam-cuts", "choose cut points for a nonparametric mixture");
  add_common(cuts_cmd, true);

  auto* nonparam_recover_cmd = app.add_subcommand("nonparam-recover", "recover a nonparametric mixture");
  add_common(nonparam_recover_cmd, true);
  nonparam_recover_cmd->add_option("--queries", queries, "query points per variate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* simulate_cmd = app.add_subcommand("simulate", "round-trip recovery on random models");
  add_common(simulate_cmd, false);
  simulate_cmd->add_option("--family", sim.family, "latent-class | hmm | graph-extract")
      ->required()
      ->check(CLI::IsMember({"latent-class", "hmm", "graph-extract"}));
  simulate_cmd->add_option("--trials", sim.trials, "number of trials")->capture_default_str();
  simulate_cmd->add_option("--r", sim.r, "classes / hidden states")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--kappas", sim.kappas, "latent-class state counts")->delimiter(',');
  simulate_cmd->add_option("--kappa", sim.kappa, "HMM output symbols")->capture_default_str();
  simulate_cmd->add_option("--k", sim.k, "HMM half window")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--n", sim.n, "graph nodes")->capture_default_str()->check(CLI::Range(3, 16));
  simulate_cmd->add_option("--threads", sim.threads, "worker threads")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  const auto started = std::chrono::steady_clock::now();
  Outcome outcome;
  json errors = json::array();
  try {
    if (chosen == certify_lc_cmd) outcome = certify_lc(common);
    else if (chosen == search_cmd) outcome = search(r, kappas);
    else if (chosen == bound_cmd) outcome = bound(r, kappa);
    else if (chosen == recover_lc_cmd) outcome = recover_lc(common, tripartition);
    else if (chosen == hmm_window_cmd) outcome = hmm_window(r, kappa);
    else if (chosen == hmm_certify_cmd) outcome = hmm_certify(common, k);
    else if (chosen == hmm_recover_cmd) outcome = hmm_recover(common, k);
    else if (chosen == graph_certify_cmd) outcome = graph_certify(common, m);
    else if (chosen == graph_extract_cmd) outcome = graph_extract(common, n);
    else if (chosen == cuts_cmd) outcome = nonparam_cuts(common);
    else if (chosen == nonparam_recover_cmd) outcome = nonparam_recover(common, queries);
    else outcome = simulate(common, sim);
  } catch (const Error& e) {
    outcome = Outcome{};
    outcome.code = exit_code_for(e.code());
    outcome.result = nullptr;
    errors.push_back({{"code", std::string(to_string(e.code()))}, {"message", e.what()}});
    if (!common.json) err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started).count();

  if (common.json) {
    const json report{{"command", command}, {"result", outcome.result}, {"errors", errors}};
    out << report.dump(2) << '\n';
  } else {
    out << outcome.text;
    if (command == "simulate") out << "elapsed " << fmt(static_cast<double>(elapsed) / 1e6) << " s\n";
  }
  return outcome.code;
}

}  // namespace latentid::cli
