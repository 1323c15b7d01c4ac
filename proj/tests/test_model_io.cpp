#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "latentid/model_io.hpp"
#include "latentid/simulation.hpp"

using namespace latentid;

namespace {

double diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

ErrorCode parse_code(const std::string& text) {
  try {
    model_from_json(json::parse(text));
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_CASE("matrix and tensor JSON round trips") {
  Rng rng(1);
  const Matrix m = random_stochastic(3, 4, rng);
  CHECK(diff(matrix_from_json(matrix_to_json(m)), m) == 0.0);
  CHECK(diff(matrix_from_rows(matrix_to_rows(m)), m) == 0.0);
  const Tensor3 t = triple_product(m, m, m);
  const Tensor3 back = tensor3_from_json(tensor_to_json(t));
  CHECK(back.dims() == t.dims());
  CHECK(max_abs_diff(back.data(), t.data()) == 0.0);
  CHECK_THROWS_AS(matrix_from_json(json{{"dims", {2, 2}}, {"data", {1, 2, 3}}}), Error);
  CHECK_THROWS_AS(tensor3_from_json(json{{"dims", {2, 2}}, {"data", {1, 2, 3, 4}}}), Error);
}

TEST_CASE("latent class model file") {
  const auto model = std::get<LatentClassModel>(model_from_json(json::parse(R"({
    "type": "latent_class", "r": 2, "kappas": [2, 2, 3],
    "pi": [0.4, 0.6],
    "emissions": [[[0.9, 0.1], [0.2, 0.8]], [[0.7, 0.3], [0.3, 0.7]], [[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]]]
  })")));
  CHECK(model.r() == 2);
  CHECK(model.kappas() == std::vector<std::size_t>{2, 2, 3});
  CHECK(model.emission(2)(1, 0) == 0.6);
  const auto again = std::get<LatentClassModel>(model_from_json(model_to_json(model)));
  CHECK(diff(again.emission(1), model.emission(1)) == 0.0);
}

TEST_CASE("hmm, graph and nonparametric model files round trip") {
  Rng rng(2);
  const auto hmm = random_hmm(3, 2, rng);
  const auto hmm2 = std::get<HiddenMarkovModel>(model_from_json(model_to_json(hmm)));
  CHECK(diff(hmm2.transition(), hmm.transition()) == 0.0);
  CHECK(diff(hmm2.stationary(), hmm.stationary()) <= 1e-15);

  const auto graph = random_graph_mixture(false, rng);
  const auto graph2 = std::get<GraphMixtureModel>(model_from_json(model_to_json(graph)));
  CHECK(diff(graph2.connection(), graph.connection()) == 0.0);

  const std::vector<std::size_t> dims{1, 2, 1};
  const auto mix = random_piecewise_mixture(2, dims, 3, rng);
  const json j = model_to_json(mix);
  CHECK(j["components"][0][0]["knots"][0].is_number());
  CHECK(j["components"][0][1]["knots"][0].is_array());
  const auto mix2 = std::get<NonparametricMixture>(model_from_json(j));
  CHECK(mix2.block_dims() == dims);
  const std::vector<double> pt{1.3, 2.2};
  CHECK(mix2.component(1, 1)(pt) == mix.component(1, 1)(pt));
}

TEST_CASE("malformed model files") {
  CHECK(parse_code(R"({"r": 2})") == ErrorCode::ParseError);
  CHECK(parse_code(R"({"type": "mystery"})") == ErrorCode::ParseError);
  CHECK(parse_code(R"({"type": "hmm", "A": [[1]], "B": "x"})") == ErrorCode::ParseError);
  CHECK(parse_code(R"({"type": "latent_class", "r": 3, "pi": [0.5, 0.5],
                       "emissions": [[[1, 0], [0, 1]], [[1, 0], [0, 1]], [[1, 0], [0, 1]]]})") == ErrorCode::ParseError);
  CHECK(parse_code(R"({"type": "latent_class", "pi": [0.5, 0.6],
                       "emissions": [[[1, 0], [0, 1]], [[1, 0], [0, 1]], [[1, 0], [0, 1]]]})") != ErrorCode::ParseError);
  CHECK(parse_code(R"({"type": "hmm", "A": [[0.5, 0.5], [0.5]], "B": [[1, 0], [0, 1]]})") == ErrorCode::ParseError);
}

TEST_CASE("load_model from disk") {
  const auto path = std::filesystem::temp_directory_path() / "latentid_io_test.json";
  {
    std::ofstream out(path);
    out << R"({"type": "graph_mixture", "r": 2, "pi": [0.3, 0.7], "P": [[0.2, 0.5], [0.5, 0.8]]})";
  }
  const AnyModel any = load_model(path);
  CHECK(std::holds_alternative<GraphMixtureModel>(any));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), Error);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_model(path), Error);
  std::filesystem::remove(path);
}
