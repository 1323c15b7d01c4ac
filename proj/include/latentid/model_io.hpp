#pragma once

// JSON forms of matrices, tensors and model files.
//
//   matrix / tensor:  {"dims": [...], "data": [...]}   (row-major, last fastest)
//   latent class:     {"type":"latent_class","r":..,"kappas":[..],"pi":[..],
//                      "emissions":[[[..]]]}            emissions[j][i][l]
//   hmm:              {"type":"hmm","r":..,"kappa":..,"A":[[..]],"B":[[..]]}
//   graph mixture:    {"type":"graph_mixture","r":2,"pi":[..],"P":[[..]]}
//   nonparametric:    {"type":"nonparametric","r":..,"p":..,"block_dims":[..],
//                      "pi":[..],"components":[[{"knots":..,"values":[..]}]]}
//                     components[i][j]; knots is a flat list for b = 1 and a
//                     list of per-axis lists for b > 1.

#include <filesystem>
#include <string>
#include <variant>

#include "json.hpp"

#include "latentid/hmm.hpp"
#include "latentid/latent_class.hpp"
#include "latentid/nonparametric.hpp"
#include "latentid/random_graph.hpp"
#include "latentid/tensor_core.hpp"

namespace latentid {

using json = nlohmann::json;

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
json tensor_to_json(const Tensor3& t);
Tensor3 tensor3_from_json(const json& j);
json tensor_to_json(const TensorP& t);
TensorP tensorp_from_json(const json& j);

/// Nested-array forms used inside model files.
json matrix_to_rows(const Matrix& m);
Matrix matrix_from_rows(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

using AnyModel = std::variant<LatentClassModel, HiddenMarkovModel, GraphMixtureModel, NonparametricMixture>;

/// Throws ParseError for malformed documents; model validation errors keep
/// their own codes.
AnyModel model_from_json(const json& j);
AnyModel load_model(const std::filesystem::path& path);

json model_to_json(const LatentClassModel& model);
json model_to_json(const HiddenMarkovModel& model);
json model_to_json(const GraphMixtureModel& model);
json model_to_json(const NonparametricMixture& model);

}  // namespace latentid
