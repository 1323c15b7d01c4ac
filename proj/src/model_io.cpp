#include "latentid/model_io.hpp"

#include <fstream>
#include <sstream>

namespace latentid {

namespace {

template <typename Fn>
auto parse_guard(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::ParseError, std::string("missing field \"") + key + "\"");
  }
  return j.at(key);
}

void check_count(const json& j, const char* key, std::size_t expected) {
  if (j.contains(key) && j.at(key).get<std::size_t>() != expected) {
    throw Error(ErrorCode::ParseError, std::string("field \"") + key + "\" disagrees with the data");
  }
}

json cdf_to_json(const CdfTable& cdf) {
  json out;
  if (cdf.dimension() == 1) {
    out["knots"] = cdf.knots().front();
  } else {
    out["knots"] = cdf.knots();
  }
  out["values"] = cdf.values();
  return out;
}

CdfTable cdf_from_json(const json& j) {
  const json& knots = field(j, "knots");
  auto values = field(j, "values").get<std::vector<double>>();
  if (knots.empty()) throw Error(ErrorCode::ParseError, "empty knot list");
  if (knots.front().is_array()) {
    return CdfTable::make(knots.get<std::vector<std::vector<double>>>(), std::move(values));
  }
  return CdfTable::univariate(knots.get<std::vector<double>>(), std::move(values));
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  return json{{"dims", {m.rows(), m.cols()}}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
  return parse_guard("matrix", [&] {
    const auto dims = field(j, "dims").get<std::vector<std::size_t>>();
    const auto data = field(j, "data").get<std::vector<double>>();
    if (dims.size() != 2 || dims[0] * dims[1] != data.size()) {
      throw Error(ErrorCode::ParseError, "matrix dims do not match data");
    }
    Matrix m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
    for (std::size_t i = 0; i < dims[0]; ++i)
      for (std::size_t c = 0; c < dims[1]; ++c)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = data[i * dims[1] + c];
    return m;
  });
}

json tensor_to_json(const Tensor3& t) {
  return json{{"dims", t.dims()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

Tensor3 tensor3_from_json(const json& j) {
  return parse_guard("tensor", [&] {
    const auto dims = field(j, "dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw Error(ErrorCode::ParseError, "three-way tensor needs 3 dims");
    try {
      return Tensor3({dims[0], dims[1], dims[2]}, field(j, "data").get<std::vector<double>>());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  });
}

json tensor_to_json(const TensorP& t) {
  return json{{"dims", t.dims()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

TensorP tensorp_from_json(const json& j) {
  return parse_guard("tensor", [&] {
    try {
      return TensorP(field(j, "dims").get<std::vector<std::size_t>>(),
                     field(j, "data").get<std::vector<double>>());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  });
}

json matrix_to_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(i, c);
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_rows(const json& j) {
  return parse_guard("matrix rows", [&] {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) throw Error(ErrorCode::ParseError, "empty matrix");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) throw Error(ErrorCode::ParseError, "ragged matrix rows");
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    return m;
  });
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  return parse_guard("vector", [&] {
    const auto values = j.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  });
}

AnyModel model_from_json(const json& j) {
  const std::string type = parse_guard("model", [&] { return field(j, "type").get<std::string>(); });
  return parse_guard("model", [&]() -> AnyModel {
    if (type == "latent_class") {
      Vector pi = vector_from_json(field(j, "pi"));
      std::vector<Matrix> emissions;
      for (const json& m : field(j, "emissions")) emissions.push_back(matrix_from_rows(m));
      check_count(j, "r", static_cast<std::size_t>(pi.size()));
      if (j.contains("kappas")) {
        const auto kappas = j.at("kappas").get<std::vector<std::size_t>>();
        if (kappas.size() != emissions.size()) throw Error(ErrorCode::ParseError, "kappas length differs from emissions");
        for (std::size_t q = 0; q < kappas.size(); ++q)
          if (static_cast<std::size_t>(emissions[q].cols()) != kappas[q]) {
            throw Error(ErrorCode::ParseError, "kappas disagree with emission widths");
          }
      }
      return LatentClassModel::make(std::move(pi), std::move(emissions));
    }
    if (type == "hmm") {
      Matrix a = matrix_from_rows(field(j, "A"));
      Matrix b = matrix_from_rows(field(j, "B"));
      check_count(j, "r", static_cast<std::size_t>(a.rows()));
      check_count(j, "kappa", static_cast<std::size_t>(b.cols()));
      return HiddenMarkovModel::make(std::move(a), std::move(b));
    }
    if (type == "graph_mixture") {
      Vector pi = vector_from_json(field(j, "pi"));
      check_count(j, "r", static_cast<std::size_t>(pi.size()));
      return GraphMixtureModel::make(std::move(pi), matrix_from_rows(field(j, "P")));
    }
    if (type == "nonparametric") {
      Vector pi = vector_from_json(field(j, "pi"));
      std::vector<std::vector<CdfTable>> components;
      for (const json& row : field(j, "components")) {
        std::vector<CdfTable> cdfs;
        for (const json& c : row) cdfs.push_back(cdf_from_json(c));
        components.push_back(std::move(cdfs));
      }
      check_count(j, "r", static_cast<std::size_t>(pi.size()));
      NonparametricMixture mixture = NonparametricMixture::make(std::move(pi), std::move(components));
      check_count(j, "p", mixture.p());
      if (j.contains("block_dims") && j.at("block_dims").get<std::vector<std::size_t>>() != mixture.block_dims()) {
        throw Error(ErrorCode::ParseError, "block_dims disagree with component dimensions");
      }
      return mixture;
    }
    throw Error(ErrorCode::ParseError, "unknown model type \"" + type + "\"");
  });
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

json model_to_json(const LatentClassModel& model) {
  json emissions = json::array();
  for (const Matrix& m : model.emissions()) emissions.push_back(matrix_to_rows(m));
  return json{{"type", "latent_class"}, {"r", model.r()},        {"kappas", model.kappas()},
              {"pi", vector_to_json(model.pi())}, {"emissions", emissions}};
}

json model_to_json(const HiddenMarkovModel& model) {
  return json{{"type", "hmm"},
              {"r", model.r()},
              {"kappa", model.kappa()},
              {"A", matrix_to_rows(model.transition())},
              {"B", matrix_to_rows(model.emission())}};
}

json model_to_json(const GraphMixtureModel& model) {
  return json{{"type", "graph_mixture"},
              {"r", model.r()},
              {"pi", vector_to_json(model.pi())},
              {"P", matrix_to_rows(model.connection())}};
}

json model_to_json(const NonparametricMixture& model) {
  json components = json::array();
  for (std::size_t i = 0; i < model.r(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < model.p(); ++j) row.push_back(cdf_to_json(model.component(i, j)));
    components.push_back(row);
  }
  return json{{"type", "nonparametric"},
              {"r", model.r()},
              {"p", model.p()},
              {"block_dims", model.block_dims()},
              {"pi", vector_to_json(model.pi())},
              {"components", components}};
}

}  // namespace latentid
