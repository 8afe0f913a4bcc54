#pragma once

// JSON encoding of fitted models. Every document starts with
// {"format": <kind>, "version": <int>}. Doubles are written in shortest
// round-trip form, so a decoded model predicts bit-identically. Matrices
// are {"rows", "cols", "data"} with data in column-major order.

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "featrec/gbt.hpp"
#include "featrec/linalg.hpp"
#include "featrec/mlp.hpp"
#include "featrec/standardize.hpp"

namespace featrec {

using Json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

namespace io {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("model document: " + what);
}

inline Json header(const std::string& kind) {
  return Json{{"format", kind}, {"version", kModelFormatVersion}};
}

inline void check_header(const Json& j, const std::string& kind) {
  require(j.is_object(), "not a JSON object");
  require(j.contains("format") && j["format"] == kind, "expected format '" + kind + "'");
  require(j.contains("version") && j["version"].is_number_integer(), "missing version");
  const int v = j["version"].get<int>();
  if (v != kModelFormatVersion) {
    throw InvalidArgument("model document: unsupported version " + std::to_string(v));
  }
}

inline const Json& at(const Json& j, const char* key) {
  require(j.is_object() && j.contains(key), std::string("missing field '") + key + "'");
  return j[key];
}

inline Json encode(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix decode_matrix(const Json& j) {
  const auto rows = at(j, "rows").get<Eigen::Index>();
  const auto cols = at(j, "cols").get<Eigen::Index>();
  const Json& data = at(j, "data");
  require(data.is_array() && static_cast<Eigen::Index>(data.size()) == rows * cols,
          "matrix data has the wrong length");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  return m;
}

inline Json encode(const Vector& v) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

inline Vector decode_vector(const Json& j) {
  require(j.is_array(), "vector must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Json encode(const IndexList& idx) { return Json(idx); }
inline IndexList decode_indices(const Json& j) {
  require(j.is_array(), "index list must be an array");
  return j.get<IndexList>();
}

inline Json encode(const StandardizationParams& s) {
  return Json{{"means", encode(s.means)}, {"stds", encode(s.stds)}};
}
inline StandardizationParams decode_standardization(const Json& j) {
  return StandardizationParams{decode_vector(at(j, "means")), decode_vector(at(j, "stds"))};
}

inline Json encode(const LinearFit& f) {
  return Json{{"coef", encode(f.coef)}, {"intercept", f.intercept}};
}
inline LinearFit decode_linear(const Json& j) {
  return LinearFit{decode_vector(at(j, "coef")), at(j, "intercept").get<double>()};
}

// Tree nodes as [feature, threshold, left, right, value].
inline Json encode(const Tree& t) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes) nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.value}));
  return nodes;
}
inline Tree decode_tree(const Json& j) {
  require(j.is_array() && !j.empty(), "tree must be a non-empty node array");
  Tree t;
  for (const auto& n : j) {
    require(n.is_array() && n.size() == 5, "tree node must have 5 entries");
    TreeNode node{n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>()};
    t.nodes.push_back(node);
  }
  const auto size = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (n.feature >= 0) require(n.left > 0 && n.left < size && n.right > 0 && n.right < size, "tree child out of range");
  }
  return t;
}

inline void check_tree_features(const Tree& t, std::size_t p) {
  for (const auto& n : t.nodes) require(n.feature < static_cast<int>(p), "tree split feature out of range");
}

inline Json encode(const GbtParams& p) {
  return Json{{"n_estimators", p.n_estimators}, {"max_depth", p.max_depth},
              {"learning_rate", p.learning_rate}, {"lambda", p.lambda},
              {"min_child_weight", p.min_child_weight}};
}
inline GbtParams decode_gbt_params(const Json& j) {
  GbtParams p;
  p.n_estimators = at(j, "n_estimators").get<std::size_t>();
  p.max_depth = at(j, "max_depth").get<std::size_t>();
  p.learning_rate = at(j, "learning_rate").get<double>();
  p.lambda = at(j, "lambda").get<double>();
  p.min_child_weight = at(j, "min_child_weight").get<double>();
  return p;
}

inline Json encode(const GbtModel& m) {
  Json trees = Json::array();
  for (const auto& t : m.trees) trees.push_back(encode(t));
  return Json{{"loss", m.loss == GbtLoss::logistic ? "logistic" : "squared_error"},
              {"base_score", m.base_score},
              {"learning_rate", m.learning_rate},
              {"trees", std::move(trees)}};
}
inline GbtModel decode_gbt(const Json& j) {
  GbtModel m;
  const auto loss = at(j, "loss").get<std::string>();
  require(loss == "logistic" || loss == "squared_error", "unknown boosting loss");
  m.loss = loss == "logistic" ? GbtLoss::logistic : GbtLoss::squared_error;
  m.base_score = at(j, "base_score").get<double>();
  m.learning_rate = at(j, "learning_rate").get<double>();
  for (const auto& t : at(j, "trees")) m.trees.push_back(decode_tree(t));
  return m;
}

inline Json encode(const MlpParams& p) {
  return Json{{"hidden", p.hidden},         {"activation", to_string(p.activation)},
              {"learning_rate", p.learning_rate}, {"epochs", p.epochs},
              {"batch_size", p.batch_size}, {"l2", p.l2}};
}
inline Activation decode_activation(const Json& j) {
  const auto s = j.get<std::string>();
  require(s == "relu" || s == "tanh", "unknown activation '" + s + "'");
  return s == "relu" ? Activation::relu : Activation::tanh;
}
inline MlpParams decode_mlp_params(const Json& j) {
  MlpParams p;
  p.hidden = at(j, "hidden").get<std::vector<std::size_t>>();
  p.activation = decode_activation(at(j, "activation"));
  p.learning_rate = at(j, "learning_rate").get<double>();
  p.epochs = at(j, "epochs").get<std::size_t>();
  p.batch_size = at(j, "batch_size").get<std::size_t>();
  p.l2 = at(j, "l2").get<double>();
  return p;
}

inline Json encode(const Mlp& net) {
  Json weights = Json::array(), biases = Json::array();
  for (const auto& w : net.weights) weights.push_back(encode(w));
  for (const auto& b : net.biases) biases.push_back(encode(b));
  return Json{{"activation", to_string(net.activation)},
              {"output", net.output == MlpOutput::sigmoid ? "sigmoid" : "linear"},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)}};
}
inline Mlp decode_mlp(const Json& j) {
  Mlp net;
  net.activation = decode_activation(at(j, "activation"));
  const auto out = at(j, "output").get<std::string>();
  require(out == "sigmoid" || out == "linear", "unknown output layer");
  net.output = out == "sigmoid" ? MlpOutput::sigmoid : MlpOutput::linear;
  for (const auto& w : at(j, "weights")) net.weights.push_back(decode_matrix(w));
  for (const auto& b : at(j, "biases")) net.biases.push_back(decode_vector(b));
  require(!net.weights.empty() && net.weights.size() == net.biases.size(), "layer count mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    require(net.weights[l].cols() == net.biases[l].size(), "bias width mismatch");
    if (l > 0) require(net.weights[l].rows() == net.weights[l - 1].cols(), "layer shape mismatch");
  }
  return net;
}

inline std::uint64_t decode_seed(const Json& j) { return j.get<std::uint64_t>(); }

inline void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace io
}  // namespace featrec
