#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hvaq/error.hpp"
#include "hvaq/regressors/ensembles.hpp"
#include "hvaq/regressors/svr.hpp"
#include "hvaq/regressors/tree.hpp"

namespace hvaq {

using Model = std::variant<GBRModel, RFRModel, SVRModel>;

enum class ModelKind { gbr, rfr, svr };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gbr: return "gbr";
    case ModelKind::rfr: return "rfr";
    case ModelKind::svr: return "svr";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "gbr") return ModelKind::gbr;
  if (s == "rfr") return ModelKind::rfr;
  if (s == "svr") return ModelKind::svr;
  return std::nullopt;
}

inline const std::vector<std::string>& model_columns(const Model& m) {
  return std::visit([](const auto& v) -> const std::vector<std::string>& { return v.columns; }, m);
}

template <class M>
std::vector<double> predict(const M& model, const FeatureMatrix& x) {
  check_schema(model.columns, x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = model.predict_row(x.row(r));
  return out;
}

inline std::vector<double> predict(const Model& model, const FeatureMatrix& x) {
  return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

// ---- JSON -------------------------------------------------------------------
//
// {"format": "hvaq.model", "version": 1, "kind": "gbr"|"rfr"|"svr", "columns": [...], ...}
// Trees are nested nodes: {"value": v} for leaves,
// {"feature": f, "threshold": t, "value": v, "left": {...}, "right": {...}} otherwise.

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tree_to_json(const RegressionTree& t, int i = 0) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  nlohmann::json j{{"value", n.value}, {"samples", n.samples}};
  if (!n.leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = tree_to_json(t, n.left);
    j["right"] = tree_to_json(t, n.right);
  }
  return j;
}

inline int tree_from_json(const nlohmann::json& j, RegressionTree& t) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  RegressionTree::Node n;
  n.value = j.at("value").get<double>();
  n.samples = j.value("samples", std::size_t{0});
  if (j.contains("feature")) {
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= t.n_features) {
      throw SchemaError("model JSON: split feature index out of range");
    }
    n.left = tree_from_json(j.at("left"), t);
    n.right = tree_from_json(j.at("right"), t);
  }
  t.nodes[static_cast<std::size_t>(id)] = n;
  return id;
}

inline RegressionTree tree_from_json(const nlohmann::json& j, std::size_t n_features) {
  RegressionTree t;
  t.n_features = n_features;
  tree_from_json(j, t);
  return t;
}

}  // namespace detail

inline nlohmann::json model_to_json(const Model& model) {
  nlohmann::json j{{"format", "hvaq.model"}, {"version", kModelFormatVersion}, {"columns", model_columns(model)}};
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GBRModel>) {
          j["kind"] = "gbr";
          j["initial"] = m.initial;
          j["learning_rate"] = m.learning_rate;
          auto& trees = j["trees"] = nlohmann::json::array();
          for (const auto& t : m.trees) trees.push_back(detail::tree_to_json(t));
        } else if constexpr (std::is_same_v<M, RFRModel>) {
          j["kind"] = "rfr";
          auto& trees = j["trees"] = nlohmann::json::array();
          for (const auto& t : m.trees) trees.push_back(detail::tree_to_json(t));
        } else {
          j["kind"] = "svr";
          j["scaler"] = {{"mean", m.scaler.mean}, {"scale", m.scaler.scale}};
          j["support_vectors"] = m.support_vectors;
          j["dual_coef"] = m.dual_coef;
          j["bias"] = m.bias;
          j["gamma"] = m.gamma;
          j["c"] = m.c;
          j["epsilon"] = m.epsilon;
        }
      },
      model);
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "hvaq.model") throw SchemaError("model JSON: unknown format");
    if (j.at("version").get<int>() != kModelFormatVersion) throw SchemaError("model JSON: unsupported version");
    const auto columns = j.at("columns").get<std::vector<std::string>>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "gbr") {
      GBRModel m;
      m.columns = columns;
      m.initial = j.at("initial").get<double>();
      m.learning_rate = j.at("learning_rate").get<double>();
      for (const auto& t : j.at("trees")) m.trees.push_back(detail::tree_from_json(t, columns.size()));
      return m;
    }
    if (kind == "rfr") {
      RFRModel m;
      m.columns = columns;
      for (const auto& t : j.at("trees")) m.trees.push_back(detail::tree_from_json(t, columns.size()));
      if (m.trees.empty()) throw SchemaError("model JSON: forest without trees");
      return m;
    }
    if (kind == "svr") {
      SVRModel m;
      m.columns = columns;
      m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
      m.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
      m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
      m.dual_coef = j.at("dual_coef").get<std::vector<double>>();
      m.bias = j.at("bias").get<double>();
      m.gamma = j.at("gamma").get<double>();
      m.c = j.at("c").get<double>();
      m.epsilon = j.at("epsilon").get<double>();
      if (m.support_vectors.size() != m.dual_coef.size() || m.scaler.mean.size() != columns.size()) {
        throw SchemaError("model JSON: inconsistent SVR dimensions");
      }
      return m;
    }
    throw SchemaError("model JSON: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  }
}

inline void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << model_to_json(m).dump() << '\n';
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hvaq
