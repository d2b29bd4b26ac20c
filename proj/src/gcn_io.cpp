#include "gcnsched/gcn_io.hpp"

#include <fstream>

#include "gcnsched/graph_io.hpp"
#include "json.hpp"

namespace gcnsched {

using nlohmann::json;

const char* to_string(OutputKind kind) {
  switch (kind) {
    case OutputKind::kScalarEmbedding: return "scalar-embedding";
    case OutputKind::kQValues: return "q-values";
    case OutputKind::kCrtsLogits: return "crts-logits";
  }
  return "?";
}

const char* to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kConstant: return "constant";
    case FeatureMode::kUtility: return "utility";
    case FeatureMode::kDegree: return "degree";
  }
  return "?";
}

const char* to_string(Aggregation agg) { return agg == Aggregation::kLaplacian ? "laplacian" : "none"; }

const char* to_string(PairActivation act) { return act == PairActivation::kSigmoid ? "sigmoid" : "softmax"; }

OutputKind output_kind_from_string(const std::string& s) {
  if (s == "scalar-embedding") return OutputKind::kScalarEmbedding;
  if (s == "q-values") return OutputKind::kQValues;
  if (s == "crts-logits") return OutputKind::kCrtsLogits;
  throw SchemaError("unknown output kind \"" + s + "\"");
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "constant") return FeatureMode::kConstant;
  if (s == "utility") return FeatureMode::kUtility;
  if (s == "degree") return FeatureMode::kDegree;
  throw SchemaError("unknown feature mode \"" + s + "\"");
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) throw SchemaError(what + ": wrong row count");
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols) throw SchemaError(what + ": wrong column count");
    for (int c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw SchemaError(what + ": non-numeric entry");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string model_to_json(const GcnModeld& model) {
  model.validate();
  json doc;
  doc["version"] = kModelFormatVersion;
  doc["dims"] = model.dims();
  json acts = json::array();
  for (const auto& l : model.layers) acts.push_back(l.activation == Activation::kLinear ? "linear" : "leaky-relu");
  doc["activations"] = std::move(acts);
  doc["leaky_slope"] = model.leaky_slope;
  doc["output"] = to_string(model.output);
  doc["features"] = to_string(model.features);
  doc["aggregation"] = to_string(model.aggregation);
  doc["pair_activation"] = to_string(model.pair_activation);
  json layers = json::array();
  for (const auto& l : model.layers)
    layers.push_back({{"theta0", matrix_to_json(l.theta0)}, {"theta1", matrix_to_json(l.theta1)}});
  doc["layers"] = std::move(layers);
  return doc.dump();
}

GcnModeld model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(),
                     line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object() || !doc.contains("version")) throw SchemaError("model JSON has no version");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kModelFormatVersion)
    throw SchemaError("unsupported model format version " + doc["version"].dump() + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  try {
    const auto dims = doc.at("dims").get<std::vector<int>>();
    const auto& acts = doc.at("activations");
    const auto& layers = doc.at("layers");
    if (dims.size() < 2 || layers.size() + 1 != dims.size() || acts.size() != layers.size())
      throw SchemaError("model JSON: dims/layers/activations lengths disagree");
    GcnModeld model;
    model.leaky_slope = doc.value("leaky_slope", 0.2);
    model.output = output_kind_from_string(doc.value("output", std::string("scalar-embedding")));
    model.features = feature_mode_from_string(doc.value("features", std::string("constant")));
    const std::string agg = doc.value("aggregation", std::string("laplacian"));
    if (agg != "laplacian" && agg != "none") throw SchemaError("unknown aggregation \"" + agg + "\"");
    model.aggregation = agg == "none" ? Aggregation::kNone : Aggregation::kLaplacian;
    const std::string pair = doc.value("pair_activation", std::string("sigmoid"));
    if (pair != "sigmoid" && pair != "softmax") throw SchemaError("unknown pair activation \"" + pair + "\"");
    model.pair_activation = pair == "softmax" ? PairActivation::kSoftmax : PairActivation::kSigmoid;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string what = "layer " + std::to_string(l);
      GcnLayer<double> layer;
      layer.theta0 = matrix_from_json(layers[l].at("theta0"), dims[l], dims[l + 1], what + " theta0");
      layer.theta1 = matrix_from_json(layers[l].at("theta1"), dims[l], dims[l + 1], what + " theta1");
      const std::string act = acts[l].get<std::string>();
      if (act == "linear") {
        layer.activation = Activation::kLinear;
      } else if (act == "leaky-relu") {
        layer.activation = Activation::kLeakyRelu;
      } else {
        throw SchemaError(what + ": unknown activation \"" + act + "\"");
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  }
}

void save_model(const GcnModeld& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

GcnModeld load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

}  // namespace gcnsched
