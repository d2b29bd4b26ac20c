#pragma once

#include <filesystem>
#include <string>

#include "gcnsched/gcn.hpp"

namespace gcnsched {

inline constexpr int kModelFormatVersion = 1;

/// {"version":1, "dims":[...], "activations":[...], "layers":[{"theta0","theta1"}], ...}
std::string model_to_json(const GcnModeld& model);
/// Throws ParseError on malformed text and SchemaError on a version or shape mismatch.
GcnModeld model_from_json(const std::string& text);

void save_model(const GcnModeld& model, const std::filesystem::path& path);
GcnModeld load_model(const std::filesystem::path& path);

const char* to_string(OutputKind kind);
const char* to_string(FeatureMode mode);
const char* to_string(Aggregation agg);
const char* to_string(PairActivation act);
OutputKind output_kind_from_string(const std::string& s);
FeatureMode feature_mode_from_string(const std::string& s);

}  // namespace gcnsched
