#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gcnsched/graph.hpp"

namespace gcnsched {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  int line;
};

struct GraphFile {
  ConflictGraph graph;
  VertexWeights weights;
};

/// JSON {"v": V, "edges": [[i,j],...], "weights": [...]} or a CSV edge list
/// with header "src,dst" (chosen by the .csv extension; weights default to 1).
GraphFile load_graph(const std::filesystem::path& path);
GraphFile parse_graph_json(const std::string& text);
GraphFile parse_graph_csv(const std::string& text);

void save_graph(const std::filesystem::path& path, const ConflictGraph& g, const VertexWeights& w);
std::string graph_to_json(const ConflictGraph& g, const VertexWeights& w);

std::string read_text_file(const std::filesystem::path& path);
/// 1-based line number of a byte offset.
int line_of_offset(const std::string& text, std::size_t offset);

}  // namespace gcnsched
