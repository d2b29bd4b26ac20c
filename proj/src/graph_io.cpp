#include "gcnsched/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gcnsched {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

GraphFile parse_graph_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed graph JSON: ") + e.what(),
                     line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object() || !doc.contains("v") || !doc["v"].is_number_integer())
    throw SchemaError("graph JSON needs integer field \"v\"");
  const long v = doc["v"].get<long>();
  if (v < 0) throw SchemaError("graph JSON: negative \"v\"");
  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw SchemaError("graph JSON: \"edges\" must be an array");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw SchemaError("graph JSON: edge entries must be [i, j]");
      edges.emplace_back(e[0].get<Vertex>(), e[1].get<Vertex>());
    }
  }
  GraphFile out;
  out.graph = ConflictGraph::from_edges(static_cast<int>(v), edges);
  if (doc.contains("weights")) {
    const auto& w = doc["weights"];
    if (!w.is_array() || static_cast<long>(w.size()) != v)
      throw SchemaError("graph JSON: \"weights\" length " + std::to_string(w.size()) +
                        " does not match v=" + std::to_string(v));
    out.weights.resize(v);
    for (long i = 0; i < v; ++i) {
      if (!w[i].is_number()) throw SchemaError("graph JSON: non-numeric weight");
      out.weights[i] = w[i].get<double>();
    }
  } else {
    out.weights = VertexWeights::Ones(v);
  }
  return out;
}

GraphFile parse_graph_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<Edge> edges;
  int max_id = -1;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "src,dst") throw ParseError("CSV edge list must start with header src,dst", lineno);
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected src,dst", lineno);
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string sa = line.substr(0, comma), sb = line.substr(comma + 1);
      const int a = std::stoi(sa, &used_a), b = std::stoi(sb, &used_b);
      if (used_a != sa.size() || used_b != sb.size()) throw std::invalid_argument("trailing");
      edges.emplace_back(a, b);
      max_id = std::max({max_id, a, b});
    } catch (const std::logic_error&) {
      throw ParseError("non-integer vertex id", lineno);
    }
  }
  if (!header_seen) throw ParseError("empty CSV edge list", std::max(lineno, 1));
  GraphFile out;
  out.graph = ConflictGraph::from_edges(max_id + 1, edges);
  out.weights = VertexWeights::Ones(max_id + 1);
  return out;
}

GraphFile load_graph(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".csv") return parse_graph_csv(text);
  return parse_graph_json(text);
}

std::string graph_to_json(const ConflictGraph& g, const VertexWeights& w) {
  if (w.size() != g.vertex_count()) throw ShapeError("weights length does not match graph");
  json doc;
  doc["v"] = g.vertex_count();
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});
  doc["edges"] = std::move(edges);
  doc["weights"] = std::vector<double>(w.data(), w.data() + w.size());
  return doc.dump();
}

void save_graph(const std::filesystem::path& path, const ConflictGraph& g, const VertexWeights& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << graph_to_json(g, w) << '\n';
}

}  // namespace gcnsched
