#include <istream>
#include <iterator>
#include <ostream>

#include <json.hpp>

#include "cpgvd/cpg.hpp"

namespace cpgvd {

using nlohmann::json;

namespace {

json node_to_json(const CpgNode& n) {
  return json{{"id", n.id},
              {"kind", to_string(n.kind)},
              {"name", n.name},
              {"code", n.code},
              {"typeFullName", n.type_full_name},
              {"lineNumber", n.line},
              {"lineNumberEnd", n.line_end},
              {"order", n.order},
              {"begin", n.begin},
              {"end", n.end},
              {"method", n.method},
              {"astParent", n.ast_parent},
              {"cfgOwner", n.cfg_owner}};
}

json edge_to_json(const CpgEdge& e) {
  json j{{"src", e.src}, {"dst", e.dst}, {"layer", to_string(e.layer)}};
  if (e.layer == Layer::DDG) j["var"] = e.var;
  if (e.layer == Layer::CFG) j["label"] = to_string(e.label);
  return j;
}

template <typename T>
T field(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string(what) + " lacks field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(what) + " field '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_json_string(const CodePropertyGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back(node_to_json(n));
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back(edge_to_json(e));
  json doc{{"schema", "cpgvd.graph"},
           {"version", kGraphSchemaVersion},
           {"unit", g.unit},
           {"functions", g.functions},
           {"nodes", std::move(nodes)},
           {"edges", std::move(edges)}};
  return doc.dump(1);
}

void save_cpg(const CodePropertyGraph& g, std::ostream& sink) {
  sink << to_json_string(g) << '\n';
  if (!sink) throw FormatError("failed to write graph");
}

CodePropertyGraph from_json_string(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("graph stream is not valid JSON (truncated?): ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("graph document is not an object");
  if (field<std::string>(doc, "schema", "graph") != "cpgvd.graph")
    throw FormatError("unknown graph schema");
  int version = field<int>(doc, "version", "graph");
  if (version != kGraphSchemaVersion)
    throw FormatError("graph schema version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kGraphSchemaVersion) + ")");

  CodePropertyGraph g;
  g.unit = field<std::string>(doc, "unit", "graph");
  g.functions = field<std::vector<int>>(doc, "functions", "graph");
  const json& nodes = doc.at("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const json& j = nodes[i];
    CpgNode n;
    n.id = field<int>(j, "id", "node");
    if (n.id != static_cast<int>(i)) throw FormatError("node ids are not dense at index " + std::to_string(i));
    auto kind = node_kind_from_string(field<std::string>(j, "kind", "node"));
    if (!kind) throw FormatError("unknown node kind at id " + std::to_string(n.id));
    n.kind = *kind;
    n.name = field<std::string>(j, "name", "node");
    n.code = field<std::string>(j, "code", "node");
    n.type_full_name = field<std::string>(j, "typeFullName", "node");
    n.line = field<int>(j, "lineNumber", "node");
    n.line_end = field<int>(j, "lineNumberEnd", "node");
    n.order = field<int>(j, "order", "node");
    n.begin = field<std::size_t>(j, "begin", "node");
    n.end = field<std::size_t>(j, "end", "node");
    n.method = field<int>(j, "method", "node");
    n.ast_parent = field<int>(j, "astParent", "node");
    n.cfg_owner = field<int>(j, "cfgOwner", "node");
    g.nodes.push_back(std::move(n));
  }
  int count = static_cast<int>(g.nodes.size());
  for (const auto& j : doc.at("edges")) {
    CpgEdge e;
    e.src = field<int>(j, "src", "edge");
    e.dst = field<int>(j, "dst", "edge");
    if (e.src < 0 || e.src >= count || e.dst < 0 || e.dst >= count)
      throw FormatError("edge references a missing node");
    auto layer = layer_from_string(field<std::string>(j, "layer", "edge"));
    if (!layer) throw FormatError("unknown edge layer");
    e.layer = *layer;
    if (e.layer == Layer::DDG) {
      e.var = field<std::string>(j, "var", "edge");
      if (e.var.empty()) throw FormatError("DDG edge without variable");
    }
    if (e.layer == Layer::CFG) {
      auto label = cfg_label_from_string(field<std::string>(j, "label", "edge"));
      if (!label) throw FormatError("unknown CFG label");
      e.label = *label;
    }
    g.edges.push_back(std::move(e));
  }
  for (int f : g.functions)
    if (f < 0 || f >= count || g.nodes[static_cast<std::size_t>(f)].kind != NodeKind::METHOD)
      throw FormatError("function list references a non-METHOD node");
  g.reindex();
  return g;
}

CodePropertyGraph load_cpg(std::istream& source) {
  std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace cpgvd
