#include <algorithm>
#include <array>

#include "cpgvd/cpg.hpp"

namespace cpgvd {

namespace {

constexpr std::array<std::string_view, 16> kNodeKinds = {
    "METHOD",     "METHOD_RETURN",     "PARAM",      "LOCAL",      "CALL",   "ARGUMENT",
    "IDENTIFIER", "LITERAL",           "CONTROL_STRUCTURE", "ASSIGNMENT", "EXPRESSION",
    "RETURN",     "BLOCK",             "LABEL",      "ENTRY",      "EXIT"};
constexpr std::array<std::string_view, 4> kLayers = {"AST", "CFG", "DDG", "CDG"};
constexpr std::array<std::string_view, 7> kLabels = {"", "Seq", "True", "False",
                                                     "Case", "Default", "Jump"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& table, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (table[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

const std::vector<int> kNoEdges;

}  // namespace

std::string_view to_string(NodeKind kind) { return kNodeKinds[static_cast<std::size_t>(kind)]; }
std::string_view to_string(Layer layer) { return kLayers[static_cast<std::size_t>(layer)]; }
std::string_view to_string(CfgLabel label) { return kLabels[static_cast<std::size_t>(label)]; }

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  return lookup<NodeKind>(kNodeKinds, s);
}
std::optional<Layer> layer_from_string(std::string_view s) { return lookup<Layer>(kLayers, s); }
std::optional<CfgLabel> cfg_label_from_string(std::string_view s) {
  return lookup<CfgLabel>(kLabels, s);
}

void CodePropertyGraph::reindex() {
  for (int l = 0; l < 4; ++l) {
    out_[l].assign(nodes.size(), {});
    in_[l].assign(nodes.size(), {});
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const CpgEdge& e = edges[i];
    int l = static_cast<int>(e.layer);
    out_[l][static_cast<std::size_t>(e.src)].push_back(static_cast<int>(i));
    in_[l][static_cast<std::size_t>(e.dst)].push_back(static_cast<int>(i));
  }
}

const std::vector<int>& CodePropertyGraph::out_edges(int id, Layer layer) const {
  const auto& v = out_[static_cast<int>(layer)];
  if (id < 0 || static_cast<std::size_t>(id) >= v.size()) return kNoEdges;
  return v[static_cast<std::size_t>(id)];
}

const std::vector<int>& CodePropertyGraph::in_edges(int id, Layer layer) const {
  const auto& v = in_[static_cast<int>(layer)];
  if (id < 0 || static_cast<std::size_t>(id) >= v.size()) return kNoEdges;
  return v[static_cast<std::size_t>(id)];
}

std::vector<int> CodePropertyGraph::successors(int id, Layer layer) const {
  std::vector<int> out;
  for (int e : out_edges(id, layer)) out.push_back(edges[static_cast<std::size_t>(e)].dst);
  return out;
}

std::vector<int> CodePropertyGraph::predecessors(int id, Layer layer) const {
  std::vector<int> out;
  for (int e : in_edges(id, layer)) out.push_back(edges[static_cast<std::size_t>(e)].src);
  return out;
}

int CodePropertyGraph::entry_of(int method) const {
  for (int c : successors(method, Layer::AST))
    if (node(c).kind == NodeKind::ENTRY) return c;
  return -1;
}

int CodePropertyGraph::exit_of(int method) const {
  for (int c : successors(method, Layer::AST))
    if (node(c).kind == NodeKind::EXIT) return c;
  return -1;
}

std::vector<int> CodePropertyGraph::cfg_nodes(int method) const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.method == method && n.cfg_owner == n.id) out.push_back(n.id);
  return out;
}

std::vector<int> CodePropertyGraph::nodes_of_kind(NodeKind kind) const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.kind == kind) out.push_back(n.id);
  return out;
}

}  // namespace cpgvd
