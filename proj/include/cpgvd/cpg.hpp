#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpgvd/ast.hpp"
#include "cpgvd/source.hpp"

namespace cpgvd {

enum class NodeKind {
  METHOD,
  METHOD_RETURN,
  PARAM,
  LOCAL,
  CALL,
  ARGUMENT,
  IDENTIFIER,
  LITERAL,
  CONTROL_STRUCTURE,
  ASSIGNMENT,
  EXPRESSION,
  RETURN,
  BLOCK,
  LABEL,
  ENTRY,
  EXIT,
};

enum class Layer { AST, CFG, DDG, CDG };

enum class CfgLabel { None, Seq, True, False, Case, Default, Jump };

std::string_view to_string(NodeKind kind);
std::string_view to_string(Layer layer);
std::string_view to_string(CfgLabel label);
std::optional<NodeKind> node_kind_from_string(std::string_view s);
std::optional<Layer> layer_from_string(std::string_view s);
std::optional<CfgLabel> cfg_label_from_string(std::string_view s);

struct CpgNode {
  int id = -1;
  NodeKind kind = NodeKind::EXPRESSION;
  std::string name;
  std::string code;
  std::string type_full_name;
  int line = 0;
  int line_end = 0;
  int order = 0;
  std::size_t begin = 0;  // byte offsets into the unit text
  std::size_t end = 0;
  int method = -1;      // METHOD id, -1 for file-scope nodes
  int ast_parent = -1;
  int cfg_owner = -1;   // CFG node this node belongs to; == id for CFG nodes
};

struct CpgEdge {
  int src = -1;
  int dst = -1;
  Layer layer = Layer::AST;
  std::string var;  // DDG only
  CfgLabel label = CfgLabel::None;  // CFG only
};

class MalformedAst : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnresolvedGoto : public std::runtime_error {
 public:
  UnresolvedGoto(std::string label, int line)
      : std::runtime_error("goto targets missing label '" + label + "' at line " +
                           std::to_string(line)),
        label_(std::move(label)),
        line_(line) {}
  const std::string& label() const { return label_; }
  int line() const { return line_; }

 private:
  std::string label_;
  int line_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unified graph over one translation unit. Node ids are dense (0..N-1) and
/// follow AST preorder; per function the METHOD node comes first, followed by
/// its ENTRY, EXIT and METHOD_RETURN nodes.
class CodePropertyGraph {
 public:
  std::string unit;
  std::vector<CpgNode> nodes;
  std::vector<CpgEdge> edges;
  std::vector<int> functions;

  const CpgNode& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes.size(); }

  /// Rebuilds adjacency lists; call after mutating nodes/edges.
  void reindex();

  /// Edge indices leaving/entering a node on one layer.
  const std::vector<int>& out_edges(int id, Layer layer) const;
  const std::vector<int>& in_edges(int id, Layer layer) const;
  std::vector<int> successors(int id, Layer layer) const;
  std::vector<int> predecessors(int id, Layer layer) const;

  int entry_of(int method) const;
  int exit_of(int method) const;
  bool is_cfg_node(int id) const { return node(id).cfg_owner == id; }
  /// CFG nodes of one function (including ENTRY and EXIT).
  std::vector<int> cfg_nodes(int method) const;
  std::vector<int> nodes_of_kind(NodeKind kind) const;

 private:
  std::vector<std::vector<int>> out_[4];
  std::vector<std::vector<int>> in_[4];
};

struct BuildOptions {
  /// When set, reaching definitions are solved with the worklist seeded in a
  /// pseudo-random order; the result must not depend on it.
  std::optional<std::uint64_t> worklist_shuffle_seed;
};

CodePropertyGraph build_cpg(const AstNode& ast, const SourceUnit& unit,
                            const BuildOptions& options = {});

/// Convenience: parse and build.
CodePropertyGraph build_cpg(const SourceUnit& unit, const BuildOptions& options = {});

constexpr int kGraphSchemaVersion = 1;

void save_cpg(const CodePropertyGraph& g, std::ostream& sink);
CodePropertyGraph load_cpg(std::istream& source);
std::string to_json_string(const CodePropertyGraph& g);
CodePropertyGraph from_json_string(std::string_view text);

}  // namespace cpgvd
