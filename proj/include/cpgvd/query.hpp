#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpgvd/cpg.hpp"

namespace cpgvd {

enum class QueryErrorCategory { SYNTAX, UNKNOWN_API, TYPE_MISUSE };
std::string_view to_string(QueryErrorCategory c);

class QueryError : public std::runtime_error {
 public:
  QueryError(QueryErrorCategory category, std::size_t position, int line, int column,
             const std::string& message);
  QueryErrorCategory category() const { return category_; }
  std::size_t position() const { return position_; }
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  QueryErrorCategory category_;
  std::size_t position_;
  int line_;
  int column_;
  std::string message_;
};

/// Raised while evaluating a script that parsed cleanly, e.g. when a binding
/// is referenced before it is defined.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-fatal findings attached to a parsed script.
///   CODE_VS_NAME    code(p) on calls with a bare identifier pattern; code()
///                   matches the whole call text, name() matches the callee.
///   REGEX_VS_EXACT  code(p)/name(p) whose pattern does not match its own
///                   literal text, so the regex reading differs from the
///                   exact-text reading (use codeExact). Patterns using
///                   |, \, [ , .* or .+ are taken as deliberate regexes.
struct Advisory {
  std::string kind;
  std::string message;
  std::size_t position = 0;
};

struct QExpr;
using QExprPtr = std::shared_ptr<const QExpr>;

struct QExpr {
  enum class Kind { Root, Var, Str, Int, Bool, Step, Not, Binary, Lambda };
  Kind kind = Kind::Root;
  std::string name;  // variable, step, operator, or lambda parameter
  std::string str;
  long long num = 0;
  bool flag = false;
  bool call_syntax = false;  // step written with parentheses
  std::vector<QExprPtr> args;  // Step: receiver then arguments; Binary: lhs, rhs
  std::size_t pos = 0;
};

struct QueryBinding {
  std::string name;
  QExprPtr expr;
  std::size_t pos = 0;
};

struct QueryScript {
  std::string text;
  std::vector<QueryBinding> bindings;
  QExprPtr final;
  std::vector<Advisory> advisories;
};

struct QueryParseOptions {
  /// Reject scripts whose final expression does not produce a flow set.
  bool require_flows = false;
};

QueryScript parse_query(std::string_view text, const QueryParseOptions& options = {});

struct ExecutionPath {
  std::vector<int> nodes;
  std::vector<int> lines(const CodePropertyGraph& g) const;  // sorted, unique
  bool operator==(const ExecutionPath& o) const { return nodes == o.nodes; }
  bool operator<(const ExecutionPath& o) const { return nodes < o.nodes; }
};

struct FlowSet {
  std::vector<ExecutionPath> paths;
  bool limit_exceeded = false;
};

struct NodeSet {
  std::vector<int> members;
};

struct FlowLimits {
  std::size_t max_len = 64;
  std::size_t max_paths = 256;
};

/// All simple DDG paths that start in `sources` and end in `targets`,
/// shortest first and lexicographic by node id within one length. An
/// ARGUMENT endpoint stands for the expression it wraps.
FlowSet reachable_by_flows(const NodeSet& targets, const NodeSet& sources,
                           const CodePropertyGraph& g, const FlowLimits& limits = {});

/// Result of evaluating a script's final expression.
struct QueryValue {
  enum class Type { Nodes, Flows, Ints, Strs, Int, Bool, Str };
  Type type = Type::Nodes;
  std::vector<int> nodes;
  FlowSet flows;
  std::vector<long long> ints;
  std::vector<std::string> strs;
  long long i = 0;
  bool b = false;
  std::string s;
};

struct EvalOptions {
  FlowLimits limits;
};

QueryValue eval_query(const QueryScript& script, const CodePropertyGraph& g,
                      const EvalOptions& options = {});

/// Paths as arrays of {id, kind, name, line, code}; node sets as one array.
std::string query_value_to_json(const QueryValue& v, const CodePropertyGraph& g);

}  // namespace cpgvd
