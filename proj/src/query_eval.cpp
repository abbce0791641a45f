#include <algorithm>
#include <functional>
#include <map>
#include <regex>
#include <set>

#include <json.hpp>

#include "cpgvd/query.hpp"

namespace cpgvd {

std::vector<int> ExecutionPath::lines(const CodePropertyGraph& g) const {
  std::vector<int> out;
  for (int n : nodes) {
    int l = g.node(n).line;
    if (l > 0) out.push_back(l);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Paths kept alive per length before the search gives up on completeness.
constexpr std::size_t kFrontierCap = 200000;

bool is_decision_node(const CpgNode& n) {
  return n.kind == NodeKind::CONTROL_STRUCTURE &&
         (n.name == "&&" || n.name == "||" || n.name == "!");
}

// ARGUMENT nodes only wrap an expression; flows attach to the expression.
int flow_endpoint(const CodePropertyGraph& g, int id) {
  while (g.node(id).kind == NodeKind::ARGUMENT) {
    auto kids = g.successors(id, Layer::AST);
    if (kids.empty()) break;
    id = *std::min_element(kids.begin(), kids.end());
  }
  return id;
}

}  // namespace

FlowSet reachable_by_flows(const NodeSet& targets, const NodeSet& sources,
                           const CodePropertyGraph& g, const FlowLimits& limits) {
  FlowSet result;
  if (targets.members.empty() || sources.members.empty() || limits.max_len == 0 ||
      limits.max_paths == 0)
    return result;
  std::size_t n = g.nodes.size();
  std::vector<char> is_target(n, 0), relevant(n, 0);
  std::vector<int> stack;
  for (int t : targets.members) {
    if (t < 0 || static_cast<std::size_t>(t) >= n) continue;
    t = flow_endpoint(g, t);
    is_target[static_cast<std::size_t>(t)] = 1;
    if (!relevant[static_cast<std::size_t>(t)]) {
      relevant[static_cast<std::size_t>(t)] = 1;
      stack.push_back(t);
    }
  }
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int p : g.predecessors(v, Layer::DDG))
      if (!relevant[static_cast<std::size_t>(p)]) {
        relevant[static_cast<std::size_t>(p)] = 1;
        stack.push_back(p);
      }
  }
  std::vector<std::vector<int>> succ(n);
  auto successors = [&](int v) -> const std::vector<int>& {
    auto& s = succ[static_cast<std::size_t>(v)];
    if (s.empty()) {
      for (int d : g.successors(v, Layer::DDG))
        if (relevant[static_cast<std::size_t>(d)]) s.push_back(d);
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      if (s.empty()) s.push_back(-1);  // marks "computed, none"
    }
    return s;
  };

  std::vector<int> starts;
  for (int s : sources.members)
    if (s >= 0 && static_cast<std::size_t>(s) < n &&
        relevant[static_cast<std::size_t>(flow_endpoint(g, s))])
      starts.push_back(flow_endpoint(g, s));
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  std::vector<std::vector<int>> frontier;
  for (int s : starts) frontier.push_back({s});
  for (std::size_t len = 1; !frontier.empty(); ++len) {
    for (const auto& p : frontier) {
      if (!is_target[static_cast<std::size_t>(p.back())]) continue;
      if (result.paths.size() == limits.max_paths) {
        result.limit_exceeded = true;
        return result;
      }
      result.paths.push_back({p});
    }
    std::vector<std::vector<int>> next;
    bool extendable = false;
    for (const auto& p : frontier) {
      for (int d : successors(p.back())) {
        if (d < 0 || std::find(p.begin(), p.end(), d) != p.end()) continue;
        if (len == limits.max_len) {
          extendable = true;
          break;
        }
        if (next.size() == kFrontierCap) {
          result.limit_exceeded = true;
          break;
        }
        auto q = p;
        q.push_back(d);
        next.push_back(std::move(q));
      }
      if (extendable) break;
    }
    if (extendable) {
      result.limit_exceeded = true;
      break;
    }
    frontier = std::move(next);
  }
  return result;
}

namespace {

struct Val {
  enum class T { Cpg, Nodes, Flows, Ints, Strs, Int, Bool, Str };
  T t = T::Nodes;
  std::vector<int> nodes;  // sorted, unique
  FlowSet flows;
  std::vector<long long> ints;
  std::vector<std::string> strs;
  long long i = 0;
  bool b = false;
  std::string s;

  static Val of_nodes(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    Val r;
    r.nodes = std::move(v);
    return r;
  }
  static Val of_bool(bool x) {
    Val r;
    r.t = T::Bool;
    r.b = x;
    return r;
  }
  static Val of_int(long long x) {
    Val r;
    r.t = T::Int;
    r.i = x;
    return r;
  }
};

class Evaluator {
 public:
  Evaluator(const CodePropertyGraph& g, const EvalOptions& options) : g_(g), options_(options) {}

  QueryValue run(const QueryScript& script) {
    for (const auto& b : script.bindings) bindings_[b.name] = eval(*b.expr);
    if (!script.final) throw EvaluationError("script has no result expression");
    Val v = eval(*script.final);
    QueryValue out;
    switch (v.t) {
      case Val::T::Cpg:
        throw EvaluationError("the script result is the graph itself; add a step such as .method");
      case Val::T::Nodes:
        out.type = QueryValue::Type::Nodes;
        out.nodes = std::move(v.nodes);
        break;
      case Val::T::Flows:
        out.type = QueryValue::Type::Flows;
        out.flows = std::move(v.flows);
        break;
      case Val::T::Ints:
        out.type = QueryValue::Type::Ints;
        out.ints = std::move(v.ints);
        break;
      case Val::T::Strs:
        out.type = QueryValue::Type::Strs;
        out.strs = std::move(v.strs);
        break;
      case Val::T::Int:
        out.type = QueryValue::Type::Int;
        out.i = v.i;
        break;
      case Val::T::Bool:
        out.type = QueryValue::Type::Bool;
        out.b = v.b;
        break;
      case Val::T::Str:
        out.type = QueryValue::Type::Str;
        out.s = std::move(v.s);
        break;
    }
    return out;
  }

 private:
  [[noreturn]] static void fail(const QExpr& e, const std::string& msg) {
    throw EvaluationError("at offset " + std::to_string(e.pos) + ": " + msg);
  }

  const std::regex& regex(const std::string& p, const QExpr& at) {
    auto it = regex_cache_.find(p);
    if (it != regex_cache_.end()) return it->second;
    try {
      return regex_cache_.emplace(p, std::regex(p, std::regex::ECMAScript)).first->second;
    } catch (const std::regex_error&) {
      fail(at, "invalid regular expression \"" + p + "\"");
    }
  }

  const std::vector<int>& ast_children(int id) {
    auto it = children_.find(id);
    if (it != children_.end()) return it->second;
    auto c = g_.successors(id, Layer::AST);
    std::sort(c.begin(), c.end());
    return children_.emplace(id, std::move(c)).first->second;
  }

  std::vector<int> descendants(int id) {
    std::vector<int> out;
    std::vector<int> stack(ast_children(id).rbegin(), ast_children(id).rend());
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      out.push_back(v);
      const auto& c = ast_children(v);
      stack.insert(stack.end(), c.rbegin(), c.rend());
    }
    return out;
  }

  bool kind_matches(const CpgNode& n, const std::string& step) const {
    if (step == "method") return n.kind == NodeKind::METHOD;
    if (step == "call") return n.kind == NodeKind::CALL;
    if (step == "identifier") return n.kind == NodeKind::IDENTIFIER;
    if (step == "argument") return n.kind == NodeKind::ARGUMENT;
    if (step == "literal") return n.kind == NodeKind::LITERAL;
    if (step == "parameter") return n.kind == NodeKind::PARAM;
    if (step == "local") return n.kind == NodeKind::LOCAL;
    if (step == "controlStructure")
      return n.kind == NodeKind::CONTROL_STRUCTURE && !is_decision_node(n);
    return step == "all";
  }

  Val lookup(const QExpr& e) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->first == e.name) return it->second;
    auto b = bindings_.find(e.name);
    if (b == bindings_.end())
      fail(e, "'" + e.name + "' is referenced before it is defined");
    return b->second;
  }

  static bool truthy(const Val& v, const QExpr& at) {
    switch (v.t) {
      case Val::T::Bool: return v.b;
      case Val::T::Nodes: return !v.nodes.empty();
      case Val::T::Flows: return !v.flows.paths.empty();
      case Val::T::Ints: return !v.ints.empty();
      case Val::T::Strs: return !v.strs.empty();
      default: fail(at, "predicate does not yield a Boolean or traversal");
    }
  }

  static bool numeric(const Val& v) { return v.t == Val::T::Int || v.t == Val::T::Ints; }
  static bool textual(const Val& v) { return v.t == Val::T::Str || v.t == Val::T::Strs; }
  static std::vector<long long> as_ints(const Val& v) {
    return v.t == Val::T::Int ? std::vector<long long>{v.i} : v.ints;
  }
  static std::vector<std::string> as_strs(const Val& v) {
    return v.t == Val::T::Str ? std::vector<std::string>{v.s} : v.strs;
  }

  static bool equal(const Val& a, const Val& b, const QExpr& at) {
    if (numeric(a) && numeric(b)) return as_ints(a) == as_ints(b);
    if (textual(a) && textual(b)) return as_strs(a) == as_strs(b);
    if (a.t != b.t) fail(at, "cannot compare values of different types");
    switch (a.t) {
      case Val::T::Nodes: return a.nodes == b.nodes;
      case Val::T::Flows: return a.flows.paths == b.flows.paths;
      case Val::T::Bool: return a.b == b.b;
      default: fail(at, "values are not comparable");
    }
  }

  static long long scalar(const Val& v, const QExpr& at) {
    if (v.t == Val::T::Int) return v.i;
    if (v.t == Val::T::Ints && v.ints.size() == 1) return v.ints[0];
    fail(at, "ordering comparison needs a single number");
  }

  Val eval(const QExpr& e) {
    switch (e.kind) {
      case QExpr::Kind::Root: {
        Val v;
        v.t = Val::T::Cpg;
        return v;
      }
      case QExpr::Kind::Str: {
        Val v;
        v.t = Val::T::Str;
        v.s = e.str;
        return v;
      }
      case QExpr::Kind::Int: return Val::of_int(e.num);
      case QExpr::Kind::Bool: return Val::of_bool(e.flag);
      case QExpr::Kind::Var: return lookup(e);
      case QExpr::Kind::Not: return Val::of_bool(!truthy(eval(*e.args[0]), e));
      case QExpr::Kind::Binary: {
        if (e.name == "&&") {
          if (!truthy(eval(*e.args[0]), e)) return Val::of_bool(false);
          return Val::of_bool(truthy(eval(*e.args[1]), e));
        }
        if (e.name == "||") {
          if (truthy(eval(*e.args[0]), e)) return Val::of_bool(true);
          return Val::of_bool(truthy(eval(*e.args[1]), e));
        }
        Val l = eval(*e.args[0]);
        Val r = eval(*e.args[1]);
        if (e.name == "==") return Val::of_bool(equal(l, r, e));
        if (e.name == "!=") return Val::of_bool(!equal(l, r, e));
        long long a = scalar(l, e), b = scalar(r, e);
        if (e.name == "<") return Val::of_bool(a < b);
        if (e.name == "<=") return Val::of_bool(a <= b);
        if (e.name == ">") return Val::of_bool(a > b);
        return Val::of_bool(a >= b);
      }
      case QExpr::Kind::Lambda: fail(e, "lambda outside a step argument");
      case QExpr::Kind::Step: return step(e);
    }
    fail(e, "unsupported expression");
  }

  Val filter_nodes(const Val& recv, const std::function<bool(const CpgNode&)>& keep) {
    Val out;
    for (int id : recv.nodes)
      if (keep(g_.node(id))) out.nodes.push_back(id);
    return out;
  }

  Val step(const QExpr& e) {
    const std::string& s = e.name;
    Val recv = eval(*e.args[0]);
    std::size_t nargs = e.args.size() - 1;
    auto arg = [&](std::size_t i) { return eval(*e.args[i + 1]); };
    auto need = [&](Val::T t, const char* what) {
      if (recv.t != t) fail(e, "'" + s + "' needs " + what);
    };

    if (recv.t == Val::T::Cpg) {
      std::vector<int> out;
      for (const auto& n : g_.nodes)
        if (kind_matches(n, s)) out.push_back(n.id);
      return Val::of_nodes(std::move(out));
    }

    static const std::set<std::string> nav = {"call", "identifier", "literal", "local",
                                              "controlStructure"};
    if (nav.count(s)) {
      need(Val::T::Nodes, "nodes");
      std::vector<int> out;
      for (int id : recv.nodes)
        for (int d : descendants(id))
          if (kind_matches(g_.node(d), s)) out.push_back(d);
      return Val::of_nodes(std::move(out));
    }
    if (s == "argument" || s == "parameter") {
      need(Val::T::Nodes, "nodes");
      long long k = nargs == 1 ? arg(0).i : -1;
      std::vector<int> out;
      for (int id : recv.nodes)
        for (int c : ast_children(id)) {
          const auto& n = g_.node(c);
          if (!kind_matches(n, s)) continue;
          if (k >= 0 && n.order != k) continue;
          out.push_back(c);
        }
      return Val::of_nodes(std::move(out));
    }
    if (s == "method") {
      need(Val::T::Nodes, "nodes");
      std::vector<int> out;
      for (int id : recv.nodes)
        if (g_.node(id).method >= 0) out.push_back(g_.node(id).method);
      return Val::of_nodes(std::move(out));
    }

    if (s == "name" || s == "nameExact" || s == "code" || s == "codeExact" ||
        s == "typeFullName" || s == "fullName" || s == "signature") {
      need(Val::T::Nodes, "nodes");
      auto prop = [&](const CpgNode& n) -> std::string {
        if (s == "code" || s == "codeExact") return n.code;
        if (s == "typeFullName") return n.type_full_name;
        if (s == "signature") return signature(n);
        return n.name;
      };
      if (nargs == 0) {
        Val out;
        out.t = Val::T::Strs;
        for (int id : recv.nodes) out.strs.push_back(prop(g_.node(id)));
        return out;
      }
      Val p = arg(0);
      if (p.t != Val::T::Str) fail(e, "'" + s + "' expects a string");
      if (s == "nameExact" || s == "codeExact")
        return filter_nodes(recv, [&](const CpgNode& n) { return prop(n) == p.s; });
      const std::regex& re = regex(p.s, *e.args[1]);
      return filter_nodes(recv, [&](const CpgNode& n) { return std::regex_match(prop(n), re); });
    }
    if (s == "lineNumber" || s == "order") {
      auto prop = [&](const CpgNode& n) -> long long { return s == "order" ? n.order : n.line; };
      if (recv.t == Val::T::Flows && s == "lineNumber") {
        Val out;
        out.t = Val::T::Ints;
        for (const auto& p : recv.flows.paths)
          for (int id : p.nodes) out.ints.push_back(g_.node(id).line);
        return out;
      }
      need(Val::T::Nodes, "nodes");
      if (nargs == 0) {
        Val out;
        out.t = Val::T::Ints;
        for (int id : recv.nodes) out.ints.push_back(prop(g_.node(id)));
        return out;
      }
      Val k = arg(0);
      if (k.t != Val::T::Int) fail(e, "'" + s + "' expects an integer");
      return filter_nodes(recv, [&](const CpgNode& n) { return prop(n) == k.i; });
    }

    if (s == "where" || s == "whereNot" || s == "filter" || s == "filterNot") {
      need(Val::T::Nodes, "nodes");
      const QExpr& lam = *e.args.at(1);
      if (lam.kind != QExpr::Kind::Lambda) fail(e, "'" + s + "' expects a lambda");
      bool negate = s == "whereNot" || s == "filterNot";
      bool strict = s == "filter" || s == "filterNot";
      Val out;
      for (int id : recv.nodes) {
        scopes_.emplace_back(lam.name, Val::of_nodes({id}));
        Val r = eval(*lam.args[0]);
        scopes_.pop_back();
        if (strict && r.t != Val::T::Bool) fail(lam, "'" + s + "' predicate is not Boolean");
        if (truthy(r, lam) != negate) out.nodes.push_back(id);
      }
      return out;
    }

    if (s == "reachableByFlows" || s == "reachableBy") {
      need(Val::T::Nodes, "sink nodes");
      Val src = arg(0);
      if (src.t != Val::T::Nodes) fail(e, "'" + s + "' needs source nodes");
      FlowSet fs = reachable_by_flows({recv.nodes}, {src.nodes}, g_, options_.limits);
      if (s == "reachableBy") {
        std::vector<int> starts;
        for (const auto& p : fs.paths) starts.push_back(p.nodes.front());
        return Val::of_nodes(std::move(starts));
      }
      Val out;
      out.t = Val::T::Flows;
      out.flows = std::move(fs);
      return out;
    }
    if (s == "elements") {
      need(Val::T::Flows, "paths");
      std::vector<int> all;
      for (const auto& p : recv.flows.paths) all.insert(all.end(), p.nodes.begin(), p.nodes.end());
      return Val::of_nodes(std::move(all));
    }

    if (s == "l" || s == "toList") {
      if (recv.t == Val::T::Int) return lift(recv);
      if (recv.t == Val::T::Str) return lift(recv);
      return recv;
    }
    if (s == "toSet" || s == "dedup") {
      Val out = (recv.t == Val::T::Int || recv.t == Val::T::Str) ? lift(recv) : recv;
      if (out.t == Val::T::Ints) {
        std::sort(out.ints.begin(), out.ints.end());
        out.ints.erase(std::unique(out.ints.begin(), out.ints.end()), out.ints.end());
      } else if (out.t == Val::T::Strs) {
        std::sort(out.strs.begin(), out.strs.end());
        out.strs.erase(std::unique(out.strs.begin(), out.strs.end()), out.strs.end());
      } else if (out.t == Val::T::Flows) {
        std::vector<ExecutionPath> kept;
        std::set<std::vector<int>> seen;
        for (auto& p : out.flows.paths)
          if (seen.insert(p.nodes).second) kept.push_back(std::move(p));
        out.flows.paths = std::move(kept);
      }
      return out;
    }
    if (s == "size" || s == "length" || s == "isEmpty" || s == "nonEmpty") {
      long long n = 0;
      switch (recv.t) {
        case Val::T::Nodes: n = static_cast<long long>(recv.nodes.size()); break;
        case Val::T::Flows: n = static_cast<long long>(recv.flows.paths.size()); break;
        case Val::T::Ints: n = static_cast<long long>(recv.ints.size()); break;
        case Val::T::Strs: n = static_cast<long long>(recv.strs.size()); break;
        case Val::T::Str: n = static_cast<long long>(recv.s.size()); break;
        default: fail(e, "'" + s + "' needs a collection");
      }
      if (s == "isEmpty") return Val::of_bool(n == 0);
      if (s == "nonEmpty") return Val::of_bool(n != 0);
      return Val::of_int(n);
    }
    if (s == "head") {
      switch (recv.t) {
        case Val::T::Nodes:
          if (recv.nodes.empty()) fail(e, "head of an empty traversal");
          return Val::of_nodes({recv.nodes.front()});
        case Val::T::Flows: {
          if (recv.flows.paths.empty()) fail(e, "head of an empty path set");
          Val out;
          out.t = Val::T::Flows;
          out.flows.paths = {recv.flows.paths.front()};
          return out;
        }
        case Val::T::Ints:
          if (recv.ints.empty()) fail(e, "head of an empty list");
          return Val::of_int(recv.ints.front());
        case Val::T::Strs: {
          if (recv.strs.empty()) fail(e, "head of an empty list");
          Val out;
          out.t = Val::T::Str;
          out.s = recv.strs.front();
          return out;
        }
        default: fail(e, "'head' needs a collection");
      }
    }
    if (s == "intersect" || s == "union" || s == "diff") return set_op(e, recv, arg(0));
    if (s == "equals") return Val::of_bool(equal(recv, arg(0), e));
    if (s == "contains") {
      Val x = arg(0);
      if (recv.t == Val::T::Str) return Val::of_bool(recv.s.find(x.s) != std::string::npos);
      if (recv.t == Val::T::Nodes && x.t == Val::T::Nodes)
        return Val::of_bool(std::includes(recv.nodes.begin(), recv.nodes.end(), x.nodes.begin(),
                                          x.nodes.end()));
      if (recv.t == Val::T::Ints && numeric(x)) {
        for (long long v : as_ints(x))
          if (std::find(recv.ints.begin(), recv.ints.end(), v) == recv.ints.end())
            return Val::of_bool(false);
        return Val::of_bool(true);
      }
      if (recv.t == Val::T::Strs && textual(x)) {
        for (const auto& v : as_strs(x))
          if (std::find(recv.strs.begin(), recv.strs.end(), v) == recv.strs.end())
            return Val::of_bool(false);
        return Val::of_bool(true);
      }
      fail(e, "'contains' operands do not match");
    }
    if (s == "matches") {
      Val p = arg(0);
      const std::regex& re = regex(p.s, *e.args[1]);
      for (const auto& v : as_strs(recv))
        if (std::regex_match(v, re)) return Val::of_bool(true);
      return Val::of_bool(false);
    }
    fail(e, "unknown step '" + s + "'");
  }

  static Val lift(const Val& v) {
    Val out;
    if (v.t == Val::T::Int) {
      out.t = Val::T::Ints;
      out.ints = {v.i};
    } else {
      out.t = Val::T::Strs;
      out.strs = {v.s};
    }
    return out;
  }

  template <typename T>
  static std::vector<T> apply_set(const std::string& op, std::vector<T> a, std::vector<T> b) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<T> out;
    if (op == "intersect")
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    else if (op == "union")
      std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    else
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
  }

  static Val set_op(const QExpr& e, const Val& a, const Val& b) {
    Val out;
    if (a.t == Val::T::Nodes && b.t == Val::T::Nodes) {
      out.nodes = apply_set(e.name, a.nodes, b.nodes);
      return out;
    }
    if (numeric(a) && numeric(b)) {
      out.t = Val::T::Ints;
      out.ints = apply_set(e.name, as_ints(a), as_ints(b));
      return out;
    }
    if (textual(a) && textual(b)) {
      out.t = Val::T::Strs;
      out.strs = apply_set(e.name, as_strs(a), as_strs(b));
      return out;
    }
    fail(e, "'" + e.name + "' operands do not match");
  }

  std::string signature(const CpgNode& m) {
    if (m.kind != NodeKind::METHOD) return m.name;
    std::string sig = m.type_full_name + "(";
    bool first = true;
    for (int c : ast_children(m.id)) {
      const auto& p = g_.node(c);
      if (p.kind != NodeKind::PARAM) continue;
      if (!first) sig += ",";
      sig += p.type_full_name;
      first = false;
    }
    return sig + ")";
  }

  const CodePropertyGraph& g_;
  EvalOptions options_;
  std::map<std::string, Val> bindings_;
  std::vector<std::pair<std::string, Val>> scopes_;
  std::map<std::string, std::regex> regex_cache_;
  std::map<int, std::vector<int>> children_;
};

nlohmann::json node_json(const CodePropertyGraph& g, int id) {
  const auto& n = g.node(id);
  return {{"id", n.id},
          {"kind", to_string(n.kind)},
          {"name", n.name},
          {"line", n.line},
          {"code", n.code}};
}

}  // namespace

QueryValue eval_query(const QueryScript& script, const CodePropertyGraph& g,
                      const EvalOptions& options) {
  return Evaluator(g, options).run(script);
}

std::string query_value_to_json(const QueryValue& v, const CodePropertyGraph& g) {
  using nlohmann::json;
  json j;
  switch (v.type) {
    case QueryValue::Type::Nodes: {
      j = json::array();
      for (int id : v.nodes) j.push_back(node_json(g, id));
      break;
    }
    case QueryValue::Type::Flows: {
      json paths = json::array();
      for (const auto& p : v.flows.paths) {
        json path = json::array();
        for (int id : p.nodes) path.push_back(node_json(g, id));
        paths.push_back(std::move(path));
      }
      j = {{"paths", std::move(paths)}, {"limitExceeded", v.flows.limit_exceeded}};
      break;
    }
    case QueryValue::Type::Ints: j = v.ints; break;
    case QueryValue::Type::Strs: j = v.strs; break;
    case QueryValue::Type::Int: j = v.i; break;
    case QueryValue::Type::Bool: j = v.b; break;
    case QueryValue::Type::Str: j = v.s; break;
  }
  return j.dump(1);
}

}  // namespace cpgvd
