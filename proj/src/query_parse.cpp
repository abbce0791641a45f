#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "cpgvd/query.hpp"

namespace cpgvd {

std::string_view to_string(QueryErrorCategory c) {
  switch (c) {
    case QueryErrorCategory::SYNTAX: return "SYNTAX";
    case QueryErrorCategory::UNKNOWN_API: return "UNKNOWN_API";
    case QueryErrorCategory::TYPE_MISUSE: return "TYPE_MISUSE";
  }
  return "?";
}

QueryError::QueryError(QueryErrorCategory category, std::size_t position, int line, int column,
                       const std::string& message)
    : std::runtime_error(std::string(to_string(category)) + " at " + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + message),
      category_(category),
      position_(position),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

enum class TK { Ident, Str, Int, Punct, Newline, End };

struct QTok {
  TK kind;
  std::string text;
  std::size_t pos;
};

bool is_regex_step(const std::string& name) {
  return name == "name" || name == "code" || name == "typeFullName" || name == "fullName" ||
         name == "signature" || name == "matches";
}

// -- static types ------------------------------------------------------------

enum class VT { Cpg, Nodes, Flows, Ints, Strs, Int, Bool, Str, Unknown };
enum class Elem { Any, Method, Call, Identifier, Argument, Literal, Parameter, Local, Control };

struct QT {
  VT t = VT::Unknown;
  Elem e = Elem::Any;
};

std::string_view elem_name(Elem e) {
  switch (e) {
    case Elem::Any: return "node";
    case Elem::Method: return "Method";
    case Elem::Call: return "Call";
    case Elem::Identifier: return "Identifier";
    case Elem::Argument: return "Argument";
    case Elem::Literal: return "Literal";
    case Elem::Parameter: return "MethodParameterIn";
    case Elem::Local: return "Local";
    case Elem::Control: return "ControlStructure";
  }
  return "node";
}

std::string type_name(QT t) {
  switch (t.t) {
    case VT::Cpg: return "Cpg";
    case VT::Nodes: return "Traversal[" + std::string(elem_name(t.e)) + "]";
    case VT::Flows: return "Traversal[Path]";
    case VT::Ints: return "List[Int]";
    case VT::Strs: return "List[String]";
    case VT::Int: return "Int";
    case VT::Bool: return "Boolean";
    case VT::Str: return "String";
    case VT::Unknown: return "<unknown>";
  }
  return "?";
}

const std::map<std::string, Elem>& navigation_steps() {
  static const std::map<std::string, Elem> m = {
      {"method", Elem::Method},         {"call", Elem::Call},
      {"identifier", Elem::Identifier}, {"argument", Elem::Argument},
      {"literal", Elem::Literal},       {"parameter", Elem::Parameter},
      {"local", Elem::Local},           {"controlStructure", Elem::Control},
      {"all", Elem::Any}};
  return m;
}

const std::set<std::string>& known_steps() {
  static const std::set<std::string> s = {
      "method",    "call",       "identifier", "argument",  "literal",     "parameter",
      "local",     "controlStructure", "all",  "name",      "nameExact",   "code",
      "codeExact", "order",      "lineNumber", "typeFullName", "fullName", "signature",
      "where",     "whereNot",   "filter",     "filterNot", "reachableByFlows",
      "reachableBy", "elements", "l",          "toList",    "toSet",       "dedup",
      "size",      "length",     "isEmpty",    "nonEmpty",  "head",        "intersect",
      "union",     "diff",       "equals",     "contains",  "matches"};
  return s;
}

class QueryParser {
 public:
  QueryParser(std::string_view text, const QueryParseOptions& options)
      : text_(text), lines_(text), options_(options) {
    tokenize();
  }

  QueryScript parse() {
    QueryScript script;
    script.text = std::string(text_);
    std::set<std::string> names;
    std::vector<QExprPtr> bare;
    skip_separators();
    while (peek().kind != TK::End) {
      if (peek().kind == TK::Ident && peek().text == "val") {
        std::size_t pos = next().pos;
        if (peek().kind != TK::Ident) fail_syntax(peek(), "expected binding name after 'val'");
        QTok name = next();
        if (!names.insert(name.text).second)
          fail(QueryErrorCategory::SYNTAX, name.pos, "duplicate binding '" + name.text + "'");
        expect_punct("=", "after binding name");
        QExprPtr e = parse_expr();
        script.bindings.push_back({name.text, e, pos});
        bare.push_back(nullptr);
      } else {
        QExprPtr e = parse_expr();
        bare.push_back(e);
        script.final = e;
      }
      if (peek().kind == TK::End) break;
      if (!(peek().kind == TK::Newline || (peek().kind == TK::Punct && peek().text == ";")))
        fail_syntax(peek(), "expected end of statement");
      skip_separators();
    }
    if (bare.empty()) fail(QueryErrorCategory::SYNTAX, text_.size(), "empty query");
    // A script ending in a binding uses that binding as its result.
    if (!bare.back()) {
      auto v = std::make_shared<QExpr>();
      v->kind = QExpr::Kind::Var;
      v->name = script.bindings.back().name;
      v->pos = script.bindings.back().pos;
      script.final = v;
    }

    // Static checks, in program order.
    std::map<std::string, QT> env;
    std::size_t bi = 0;
    QT final_type;
    for (std::size_t i = 0; i < bare.size(); ++i) {
      if (!bare[i]) {
        const auto& b = script.bindings[bi++];
        env[b.name] = check(*b.expr, env, script.advisories);
        final_type = env[b.name];
      } else {
        final_type = check(*bare[i], env, script.advisories);
      }
    }
    if (bare.back() == nullptr) final_type = env[script.bindings.back().name];
    if (options_.require_flows && final_type.t != VT::Flows && final_type.t != VT::Unknown)
      fail(QueryErrorCategory::TYPE_MISUSE, script.final->pos,
           "final expression yields " + type_name(final_type) +
               " but path extraction needs the result of reachableByFlows");
    return script;
  }

 private:
  // -- tokens --------------------------------------------------------------

  void tokenize() {
    std::size_t i = 0;
    int depth = 0;
    while (i < text_.size()) {
      char c = text_[i];
      if (c == '\n') {
        if (depth == 0) toks_.push_back({TK::Newline, "\n", i});
        ++i;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (c == '/' && i + 1 < text_.size() && text_[i + 1] == '/') {
        while (i < text_.size() && text_[i] != '\n') ++i;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i + 1;
        while (j < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
          ++j;
        toks_.push_back({TK::Ident, std::string(text_.substr(i, j - i)), i});
        i = j;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t j = i + 1;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        if (j < text_.size() && (text_[j] == 'L' || text_[j] == 'l')) {
          toks_.push_back({TK::Int, std::string(text_.substr(i, j - i)), i});
          i = j + 1;
          continue;
        }
        toks_.push_back({TK::Int, std::string(text_.substr(i, j - i)), i});
        i = j;
        continue;
      }
      if (c == '"' || c == '\'') {
        std::string value;
        std::size_t j = i + 1;
        bool closed = false;
        while (j < text_.size()) {
          char d = text_[j];
          if (d == '\\' && j + 1 < text_.size()) {
            char e = text_[j + 1];
            switch (e) {
              case 'n': value.push_back('\n'); break;
              case 't': value.push_back('\t'); break;
              case '\\': value.push_back('\\'); break;
              case '"': value.push_back('"'); break;
              case '\'': value.push_back('\''); break;
              default:
                value.push_back('\\');
                value.push_back(e);
            }
            j += 2;
            continue;
          }
          if (d == c) {
            closed = true;
            break;
          }
          if (d == '\n') break;
          value.push_back(d);
          ++j;
        }
        if (!closed) fail(QueryErrorCategory::SYNTAX, i, "unterminated string literal");
        toks_.push_back({TK::Str, value, i});
        i = j + 1;
        continue;
      }
      static const char* two[] = {"=>", "==", "!=", "<=", ">=", "&&", "||"};
      bool matched = false;
      for (const char* p : two) {
        if (text_.substr(i, 2) == p) {
          toks_.push_back({TK::Punct, p, i});
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("().,=<>!;-").find(c) != std::string_view::npos) {
        if (c == '(') ++depth;
        if (c == ')' && depth > 0) --depth;
        toks_.push_back({TK::Punct, std::string(1, c), i});
        ++i;
        continue;
      }
      fail(QueryErrorCategory::SYNTAX, i, std::string("unexpected character '") + c + "'");
    }
    toks_.push_back({TK::End, "", text_.size()});
  }

  const QTok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  QTok next() {
    QTok t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_punct(const QTok& t, std::string_view p) const {
    return t.kind == TK::Punct && t.text == p;
  }
  // Looks past newlines for a continuation token (".", binary operator).
  bool continues_with(std::initializer_list<std::string_view> ps) {
    std::size_t k = 0;
    while (peek(k).kind == TK::Newline) ++k;
    for (auto p : ps)
      if (is_punct(peek(k), p)) {
        pos_ += k;
        return true;
      }
    return false;
  }
  void skip_separators() {
    while (peek().kind == TK::Newline || is_punct(peek(), ";")) next();
  }
  void expect_punct(std::string_view p, std::string_view context) {
    if (!is_punct(peek(), p))
      fail_syntax(peek(), "expected '" + std::string(p) + "' " + std::string(context));
    next();
  }

  [[noreturn]] void fail(QueryErrorCategory c, std::size_t pos, const std::string& msg) const {
    std::size_t at = std::min(pos, text_.empty() ? 0 : text_.size() - 1);
    int line = text_.empty() ? 1 : lines_.line_of(at);
    int col = text_.empty() ? 1 : lines_.column_of(at);
    throw QueryError(c, pos, line, col, msg);
  }
  [[noreturn]] void fail_syntax(const QTok& t, const std::string& msg) const {
    std::string near = t.kind == TK::End ? "end of input" : t.kind == TK::Newline ? "newline" : "'" + t.text + "'";
    fail(QueryErrorCategory::SYNTAX, t.pos, msg + " near " + near);
  }

  // -- grammar -------------------------------------------------------------

  static QExprPtr make(QExpr e) { return std::make_shared<const QExpr>(std::move(e)); }

  QExprPtr binary(const std::string& op, QExprPtr l, QExprPtr r, std::size_t pos) {
    QExpr e;
    e.kind = QExpr::Kind::Binary;
    e.name = op;
    e.pos = pos;
    e.args = {std::move(l), std::move(r)};
    return make(std::move(e));
  }

  QExprPtr parse_expr() { return parse_or(); }

  QExprPtr parse_or() {
    QExprPtr l = parse_and();
    while (continues_with({"||"})) {
      std::size_t pos = next().pos;
      l = binary("||", l, parse_and(), pos);
    }
    return l;
  }
  QExprPtr parse_and() {
    QExprPtr l = parse_cmp();
    while (continues_with({"&&"})) {
      std::size_t pos = next().pos;
      l = binary("&&", l, parse_cmp(), pos);
    }
    return l;
  }
  QExprPtr parse_cmp() {
    QExprPtr l = parse_unary();
    for (auto op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (is_punct(peek(), op)) {
        std::size_t pos = next().pos;
        return binary(op, l, parse_unary(), pos);
      }
    }
    return l;
  }
  QExprPtr parse_unary() {
    if (is_punct(peek(), "!")) {
      std::size_t pos = next().pos;
      QExpr e;
      e.kind = QExpr::Kind::Not;
      e.pos = pos;
      e.args = {parse_unary()};
      return make(std::move(e));
    }
    if (is_punct(peek(), "-") && peek(1).kind == TK::Int) {
      std::size_t pos = next().pos;
      QExpr e;
      e.kind = QExpr::Kind::Int;
      e.num = -std::stoll(next().text);
      e.pos = pos;
      return parse_postfix(make(std::move(e)));
    }
    return parse_postfix(parse_primary());
  }

  QExprPtr parse_primary() {
    QTok t = peek();
    if (t.kind == TK::Str) {
      next();
      QExpr e;
      e.kind = QExpr::Kind::Str;
      e.str = t.text;
      e.pos = t.pos;
      return make(std::move(e));
    }
    if (t.kind == TK::Int) {
      next();
      QExpr e;
      e.kind = QExpr::Kind::Int;
      try {
        e.num = std::stoll(t.text);
      } catch (const std::exception&) {
        fail(QueryErrorCategory::SYNTAX, t.pos, "integer literal out of range");
      }
      e.pos = t.pos;
      return make(std::move(e));
    }
    if (t.kind == TK::Ident) {
      next();
      QExpr e;
      e.pos = t.pos;
      if (t.text == "cpg") {
        e.kind = QExpr::Kind::Root;
      } else if (t.text == "true" || t.text == "false") {
        e.kind = QExpr::Kind::Bool;
        e.flag = t.text == "true";
      } else if (t.text == "val") {
        fail_syntax(t, "'val' is only allowed at the start of a statement");
      } else {
        e.kind = QExpr::Kind::Var;
        e.name = t.text;
      }
      return make(std::move(e));
    }
    if (is_punct(t, "(")) {
      next();
      QExprPtr inner = parse_expr();
      while (peek().kind == TK::Newline) next();
      expect_punct(")", "closing parenthesis");
      return inner;
    }
    fail_syntax(t, "expected an expression");
  }

  QExprPtr parse_postfix(QExprPtr e) {
    while (continues_with({"."})) {
      next();
      if (peek().kind != TK::Ident) fail_syntax(peek(), "expected a step name after '.'");
      QTok name = next();
      QExpr step;
      step.kind = QExpr::Kind::Step;
      step.name = name.text;
      step.pos = name.pos;
      step.args.push_back(e);
      if (is_punct(peek(), "(")) {
        next();
        step.call_syntax = true;
        if (!is_punct(peek(), ")")) {
          for (;;) {
            step.args.push_back(parse_argument());
            if (is_punct(peek(), ",")) {
              next();
              continue;
            }
            break;
          }
        }
        expect_punct(")", "closing argument list of '" + name.text + "'");
      }
      e = make(std::move(step));
    }
    return e;
  }

  static bool mentions_placeholder(const QExpr& e) {
    if (e.kind == QExpr::Kind::Var && e.name == "_") return true;
    if (e.kind == QExpr::Kind::Lambda) return false;
    for (const auto& a : e.args)
      if (a && mentions_placeholder(*a)) return true;
    return false;
  }

  QExprPtr lambda(const std::string& param, QExprPtr body, std::size_t pos) {
    QExpr e;
    e.kind = QExpr::Kind::Lambda;
    e.name = param;
    e.pos = pos;
    e.args = {std::move(body)};
    return make(std::move(e));
  }

  QExprPtr parse_argument() {
    if (peek().kind == TK::Ident && is_punct(peek(1), "=>")) {
      QTok p = next();
      next();
      return lambda(p.text, parse_expr(), p.pos);
    }
    if (is_punct(peek(), "(") && peek(1).kind == TK::Ident && is_punct(peek(2), ")") &&
        is_punct(peek(3), "=>")) {
      std::size_t pos = next().pos;
      QTok p = next();
      next();
      next();
      return lambda(p.text, parse_expr(), pos);
    }
    QExprPtr e = parse_expr();
    if (mentions_placeholder(*e)) return lambda("_", e, e->pos);
    return e;
  }

  // -- type checking -------------------------------------------------------

  [[noreturn]] void misuse(const QExpr& e, const std::string& msg) const {
    fail(QueryErrorCategory::TYPE_MISUSE, e.pos, msg);
  }

  void check_regex(const QExpr& arg) const {
    if (arg.kind != QExpr::Kind::Str) return;
    try {
      std::regex re(arg.str, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
      fail(QueryErrorCategory::SYNTAX, arg.pos, "invalid regular expression \"" + arg.str + "\"");
    }
  }

  void advise(const QExpr& step, QT recv, std::vector<Advisory>& out) const {
    if (step.args.size() != 2 || step.args[1]->kind != QExpr::Kind::Str) return;
    const std::string& p = step.args[1]->str;
    if (step.name == "code" && (recv.e == Elem::Call || recv.e == Elem::Any)) {
      static const std::regex bare("[A-Za-z_][A-Za-z0-9_]*");
      if (std::regex_match(p, bare)) {
        out.push_back({"CODE_VS_NAME",
                       "code(\"" + p + "\") must match the entire call text; use name(\"" + p +
                           "\") to match the callee",
                       step.pos});
        return;
      }
    }
    if (step.name == "code" || step.name == "name") {
      bool self = false;
      try {
        self = std::regex_match(p, std::regex(p, std::regex::ECMAScript));
      } catch (const std::regex_error&) {
      }
      // Alternation, escapes, classes and wildcards show the regex is meant.
      bool intended = p.find_first_of("|\\[") != std::string::npos ||
                      p.find(".*") != std::string::npos || p.find(".+") != std::string::npos;
      if (!self && !intended)
        out.push_back({"REGEX_VS_EXACT",
                       step.name + "(\"" + p +
                           "\") is a regular expression that does not match its own text; "
                           "use codeExact for literal matching",
                       step.pos});
    }
  }

  static bool numeric(VT t) { return t == VT::Int || t == VT::Ints; }
  static bool textual(VT t) { return t == VT::Str || t == VT::Strs; }
  static bool comparable(QT a, QT b) {
    if (a.t == VT::Unknown || b.t == VT::Unknown) return true;
    if (numeric(a.t) && numeric(b.t)) return true;
    if (textual(a.t) && textual(b.t)) return true;
    return a.t == b.t && a.t != VT::Cpg;
  }

  QT check(const QExpr& e, std::map<std::string, QT>& env, std::vector<Advisory>& adv) const {
    switch (e.kind) {
      case QExpr::Kind::Root: return {VT::Cpg};
      case QExpr::Kind::Str: return {VT::Str};
      case QExpr::Kind::Int: return {VT::Int};
      case QExpr::Kind::Bool: return {VT::Bool};
      case QExpr::Kind::Var: {
        auto it = env.find(e.name);
        return it == env.end() ? QT{VT::Unknown} : it->second;
      }
      case QExpr::Kind::Not: {
        QT t = check(*e.args[0], env, adv);
        if (t.t != VT::Bool && t.t != VT::Unknown) misuse(e, "'!' applied to " + type_name(t));
        return {VT::Bool};
      }
      case QExpr::Kind::Binary: {
        QT l = check(*e.args[0], env, adv);
        QT r = check(*e.args[1], env, adv);
        if (e.name == "&&" || e.name == "||") {
          for (QT t : {l, r})
            if (t.t != VT::Bool && t.t != VT::Unknown)
              misuse(e, "'" + e.name + "' applied to " + type_name(t));
          return {VT::Bool};
        }
        if (e.name == "==" || e.name == "!=") {
          if (!comparable(l, r)) misuse(e, "cannot compare " + type_name(l) + " with " + type_name(r));
          return {VT::Bool};
        }
        for (QT t : {l, r})
          if (!numeric(t.t) && t.t != VT::Unknown)
            misuse(e, "'" + e.name + "' needs numbers, got " + type_name(t));
        return {VT::Bool};
      }
      case QExpr::Kind::Lambda:
        misuse(e, "a lambda is only allowed as a step argument");
      case QExpr::Kind::Step:
        return check_step(e, env, adv);
    }
    return {};
  }

  QT check_lambda(const QExpr& lam, QT elem, std::map<std::string, QT>& env,
                  std::vector<Advisory>& adv) const {
    auto saved = env.find(lam.name) != env.end() ? std::optional<QT>(env[lam.name]) : std::nullopt;
    env[lam.name] = elem;
    QT body = check(*lam.args[0], env, adv);
    if (saved) env[lam.name] = *saved;
    else env.erase(lam.name);
    return body;
  }

  QT check_step(const QExpr& e, std::map<std::string, QT>& env, std::vector<Advisory>& adv) const {
    const std::string& s = e.name;
    if (!known_steps().count(s)) fail(QueryErrorCategory::UNKNOWN_API, e.pos, "unknown step '" + s + "'");
    QT recv = check(*e.args[0], env, adv);
    std::size_t nargs = e.args.size() - 1;
    std::vector<QT> args;
    for (std::size_t i = 1; i < e.args.size(); ++i) {
      if (e.args[i]->kind == QExpr::Kind::Lambda) args.push_back({VT::Unknown});
      else args.push_back(check(*e.args[i], env, adv));
    }
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (nargs < lo || nargs > hi)
        misuse(e, "'" + s + "' takes " + (lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi)) +
                      " argument(s), got " + std::to_string(nargs));
    };
    auto arg_is = [&](std::size_t i, VT t) {
      if (args[i].t != t && args[i].t != VT::Unknown)
        misuse(*e.args[i + 1], "'" + s + "' expects " + type_name({t}) + " but got " + type_name(args[i]));
    };
    auto lambda_arg = [&]() -> const QExpr& {
      arity(1, 1);
      if (e.args[1]->kind != QExpr::Kind::Lambda)
        misuse(*e.args[1], "'" + s + "' expects a lambda such as _.name(\"x\")");
      return *e.args[1];
    };
    if (recv.t == VT::Unknown) {
      // Receiver type unknown (undefined binding); still validate literals.
      for (std::size_t i = 1; i < e.args.size(); ++i)
        if (is_regex_step(s)) check_regex(*e.args[i]);
      return {VT::Unknown};
    }

    if (recv.t == VT::Cpg) {
      auto nav = navigation_steps().find(s);
      if (nav == navigation_steps().end()) misuse(e, "'" + s + "' is not a root step of cpg");
      arity(0, 0);
      return {VT::Nodes, nav->second};
    }

    bool is_nodes = recv.t == VT::Nodes;
    auto allowed = [&](std::initializer_list<Elem> elems) {
      if (recv.e == Elem::Any) return;
      for (Elem x : elems)
        if (x == recv.e) return;
      misuse(e, "'" + s + "' is not defined on " + std::string(elem_name(recv.e)) + " nodes");
    };

    // Node navigation and properties.
    if (navigation_steps().count(s) && s != "all") {
      if (!is_nodes) misuse(e, "'" + s + "' needs nodes but the receiver is " + type_name(recv));
      if (s == "argument") {
        allowed({Elem::Call});
        arity(0, 1);
        if (nargs == 1) arg_is(0, VT::Int);
        return {VT::Nodes, Elem::Argument};
      }
      arity(0, 0);
      if (s == "method") return {VT::Nodes, Elem::Method};
      if (s == "parameter") {
        allowed({Elem::Method});
        return {VT::Nodes, Elem::Parameter};
      }
      allowed({Elem::Method, Elem::Call, Elem::Argument, Elem::Control});
      return {VT::Nodes, navigation_steps().at(s)};
    }
    if (s == "all") misuse(e, "'all' is only defined on cpg");

    if (s == "name" || s == "nameExact" || s == "code" || s == "codeExact" ||
        s == "typeFullName" || s == "fullName" || s == "signature" || s == "lineNumber" ||
        s == "order") {
      if (!is_nodes) misuse(e, "'" + s + "' needs nodes but the receiver is " + type_name(recv));
      if (s == "name" || s == "nameExact")
        allowed({Elem::Method, Elem::Call, Elem::Identifier, Elem::Parameter, Elem::Local});
      if (s == "typeFullName")
        allowed({Elem::Identifier, Elem::Parameter, Elem::Local, Elem::Literal});
      if (s == "fullName" || s == "signature") allowed({Elem::Method});
      bool exact = s == "nameExact" || s == "codeExact";
      arity(exact ? 1 : 0, 1);
      if (nargs == 0) return {(s == "lineNumber" || s == "order") ? VT::Ints : VT::Strs};
      if (s == "lineNumber" || s == "order") arg_is(0, VT::Int);
      else arg_is(0, VT::Str);
      if (is_regex_step(s)) check_regex(*e.args[1]);
      advise(e, recv, adv);
      return recv;
    }

    if (s == "where" || s == "whereNot" || s == "filter" || s == "filterNot") {
      if (!is_nodes) misuse(e, "'" + s + "' needs nodes but the receiver is " + type_name(recv));
      const QExpr& lam = lambda_arg();
      QT body = check_lambda(lam, recv, env, adv);
      bool is_filter = s == "filter" || s == "filterNot";
      if (is_filter && body.t != VT::Bool && body.t != VT::Unknown)
        misuse(lam, "'" + s + "' needs a Boolean predicate but the lambda yields " + type_name(body));
      if (!is_filter && body.t != VT::Bool && body.t != VT::Nodes && body.t != VT::Flows &&
          body.t != VT::Unknown)
        misuse(lam, "'" + s + "' needs a traversal or Boolean but the lambda yields " + type_name(body));
      return recv;
    }

    if (s == "reachableByFlows" || s == "reachableBy") {
      if (!is_nodes) misuse(e, "'" + s + "' needs sink nodes but the receiver is " + type_name(recv));
      arity(1, 1);
      if (args[0].t != VT::Nodes && args[0].t != VT::Unknown)
        misuse(*e.args[1], "'" + s + "' needs source nodes but got " + type_name(args[0]));
      return s == "reachableByFlows" ? QT{VT::Flows} : QT{VT::Nodes, Elem::Any};
    }
    if (s == "elements") {
      if (recv.t != VT::Flows) misuse(e, "'elements' is defined on paths only");
      arity(0, 0);
      return {VT::Nodes, Elem::Any};
    }

    bool collection = recv.t == VT::Nodes || recv.t == VT::Flows || recv.t == VT::Ints ||
                      recv.t == VT::Strs;
    if (s == "l" || s == "toList" || s == "toSet" || s == "dedup") {
      arity(0, 0);
      if (recv.t == VT::Int) return {VT::Ints};
      if (recv.t == VT::Str) return {VT::Strs};
      if (!collection) misuse(e, "'" + s + "' is not defined on " + type_name(recv));
      return recv;
    }
    if (s == "size" || s == "length") {
      arity(0, 0);
      if (!collection && recv.t != VT::Str) misuse(e, "'" + s + "' is not defined on " + type_name(recv));
      return {VT::Int};
    }
    if (s == "isEmpty" || s == "nonEmpty") {
      arity(0, 0);
      if (!collection) misuse(e, "'" + s + "' is not defined on " + type_name(recv));
      return {VT::Bool};
    }
    if (s == "head") {
      arity(0, 0);
      if (!collection) misuse(e, "'head' is not defined on " + type_name(recv));
      if (recv.t == VT::Ints) return {VT::Int};
      if (recv.t == VT::Strs) return {VT::Str};
      return recv;
    }
    if (s == "intersect" || s == "union" || s == "diff") {
      arity(1, 1);
      if (recv.t == VT::Flows || !collection)
        misuse(e, "'" + s + "' is not defined on " + type_name(recv));
      QT a = args[0];
      bool ok = a.t == VT::Unknown || a.t == recv.t || (recv.t == VT::Ints && a.t == VT::Int) ||
                (recv.t == VT::Strs && a.t == VT::Str);
      if (!ok) misuse(*e.args[1], "'" + s + "' mixes " + type_name(recv) + " with " + type_name(a));
      if (recv.t == VT::Nodes && a.t == VT::Nodes && a.e != recv.e) return {VT::Nodes, Elem::Any};
      return recv;
    }
    if (s == "equals") {
      arity(1, 1);
      if (!comparable(recv, args[0]))
        misuse(e, "cannot compare " + type_name(recv) + " with " + type_name(args[0]));
      return {VT::Bool};
    }
    if (s == "contains") {
      arity(1, 1);
      if (recv.t == VT::Str) {
        arg_is(0, VT::Str);
        return {VT::Bool};
      }
      if (!collection || recv.t == VT::Flows) misuse(e, "'contains' is not defined on " + type_name(recv));
      return {VT::Bool};
    }
    if (s == "matches") {
      arity(1, 1);
      if (recv.t != VT::Str && recv.t != VT::Strs) misuse(e, "'matches' needs a String receiver");
      arg_is(0, VT::Str);
      check_regex(*e.args[1]);
      return {VT::Bool};
    }
    misuse(e, "'" + s + "' is not defined on " + type_name(recv));
  }

  std::string_view text_;
  LineIndex lines_;
  QueryParseOptions options_;
  std::vector<QTok> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryScript parse_query(std::string_view text, const QueryParseOptions& options) {
  return QueryParser(text, options).parse();
}

}  // namespace cpgvd
