#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "cpgvd/cpg.hpp"
#include "cpgvd/frontend.hpp"
#include "skeleton.hpp"

namespace cpgvd {

namespace {

enum class Role { Use, Def, DefUse, WeakDefUse, AddrDef };

struct DefSite {
  int node;
  int stmt;
  std::string var;
  bool strong;
  bool gen;  // false for declarations without initializer (kill only)
};

struct UseSite {
  int node;
  int stmt;
  std::vector<std::string> vars;
};

struct Pend {
  int src;
  CfgLabel label;
};
using Pends = std::vector<Pend>;

void append(Pends& a, const Pends& b) { a.insert(a.end(), b.begin(), b.end()); }

std::string literal_type(std::string_view code) {
  if (code.empty()) return "ANY";
  if (code.front() == '"' || code.back() == '"') return "char*";
  if (code.front() == '\'' || code.back() == '\'') return "char";
  bool hex = code.size() > 1 && code[0] == '0' && (code[1] == 'x' || code[1] == 'X');
  if (!hex && (code.find('.') != std::string_view::npos ||
               code.find_first_of("eE") != std::string_view::npos))
    return "double";
  return "int";
}

class Bitset {
 public:
  explicit Bitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  void or_with(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  }
  void and_not(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  }
  bool operator==(const Bitset& o) const { return words_ == o.words_; }

 private:
  std::vector<std::uint64_t> words_;
};

class Builder {
 public:
  Builder(const SourceUnit& unit, const BuildOptions& options)
      : text_(unit.text), lines_(unit.text), options_(options) {
    stripped_ = strip_comments(unit).text;
    g_.unit = unit.id;
  }

  CodePropertyGraph build(const AstNode& root) {
    if (root.kind != AstKind::TranslationUnit)
      throw MalformedAst("root node is not a TranslationUnit");
    // Globals are emitted first so that every function sees them.
    for (const auto& c : root.children)
      if (c.kind == AstKind::VarDecl) emit_global(c);
    for (const auto& c : root.children)
      if (c.kind == AstKind::FunctionDef) emit_function(c);
    g_.reindex();
    for (const auto& e : ddg_) add_ddg(e.src, e.dst, e.var);
    for (std::size_t f = 0; f < g_.functions.size(); ++f) {
      build_ddg(g_.functions[f]);
      build_cdg(g_.functions[f]);
    }
    g_.reindex();
    return std::move(g_);
  }

 private:
  // -- node creation -------------------------------------------------------

  int add_node(NodeKind kind, std::size_t begin, std::size_t end, int parent) {
    if (end < begin || end > text_.size())
      throw MalformedAst("node span outside unit text");
    CpgNode n;
    n.id = static_cast<int>(g_.nodes.size());
    n.kind = kind;
    n.begin = begin;
    n.end = end;
    n.code = text_.substr(begin, end - begin);
    n.line = lines_.line_of(begin);
    n.line_end = lines_.line_of(end > begin ? end - 1 : begin);
    n.method = method_;
    n.ast_parent = parent;
    g_.nodes.push_back(std::move(n));
    if (parent >= 0) g_.edges.push_back({parent, g_.nodes.back().id, Layer::AST, {}, CfgLabel::None});
    return g_.nodes.back().id;
  }
  int add_node(NodeKind kind, const AstNode& a, int parent) {
    return add_node(kind, a.span.begin, a.span.end, parent);
  }
  CpgNode& at(int id) { return g_.nodes[static_cast<std::size_t>(id)]; }

  void ddg_edge(int src, int dst, const std::string& var) {
    ddg_.push_back({src, dst, Layer::DDG, var, CfgLabel::None});
  }
  void cfg_edge(int src, int dst, CfgLabel label) {
    g_.edges.push_back({src, dst, Layer::CFG, {}, label});
  }

  std::string type_of(const std::string& name) const {
    auto it = scope_types_.find(name);
    if (it != scope_types_.end()) return it->second;
    auto gt = global_types_.find(name);
    if (gt != global_types_.end()) return gt->second;
    return "ANY";
  }

  // Offset just past the ')' closing a control-structure header.
  std::size_t header_end(std::size_t from) const {
    std::size_t i = from;
    while (i < stripped_.size() && stripped_[i] != ')') ++i;
    return i < stripped_.size() ? i + 1 : from;
  }

  // -- globals and functions -----------------------------------------------

  void emit_global(const AstNode& decl) {
    if (decl.op == "prototype") return;
    int id = add_node(NodeKind::LOCAL, decl, -1);
    at(id).name = decl.name;
    at(id).type_full_name = decl.type;
    global_types_[decl.name] = decl.type;
    if (!decl.children.empty()) emit_expr(decl.children[0], id, Role::Use, id, -1);
    globals_.push_back(id);
  }

  void emit_function(const AstNode& fn) {
    const AstNode* body = nullptr;
    for (const auto& c : fn.children)
      if (c.kind == AstKind::Block) body = &c;
    if (!body) throw MalformedAst("function '" + fn.name + "' has no body");

    method_ = static_cast<int>(g_.nodes.size());
    std::size_t sig_end = body->span.begin;
    while (sig_end > fn.span.begin && std::isspace(static_cast<unsigned char>(text_[sig_end - 1])))
      --sig_end;
    int m = add_node(NodeKind::METHOD, fn.span.begin, sig_end, -1);
    at(m).name = fn.name;
    at(m).type_full_name = fn.type;
    at(m).line_end = lines_.line_of(fn.span.end > 0 ? fn.span.end - 1 : 0);
    at(m).end = fn.span.end;
    at(m).method = m;
    g_.functions.push_back(m);

    entry_ = add_node(NodeKind::ENTRY, fn.span.begin, fn.span.begin, m);
    at(entry_).name = "ENTRY";
    at(entry_).cfg_owner = entry_;
    exit_ = add_node(NodeKind::EXIT, fn.span.end, fn.span.end, m);
    at(exit_).name = "EXIT";
    at(exit_).cfg_owner = exit_;
    at(exit_).line = at(exit_).line_end = lines_.line_of(fn.span.end > 0 ? fn.span.end - 1 : 0);
    int ret = add_node(NodeKind::METHOD_RETURN, fn.span.begin, fn.span.begin, m);
    at(ret).name = "RET";
    at(ret).code = fn.type;
    at(ret).type_full_name = fn.type;

    scope_types_.clear();
    entry_defs_.clear();
    for (int g : globals_) entry_defs_.push_back({g, entry_, at(g).name, true, true});
    int order = 0;
    for (const auto& p : fn.children) {
      if (p.kind != AstKind::ParamDecl) continue;
      ++order;
      if (p.type == "...") continue;
      int id = add_node(NodeKind::PARAM, p, m);
      at(id).name = p.name;
      at(id).order = order;
      at(id).type_full_name = p.type;
      at(id).cfg_owner = entry_;
      if (!p.name.empty()) {
        scope_types_[p.name] = p.type;
        entry_defs_.push_back({id, entry_, p.name, true, true});
      }
    }

    emit_stmt(*body, m);
    build_cfg(*body);
    method_ = -1;
  }

  // -- statements ----------------------------------------------------------

  int make_stmt(NodeKind kind, const AstNode& a, int parent) {
    int id = add_node(kind, a, parent);
    at(id).cfg_owner = id;
    stmt_id_[&a] = id;
    return id;
  }

  int make_control(const AstNode& a, int parent, const std::string& name, std::size_t end) {
    int id = add_node(NodeKind::CONTROL_STRUCTURE, a.span.begin, end, parent);
    at(id).name = name;
    at(id).cfg_owner = id;
    stmt_id_[&a] = id;
    return id;
  }

  void emit_condition(const AstNode& owner_ast, int cs, const AstNode& cond) {
    std::vector<detail::ConditionLeaf> leaves;
    detail::condition_leaves(cond, leaves);
    std::vector<int> ids{cs};
    for (std::size_t i = 1; i < leaves.size(); ++i) {
      int d = add_node(NodeKind::CONTROL_STRUCTURE, *leaves[i].node, cs);
      at(d).name = leaves[i].op;
      at(d).cfg_owner = d;
      ids.push_back(d);
    }
    leaf_ids_[&owner_ast] = std::move(ids);
    emit_expr(cond, cs, Role::Use, cs, -1);
  }

  void emit_local(const AstNode& decl, int parent) {
    if (decl.op == "prototype") return;
    int id = make_stmt(NodeKind::LOCAL, decl, parent);
    at(id).name = decl.name;
    at(id).type_full_name = decl.type;
    scope_types_[decl.name] = decl.type;
    bool init = !decl.children.empty();
    if (init) emit_expr(decl.children[0], id, Role::Use, id, -1);
    defs_.push_back({id, id, decl.name, true, init});
  }

  void emit_stmt(const AstNode& a, int parent) {
    switch (a.kind) {
      case AstKind::Block: {
        int id = add_node(NodeKind::BLOCK, a, parent);
        for (const auto& c : a.children) emit_stmt(c, id);
        return;
      }
      case AstKind::VarDecl:
        emit_local(a, parent);
        return;
      case AstKind::If:
      case AstKind::While:
      case AstKind::Switch: {
        const AstNode& cond = a.children.at(0);
        std::string name = a.kind == AstKind::If      ? "if"
                           : a.kind == AstKind::While ? "while"
                                                      : "switch";
        int id = make_control(a, parent, name, header_end(cond.span.end));
        if (a.kind == AstKind::Switch) emit_expr(cond, id, Role::Use, id, -1);
        else emit_condition(a, id, cond);
        for (std::size_t i = 1; i < a.children.size(); ++i) emit_stmt(a.children[i], id);
        return;
      }
      case AstKind::For: {
        if (a.children.size() != 4) throw MalformedAst("for statement without four parts");
        int id = make_control(a, parent, "for", header_end(a.children[2].span.end));
        const AstNode& init = a.children[0];
        if (init.kind != AstKind::Empty) {
          if (init.kind == AstKind::VarDecl || init.kind == AstKind::Block) emit_stmt(init, id);
          else emit_expr_stmt(init, id);
        }
        if (a.children[1].kind != AstKind::Empty) emit_condition(a, id, a.children[1]);
        if (a.children[2].kind != AstKind::Empty) emit_expr_stmt(a.children[2], id);
        emit_stmt(a.children[3], id);
        return;
      }
      case AstKind::Case: {
        int id = make_stmt(NodeKind::LABEL, a, parent);
        at(id).name = a.name;
        for (const auto& c : a.children) emit_expr(c, id, Role::Use, id, -1);
        return;
      }
      case AstKind::Label: {
        int id = make_stmt(NodeKind::LABEL, a, parent);
        at(id).name = a.name;
        return;
      }
      case AstKind::Goto:
      case AstKind::Break:
      case AstKind::Continue: {
        int id = make_stmt(NodeKind::CONTROL_STRUCTURE, a, parent);
        at(id).name = a.kind == AstKind::Goto ? "goto" : a.kind == AstKind::Break ? "break" : "continue";
        return;
      }
      case AstKind::Return: {
        int id = make_stmt(NodeKind::RETURN, a, parent);
        at(id).name = "return";
        for (const auto& c : a.children) emit_expr(c, id, Role::Use, id, -1);
        return;
      }
      case AstKind::Empty:
      case AstKind::Directive:
      case AstKind::TypeDecl:
      case AstKind::Comment:
        return;
      case AstKind::TranslationUnit:
      case AstKind::FunctionDef:
      case AstKind::ParamDecl:
        throw MalformedAst(std::string("unexpected ") + std::string(to_string(a.kind)) +
                           " inside a function body");
      default:
        emit_expr_stmt(a, parent);
        return;
    }
  }

  void emit_expr_stmt(const AstNode& a, int parent) {
    if (a.kind == AstKind::Call) {
      int id = make_stmt(NodeKind::CALL, a, parent);
      emit_call_body(a, id, id);
      return;
    }
    if (a.kind == AstKind::Assign) {
      int id = make_stmt(NodeKind::ASSIGNMENT, a, parent);
      emit_assign_body(a, id, id, -1);
      return;
    }
    int id = make_stmt(NodeKind::EXPRESSION, a, parent);
    at(id).name = a.op;
    emit_expr(a, id, Role::Use, id, -1);
  }

  // -- expressions ---------------------------------------------------------

  void emit_call_body(const AstNode& a, int call, int owner) {
    at(call).name = a.name;
    std::size_t first = 0;
    if (a.op == "indirect") {
      emit_expr(a.children.at(0), call, Role::Use, owner, call);
      first = 1;
    }
    int order = 0;
    for (std::size_t i = first; i < a.children.size(); ++i) {
      const AstNode& arg = a.children[i];
      int an = add_node(NodeKind::ARGUMENT, arg, call);
      at(an).order = ++order;
      at(an).cfg_owner = owner;
      if (arg.kind == AstKind::UnaryOp && arg.op == "&" && arg.children.size() == 1 &&
          arg.children[0].kind == AstKind::Identifier) {
        emit_identifier(arg.children[0], an, Role::AddrDef, owner, call);
      } else {
        emit_expr(arg, an, Role::Use, owner, call);
      }
    }
  }

  void emit_assign_body(const AstNode& a, int node, int owner, int call) {
    at(node).name = a.op;
    Role lhs_role = a.op == "=" ? Role::Def : Role::DefUse;
    emit_expr(a.children.at(0), node, lhs_role, owner, call);
    emit_expr(a.children.at(1), node, Role::Use, owner, call);
  }

  int emit_identifier(const AstNode& a, int parent, Role role, int owner, int call,
                      const std::string& name_override = {}, std::size_t base_begin = 0,
                      std::size_t base_end = 0) {
    int id = add_node(NodeKind::IDENTIFIER, a, parent);
    std::string full = name_override.empty() ? a.name : name_override;
    if (full.empty()) throw MalformedAst("identifier without a name");
    if (base_end == 0) {
      base_begin = a.name_begin;
      base_end = a.name_end;
    }
    std::string base = text_.substr(base_begin, base_end - base_begin);
    if (base.empty()) base = full;
    at(id).name = full;
    at(id).cfg_owner = owner;
    at(id).type_full_name = type_of(full);

    std::vector<std::string> uses;
    auto add_use = [&](const std::string& v) {
      if (std::find(uses.begin(), uses.end(), v) == uses.end()) uses.push_back(v);
    };
    bool def = false;
    bool strong = true;
    switch (role) {
      case Role::Use:
        add_use(full);
        add_use(base);
        break;
      case Role::Def:
        def = true;
        if (base != full) add_use(base);
        break;
      case Role::DefUse:
        def = true;
        add_use(full);
        add_use(base);
        break;
      case Role::WeakDefUse:
        def = true;
        strong = false;
        add_use(full);
        add_use(base);
        break;
      case Role::AddrDef:
        def = true;
        strong = false;
        if (base != full) add_use(base);
        break;
    }
    int target = call >= 0 ? call : owner;
    if (!uses.empty()) {
      ddg_edge(id, target, full);
      uses_.push_back({id, owner, uses});
    }
    if (def) {
      int producer = role == Role::AddrDef && call >= 0 ? call : owner;
      ddg_edge(producer, id, full);
      defs_.push_back({id, owner, full, strong, true});
    }
    return id;
  }

  void emit_expr(const AstNode& a, int parent, Role role, int owner, int call) {
    switch (a.kind) {
      case AstKind::Identifier:
        emit_identifier(a, parent, role, owner, call);
        return;
      case AstKind::Literal: {
        int id = add_node(NodeKind::LITERAL, a, parent);
        at(id).name = a.code;
        at(id).cfg_owner = owner;
        at(id).type_full_name = literal_type(a.code);
        return;
      }
      case AstKind::Call: {
        int id = add_node(NodeKind::CALL, a, parent);
        at(id).cfg_owner = owner;
        int target = call >= 0 ? call : owner;
        emit_call_body(a, id, owner);
        ddg_edge(id, target, a.name + "()");
        return;
      }
      case AstKind::Assign: {
        int id = add_node(NodeKind::ASSIGNMENT, a, parent);
        at(id).cfg_owner = owner;
        emit_assign_body(a, id, owner, call);
        return;
      }
      case AstKind::UnaryOp: {
        const std::string& op = a.op;
        if (a.children.empty()) return;  // sizeof(type)
        const AstNode& child = a.children[0];
        if (op == "*" && child.kind == AstKind::Identifier) {
          emit_identifier(a, parent, role, owner, call, "*" + child.name, child.name_begin,
                          child.name_end);
          return;
        }
        if (op == "++pre" || op == "--pre" || op == "post++" || op == "post--") {
          Role r = Role::DefUse;
          emit_expr(child, parent, r, owner, call);
          return;
        }
        emit_expr(child, parent, Role::Use, owner, call);
        return;
      }
      case AstKind::BinaryOp: {
        if (a.op == "[]" && role != Role::Use && a.children.size() == 2) {
          const AstNode& base = a.children[0];
          if (base.kind == AstKind::Identifier)
            emit_identifier(base, parent, Role::WeakDefUse, owner, call);
          else
            emit_expr(base, parent, Role::WeakDefUse, owner, call);
          emit_expr(a.children[1], parent, Role::Use, owner, call);
          return;
        }
        for (const auto& c : a.children) emit_expr(c, parent, Role::Use, owner, call);
        return;
      }
      case AstKind::InitList:
        for (const auto& c : a.children) emit_expr(c, parent, Role::Use, owner, call);
        return;
      case AstKind::Empty:
      case AstKind::Comment:
        return;
      default:
        throw MalformedAst(std::string("statement node ") + std::string(to_string(a.kind)) +
                           " inside an expression");
    }
  }

  // -- control flow --------------------------------------------------------

  struct Breakable {
    bool is_switch;
    int continue_target;  // loops only
    int switch_node;      // switches only
    Pends breaks;
    bool has_default = false;
  };

  void connect(const Pends& in, int dst) {
    for (const auto& p : in) cfg_edge(p.src, dst, p.label);
  }

  std::pair<Pends, Pends> cond_flow(const AstNode& e, Pends in, const std::vector<int>& ids,
                                    std::size_t& k) {
    if (detail::is_short_circuit(e)) {
      auto [lt, lf] = cond_flow(e.children[0], std::move(in), ids, k);
      if (e.op == "&&") {
        auto [rt, rf] = cond_flow(e.children[1], std::move(lt), ids, k);
        append(lf, rf);
        return {rt, lf};
      }
      auto [rt, rf] = cond_flow(e.children[1], std::move(lf), ids, k);
      append(lt, rt);
      return {lt, rf};
    }
    if (e.kind == AstKind::UnaryOp && e.op == "!" && e.children.size() == 1) {
      auto [t, f] = cond_flow(e.children[0], std::move(in), ids, k);
      return {f, t};
    }
    int id = ids.at(k++);
    connect(in, id);
    return {Pends{{id, CfgLabel::True}}, Pends{{id, CfgLabel::False}}};
  }

  std::pair<Pends, Pends> condition(const AstNode& owner, const AstNode& cond, Pends in) {
    std::size_t k = 0;
    return cond_flow(cond, std::move(in), leaf_ids_.at(&owner), k);
  }

  Pends flow(const AstNode& s, Pends in) {
    switch (s.kind) {
      case AstKind::Block:
        for (const auto& c : s.children) in = flow(c, std::move(in));
        return in;
      case AstKind::If: {
        auto [t, f] = condition(s, s.children[0], std::move(in));
        Pends out = flow(s.children[1], std::move(t));
        if (s.children.size() > 2) append(out, flow(s.children[2], std::move(f)));
        else append(out, f);
        return out;
      }
      case AstKind::While: {
        int head = stmt_id_.at(&s);
        auto [t, f] = condition(s, s.children[0], std::move(in));
        stack_.push_back({false, head, -1, {}});
        Pends body = flow(s.children[1], std::move(t));
        connect(body, head);
        Pends out = std::move(f);
        append(out, stack_.back().breaks);
        stack_.pop_back();
        return out;
      }
      case AstKind::For: {
        int head = stmt_id_.at(&s);
        in = flow(s.children[0], std::move(in));
        Pends t, f;
        if (s.children[1].kind != AstKind::Empty) {
          std::tie(t, f) = condition(s, s.children[1], std::move(in));
        } else {
          connect(in, head);
          t = {{head, CfgLabel::Seq}};
        }
        int step = s.children[2].kind != AstKind::Empty ? stmt_id_.at(&s.children[2]) : -1;
        stack_.push_back({false, step >= 0 ? step : head, -1, {}});
        Pends body = flow(s.children[3], std::move(t));
        if (step >= 0) {
          connect(body, step);
          cfg_edge(step, head, CfgLabel::Seq);
        } else {
          connect(body, head);
        }
        Pends out = std::move(f);
        append(out, stack_.back().breaks);
        stack_.pop_back();
        return out;
      }
      case AstKind::Switch: {
        int sw = stmt_id_.at(&s);
        connect(in, sw);
        stack_.push_back({true, -1, sw, {}});
        Pends body = flow(s.children[1], {});
        Pends out = std::move(body);
        append(out, stack_.back().breaks);
        if (!stack_.back().has_default) out.push_back({sw, CfgLabel::False});
        stack_.pop_back();
        return out;
      }
      case AstKind::Case: {
        int id = stmt_id_.at(&s);
        Breakable* sw = nullptr;
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
          if (it->is_switch) {
            sw = &*it;
            break;
          }
        if (!sw) throw MalformedAst("case label outside switch at line " + std::to_string(s.line()));
        bool is_default = s.name == "default";
        if (is_default) sw->has_default = true;
        cfg_edge(sw->switch_node, id, is_default ? CfgLabel::Default : CfgLabel::Case);
        connect(in, id);
        return {{id, CfgLabel::Seq}};
      }
      case AstKind::Label: {
        int id = stmt_id_.at(&s);
        connect(in, id);
        if (labels_.count(s.name))
          throw MalformedAst("duplicate label '" + s.name + "' at line " + std::to_string(s.line()));
        labels_[s.name] = id;
        return {{id, CfgLabel::Seq}};
      }
      case AstKind::Goto: {
        int id = stmt_id_.at(&s);
        connect(in, id);
        gotos_.push_back({id, &s});
        return {};
      }
      case AstKind::Break: {
        int id = stmt_id_.at(&s);
        connect(in, id);
        if (stack_.empty())
          throw MalformedAst("break outside loop or switch at line " + std::to_string(s.line()));
        stack_.back().breaks.push_back({id, CfgLabel::Jump});
        return {};
      }
      case AstKind::Continue: {
        int id = stmt_id_.at(&s);
        connect(in, id);
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
          if (!it->is_switch) {
            cfg_edge(id, it->continue_target, CfgLabel::Jump);
            return {};
          }
        }
        throw MalformedAst("continue outside loop at line " + std::to_string(s.line()));
      }
      case AstKind::Return: {
        int id = stmt_id_.at(&s);
        connect(in, id);
        cfg_edge(id, exit_, CfgLabel::Jump);
        return {};
      }
      case AstKind::Empty:
      case AstKind::Directive:
      case AstKind::TypeDecl:
      case AstKind::Comment:
        return in;
      case AstKind::VarDecl:
        if (s.op == "prototype") return in;
        [[fallthrough]];
      default: {
        auto it = stmt_id_.find(&s);
        if (it == stmt_id_.end()) return in;
        connect(in, it->second);
        return {{it->second, CfgLabel::Seq}};
      }
    }
  }

  void build_cfg(const AstNode& body) {
    labels_.clear();
    gotos_.clear();
    stack_.clear();
    Pends out = flow(body, {{entry_, CfgLabel::Seq}});
    connect(out, exit_);
    for (const auto& [id, ast] : gotos_) {
      auto it = labels_.find(ast->name);
      if (it == labels_.end()) throw UnresolvedGoto(ast->name, ast->line());
      cfg_edge(id, it->second, CfgLabel::Jump);
    }
    // Reaching definitions need the ENTRY defs; attach them now.
    for (auto& d : entry_defs_) defs_.push_back(d);
    entry_defs_.clear();
  }

  // -- data dependence -----------------------------------------------------

  void build_ddg(int method) {
    std::vector<int> cfg = g_.cfg_nodes(method);
    std::unordered_map<int, std::size_t> index;
    for (std::size_t i = 0; i < cfg.size(); ++i) index[cfg[i]] = i;

    std::vector<std::size_t> def_ids;  // indices into defs_ for this method
    for (std::size_t i = 0; i < defs_.size(); ++i)
      if (index.count(defs_[i].stmt)) def_ids.push_back(i);
    std::size_t nd = def_ids.size();
    std::map<std::string, Bitset> by_var;
    for (std::size_t k = 0; k < nd; ++k) {
      auto& b = by_var.try_emplace(defs_[def_ids[k]].var, Bitset(nd)).first->second;
      b.set(k);
    }

    std::vector<Bitset> gen(cfg.size(), Bitset(nd)), kill(cfg.size(), Bitset(nd));
    std::vector<std::vector<std::size_t>> stmt_defs(cfg.size());
    for (std::size_t k = 0; k < nd; ++k) stmt_defs[index.at(defs_[def_ids[k]].stmt)].push_back(k);
    for (std::size_t s = 0; s < cfg.size(); ++s) {
      // Sequential semantics inside one statement: a later strong def of the
      // same variable overrides an earlier one.
      for (std::size_t j = 0; j < stmt_defs[s].size(); ++j) {
        const DefSite& d = defs_[def_ids[stmt_defs[s][j]]];
        if (d.strong) kill[s].or_with(by_var.at(d.var));
        bool overridden = false;
        for (std::size_t l = j + 1; l < stmt_defs[s].size(); ++l) {
          const DefSite& later = defs_[def_ids[stmt_defs[s][l]]];
          if (later.strong && later.var == d.var) overridden = true;
        }
        if (d.gen && !overridden) gen[s].set(stmt_defs[s][j]);
      }
    }

    std::vector<std::vector<std::size_t>> preds(cfg.size());
    std::vector<std::vector<std::size_t>> succs(cfg.size());
    for (int n : cfg)
      for (int e : g_.out_edges(n, Layer::CFG)) {
        std::size_t a = index.at(n), b = index.at(g_.edges[e].dst);
        succs[a].push_back(b);
        preds[b].push_back(a);
      }

    std::vector<Bitset> in(cfg.size(), Bitset(nd)), out(cfg.size(), Bitset(nd));
    std::vector<std::size_t> order(cfg.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (options_.worklist_shuffle_seed) {
      std::mt19937_64 rng(*options_.worklist_shuffle_seed);
      std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::size_t> work(order.rbegin(), order.rend());
    std::vector<bool> queued(cfg.size(), true);
    while (!work.empty()) {
      std::size_t s = work.back();
      work.pop_back();
      queued[s] = false;
      Bitset new_in(nd);
      for (std::size_t p : preds[s]) new_in.or_with(out[p]);
      Bitset new_out = new_in;
      new_out.and_not(kill[s]);
      new_out.or_with(gen[s]);
      in[s] = std::move(new_in);
      if (!(new_out == out[s])) {
        out[s] = std::move(new_out);
        for (std::size_t q : succs[s])
          if (!queued[q]) {
            queued[q] = true;
            work.push_back(q);
          }
      }
    }

    for (const auto& u : uses_) {
      auto it = index.find(u.stmt);
      if (it == index.end()) continue;
      const Bitset& reach = in[it->second];
      for (const auto& var : u.vars) {
        auto bv = by_var.find(var);
        if (bv == by_var.end()) continue;
        for (std::size_t k = 0; k < nd; ++k) {
          if (reach.test(k) && bv->second.test(k)) add_ddg(defs_[def_ids[k]].node, u.node, var);
        }
      }
    }
  }

  void add_ddg(int src, int dst, const std::string& var) {
    if (ddg_seen_.insert({src, dst, var}).second)
      g_.edges.push_back({src, dst, Layer::DDG, var, CfgLabel::None});
  }

  // -- control dependence --------------------------------------------------

  void build_cdg(int method) {
    std::vector<int> cfg = g_.cfg_nodes(method);
    std::unordered_map<int, int> index;
    for (std::size_t i = 0; i < cfg.size(); ++i) index[cfg[i]] = static_cast<int>(i);
    int n = static_cast<int>(cfg.size());
    int entry = index.at(g_.entry_of(method));
    int exit = index.at(g_.exit_of(method));

    std::vector<std::vector<int>> succ(n), pred(n);
    for (int v : cfg)
      for (int e : g_.out_edges(v, Layer::CFG)) {
        int a = index.at(v), b = index.at(g_.edges[e].dst);
        succ[a].push_back(b);
      }
    succ[entry].push_back(exit);
    // Nodes that cannot reach EXIT get a virtual edge so that every node has
    // a post-dominator.
    std::vector<std::vector<int>> rsucc(n);
    for (int a = 0; a < n; ++a)
      for (int b : succ[a]) rsucc[b].push_back(a);
    std::vector<bool> reaches(n, false);
    std::vector<int> stack{exit};
    reaches[exit] = true;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int p : rsucc[v])
        if (!reaches[p]) {
          reaches[p] = true;
          stack.push_back(p);
        }
    }
    std::vector<std::vector<int>> pd_succ = succ;
    for (int a = 0; a < n; ++a)
      if (!reaches[a]) pd_succ[a].push_back(exit);
    for (int a = 0; a < n; ++a)
      for (int b : pd_succ[a]) pred[b].push_back(a);

    // Post-dominators: dominators of the reverse graph rooted at EXIT
    // (Cooper, Harvey and Kennedy iteration).
    std::vector<int> post;  // postorder on the reverse graph
    std::vector<int> po_num(n, -1);
    {
      std::vector<bool> seen(n, false);
      std::vector<std::pair<int, std::size_t>> st{{exit, 0}};
      seen[exit] = true;
      while (!st.empty()) {
        auto& [v, i] = st.back();
        if (i < pred[v].size()) {
          int w = pred[v][i++];
          if (!seen[w]) {
            seen[w] = true;
            st.push_back({w, 0});
          }
        } else {
          po_num[v] = static_cast<int>(post.size());
          post.push_back(v);
          st.pop_back();
        }
      }
    }
    std::vector<int> ipdom(n, -1);
    ipdom[exit] = exit;
    auto intersect = [&](int a, int b) {
      while (a != b) {
        while (po_num[a] < po_num[b]) a = ipdom[a];
        while (po_num[b] < po_num[a]) b = ipdom[b];
      }
      return a;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto it = post.rbegin(); it != post.rend(); ++it) {
        int v = *it;
        if (v == exit) continue;
        int nd = -1;
        for (int s : pd_succ[v]) {
          if (ipdom[s] < 0) continue;
          nd = nd < 0 ? s : intersect(s, nd);
        }
        if (nd >= 0 && ipdom[v] != nd) {
          ipdom[v] = nd;
          changed = true;
        }
      }
    }

    std::set<std::pair<int, int>> cd;
    for (int a = 0; a < n; ++a) {
      for (int b : succ[a]) {
        int runner = b;
        while (runner != ipdom[a] && runner >= 0) {
          cd.insert({a, runner});
          if (runner == exit) break;
          runner = ipdom[runner];
        }
      }
    }
    for (const auto& [a, b] : cd)
      g_.edges.push_back({cfg[a], cfg[b], Layer::CDG, {}, CfgLabel::None});
  }

  const std::string& text_;
  std::string stripped_;
  LineIndex lines_;
  BuildOptions options_;
  CodePropertyGraph g_;
  int method_ = -1;
  int entry_ = -1;
  int exit_ = -1;

  std::vector<int> globals_;
  std::unordered_map<std::string, std::string> global_types_;
  std::unordered_map<std::string, std::string> scope_types_;
  std::unordered_map<const AstNode*, int> stmt_id_;
  std::unordered_map<const AstNode*, std::vector<int>> leaf_ids_;
  std::vector<DefSite> defs_;
  std::vector<DefSite> entry_defs_;
  std::vector<UseSite> uses_;
  std::vector<CpgEdge> ddg_;
  std::set<std::tuple<int, int, std::string>> ddg_seen_;

  std::unordered_map<std::string, int> labels_;
  std::vector<std::pair<int, const AstNode*>> gotos_;
  std::vector<Breakable> stack_;
};

}  // namespace

CodePropertyGraph build_cpg(const AstNode& ast, const SourceUnit& unit,
                            const BuildOptions& options) {
  return Builder(unit, options).build(ast);
}

CodePropertyGraph build_cpg(const SourceUnit& unit, const BuildOptions& options) {
  SourceUnit normalized = unit;
  normalized.text = normalize_newlines(unit.text);
  return build_cpg(parse(normalized), normalized, options);
}

}  // namespace cpgvd
