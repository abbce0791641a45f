#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <unordered_set>

#include "cpgvd/frontend.hpp"
#include "lexer.hpp"

namespace cpgvd {

std::string SyntaxError::format(int line, int column, const std::string& token,
                                const std::string& what) {
  std::string msg = std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  if (!token.empty()) msg += " near '" + token + "'";
  return msg;
}

namespace {

using detail::Token;
using detail::TokKind;

constexpr std::array kTypeKeywords = {"void",   "char",     "short",    "int",
                                      "long",   "float",    "double",   "signed",
                                      "unsigned", "_Bool",  "_Complex"};
constexpr std::array kQualifierKeywords = {
    "const",  "volatile", "restrict", "static",       "extern",   "register",
    "inline", "auto",     "_Atomic",  "_Thread_local", "_Noreturn"};

// Typedef names commonly seen in systems C that we accept without a visible
// typedef in the unit.
const std::unordered_set<std::string_view>& known_type_names() {
  static const std::unordered_set<std::string_view> names = {
      "u8",       "u16",      "u32",       "u64",       "s8",        "s16",
      "s32",      "s64",      "__u8",      "__u16",     "__u32",     "__u64",
      "__s8",     "__s16",    "__s32",     "__s64",     "__le16",    "__le32",
      "__le64",   "__be16",   "__be32",    "__be64",    "size_t",    "ssize_t",
      "ptrdiff_t", "intptr_t", "uintptr_t", "int8_t",   "int16_t",   "int32_t",
      "int64_t",  "uint8_t",  "uint16_t",  "uint32_t",  "uint64_t",  "bool",
      "FILE",     "dma_addr_t", "off_t",   "pid_t",     "time_t",    "wchar_t",
      "va_list",  "gfp_t",    "loff_t",    "uint",      "ulong",     "uchar",
      "ushort",   "BYTE",     "WORD",      "DWORD",     "BOOL",      "socklen_t",
      "mode_t",   "uid_t",    "gid_t",     "sig_atomic_t", "clock_t", "jmp_buf"};
  return names;
}

bool in(std::string_view s, const auto& list) {
  return std::find(std::begin(list), std::end(list), s) != std::end(list);
}

bool is_assign_op(std::string_view s) {
  static constexpr std::array ops = {"=",  "+=", "-=", "*=",  "/=", "%=",
                                     "&=", "|=", "^=", "<<=", ">>="};
  return in(s, ops);
}

int binary_precedence(std::string_view s) {
  if (s == "||") return 1;
  if (s == "&&") return 2;
  if (s == "|") return 3;
  if (s == "^") return 4;
  if (s == "&") return 5;
  if (s == "==" || s == "!=") return 6;
  if (s == "<" || s == ">" || s == "<=" || s == ">=") return 7;
  if (s == "<<" || s == ">>") return 8;
  if (s == "+" || s == "-") return 9;
  if (s == "*" || s == "/" || s == "%") return 10;
  return 0;
}

std::string strip_spaces(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

struct Declarator {
  std::string name;
  std::size_t name_begin = 0;
  std::size_t name_end = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool is_function = false;  // direct function declarator: name(params)
  bool variadic = false;
  std::vector<AstNode> params;
  std::string type_suffix;  // pointer stars and array brackets
};

class Parser {
 public:
  Parser(std::string_view text, const LineIndex& lines, std::vector<Token> toks)
      : text_(text), lines_(lines), toks_(std::move(toks)) {}

  AstNode parse_translation_unit() {
    AstNode root = make(AstKind::TranslationUnit, 0, text_.size());
    while (peek().kind != TokKind::End) parse_external(root.children);
    return root;
  }

 private:
  // -- token helpers -------------------------------------------------------

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    prev_end_ = t.end;
    return t;
  }
  bool at(std::string_view s, std::size_t k = 0) const { return peek(k).is(s); }
  bool accept(std::string_view s) {
    if (!at(s)) return false;
    next();
    return true;
  }
  const Token& expect(std::string_view s, std::string_view context) {
    if (!at(s)) error(peek(), "expected '" + std::string(s) + "' " + std::string(context));
    return next();
  }
  [[noreturn]] void error(const Token& t, const std::string& what) const {
    std::string tok = t.kind == TokKind::End ? std::string("<end of input>")
                                             : std::string(t.text);
    int line = t.kind == TokKind::End ? lines_.line_count() : t.line;
    throw SyntaxError(line, t.column, tok, what);
  }
  [[noreturn]] void unsupported(const Token& t, const std::string& what) const {
    throw UnsupportedConstruct(t.line, t.column, std::string(t.text), what);
  }

  AstNode make(AstKind kind, std::size_t begin, std::size_t end) const {
    AstNode n;
    n.kind = kind;
    set_span(n, begin, end);
    return n;
  }
  void set_span(AstNode& n, std::size_t begin, std::size_t end) const {
    n.span.begin = begin;
    n.span.end = end;
    n.span.first_line = lines_.line_of(begin);
    n.span.last_line = lines_.line_of(end > begin ? end - 1 : begin);
    n.code = std::string(text_.substr(begin, end - begin));
  }

  bool is_type_name(const Token& t) const {
    if (t.kind != TokKind::Ident) return false;
    return typedefs_.count(std::string(t.text)) > 0 ||
           known_type_names().count(t.text) > 0;
  }
  static bool is_annotation(const Token& t) {
    // Kernel-style annotations (__user, __iomem, __init, ...).
    return t.kind == TokKind::Ident && t.text.size() > 2 && t.text.substr(0, 2) == "__" &&
           t.text != "__attribute__" && t.text != "__declspec" &&
           !known_type_names().count(t.text);
  }
  bool starts_specifier(const Token& t) const {
    if (t.kind == TokKind::Keyword)
      return in(t.text, kTypeKeywords) || in(t.text, kQualifierKeywords) ||
             t.text == "struct" || t.text == "union" || t.text == "enum" ||
             t.text == "typedef";
    return is_type_name(t);
  }

  // Heuristic declaration detection at statement start.
  bool looks_like_declaration() const {
    const Token& t0 = peek();
    if (t0.kind == TokKind::Keyword) return starts_specifier(t0);
    if (t0.kind != TokKind::Ident) return false;
    const Token& t1 = peek(1);
    if (is_type_name(t0) && (t1.kind == TokKind::Ident || t1.is("*") ||
                             (t1.kind == TokKind::Keyword && starts_specifier(t1))))
      return true;
    if (is_annotation(t0) && (t1.kind == TokKind::Ident || t1.kind == TokKind::Keyword))
      return true;
    if (t1.kind == TokKind::Ident) {
      const Token& t2 = peek(2);
      return t2.is(";") || t2.is("=") || t2.is(",") || t2.is("[") || is_annotation(t1);
    }
    if (t1.is("*")) {
      std::size_t k = 1;
      while (peek(k).is("*") || peek(k).is("const") || peek(k).is("volatile")) ++k;
      if (peek(k).kind != TokKind::Ident) return false;
      const Token& after = peek(k + 1);
      return after.is(";") || after.is("=") || after.is(",") || after.is("[");
    }
    return false;
  }

  void skip_balanced(std::string_view open, std::string_view close) {
    const Token& start = expect(open, "");
    int depth = 1;
    while (depth > 0) {
      if (peek().kind == TokKind::End) error(start, "unbalanced '" + std::string(open) + "'");
      if (at(open)) ++depth;
      else if (at(close)) --depth;
      next();
    }
  }

  void skip_attributes() {
    while (peek().kind == TokKind::Ident &&
           (peek().text == "__attribute__" || peek().text == "__declspec" ||
            peek().text == "asm" || peek().text == "__asm__")) {
      next();
      if (at("(")) skip_balanced("(", ")");
    }
  }

  // -- declarations --------------------------------------------------------

  struct Specs {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool any = false;
    bool is_typedef = false;
    bool has_body = false;  // struct/union/enum with a member list
  };

  Specs parse_specifiers() {
    Specs s;
    s.begin = peek().begin;
    bool saw_type = false;
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokKind::Keyword && t.text == "typedef") {
        s.is_typedef = true;
        next();
      } else if (t.kind == TokKind::Keyword &&
                 (in(t.text, kTypeKeywords) || in(t.text, kQualifierKeywords))) {
        if (in(t.text, kTypeKeywords)) saw_type = true;
        next();
      } else if (t.kind == TokKind::Keyword &&
                 (t.text == "struct" || t.text == "union" || t.text == "enum")) {
        next();
        skip_attributes();
        if (peek().kind == TokKind::Ident) next();
        if (at("{")) {
          skip_balanced("{", "}");
          s.has_body = true;
        }
        saw_type = true;
      } else if (!saw_type && t.kind == TokKind::Ident && !is_annotation(t) &&
                 t.text != "__attribute__") {
        next();
        saw_type = true;
      } else if (is_annotation(t) || (t.kind == TokKind::Ident && t.text == "__attribute__")) {
        next();
        if (at("(")) skip_balanced("(", ")");
      } else {
        break;
      }
      s.any = true;
      s.end = prev_end_;
    }
    return s;
  }

  Declarator parse_declarator(bool abstract_ok) {
    Declarator d;
    d.begin = peek().begin;
    std::string suffix;
    while (at("*") || at("const") || at("volatile") || at("restrict") || is_annotation(peek())) {
      if (at("*")) suffix += "*";
      next();
    }
    if (at("(") && (at("*", 1) || at("^", 1))) {
      // Function pointer or pointer-to-array: ( * name ) suffixes
      next();
      while (at("*") || at("^") || at("const")) {
        next();
        suffix += "*";
      }
      if (peek().kind == TokKind::Ident) {
        const Token& n = next();
        d.name = std::string(n.text);
        d.name_begin = n.begin;
        d.name_end = n.end;
      } else if (!abstract_ok) {
        error(peek(), "expected declarator name");
      }
      while (at("[")) skip_balanced("[", "]");
      expect(")", "closing function-pointer declarator");
      if (at("(")) {
        skip_balanced("(", ")");
        suffix += "()";
      }
    } else if (peek().kind == TokKind::Ident && !is_annotation(peek())) {
      const Token& n = next();
      d.name = std::string(n.text);
      d.name_begin = n.begin;
      d.name_end = n.end;
    } else if (!abstract_ok) {
      error(peek(), "expected declarator name");
    }
    for (;;) {
      if (at("[")) {
        std::size_t b = peek().begin;
        skip_balanced("[", "]");
        suffix += strip_spaces(text_.substr(b, prev_end_ - b));
      } else if (at("(") && !d.is_function) {
        d.is_function = !d.name.empty();
        parse_parameter_list(d);
      } else {
        break;
      }
    }
    skip_attributes();
    d.type_suffix = suffix;
    d.end = prev_end_;
    return d;
  }

  void parse_parameter_list(Declarator& d) {
    expect("(", "opening parameter list");
    if (at(")")) {
      next();
      return;
    }
    if (at("void") && at(")", 1)) {
      next();
      next();
      return;
    }
    for (;;) {
      if (at("...")) {
        const Token& t = next();
        AstNode p = make(AstKind::ParamDecl, t.begin, t.end);
        p.name = "...";
        p.type = "...";
        p.name_begin = t.begin;
        p.name_end = t.end;
        d.params.push_back(std::move(p));
        d.variadic = true;
      } else {
        if (!starts_specifier(peek()) && peek().kind != TokKind::Ident)
          error(peek(), "expected parameter declaration");
        Specs s = parse_specifiers();
        if (!s.any) error(peek(), "expected parameter type");
        Declarator pd = parse_declarator(true);
        AstNode p = make(AstKind::ParamDecl, s.begin, prev_end_);
        p.name = pd.name;
        p.name_begin = pd.name_begin;
        p.name_end = pd.name_end;
        p.type = normalize_type(text_.substr(s.begin, s.end - s.begin), pd.type_suffix);
        d.params.push_back(std::move(p));
      }
      if (accept(",")) continue;
      expect(")", "closing parameter list");
      break;
    }
  }

  static std::string normalize_type(std::string_view specs, const std::string& suffix) {
    std::string out;
    bool space = false;
    for (char c : specs) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        space = !out.empty();
        continue;
      }
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
    return out + suffix;
  }

  void parse_external(std::vector<AstNode>& out) {
    const Token& t = peek();
    if (t.kind == TokKind::Directive) {
      next();
      out.push_back(make(AstKind::Directive, t.begin, t.end));
      return;
    }
    if (accept(";")) return;
    if (t.kind == TokKind::Ident && at("(", 1) && !is_type_name(t)) {
      // Implicit-int function definition or a file-scope macro invocation.
      std::size_t save = pos_;
      next();
      skip_balanced("(", ")");
      bool def = at("{");
      pos_ = save;
      if (!def) unsupported(t, "unexpanded macro invocation at file scope");
    }
    std::size_t begin = t.begin;
    Specs specs = parse_specifiers();
    if (!specs.any && !(t.kind == TokKind::Ident && at("(", 1)))
      error(peek(), "expected declaration");
    std::string spec_text(text_.substr(specs.begin, specs.any ? specs.end - specs.begin : 0));

    if (at(";")) {
      next();
      out.push_back(make(AstKind::TypeDecl, begin, prev_end_));
      return;
    }
    bool first = true;
    for (;;) {
      Declarator d = parse_declarator(false);
      if (specs.is_typedef) {
        typedefs_.insert(d.name);
      } else if (d.is_function && first && at("{")) {
        AstNode fn = make(AstKind::FunctionDef, begin, begin);
        fn.name = d.name;
        fn.name_begin = d.name_begin;
        fn.name_end = d.name_end;
        fn.type = normalize_type(spec_text, d.type_suffix);
        fn.children = std::move(d.params);
        fn.children.push_back(parse_block());
        set_span(fn, begin, prev_end_);
        out.push_back(std::move(fn));
        return;
      }
      if (specs.is_typedef || d.is_function) {
        if (accept("=")) parse_initializer();
        if (accept(",")) {
          first = false;
          continue;
        }
        expect(";", "after declaration");
        AstNode decl = make(AstKind::TypeDecl, begin, prev_end_);
        decl.name = d.name;
        decl.name_begin = d.name_begin;
        decl.name_end = d.name_end;
        decl.op = d.is_function ? "prototype" : "typedef";
        out.push_back(std::move(decl));
        return;
      }
      AstNode var = make(AstKind::VarDecl, first ? begin : d.begin, prev_end_);
      var.name = d.name;
      var.name_begin = d.name_begin;
      var.name_end = d.name_end;
      var.type = normalize_type(spec_text, d.type_suffix);
      if (accept("=")) var.children.push_back(parse_initializer());
      set_span(var, var.span.begin, prev_end_);
      out.push_back(std::move(var));
      first = false;
      if (accept(",")) continue;
      expect(";", "after declaration");
      return;
    }
  }

  AstNode parse_initializer() {
    if (at("{")) return parse_init_list();
    return parse_assign();
  }

  AstNode parse_init_list() {
    const Token& open = expect("{", "");
    AstNode list = make(AstKind::InitList, open.begin, open.end);
    while (!at("}")) {
      if (peek().kind == TokKind::End) error(open, "unterminated initializer list");
      // Designators: .field = / [index] =
      if (at(".") && peek(1).kind == TokKind::Ident) {
        next();
        next();
        while (at(".") || at("[")) {
          if (at("[")) skip_balanced("[", "]");
          else { next(); next(); }
        }
        expect("=", "after designator");
      } else if (at("[")) {
        std::size_t save = pos_;
        skip_balanced("[", "]");
        if (!accept("=")) pos_ = save;
      }
      list.children.push_back(parse_initializer());
      if (!accept(",")) break;
    }
    expect("}", "closing initializer list");
    set_span(list, open.begin, prev_end_);
    return list;
  }

  // Local declaration statement; appends one VarDecl per declarator.
  void parse_local_declaration(std::vector<AstNode>& out, bool require_semicolon = true) {
    std::size_t begin = peek().begin;
    Specs specs = parse_specifiers();
    if (specs.is_typedef) {
      while (!at(";")) {
        if (peek().kind == TokKind::End) error(peek(), "unterminated typedef");
        if (peek().kind == TokKind::Ident && (at(";", 1) || at(")", 1) || at("[", 1)))
          typedefs_.insert(std::string(peek().text));
        next();
      }
      next();
      out.push_back(make(AstKind::TypeDecl, begin, prev_end_));
      return;
    }
    std::string spec_text(text_.substr(specs.begin, specs.end - specs.begin));
    if (at(";")) {
      next();
      out.push_back(make(AstKind::TypeDecl, begin, prev_end_));
      return;
    }
    bool first = true;
    for (;;) {
      Declarator d = parse_declarator(false);
      AstNode var = make(AstKind::VarDecl, first ? begin : d.begin, prev_end_);
      var.name = d.name;
      var.name_begin = d.name_begin;
      var.name_end = d.name_end;
      var.type = normalize_type(spec_text, d.type_suffix);
      if (d.is_function) var.op = "prototype";
      if (accept("=")) var.children.push_back(parse_initializer());
      set_span(var, var.span.begin, prev_end_);
      out.push_back(std::move(var));
      first = false;
      if (accept(",")) continue;
      if (require_semicolon) expect(";", "after declaration");
      return;
    }
  }

  // -- statements ----------------------------------------------------------

  AstNode parse_block() {
    const Token& open = expect("{", "opening block");
    AstNode block = make(AstKind::Block, open.begin, open.end);
    while (!at("}")) {
      if (peek().kind == TokKind::End) error(open, "unbalanced '{'");
      parse_statement_into(block.children);
    }
    next();
    set_span(block, open.begin, prev_end_);
    return block;
  }

  void parse_statement_into(std::vector<AstNode>& out) {
    if (looks_like_declaration()) {
      parse_local_declaration(out);
      return;
    }
    out.push_back(parse_statement());
  }

  // A statement in a position where only one statement is allowed.
  AstNode parse_substatement() {
    if (looks_like_declaration()) {
      std::vector<AstNode> decls;
      std::size_t b = peek().begin;
      parse_local_declaration(decls);
      if (decls.size() == 1) return std::move(decls.front());
      AstNode blk = make(AstKind::Block, b, prev_end_);
      blk.children = std::move(decls);
      return blk;
    }
    return parse_statement();
  }

  AstNode parse_statement() {
    const Token& t = peek();
    if (t.kind == TokKind::Directive) {
      next();
      return make(AstKind::Directive, t.begin, t.end);
    }
    if (at("{")) return parse_block();
    if (at(";")) {
      next();
      return make(AstKind::Empty, t.begin, t.end);
    }
    if (t.kind == TokKind::Keyword) {
      std::string_view k = t.text;
      if (k == "if") return parse_if();
      if (k == "while") return parse_while();
      if (k == "for") return parse_for();
      if (k == "switch") return parse_switch();
      if (k == "do") unsupported(t, "do/while loops are outside the supported subset");
      if (k == "case" || k == "default") return parse_case();
      if (k == "goto") {
        next();
        if (peek().kind != TokKind::Ident) error(peek(), "expected label after goto");
        const Token& lbl = next();
        expect(";", "after goto");
        AstNode g = make(AstKind::Goto, t.begin, prev_end_);
        g.name = std::string(lbl.text);
        g.name_begin = lbl.begin;
        g.name_end = lbl.end;
        return g;
      }
      if (k == "break" || k == "continue") {
        next();
        expect(";", "after jump statement");
        return make(k == "break" ? AstKind::Break : AstKind::Continue, t.begin, prev_end_);
      }
      if (k == "return") {
        next();
        AstNode r = make(AstKind::Return, t.begin, t.end);
        if (!at(";")) r.children.push_back(parse_expr());
        expect(";", "after return");
        set_span(r, t.begin, prev_end_);
        return r;
      }
    }
    if (t.kind == TokKind::Ident && at(":", 1)) {
      next();
      next();
      AstNode l = make(AstKind::Label, t.begin, prev_end_);
      l.name = std::string(t.text);
      l.name_begin = t.begin;
      l.name_end = t.end;
      return l;
    }
    AstNode e = parse_expr();
    if (at("{") && e.kind == AstKind::Call)
      unsupported(t, "unexpanded macro invocation followed by a block");
    expect(";", "after expression");
    // Statement span includes the semicolon only in the enclosing block;
    // the node keeps the bare expression span.
    return e;
  }

  AstNode parse_paren_condition() {
    expect("(", "opening condition");
    AstNode c = parse_expr();
    expect(")", "closing condition");
    return c;
  }

  AstNode parse_if() {
    const Token& t = next();
    AstNode n = make(AstKind::If, t.begin, t.end);
    n.children.push_back(parse_paren_condition());
    n.children.push_back(parse_substatement());
    if (accept("else")) n.children.push_back(parse_substatement());
    set_span(n, t.begin, prev_end_);
    return n;
  }

  AstNode parse_while() {
    const Token& t = next();
    AstNode n = make(AstKind::While, t.begin, t.end);
    n.children.push_back(parse_paren_condition());
    n.children.push_back(parse_substatement());
    set_span(n, t.begin, prev_end_);
    return n;
  }

  AstNode empty_at(std::size_t offset) const { return make(AstKind::Empty, offset, offset); }

  AstNode parse_for() {
    const Token& t = next();
    AstNode n = make(AstKind::For, t.begin, t.end);
    expect("(", "after for");
    if (at(";")) {
      n.children.push_back(empty_at(peek().begin));
      next();
    } else if (looks_like_declaration()) {
      std::vector<AstNode> decls;
      std::size_t b = peek().begin;
      parse_local_declaration(decls);
      if (decls.size() == 1) {
        n.children.push_back(std::move(decls.front()));
      } else {
        AstNode blk = make(AstKind::Block, b, prev_end_);
        blk.children = std::move(decls);
        n.children.push_back(std::move(blk));
      }
    } else {
      n.children.push_back(parse_expr());
      expect(";", "after for initializer");
    }
    if (at(";")) n.children.push_back(empty_at(peek().begin));
    else n.children.push_back(parse_expr());
    expect(";", "after for condition");
    if (at(")")) n.children.push_back(empty_at(peek().begin));
    else n.children.push_back(parse_expr());
    expect(")", "closing for header");
    n.children.push_back(parse_substatement());
    set_span(n, t.begin, prev_end_);
    return n;
  }

  AstNode parse_switch() {
    const Token& t = next();
    AstNode n = make(AstKind::Switch, t.begin, t.end);
    n.children.push_back(parse_paren_condition());
    n.children.push_back(parse_substatement());
    set_span(n, t.begin, prev_end_);
    return n;
  }

  AstNode parse_case() {
    const Token& t = next();
    AstNode n = make(AstKind::Case, t.begin, t.end);
    if (t.text == "case") {
      n.name = "case";
      n.children.push_back(parse_ternary());
      if (accept("...")) parse_ternary();  // GNU case ranges
    } else {
      n.name = "default";
    }
    expect(":", "after case label");
    set_span(n, t.begin, prev_end_);
    return n;
  }

  // -- expressions ---------------------------------------------------------

  AstNode parse_expr() {
    AstNode lhs = parse_assign();
    while (at(",")) {
      next();
      AstNode rhs = parse_assign();
      AstNode n = make(AstKind::BinaryOp, lhs.span.begin, rhs.span.end);
      n.op = ",";
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(rhs));
      lhs = std::move(n);
    }
    return lhs;
  }

  AstNode parse_assign() {
    AstNode lhs = parse_ternary();
    if (peek().kind == TokKind::Punct && is_assign_op(peek().text)) {
      std::string op(next().text);
      AstNode rhs = parse_assign();
      AstNode n = make(AstKind::Assign, lhs.span.begin, rhs.span.end);
      n.op = op;
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(rhs));
      return n;
    }
    return lhs;
  }

  AstNode parse_ternary() {
    AstNode cond = parse_binary(1);
    if (!at("?")) return cond;
    next();
    AstNode a = at(":") ? empty_at(peek().begin) : parse_expr();  // GNU a ?: b
    expect(":", "in conditional expression");
    AstNode b = parse_ternary();
    AstNode n = make(AstKind::BinaryOp, cond.span.begin, b.span.end);
    n.op = "?:";
    n.children.push_back(std::move(cond));
    n.children.push_back(std::move(a));
    n.children.push_back(std::move(b));
    return n;
  }

  AstNode parse_binary(int min_prec) {
    AstNode lhs = parse_unary();
    for (;;) {
      const Token& t = peek();
      if (t.kind != TokKind::Punct) break;
      int prec = binary_precedence(t.text);
      if (prec == 0 || prec < min_prec) break;
      std::string op(next().text);
      AstNode rhs = parse_binary(prec + 1);
      AstNode n = make(AstKind::BinaryOp, lhs.span.begin, rhs.span.end);
      n.op = op;
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(rhs));
      lhs = std::move(n);
    }
    return lhs;
  }

  // True if the tokens after '(' at the current position form "(type)".
  bool looks_like_cast() const {
    const Token& t1 = peek(1);
    if (t1.kind == TokKind::Keyword) {
      return in(t1.text, kTypeKeywords) || in(t1.text, kQualifierKeywords) ||
             t1.text == "struct" || t1.text == "union" || t1.text == "enum";
    }
    if (t1.kind != TokKind::Ident) return false;
    if (is_type_name(t1)) {
      const Token& t2 = peek(2);
      return t2.is(")") || t2.is("*") || t2.kind == TokKind::Keyword;
    }
    std::size_t k = 2;
    if (!peek(k).is("*")) return false;
    while (peek(k).is("*") || peek(k).is("const")) ++k;
    return peek(k).is(")");
  }

  void parse_type_name() {
    Specs s = parse_specifiers();
    if (!s.any) error(peek(), "expected type name");
    parse_declarator(true);
  }

  AstNode parse_unary() {
    const Token& t = peek();
    if (t.kind == TokKind::Punct) {
      std::string_view p = t.text;
      if (p == "++" || p == "--") {
        next();
        AstNode operand = parse_unary();
        AstNode n = make(AstKind::UnaryOp, t.begin, operand.span.end);
        n.op = std::string(p) + "pre";
        n.children.push_back(std::move(operand));
        return n;
      }
      if (p == "-" || p == "+" || p == "!" || p == "~" || p == "*" || p == "&") {
        next();
        AstNode operand = parse_unary();
        AstNode n = make(AstKind::UnaryOp, t.begin, operand.span.end);
        n.op = std::string(p);
        n.children.push_back(std::move(operand));
        return n;
      }
      if (p == "(" && looks_like_cast()) {
        next();
        parse_type_name();
        expect(")", "closing cast");
        if (at("{")) {
          AstNode list = parse_init_list();
          set_span(list, t.begin, list.span.end);
          return list;
        }
        AstNode operand = parse_unary();
        AstNode n = make(AstKind::UnaryOp, t.begin, operand.span.end);
        n.op = "cast";
        n.children.push_back(std::move(operand));
        return n;
      }
    }
    if (t.is("sizeof") || t.is("_Alignof")) {
      next();
      AstNode n = make(AstKind::UnaryOp, t.begin, t.end);
      n.op = std::string(t.text);
      if (at("(") && looks_like_cast()) {
        next();
        parse_type_name();
        expect(")", "closing sizeof");
      } else {
        n.children.push_back(parse_unary());
      }
      set_span(n, t.begin, prev_end_);
      return n;
    }
    return parse_postfix();
  }

  AstNode parse_postfix() {
    AstNode e = parse_primary();
    for (;;) {
      if (at("(")) {
        std::size_t begin = e.span.begin;
        AstNode call = make(AstKind::Call, begin, begin);
        if (e.kind == AstKind::Identifier && e.code == e.name) {
          call.name = e.name;
          call.name_begin = e.span.begin;
          call.name_end = e.span.end;
          if (e.name.find("->") != std::string::npos || e.name.find('.') != std::string::npos) {
            call.op = "indirect";
            call.children.push_back(std::move(e));
          }
        } else {
          call.name = strip_spaces(e.code);
          call.name_begin = e.span.begin;
          call.name_end = e.span.end;
          call.op = "indirect";
          call.children.push_back(std::move(e));
        }
        next();
        if (!at(")")) {
          for (;;) {
            call.children.push_back(parse_assign());
            if (!accept(",")) break;
          }
        }
        expect(")", "closing argument list");
        set_span(call, begin, prev_end_);
        e = std::move(call);
      } else if (at("[")) {
        next();
        AstNode idx = parse_expr();
        expect("]", "closing subscript");
        AstNode n = make(AstKind::BinaryOp, e.span.begin, prev_end_);
        n.op = "[]";
        n.children.push_back(std::move(e));
        n.children.push_back(std::move(idx));
        e = std::move(n);
      } else if ((at(".") || at("->")) && peek(1).kind == TokKind::Ident) {
        std::string op(next().text);
        const Token& member = next();
        if (e.kind == AstKind::Identifier && e.code == text_.substr(e.span.begin, e.span.end - e.span.begin) &&
            e.span.begin == e.name_begin) {
          e.name += op + std::string(member.text);
          set_span(e, e.span.begin, member.end);
        } else {
          AstNode n = make(AstKind::UnaryOp, e.span.begin, member.end);
          n.op = op + std::string(member.text);
          n.children.push_back(std::move(e));
          e = std::move(n);
        }
      } else if (at("++") || at("--")) {
        const Token& t = next();
        AstNode n = make(AstKind::UnaryOp, e.span.begin, t.end);
        n.op = "post" + std::string(t.text);
        n.children.push_back(std::move(e));
        e = std::move(n);
      } else {
        break;
      }
    }
    return e;
  }

  AstNode parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Ident: {
        next();
        AstNode n = make(AstKind::Identifier, t.begin, t.end);
        n.name = std::string(t.text);
        n.name_begin = t.begin;
        n.name_end = t.end;
        return n;
      }
      case TokKind::Number:
      case TokKind::Char: {
        next();
        AstNode n = make(AstKind::Literal, t.begin, t.end);
        n.name = std::string(t.text);
        return n;
      }
      case TokKind::String: {
        next();
        while (peek().kind == TokKind::String ||
               (peek().kind == TokKind::Ident && peek(1).kind == TokKind::String &&
                peek().text.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789") ==
                    std::string_view::npos)) {
          next();  // adjacent literal concatenation (and PRIxx-style macros)
        }
        AstNode n = make(AstKind::Literal, t.begin, prev_end_);
        n.name = n.code;
        return n;
      }
      case TokKind::Punct:
        if (t.is("(")) {
          next();
          if (at("{")) unsupported(t, "statement expressions are outside the supported subset");
          AstNode inner = parse_expr();
          expect(")", "closing parenthesis");
          // Widen to include the parentheses; the node keeps its kind.
          std::string name = inner.name;
          set_span(inner, t.begin, prev_end_);
          inner.name = name;
          return inner;
        }
        break;
      default:
        break;
    }
    error(t, "expected expression");
  }

  std::string_view text_;
  const LineIndex& lines_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t prev_end_ = 0;
  std::set<std::string> typedefs_;
};

// Inserts a comment into the innermost TranslationUnit/FunctionDef/Block
// whose span contains it, keeping children ordered by offset.
bool attach_comment(AstNode& node, AstNode& comment) {
  for (auto& c : node.children) {
    if (c.kind != AstKind::Comment && !c.children.empty() && c.span.contains(comment.span) &&
        attach_comment(c, comment))
      return true;
  }
  if (node.kind != AstKind::TranslationUnit && node.kind != AstKind::FunctionDef &&
      node.kind != AstKind::Block)
    return false;
  auto pos = std::find_if(node.children.begin(), node.children.end(),
                          [&](const AstNode& c) { return c.span.begin >= comment.span.end; });
  node.children.insert(pos, std::move(comment));
  return true;
}

}  // namespace

AstNode parse(const SourceUnit& unit) {
  std::string normalized;
  std::string_view text = unit.text;
  if (text.find('\r') != std::string_view::npos) {
    normalized = normalize_newlines(text);
    text = normalized;
  }
  LineIndex lines(text);
  std::vector<CommentRange> comments;
  auto toks = detail::lex(text, lines, &comments);
  Parser parser(text, lines, std::move(toks));
  AstNode root = parser.parse_translation_unit();
  for (const auto& r : comments) {
    AstNode c;
    c.kind = AstKind::Comment;
    c.span.begin = r.begin;
    c.span.end = r.end;
    c.span.first_line = lines.line_of(r.begin);
    c.span.last_line = lines.line_of(r.end > r.begin ? r.end - 1 : r.begin);
    c.code = std::string(text.substr(r.begin, r.end - r.begin));
    attach_comment(root, c);
  }
  return root;
}

}  // namespace cpgvd
