#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace cpgvd {

enum class AstKind {
  TranslationUnit,
  FunctionDef,
  ParamDecl,
  VarDecl,
  TypeDecl,  // typedef, struct/union/enum definition, function prototype
  Directive,
  If,
  While,
  For,
  Switch,
  Case,
  Goto,
  Label,
  Break,
  Continue,
  Return,
  Block,
  Empty,
  Call,
  Identifier,
  Literal,
  BinaryOp,
  UnaryOp,
  Assign,
  InitList,
  Comment,
};

std::string_view to_string(AstKind kind);

/// Half-open byte range plus the 1-based lines it touches.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  int first_line = 0;
  int last_line = 0;

  bool contains(const Span& other) const {
    return begin <= other.begin && other.end <= end;
  }
};

/// Syntax tree node. Children are owned by value.
///
/// Field usage by kind:
///   FunctionDef  name = function name, type = return type text,
///                children = ParamDecl..., Block body
///   ParamDecl    name (may be empty), type
///   VarDecl      name, type, children = [initializer]
///   TypeDecl     name = declared typedef/prototype name (may be empty)
///   If           children = cond, then, [else]
///   While        children = cond, body
///   For          children = init, cond, step, body (absent parts are Empty)
///   Switch       children = cond, body
///   Case         name = "case" | "default", children = [value]
///   Goto/Label   name = label
///   Return       children = [value]
///   Call         name = callee text, children = arguments
///   Identifier   name = variable or opaque member-access text ("ring->ops")
///   BinaryOp     op, children = lhs, rhs (ternary: cond, then, else)
///   UnaryOp      op ("-", "!", "*", "&", "++pre", "post++", "cast", "sizeof",
///                "->field", ".field"), children = [operand]
///   Assign       op ("=", "+=", ...), children = lhs, rhs
struct AstNode {
  AstKind kind = AstKind::Empty;
  std::string name;
  std::string op;
  std::string type;
  std::string code;
  Span span;
  // Range of the name token(s) inside the text; for Identifier this is the
  // base variable only (so "ring" in "ring->ops").
  std::size_t name_begin = 0;
  std::size_t name_end = 0;
  std::vector<AstNode> children;

  int line() const { return span.first_line; }
  bool is_leaf() const { return children.empty(); }
};

/// Preorder traversal. The visitor returns false to skip a subtree.
void visit_preorder(const AstNode& root,
                    const std::function<bool(const AstNode&, int depth)>& fn);

/// Structural comparison. With ignore_comments, Comment nodes are dropped and
/// code fields are compared after comment removal and whitespace collapsing.
bool structurally_equal(const AstNode& a, const AstNode& b,
                        bool ignore_comments);

std::string dump_ast(const AstNode& root);

}  // namespace cpgvd
