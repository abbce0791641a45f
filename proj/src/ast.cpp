#include "cpgvd/ast.hpp"

#include <cctype>

#include "cpgvd/frontend.hpp"

namespace cpgvd {

std::string_view to_string(AstKind kind) {
  switch (kind) {
    case AstKind::TranslationUnit: return "TranslationUnit";
    case AstKind::FunctionDef: return "FunctionDef";
    case AstKind::ParamDecl: return "ParamDecl";
    case AstKind::VarDecl: return "VarDecl";
    case AstKind::TypeDecl: return "TypeDecl";
    case AstKind::Directive: return "Directive";
    case AstKind::If: return "If";
    case AstKind::While: return "While";
    case AstKind::For: return "For";
    case AstKind::Switch: return "Switch";
    case AstKind::Case: return "Case";
    case AstKind::Goto: return "Goto";
    case AstKind::Label: return "Label";
    case AstKind::Break: return "Break";
    case AstKind::Continue: return "Continue";
    case AstKind::Return: return "Return";
    case AstKind::Block: return "Block";
    case AstKind::Empty: return "Empty";
    case AstKind::Call: return "Call";
    case AstKind::Identifier: return "Identifier";
    case AstKind::Literal: return "Literal";
    case AstKind::BinaryOp: return "BinaryOp";
    case AstKind::UnaryOp: return "UnaryOp";
    case AstKind::Assign: return "Assign";
    case AstKind::InitList: return "InitList";
    case AstKind::Comment: return "Comment";
  }
  return "?";
}

namespace {

void visit(const AstNode& n, int depth,
           const std::function<bool(const AstNode&, int)>& fn) {
  if (!fn(n, depth)) return;
  for (const auto& c : n.children) visit(c, depth + 1, fn);
}

std::string squeeze(std::string_view code, bool drop_comments) {
  std::string text(code);
  if (drop_comments) {
    for (const auto& r : find_comments(text))
      for (std::size_t i = r.begin; i < r.end; ++i) text[i] = ' ';
  }
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

void visit_preorder(const AstNode& root,
                    const std::function<bool(const AstNode&, int depth)>& fn) {
  visit(root, 0, fn);
}

bool structurally_equal(const AstNode& a, const AstNode& b, bool ignore_comments) {
  if (a.kind != b.kind || a.name != b.name || a.op != b.op || a.type != b.type) return false;
  if (ignore_comments) {
    if (squeeze(a.code, true) != squeeze(b.code, true)) return false;
  } else if (a.code != b.code) {
    return false;
  }
  std::vector<const AstNode*> ca, cb;
  for (const auto& c : a.children)
    if (!ignore_comments || c.kind != AstKind::Comment) ca.push_back(&c);
  for (const auto& c : b.children)
    if (!ignore_comments || c.kind != AstKind::Comment) cb.push_back(&c);
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (!structurally_equal(*ca[i], *cb[i], ignore_comments)) return false;
  return true;
}

std::string dump_ast(const AstNode& root) {
  std::string out;
  visit_preorder(root, [&](const AstNode& n, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += to_string(n.kind);
    if (!n.name.empty()) out += " name=" + n.name;
    if (!n.op.empty()) out += " op=" + n.op;
    if (!n.type.empty()) out += " type=" + n.type;
    out += " @" + std::to_string(n.span.first_line);
    if (n.span.last_line != n.span.first_line) out += "-" + std::to_string(n.span.last_line);
    out += "\n";
    return true;
  });
  return out;
}

}  // namespace cpgvd
