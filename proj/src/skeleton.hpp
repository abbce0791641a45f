#pragma once

#include <string>
#include <vector>

#include "cpgvd/ast.hpp"

namespace cpgvd::detail {

inline bool is_short_circuit(const AstNode& e) {
  return e.kind == AstKind::BinaryOp && (e.op == "&&" || e.op == "||") && e.children.size() == 2;
}

struct ConditionLeaf {
  const AstNode* node;
  std::string op;  // operator owning this decision; empty for the first leaf
};

// Operands of the boolean skeleton of a condition: the tree formed by &&, ||
// and ! only. One CFG decision node exists per leaf.
inline void condition_leaves(const AstNode& e, std::vector<ConditionLeaf>& out,
                             const std::string& op = {}) {
  if (is_short_circuit(e)) {
    condition_leaves(e.children[0], out, op);
    condition_leaves(e.children[1], out, e.op);
    return;
  }
  if (e.kind == AstKind::UnaryOp && e.op == "!" && e.children.size() == 1) {
    condition_leaves(e.children[0], out, op);
    return;
  }
  out.push_back({&e, op});
}

inline int short_circuit_count(const AstNode& cond) {
  std::vector<ConditionLeaf> leaves;
  condition_leaves(cond, leaves);
  return static_cast<int>(leaves.size()) - 1;
}

}  // namespace cpgvd::detail
