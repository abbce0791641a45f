#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace cpgvd::testing {

std::set<std::vector<int>> brute_force_flows(const CodePropertyGraph& g, const std::vector<int>& sources,
                                             const std::vector<int>& targets) {
  std::set<int> tset(targets.begin(), targets.end());
  std::set<std::vector<int>> out;
  std::vector<int> path;
  std::function<void(int)> dfs = [&](int v) {
    path.push_back(v);
    if (tset.count(v)) out.insert(path);
    for (const auto& e : g.edges)
      if (e.layer == Layer::DDG && e.src == v && std::find(path.begin(), path.end(), e.dst) == path.end())
        dfs(e.dst);
    path.pop_back();
  };
  for (int s : std::set<int>(sources.begin(), sources.end())) dfs(s);
  return out;
}

namespace {

bool is_assign_target(const CodePropertyGraph& g, const CpgNode& n) {
  if (n.kind != NodeKind::IDENTIFIER || n.ast_parent < 0) return false;
  const auto& p = g.node(n.ast_parent);
  if (p.kind != NodeKind::ASSIGNMENT) return false;
  int first = -1;
  for (const auto& m : g.nodes)
    if (m.ast_parent == p.id) {
      first = m.id;
      break;
    }
  return first == n.id;
}

std::vector<int> cfg_succ(const CodePropertyGraph& g, int v) {
  std::vector<int> out;
  for (const auto& e : g.edges)
    if (e.layer == Layer::CFG && e.src == v) out.push_back(e.dst);
  return out;
}

}  // namespace

std::set<DefUse> reaching_defs_oracle(const CodePropertyGraph& g) {
  struct Site {
    int node, stmt;
    std::string var;
  };
  std::vector<Site> defs, uses;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::PARAM && !n.name.empty()) defs.push_back({n.id, g.entry_of(n.method), n.name});
    if (n.kind == NodeKind::LOCAL && n.method >= 0) {
      bool init = false;
      for (const auto& m : g.nodes)
        if (m.ast_parent == n.id) init = true;
      if (init) defs.push_back({n.id, n.id, n.name});
    }
    if (n.kind == NodeKind::IDENTIFIER) {
      if (is_assign_target(g, n)) defs.push_back({n.id, n.cfg_owner, n.name});
      else uses.push_back({n.id, n.cfg_owner, n.name});
    }
  }
  auto defines = [&](int stmt, const std::string& var) {
    for (const auto& d : defs)
      if (d.stmt == stmt && d.var == var) return true;
    return false;
  };
  std::set<DefUse> out;
  for (const auto& d : defs) {
    // Walk every CFG path from the def's statement; a redefinition ends it.
    std::set<int> reached;
    std::function<void(int, std::vector<int>&)> walk = [&](int v, std::vector<int>& seen) {
      for (int w : cfg_succ(g, v)) {
        if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
        reached.insert(w);
        if (defines(w, d.var)) continue;
        seen.push_back(w);
        walk(w, seen);
        seen.pop_back();
      }
    };
    std::vector<int> seen{d.stmt};
    walk(d.stmt, seen);
    for (const auto& u : uses)
      if (u.var == d.var && reached.count(u.stmt)) out.insert({d.node, u.node, d.var});
  }
  return out;
}

std::set<DefUse> graph_def_use_edges(const CodePropertyGraph& g) {
  std::set<DefUse> out;
  for (const auto& e : g.edges) {
    if (e.layer != Layer::DDG) continue;
    const auto& s = g.node(e.src);
    const auto& d = g.node(e.dst);
    bool src_def = s.kind == NodeKind::PARAM || s.kind == NodeKind::LOCAL ||
                   (s.kind == NodeKind::IDENTIFIER && is_assign_target(g, s));
    bool dst_use = d.kind == NodeKind::IDENTIFIER && !is_assign_target(g, d);
    if (src_def && dst_use) out.insert({e.src, e.dst, e.var});
  }
  return out;
}

std::set<int> pdg_ancestors(const CodePropertyGraph& g, const std::vector<int>& seeds) {
  std::set<int> s(seeds.begin(), seeds.end());
  for (bool changed = true; changed;) {
    changed = false;
    std::set<int> owners;
    for (int v : s)
      if (g.node(v).cfg_owner >= 0) owners.insert(g.node(v).cfg_owner);
    for (const auto& e : g.edges) {
      bool hit = (e.layer == Layer::DDG || e.layer == Layer::CDG) && s.count(e.dst);
      if (e.layer == Layer::CDG && owners.count(e.dst)) hit = true;
      if (hit && s.insert(e.src).second) changed = true;
    }
  }
  return s;
}

std::set<std::pair<int, int>> control_dependence_oracle(const CodePropertyGraph& g) {
  std::set<std::pair<int, int>> out;
  for (int m : g.functions) {
    std::vector<int> nodes = g.cfg_nodes(m);
    int exit = g.exit_of(m);
    // y post-dominates x: no path from x to EXIT avoiding y.
    auto reaches_exit_avoiding = [&](int x, int y) {
      if (x == y) return false;
      std::set<int> seen{x};
      std::vector<int> stack{x};
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == exit) return true;
        for (int w : cfg_succ(g, v))
          if (w != y && seen.insert(w).second) stack.push_back(w);
      }
      return false;
    };
    auto postdom = [&](int y, int x) { return x == y || !reaches_exit_avoiding(x, y); };
    for (int x : nodes) {
      auto succ = cfg_succ(g, x);
      if (succ.size() < 2) continue;
      for (int y : nodes) {
        if (y == g.entry_of(m) || y == exit) continue;
        bool some = false;
        for (int s : succ)
          if (postdom(y, s)) some = true;
        bool strict = y != x && postdom(y, x);
        if (some && !strict) out.insert({x, y});
      }
    }
  }
  return out;
}

double naive_calibrate(const std::vector<LabeledScore>& samples, double step) {
  double best = -1, best_g = 0;
  for (double gmm : threshold_grid(step)) {
    double acc = accuracy_at(samples, gmm);
    if (acc > best) {
      best = acc;
      best_g = gmm;
    }
  }
  return best_g;
}

}  // namespace cpgvd::testing
