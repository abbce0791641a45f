#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cpgvd/frontend.hpp"
#include "cpgvd/metrics.hpp"
#include "skeleton.hpp"

namespace cpgvd {

int count_loc(std::string_view text) {
  std::string plain = normalize_newlines(text);
  std::vector<CommentRange> comments = find_comments(plain);
  for (const auto& c : comments)
    for (std::size_t i = c.begin; i < c.end && i < plain.size(); ++i)
      if (plain[i] != '\n') plain[i] = ' ';
  int loc = 0;
  for (std::string_view line : split_lines(plain)) {
    bool code = std::any_of(line.begin(), line.end(),
                            [](char c) { return !std::isspace(static_cast<unsigned char>(c)); });
    if (code) ++loc;
  }
  return loc;
}

namespace {

struct FunctionStats {
  int cc = 1;
  int branches = 0;
  int nesting = 0;
};

void walk_statement(const AstNode& s, int depth, FunctionStats& st);

void walk_body(const AstNode& s, int depth, FunctionStats& st) {
  if (s.kind == AstKind::Block) {
    for (const auto& c : s.children) walk_body(c, depth, st);
    return;
  }
  walk_statement(s, depth, st);
}

void walk_statement(const AstNode& s, int depth, FunctionStats& st) {
  switch (s.kind) {
    case AstKind::Empty:
    case AstKind::Comment:
    case AstKind::Directive:
    case AstKind::TypeDecl:
      return;
    default:
      break;
  }
  st.nesting = std::max(st.nesting, depth);
  switch (s.kind) {
    case AstKind::If:
      st.cc += 1 + detail::short_circuit_count(s.children.at(0));
      st.branches += 2;
      for (std::size_t i = 1; i < s.children.size(); ++i) walk_body(s.children[i], depth + 1, st);
      return;
    case AstKind::While:
      st.cc += 1 + detail::short_circuit_count(s.children.at(0));
      st.branches += 2;
      walk_body(s.children.at(1), depth + 1, st);
      return;
    case AstKind::For: {
      const AstNode& cond = s.children.at(1);
      if (cond.kind != AstKind::Empty) {
        st.cc += 1 + detail::short_circuit_count(cond);
        st.branches += 2;
      }
      walk_body(s.children.at(3), depth + 1, st);
      return;
    }
    case AstKind::Switch: {
      int labels = 0;
      bool has_default = false;
      // Labels belonging to this switch, not to nested ones.
      std::function<void(const AstNode&)> scan = [&](const AstNode& n) {
        for (const auto& c : n.children) {
          if (c.kind == AstKind::Switch) continue;
          if (c.kind == AstKind::Case) {
            ++labels;
            if (c.name == "default") has_default = true;
            else st.cc += 1;
          }
          if (c.kind == AstKind::Block || c.kind == AstKind::If || c.kind == AstKind::While ||
              c.kind == AstKind::For)
            scan(c);
        }
      };
      scan(s.children.at(1));
      st.branches += labels + (has_default ? 0 : 1);
      walk_body(s.children.at(1), depth + 1, st);
      return;
    }
    case AstKind::Block:
      // A bare compound statement opens a scope but not a nesting level.
      for (const auto& c : s.children) walk_statement(c, depth, st);
      return;
    default:
      return;
  }
}

int graph_cc(const CodePropertyGraph& g, int method) {
  std::vector<int> cfg = g.cfg_nodes(method);
  std::set<int> members(cfg.begin(), cfg.end());
  int edges = 0;
  for (int n : cfg)
    for (int e : g.out_edges(n, Layer::CFG))
      if (members.count(g.edges[static_cast<std::size_t>(e)].dst)) ++edges;
  return edges - static_cast<int>(cfg.size()) + 2;
}

}  // namespace

MetricsReport compute_metrics(const SourceUnit& unit, const AstNode& ast,
                              const CodePropertyGraph& g) {
  MetricsReport r;
  r.loc = count_loc(unit.text);
  std::vector<const AstNode*> fns;
  for (const auto& c : ast.children)
    if (c.kind == AstKind::FunctionDef) fns.push_back(&c);
  r.functions = static_cast<int>(fns.size());
  if (fns.size() != g.functions.size())
    throw MetricMismatch("graph has " + std::to_string(g.functions.size()) +
                         " methods but the unit defines " + std::to_string(fns.size()));
  int edges_total = 0, nodes_total = 0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const AstNode& fn = *fns[i];
    FunctionStats st;
    for (const auto& c : fn.children)
      if (c.kind == AstKind::Block) walk_body(c, 1, st);
    r.cc += st.cc;
    r.branches += st.branches;
    r.nesting = std::max(r.nesting, st.nesting);
    std::string key = fn.name;
    if (r.per_function_cc.count(key)) key += "#" + std::to_string(i);
    r.per_function_cc[key] = st.cc;

    int m = g.functions[i];
    int gcc = graph_cc(g, m);
    if (gcc != st.cc)
      throw MetricMismatch("function '" + fn.name + "': E-N+2 = " + std::to_string(gcc) +
                           " but decision count gives " + std::to_string(st.cc));
    std::vector<int> cfg = g.cfg_nodes(m);
    nodes_total += static_cast<int>(cfg.size());
    edges_total += gcc - 2 + static_cast<int>(cfg.size());
  }
  r.cc_graph = edges_total - nodes_total + 2 * r.functions;
  if (r.cc_graph != r.cc)
    throw MetricMismatch("unit CC formulations disagree: " + std::to_string(r.cc_graph) + " vs " +
                         std::to_string(r.cc));
  return r;
}

MetricsReport compute_metrics(const SourceUnit& unit, const CodePropertyGraph& g) {
  return compute_metrics(unit, parse(unit), g);
}

MetricsReport compute_metrics(const SourceUnit& unit) {
  AstNode ast = parse(unit);
  CodePropertyGraph g = build_cpg(ast, unit);
  return compute_metrics(unit, ast, g);
}

int metric_value(const MetricsReport& r, std::string_view metric) {
  if (metric == "loc") return r.loc;
  if (metric == "cc") return r.cc;
  if (metric == "functions") return r.functions;
  if (metric == "branches") return r.branches;
  if (metric == "nesting") return r.nesting;
  throw UnknownMetric("unknown metric '" + std::string(metric) +
                      "' (expected loc, cc, functions, branches or nesting)");
}

Histogram bin_by_metric(const std::vector<MetricsReport>& reports, std::string_view metric,
                        const std::vector<double>& edges) {
  MetricsReport probe;
  metric_value(probe, metric);  // validates the name
  if (edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("bin edges must be strictly increasing");
  Histogram h;
  h.metric = std::string(metric);
  h.edges = edges;
  h.counts.assign(edges.size() - 1, 0);
  for (const auto& r : reports) {
    double v = metric_value(r, metric);
    if (v < edges.front()) {
      ++h.underflow;
      continue;
    }
    if (v > edges.back()) {
      ++h.overflow;
      continue;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t bin = static_cast<std::size_t>(it - edges.begin());
    bin = bin == 0 ? 0 : bin - 1;
    if (bin >= h.counts.size()) bin = h.counts.size() - 1;
    ++h.counts[bin];
  }
  return h;
}

std::vector<MetricSummaryRow> summarize_metrics(const std::vector<MetricsReport>& reports) {
  static const std::pair<const char*, const char*> kRows[] = {
      {"LOC", "loc"}, {"CC", "cc"}, {"Functions", "functions"}, {"Branches", "branches"},
      {"Nesting", "nesting"}};
  std::vector<MetricSummaryRow> rows;
  for (const auto& [label, key] : kRows) {
    MetricSummaryRow row;
    row.metric = label;
    if (!reports.empty()) {
      double sum = 0;
      row.min = std::numeric_limits<int>::max();
      row.max = std::numeric_limits<int>::min();
      for (const auto& r : reports) {
        int v = metric_value(r, key);
        sum += v;
        row.min = std::min(row.min, v);
        row.max = std::max(row.max, v);
      }
      row.mean = sum / static_cast<double>(reports.size());
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_summary_table(const std::vector<MetricSummaryRow>& rows) {
  std::ostringstream out;
  out << "Metric\tMean\tMin\tMax\n";
  for (const auto& r : rows) {
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.2f", r.mean);
    out << r.metric << '\t' << mean << '\t' << r.min << '\t' << r.max << '\n';
  }
  return out.str();
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::json j{{"loc", r.loc},           {"cc", r.cc},
                   {"ccGraph", r.cc_graph},  {"functions", r.functions},
                   {"branches", r.branches}, {"nesting", r.nesting},
                   {"perFunctionCc", r.per_function_cc}};
  return j.dump();
}

}  // namespace cpgvd
