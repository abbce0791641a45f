#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include <json.hpp>

#include "cpgvd/cpg.hpp"
#include "cpgvd/frontend.hpp"
#include "cpgvd/metrics.hpp"
#include "fixtures.hpp"
#include "random_c.hpp"

using namespace cpgvd;
using namespace cpgvd::testing;

namespace {

SourceUnit unit(const std::string& text) { return SourceUnit::from_text("t", text); }

std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(data_path("corpus")))
    if (e.path().extension() == ".c") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

// E - N + 2P straight off the CFG edge list, P = number of functions.
int graph_cc(const CodePropertyGraph& g) {
  int e = 0, n = 0;
  for (const auto& edge : g.edges)
    if (edge.layer == Layer::CFG) ++e;
  for (int m : g.functions) n += static_cast<int>(g.cfg_nodes(m).size());
  return e - n + 2 * static_cast<int>(g.functions.size());
}

// 1 + decisions per function, counted on the AST.
int decisions(const AstNode& n, bool in_condition) {
  int d = 0;
  switch (n.kind) {
    case AstKind::If:
    case AstKind::While:
      d = 1;
      break;
    case AstKind::For:
      d = n.children.size() > 1 && n.children[1].kind != AstKind::Empty ? 1 : 0;
      break;
    case AstKind::Case:
      d = n.name == "case" ? 1 : 0;
      break;
    case AstKind::BinaryOp:
      d = in_condition && (n.op == "&&" || n.op == "||") ? 1 : 0;
      break;
    default:
      break;
  }
  bool cond_parent = n.kind == AstKind::If || n.kind == AstKind::While || n.kind == AstKind::For;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    bool cond = in_condition;
    if (cond_parent) cond = (n.kind == AstKind::For) ? i == 1 : i == 0;
    d += decisions(n.children[i], cond);
  }
  return d;
}

int ast_cc(const AstNode& tu) {
  int cc = 0;
  for (const auto& fn : tu.children)
    if (fn.kind == AstKind::FunctionDef) cc += 1 + decisions(fn, false);
  return cc;
}

}  // namespace

TEST(Metrics, StraightLineFunction) {
  auto r = compute_metrics(unit("int f(int a)\n{\n  int b = a + 1;\n  g(b);\n  return b;\n}\n"));
  EXPECT_EQ(r.cc, 1);
  EXPECT_EQ(r.cc_graph, 1);
  EXPECT_EQ(r.branches, 0);
  EXPECT_EQ(r.nesting, 1);
  EXPECT_EQ(r.functions, 1);
  EXPECT_EQ(r.loc, 6);
}

TEST(Metrics, IfAndWhileGiveThree) {
  auto r = compute_metrics(
      unit("int f(int a)\n{\n  if (a > 0)\n    a = 1;\n  while (a < 9) {\n    a++;\n  }\n  return a;\n}\n"));
  EXPECT_EQ(r.per_function_cc.at("f"), 3);
  EXPECT_EQ(r.cc, 3);
  EXPECT_EQ(r.cc_graph, 3);
  EXPECT_EQ(r.branches, 4);
  EXPECT_EQ(r.nesting, 2);
}

TEST(Metrics, ShortCircuitAndSwitchWeights) {
  auto r = compute_metrics(unit(
      "int f(int a, int b)\n{\n  if (a && b || a > 3)\n    return 1;\n  switch (a) {\n  case 1:\n    b = 2;\n"
      "    break;\n  case 2:\n    b = 3;\n    break;\n  default:\n    b = 0;\n  }\n  return b;\n}\n"));
  EXPECT_EQ(r.cc, 1 + 1 + 2 + 2);
  EXPECT_EQ(r.cc_graph, r.cc);
  EXPECT_EQ(r.branches, 2 + 3);
}

TEST(Metrics, NestingGrowsByOnePerLevel) {
  std::string body = "    x = 1;\n";
  for (int depth = 1; depth <= 5; ++depth) {
    std::string text = "int f(int x)\n{\n";
    for (int i = 1; i < depth; ++i) text += "if (x) {\n";
    text += body;
    for (int i = 1; i < depth; ++i) text += "}\n";
    text += "return x;\n}\n";
    EXPECT_EQ(compute_metrics(unit(text)).nesting, depth) << text;
  }
  EXPECT_EQ(compute_metrics(unit("void f(void){}")).nesting, 0);
}

TEST(Metrics, CorpusDualCcAgrees) {
  const std::map<std::string, int> frozen = {
      {"bsearch.c", 4},      {"checksum.c", 4},       {"cleanup_goto.c", 5}, {"copy_name.c", 4},
      {"dma_rx.c", 11},      {"matrix.c", 8},         {"packet.c", 6},       {"parse_opts.c", 9},
      {"ring_buffer.c", 6},  {"s2_compare.c", 2},     {"state_machine.c", 13}, {"tokenize.c", 10}};
  auto files = corpus_files();
  ASSERT_EQ(files.size(), frozen.size());
  for (const auto& f : files) {
    SCOPED_TRACE(f);
    SourceUnit u = load_fixture("corpus/" + f);
    auto ast = parse(u);
    auto g = build_cpg(ast, u);
    auto r = compute_metrics(u, ast, g);
    EXPECT_EQ(r.cc, r.cc_graph);
    EXPECT_EQ(r.cc_graph, graph_cc(g));
    EXPECT_EQ(r.cc, ast_cc(ast));
    EXPECT_EQ(r.cc, frozen.at(f));
    int sum = 0;
    for (const auto& [name, cc] : r.per_function_cc) sum += cc;
    EXPECT_EQ(sum, r.cc);
  }
}

TEST(Metrics, RandomUnitsDualCcAgrees) {
  RandomCOptions o;
  o.functions = 3;
  o.gotos = true;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    SourceUnit u = SourceUnit::from_text("r", random_c_unit(seed, o));
    auto ast = parse(u);
    auto g = build_cpg(ast, u);
    auto r = compute_metrics(u, ast, g);
    EXPECT_EQ(r.cc, graph_cc(g)) << u.text;
    EXPECT_EQ(r.cc, ast_cc(ast)) << u.text;
  }
}

TEST(Metrics, LocIgnoresCommentsAndBlankLines) {
  EXPECT_EQ(count_loc(""), 0);
  EXPECT_EQ(count_loc("\n\n  \n"), 0);
  EXPECT_EQ(count_loc("// c\n/* a\n b */\nint x;\n"), 1);
  EXPECT_EQ(count_loc("int x; // trailing\n"), 1);
  EXPECT_EQ(count_loc(read_text(data_path("dma_rx.c"))), 85);
  RandomCOptions o;
  o.comments = true;
  o.functions = 2;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    SourceUnit u = SourceUnit::from_text("r", random_c_unit(seed, o));
    EXPECT_EQ(count_loc(strip_comments(u).text), count_loc(u.text));
  }
}

TEST(Metrics, MetricValueByName) {
  MetricsReport r;
  r.loc = 10;
  r.cc = 3;
  r.functions = 1;
  r.branches = 4;
  r.nesting = 2;
  EXPECT_EQ(metric_value(r, "loc"), 10);
  EXPECT_EQ(metric_value(r, "cc"), 3);
  EXPECT_EQ(metric_value(r, "functions"), 1);
  EXPECT_EQ(metric_value(r, "branches"), 4);
  EXPECT_EQ(metric_value(r, "nesting"), 2);
  EXPECT_THROW(metric_value(r, "halstead"), UnknownMetric);
}

TEST(Binning, OneReportOneBin) {
  MetricsReport r;
  r.cc = 5;
  auto h = bin_by_metric({r}, "cc", {0, 10});
  EXPECT_EQ(h.counts, std::vector<int>{1});
  EXPECT_EQ(h.underflow, 0);
  EXPECT_EQ(h.overflow, 0);
}

TEST(Binning, EmptyListIsAllZero) {
  auto h = bin_by_metric({}, "loc", {0, 10, 20, 50});
  EXPECT_EQ(h.counts, (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(h.underflow + h.overflow, 0);
}

TEST(Binning, EdgesAndOutliers) {
  std::vector<MetricsReport> rs(6);
  int locs[] = {-1, 0, 9, 10, 20, 21};
  for (int i = 0; i < 6; ++i) rs[static_cast<std::size_t>(i)].loc = locs[i];
  auto h = bin_by_metric(rs, "loc", {0, 10, 20});
  EXPECT_EQ(h.counts, (std::vector<int>{2, 2}));  // [0,10) and [10,20]
  EXPECT_EQ(h.underflow, 1);
  EXPECT_EQ(h.overflow, 1);
}

TEST(Binning, RejectsBadInput) {
  EXPECT_THROW(bin_by_metric({}, "size", {0, 1}), UnknownMetric);
  EXPECT_THROW(bin_by_metric({}, "loc", {1, 1}), std::invalid_argument);
  EXPECT_THROW(bin_by_metric({}, "loc", {3, 2}), std::invalid_argument);
  EXPECT_THROW(bin_by_metric({}, "loc", {1}), std::invalid_argument);
}

TEST(Summary, TableRowsAndFormat) {
  std::vector<MetricsReport> rs(2);
  rs[0].loc = 10;
  rs[1].loc = 21;
  rs[0].cc = 1;
  rs[1].cc = 4;
  auto rows = summarize_metrics(rs);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].metric, "LOC");
  EXPECT_DOUBLE_EQ(rows[0].mean, 15.5);
  EXPECT_EQ(rows[0].min, 10);
  EXPECT_EQ(rows[0].max, 21);
  EXPECT_EQ(rows[1].metric, "CC");
  auto table = format_summary_table(rows);
  EXPECT_EQ(table.substr(0, table.find('\n')), "Metric\tMean\tMin\tMax");
  EXPECT_NE(table.find("LOC\t15.50\t10\t21"), std::string::npos) << table;
}

TEST(Summary, JsonHasAllFields) {
  auto r = compute_metrics(load_fixture("s2_compare.c"));
  auto j = nlohmann::json::parse(metrics_to_json(r));
  for (const char* k : {"loc", "cc", "functions", "branches", "nesting"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["cc"], 2);
}
