#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "cpgvd/cpg.hpp"
#include "cpgvd/frontend.hpp"
#include "cpgvd/metrics.hpp"
#include "cpgvd/query.hpp"
#include "cpgvd/slicer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "random_c.hpp"

using namespace cpgvd;
using namespace cpgvd::testing;

namespace {

struct Fixture {
  SourceUnit unit;
  CodePropertyGraph g;
};

Fixture make(const std::string& text) {
  Fixture f{SourceUnit::from_text("t", text), {}};
  f.g = build_cpg(f.unit);
  return f;
}

FlowSet flows(const std::string& script, const CodePropertyGraph& g) {
  return eval_query(parse_query(script), g).flows;
}

bool contains_line(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

// Statement-level nodes the slicer may add beyond PDG ancestry.
bool is_structural_extra(const CodePropertyGraph& g, int id) {
  const auto& n = g.node(id);
  int owner = n.cfg_owner >= 0 ? n.cfg_owner : id;
  const auto& st = g.node(owner);
  switch (st.kind) {
    case NodeKind::LOCAL:
    case NodeKind::RETURN:
    case NodeKind::LABEL:
    case NodeKind::METHOD:
    case NodeKind::ENTRY:
    case NodeKind::EXIT:
    case NodeKind::METHOD_RETURN:
      return true;
    case NodeKind::CONTROL_STRUCTURE:
      return st.name == "goto" || st.name == "break" || st.name == "continue";
    default:
      return n.kind == NodeKind::LOCAL || n.kind == NodeKind::PARAM || n.kind == NodeKind::BLOCK;
  }
}

const char* kChain =
    "int f(int p)\n"
    "{\n"
    "  int a = p;\n"
    "  int b = a + 1;\n"
    "  sink(b);\n"
    "  int c = p * 2;\n"
    "  c = c + 1;\n"
    "  return c;\n"
    "}\n";

}  // namespace

TEST(Slicer, LenToSkbPutSliceOfDmaRxIsTheReferenceSnippet) {
  SourceUnit u = load_fixture("dma_rx.c");
  auto g = build_cpg(u);
  auto f = flows(kLenToSkbPut, g);
  ASSERT_FALSE(f.paths.empty());
  std::string expected = read_text(data_path("dma_rx_slice.c"));
  for (const auto& p : f.paths) {
    Slice s = slice_path(p, g, u);
    EXPECT_EQ(s.original_loc, 85);
    EXPECT_EQ(s.slice_loc, 18);
    EXPECT_LE(s.slice_loc, 25);
    EXPECT_NEAR(s.reduction_pct, 78.8235, 1e-4);
    EXPECT_GE(s.reduction_pct, 70.0);
    EXPECT_EQ(s.rendered_text, expected);
    EXPECT_TRUE(s.rendered_text.rfind("static void dma_rx(", 0) == 0);
    EXPECT_TRUE(contains_line(s.rendered_text, "len = le16_to_cpu(rxhdr->frame_len);"));
    EXPECT_TRUE(contains_line(s.rendered_text, "if (unlikely(len > ring->rx_buffersize)) {"));
    EXPECT_TRUE(contains_line(s.rendered_text, "skb_put(skb, len + ring->frameoffset);"));
    EXPECT_TRUE(contains_line(s.rendered_text, "drop:"));
    EXPECT_EQ(count_loc(s.rendered_text), s.slice_loc);
  }
}

TEST(Slicer, InteractersPullInTheS2Definition) {
  SourceUnit u = load_fixture("s2_compare.c");
  auto g = build_cpg(u);
  auto f = flows("val src = cpg.parameter.name(\"s1\")\n"
                 "cpg.identifier.name(\"d\").lineNumber(17).reachableByFlows(src)",
                 g);
  ASSERT_FALSE(f.paths.empty());
  const auto& path = f.paths.front();
  auto inter = find_interacters(path, g);
  bool saw_s2 = false;
  for (int id : inter.members)
    if (g.node(id).name == "s2") saw_s2 = true;
  EXPECT_TRUE(saw_s2);
  Slice s = slice_path(path, g, u);
  EXPECT_TRUE(contains_line(s.rendered_text, "static const char s2[] = \"anonymous\";"));
  EXPECT_FALSE(contains_line(s.rendered_text, "log_attempt"));
  EXPECT_FALSE(contains_line(s.rendered_text, "/*"));
}

TEST(Slicer, InteractersAreEveryIdentifierOnPathLines) {
  for (const char* file : {"dma_rx.c", "s2_compare.c", "corpus/packet.c"}) {
    SourceUnit u = load_fixture(file);
    auto g = build_cpg(u);
    auto f = flows("cpg.call.argument.reachableByFlows(cpg.parameter)", g);
    ASSERT_FALSE(f.paths.empty()) << file;
    for (const auto& p : f.paths) {
      auto lines = p.lines(g);
      std::set<int> want;
      for (const auto& n : g.nodes)
        if (n.kind == NodeKind::IDENTIFIER && std::binary_search(lines.begin(), lines.end(), n.line))
          want.insert(n.id);
      auto inter = find_interacters(p, g);
      EXPECT_EQ(std::set<int>(inter.members.begin(), inter.members.end()), want);
      EXPECT_EQ(inter.path_lines, lines);
      EXPECT_TRUE(std::is_sorted(inter.members.begin(), inter.members.end()));
    }
  }
}

TEST(Slicer, TwoIdentifiersOnOneLineAreBothInteracters) {
  auto fx = make("int f(int p, int q)\n{\n  int r = p + q;\n  return r;\n}\n");
  auto f = flows("cpg.identifier.name(\"r\").lineNumber(4).reachableByFlows(cpg.parameter.name(\"p\"))", fx.g);
  ASSERT_EQ(f.paths.size(), 1u);
  auto inter = find_interacters(f.paths[0], fx.g);
  std::multiset<std::string> names;
  for (int id : inter.members)
    if (fx.g.node(id).line == 3) names.insert(fx.g.node(id).name);
  EXPECT_EQ(names, (std::multiset<std::string>{"p", "q"}));
}

TEST(Slicer, ChainKeepsItsStatementsAndDropsLaterCode) {
  auto fx = make(kChain);
  auto f = flows("cpg.call.name(\"sink\").reachableByFlows(cpg.parameter)", fx.g);
  ASSERT_EQ(f.paths.size(), 1u);
  Slice s = slice_path(f.paths[0], fx.g, fx.unit);
  for (int line : {3, 4, 5})
    EXPECT_TRUE(std::binary_search(s.closure_lines.begin(), s.closure_lines.end(), line)) << line;
  for (int line : {6, 7})
    EXPECT_FALSE(std::binary_search(s.closure_lines.begin(), s.closure_lines.end(), line)) << line;
  EXPECT_FALSE(contains_line(s.rendered_text, "c + 1"));
}

TEST(Slicer, ClosureIsPdgAncestryPlusStructure) {
  RandomCOptions o;
  o.functions = 2;
  o.gotos = true;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    auto fx = make(random_c_unit(seed, o));
    auto f = flows("cpg.call.argument.reachableByFlows(cpg.parameter)", fx.g);
    if (f.paths.empty()) continue;
    const auto& p = f.paths.back();
    auto inter = find_interacters(p, fx.g);
    Slice s = backward_slice(p, inter, fx.g);
    std::vector<int> seeds = p.nodes;
    seeds.insert(seeds.end(), inter.members.begin(), inter.members.end());
    auto anc = pdg_ancestors(fx.g, seeds);
    std::set<int> closure(s.closure.begin(), s.closure.end());
    for (int a : anc) EXPECT_TRUE(closure.count(a)) << "missing " << a << " seed " << seed;
    for (int c : closure)
      if (!anc.count(c)) EXPECT_TRUE(is_structural_extra(fx.g, c)) << "extra " << c << " seed " << seed;
    for (int t : seeds) EXPECT_TRUE(closure.count(t));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Slicer, TwoFunctionsRenderInFileOrder) {
  auto fx = make(
      "int first(int a)\n{\n  int x = a;\n  return x;\n}\n"
      "int second(int b)\n{\n  int y = b;\n  return y;\n}\n");
  std::vector<int> picks;
  for (const auto& n : fx.g.nodes)
    if (n.kind == NodeKind::IDENTIFIER && (n.name == "x" || n.name == "y") && (n.line == 4 || n.line == 9))
      picks.push_back(n.id);
  ASSERT_EQ(picks.size(), 2u);
  // Reverse order on purpose: rendering follows the file, not the path.
  ExecutionPath p{{picks[1], picks[0]}};
  Slice s = slice_path(p, fx.g, fx.unit);
  auto first = s.rendered_text.find("int first(int a)");
  auto second = s.rendered_text.find("int second(int b)");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_TRUE(std::is_sorted(s.line_map.begin(), s.line_map.end()));
  EXPECT_NO_THROW(parse(SourceUnit::from_text("r", s.rendered_text)));
}

TEST(Slicer, EmptyClosureRendersNothing) {
  auto fx = make(kChain);
  Slice s;
  EXPECT_EQ(render_slice(s, fx.unit), "");
  EXPECT_TRUE(render_slice_lines(s, fx.unit, &fx.g).line_map.empty());
}

TEST(Slicer, ReductionRatio) {
  EXPECT_NEAR(reduction_ratio(85, 18), 78.8235294, 1e-6);
  EXPECT_DOUBLE_EQ(reduction_ratio(100, 10), 90.0);
  EXPECT_DOUBLE_EQ(reduction_ratio(40, 40), 0.0);
  EXPECT_THROW(reduction_ratio(0, 0), DivisionGuard);
  Slice s;
  s.original_loc = 0;
  EXPECT_THROW(reduction_ratio(s), DivisionGuard);
}

TEST(Slicer, WholeUnitSliceHasZeroReduction) {
  auto fx = make("int f(int p)\n{\n  int a = p;\n  return a;\n}\n");
  auto f = flows("cpg.identifier.name(\"a\").lineNumber(4).reachableByFlows(cpg.parameter)", fx.g);
  ASSERT_EQ(f.paths.size(), 1u);
  Slice s = slice_path(f.paths[0], fx.g, fx.unit);
  EXPECT_EQ(s.rendered_text, fx.unit.text);
  EXPECT_DOUBLE_EQ(s.reduction_pct, 0.0);
}

TEST(SlicerProperties, RenderedSlicesReparseContainPathAndHaveNoComments) {
  RandomCOptions o;
  o.functions = 2;
  o.gotos = true;
  o.comments = true;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    auto fx = make(random_c_unit(seed, o));
    auto f = flows("cpg.call.argument.reachableByFlows(cpg.parameter)", fx.g);
    for (std::size_t i = 0; i < f.paths.size() && i < 3; ++i) {
      Slice s = slice_path(f.paths[i], fx.g, fx.unit);
      SCOPED_TRACE(fx.unit.text + "\n----\n" + s.rendered_text);
      auto unit2 = SourceUnit::from_text("s", s.rendered_text);
      ASSERT_NO_THROW(parse(unit2));
      EXPECT_TRUE(find_comments(s.rendered_text).empty());
      auto g2 = build_cpg(unit2);
      for (int id : f.paths[i].nodes) {
        const auto& n = fx.g.node(id);
        bool found = false;
        for (const auto& m : g2.nodes)
          if (m.kind == n.kind && m.name == n.name && m.code == n.code) found = true;
        EXPECT_TRUE(found) << n.code;
      }
      EXPECT_GE(s.reduction_pct, 0.0);
      EXPECT_LT(s.reduction_pct, 100.0);
      ASSERT_EQ(s.line_map.size(), split_lines(s.rendered_text).size());
      for (std::size_t k = 0; k < s.line_map.size(); ++k)
        if (s.line_map[k] > 0) {
          // Rendered lines are cut from their original line.
          auto orig = std::string(split_lines(strip_comments(fx.unit).text)[s.line_map[k] - 1]);
          auto line = std::string(split_lines(s.rendered_text)[k]);
          auto trimmed = line.substr(line.find_first_not_of(" \t") == std::string::npos ? 0 : line.find_first_not_of(" \t"));
          EXPECT_NE(orig.find(trimmed), std::string::npos) << line;
        }
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(SlicerProperties, SlicingASliceIsIdempotent) {
  std::vector<Fixture> cases;
  cases.push_back({load_fixture("dma_rx.c"), {}});
  cases.push_back({load_fixture("s2_compare.c"), {}});
  for (std::uint64_t seed = 0; seed < 40; ++seed) cases.push_back(make(random_c_unit(seed)));
  const std::string q = "cpg.call.argument.reachableByFlows(cpg.parameter)";
  for (auto& c : cases) {
    c.g = build_cpg(c.unit);
    auto f = flows(q, c.g);
    if (f.paths.empty()) continue;
    Slice s1 = slice_path(f.paths.back(), c.g, c.unit);
    auto u2 = SourceUnit::from_text("s", s1.rendered_text);
    auto g2 = build_cpg(u2);
    // The same path, located by code and line in the slice's own numbering.
    std::map<int, int> back;
    for (std::size_t k = 0; k < s1.line_map.size(); ++k) back[s1.line_map[k]] = static_cast<int>(k) + 1;
    ExecutionPath p2;
    for (int id : f.paths.back().nodes) {
      const auto& n = c.g.node(id);
      for (const auto& m : g2.nodes)
        if (m.kind == n.kind && m.code == n.code && m.line == back[n.line] && m.order == n.order) {
          p2.nodes.push_back(m.id);
          break;
        }
    }
    ASSERT_EQ(p2.nodes.size(), f.paths.back().nodes.size()) << c.unit.text;
    Slice s2 = slice_path(p2, g2, u2);
    EXPECT_EQ(s2.rendered_text, s1.rendered_text) << c.unit.text;
  }
}

TEST(SlicerProperties, MoreInteractersNeverShrinkTheClosure) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto fx = make(random_c_unit(seed));
    auto f = flows("cpg.call.argument.reachableByFlows(cpg.parameter)", fx.g);
    if (f.paths.empty()) continue;
    const auto& p = f.paths.front();
    auto full = find_interacters(p, fx.g);
    InteracterSet half = full;
    half.members.resize(full.members.size() / 2);
    auto small = backward_slice(p, half, fx.g).closure;
    auto big = backward_slice(p, full, fx.g).closure;
    EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST(SlicerProperties, ClosureCapTruncatesWithWarning) {
  SourceUnit u = load_fixture("dma_rx.c");
  auto g = build_cpg(u);
  auto f = flows(kLenToSkbPut, g);
  ASSERT_FALSE(f.paths.empty());
  SliceOptions small;
  small.max_closure = 5;
  auto inter = find_interacters(f.paths[0], g);
  Slice s = backward_slice(f.paths[0], inter, g, small);
  EXPECT_TRUE(s.truncated);
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_FALSE(backward_slice(f.paths[0], inter, g).truncated);
}

TEST(Slicer, RecordJsonFields) {
  SourceUnit u = load_fixture("dma_rx.c");
  auto g = build_cpg(u);
  auto f = flows(kLenToSkbPut, g);
  Slice s = slice_path(f.paths[0], g, u);
  auto line = slice_record_json("dma", "q1-p0", s);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["sampleId"], "dma");
  EXPECT_EQ(j["queryId"], "q1-p0");
  EXPECT_NEAR(j["reductionPct"].get<double>(), 78.8235, 1e-3);
  EXPECT_EQ(j["renderedText"], s.rendered_text);
  EXPECT_EQ(j["pathLines"].get<std::vector<int>>(), f.paths[0].lines(g));
  EXPECT_EQ(j["closureLines"].get<std::vector<int>>(), s.closure_lines);
}
