#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "cpgvd/frontend.hpp"
#include "fixtures.hpp"
#include "random_c.hpp"

using namespace cpgvd;
using namespace cpgvd::testing;

namespace {

const AstNode* find_first(const AstNode& root, AstKind kind, const std::string& name = "") {
  const AstNode* hit = nullptr;
  visit_preorder(root, [&](const AstNode& n, int) {
    if (hit) return false;
    if (n.kind == kind && (name.empty() || n.name == name)) hit = &n;
    return hit == nullptr;
  });
  return hit;
}

std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(data_path("corpus")))
    if (e.path().extension() == ".c") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

SourceUnit unit_from_file(const std::string& path) {
  return SourceUnit::from_text(path, read_text(path), path);
}

// Lines of every identifier-like token outside comments, in order.
std::vector<std::pair<std::string, int>> token_lines(const std::string& text) {
  std::vector<std::pair<std::string, int>> out;
  std::regex word(R"([A-Za-z_]\w*)");
  auto comments = find_comments(text);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator(); ++it) {
    auto pos = static_cast<std::size_t>(it->position());
    bool in_comment = false;
    for (const auto& c : comments)
      if (pos >= c.begin && pos < c.end) in_comment = true;
    if (in_comment) continue;
    int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    out.emplace_back(it->str(), line);
  }
  return out;
}

}  // namespace

TEST(Parse, MinimalFunctionHasReturnOfLiteral) {
  auto ast = parse(SourceUnit::from_text("t", "int f(){return 0;}"));
  ASSERT_EQ(ast.kind, AstKind::TranslationUnit);
  const AstNode* fn = find_first(ast, AstKind::FunctionDef, "f");
  ASSERT_NE(fn, nullptr);
  const AstNode* ret = find_first(*fn, AstKind::Return);
  ASSERT_NE(ret, nullptr);
  ASSERT_EQ(ret->children.size(), 1u);
  EXPECT_EQ(ret->children[0].kind, AstKind::Literal);
  EXPECT_EQ(ret->children[0].code, "0");
}

TEST(Parse, UnbalancedBraceIsSyntaxErrorOnLineOne) {
  try {
    parse(SourceUnit::from_text("t", "int f(){"));
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 1);
  }
}

TEST(Parse, DoWhileIsUnsupported) {
  EXPECT_THROW(parse(SourceUnit::from_text("t", "void f(int x){ do { x--; } while (x); }")),
               UnsupportedConstruct);
}

TEST(Parse, ReferenceSliceHasSinkCallAndBoundCheck) {
  SourceUnit u = load_fixture("dma_rx_slice.c");
  auto ast = parse(u);
  const AstNode* call = find_first(ast, AstKind::Call, "skb_put");
  ASSERT_NE(call, nullptr);
  EXPECT_EQ(call->line(), 15);
  const AstNode* iff = find_first(ast, AstKind::If);
  ASSERT_NE(iff, nullptr);
  EXPECT_EQ(iff->children[0].code, "unlikely(len > ring->rx_buffersize)");
  EXPECT_NE(find_first(ast, AstKind::Label, "drop"), nullptr);
  EXPECT_NE(find_first(ast, AstKind::Goto, "drop"), nullptr);
}

TEST(Parse, DirectiveIsOneOpaqueNode) {
  auto ast = parse(SourceUnit::from_text("t", "#include <string.h>\n#define N 4\nint f(){return N;}\n"));
  int directives = 0;
  visit_preorder(ast, [&](const AstNode& n, int) {
    if (n.kind == AstKind::Directive) {
      ++directives;
      EXPECT_EQ(n.span.first_line, n.span.last_line);
    }
    return true;
  });
  EXPECT_EQ(directives, 2);
}

TEST(Parse, CrlfInputNumbersLinesLikeLf) {
  auto a = parse(SourceUnit::from_text("a", "int f(int x)\r\n{\r\n  return x;\r\n}\r\n"));
  auto b = parse(SourceUnit::from_text("b", "int f(int x)\n{\n  return x;\n}\n"));
  EXPECT_TRUE(structurally_equal(a, b, false));
  EXPECT_EQ(find_first(a, AstKind::Return)->line(), 3);
}

TEST(ParseProperties, SpansNestAndCodeMatchesTextOnCorpus) {
  for (const auto& f : corpus_files()) {
    SCOPED_TRACE(f);
    SourceUnit u = unit_from_file(f);
    auto ast = parse(u);
    std::vector<const AstNode*> stack;
    std::function<void(const AstNode&)> check = [&](const AstNode& n) {
      EXPECT_LE(n.span.end, u.text.size());
      EXPECT_EQ(n.code, u.text.substr(n.span.begin, n.span.end - n.span.begin));
      if (n.kind == AstKind::Identifier || n.kind == AstKind::Literal) EXPECT_TRUE(n.is_leaf());
      for (const auto& c : n.children) {
        EXPECT_TRUE(n.span.contains(c.span)) << to_string(n.kind) << " / " << to_string(c.kind);
        check(c);
      }
    };
    check(ast);
  }
}

TEST(ParseProperties, DeterministicAndCommentNeutral) {
  RandomCOptions o;
  o.functions = 2;
  o.comments = true;
  o.gotos = true;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    SourceUnit u = SourceUnit::from_text("r", random_c_unit(seed, o));
    auto a = parse(u);
    EXPECT_TRUE(structurally_equal(a, parse(u), false));
    EXPECT_TRUE(structurally_equal(parse(strip_comments(u)), a, true)) << u.text;
  }
  for (const auto& f : corpus_files()) {
    SourceUnit u = unit_from_file(f);
    EXPECT_TRUE(structurally_equal(parse(strip_comments(u)), parse(u), true)) << f;
  }
}

TEST(StripComments, LineCommentBecomesSpaces) {
  auto out = strip_comments(SourceUnit::from_text("t", "int x; // note"));
  EXPECT_EQ(out.text, "int x;" + std::string(8, ' '));
}

TEST(StripComments, BlockCommentKeepsLineCount) {
  auto out = strip_comments(SourceUnit::from_text("t", "/*a\nb*/int y;"));
  auto lines = split_lines(out.text);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(std::string(lines[1]).substr(lines[1].find_first_not_of(' ')), "int y;");
}

TEST(StripComments, TokenLinesUnchanged) {
  RandomCOptions o;
  o.comments = true;
  o.functions = 3;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::string text = random_c_unit(seed, o);
    std::string stripped = strip_comments(SourceUnit::from_text("r", text)).text;
    EXPECT_EQ(token_lines(text), token_lines(stripped));
    EXPECT_EQ(text.size(), stripped.size());
  }
}

TEST(StripComments, NoCommentsIsIdentity) {
  std::string text = "int f(int a)\n{\n  return a / 2;\n}\n";
  EXPECT_EQ(strip_comments(SourceUnit::from_text("t", text)).text, text);
}

TEST(StripComments, UnterminatedBlockIsFlagged) {
  auto r = strip_comments_checked(SourceUnit::from_text("t", "int x; /* open\nint y;"));
  EXPECT_TRUE(r.unterminated_comment);
  EXPECT_EQ(r.unit.text, "int x;" + std::string(8, ' ') + "\n" + std::string(6, ' '));
}

TEST(StripComments, StringsAreNotComments) {
  std::string text = "char *s = \"a // b /* c */\";";
  EXPECT_EQ(strip_comments(SourceUnit::from_text("t", text)).text, text);
}
