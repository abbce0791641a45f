#include "lexer.hpp"

#include <array>
#include <cctype>
#include <string>

namespace cpgvd {

namespace {

constexpr std::array kKeywords = {
    "auto",     "break",    "case",     "char",     "const",    "continue",
    "default",  "do",       "double",   "else",     "enum",     "extern",
    "float",    "for",      "goto",     "if",       "inline",   "int",
    "long",     "register", "restrict", "return",   "short",    "signed",
    "sizeof",   "static",   "struct",   "switch",   "typedef",  "union",
    "unsigned", "void",     "volatile", "while",    "_Bool",    "_Complex",
    "_Alignas", "_Alignof", "_Atomic",  "_Noreturn", "_Static_assert",
    "_Thread_local"};

// Longest first within each leading character class.
constexpr std::array kPuncts = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##", "{",
    "}",   "[",   "]",   "(",  ")",  "<",  ">",  ";",  ":",  ",",  ".",  "?",
    "!",   "~",   "+",   "-",  "*",  "/",  "%",  "&",  "|",  "^",  "=",  "#"};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Scans a quoted literal starting at text[i] == quote; returns one past the
// closing quote or npos when unterminated on this line.
std::size_t scan_quoted(std::string_view text, std::size_t i, char quote) {
  ++i;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\\') {
      i += 2;
      continue;
    }
    if (c == '\n') return std::string_view::npos;
    if (c == quote) return i + 1;
    ++i;
  }
  return std::string_view::npos;
}

}  // namespace

bool is_c_keyword(std::string_view word) {
  for (const char* k : kKeywords)
    if (word == k) return true;
  return false;
}

std::vector<CommentRange> find_comments(std::string_view text,
                                        bool* unterminated) {
  std::vector<CommentRange> out;
  if (unterminated) *unterminated = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '"' || c == '\'') {
      std::size_t end = scan_quoted(text, i, c);
      i = end == std::string_view::npos ? i + 1 : end;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      std::size_t end = text.find('\n', i);
      if (end == std::string_view::npos) end = text.size();
      out.push_back({i, end});
      i = end;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      std::size_t end = text.find("*/", i + 2);
      if (end == std::string_view::npos) {
        if (unterminated) *unterminated = true;
        out.push_back({i, text.size()});
        break;
      }
      out.push_back({i, end + 2});
      i = end + 2;
      continue;
    }
    ++i;
  }
  return out;
}

StripResult strip_comments_checked(const SourceUnit& unit) {
  StripResult result{unit, false};
  std::string& text = result.unit.text;
  text = normalize_newlines(text);
  for (const auto& r : find_comments(text, &result.unterminated_comment)) {
    for (std::size_t i = r.begin; i < r.end; ++i)
      if (text[i] != '\n') text[i] = ' ';
  }
  return result;
}

SourceUnit strip_comments(const SourceUnit& unit) {
  return strip_comments_checked(unit).unit;
}

namespace detail {

std::vector<Token> lex(std::string_view text, const LineIndex& lines,
                       std::vector<CommentRange>* comments) {
  std::vector<Token> toks;
  std::size_t i = 0;
  bool line_start = true;  // only whitespace seen since the last newline

  auto make = [&](TokKind kind, std::size_t b, std::size_t e) {
    Token t;
    t.kind = kind;
    t.text = text.substr(b, e - b);
    t.begin = b;
    t.end = e;
    t.line = lines.line_of(b);
    t.column = lines.column_of(b);
    toks.push_back(t);
  };
  auto fail = [&](std::size_t at, const std::string& what) {
    std::string tok(text.substr(at, std::min<std::size_t>(8, text.size() - at)));
    throw SyntaxError(lines.line_of(at), lines.column_of(at), tok, what);
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      line_start = true;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      std::size_t end = text.find('\n', i);
      if (end == std::string_view::npos) end = text.size();
      if (comments) comments->push_back({i, end});
      i = end;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      std::size_t end = text.find("*/", i + 2);
      if (end == std::string_view::npos) fail(i, "unterminated comment");
      if (comments) comments->push_back({i, end + 2});
      i = end + 2;
      continue;
    }
    if (c == '#' && line_start) {
      // Directive runs to the end of the line, honoring backslash joins.
      std::size_t j = i;
      while (j < text.size()) {
        std::size_t nl = text.find('\n', j);
        if (nl == std::string_view::npos) {
          j = text.size();
          break;
        }
        std::size_t k = nl;
        while (k > j && (text[k - 1] == ' ' || text[k - 1] == '\t')) --k;
        if (k > j && text[k - 1] == '\\') {
          j = nl + 1;
          continue;
        }
        j = nl;
        break;
      }
      std::size_t e = j;
      while (e > i && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
      make(TokKind::Directive, i, e);
      i = j;
      continue;
    }
    line_start = false;

    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) ++j;
      std::string_view word = text.substr(i, j - i);
      bool prefix = word == "L" || word == "u" || word == "U" || word == "u8";
      if (prefix && j < text.size() && (text[j] == '"' || text[j] == '\'')) {
        std::size_t end = scan_quoted(text, j, text[j]);
        if (end == std::string_view::npos) fail(i, "unterminated literal");
        make(text[j] == '"' ? TokKind::String : TokKind::Char, i, end);
        i = end;
        continue;
      }
      make(is_c_keyword(word) ? TokKind::Keyword : TokKind::Ident, i, j);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i + 1;
      bool hex = c == '0' && j < text.size() && (text[j] == 'x' || text[j] == 'X');
      while (j < text.size()) {
        char d = text[j];
        if (ident_char(d) || d == '.') {
          ++j;
          continue;
        }
        char prev = text[j - 1];
        bool exp = hex ? (prev == 'p' || prev == 'P') : (prev == 'e' || prev == 'E');
        if ((d == '+' || d == '-') && exp) {
          ++j;
          continue;
        }
        break;
      }
      make(TokKind::Number, i, j);
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t end = scan_quoted(text, i, c);
      if (end == std::string_view::npos) fail(i, "unterminated literal");
      make(c == '"' ? TokKind::String : TokKind::Char, i, end);
      i = end;
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts) {
      std::string_view pv(p);
      if (text.substr(i, pv.size()) == pv) {
        make(TokKind::Punct, i, i + pv.size());
        i += pv.size();
        matched = true;
        break;
      }
    }
    if (!matched) fail(i, "unexpected character");
  }
  Token end;
  end.kind = TokKind::End;
  end.begin = end.end = text.size();
  end.line = lines.line_of(text.size() > 0 ? text.size() - 1 : 0);
  end.column = 0;
  toks.push_back(end);
  return toks;
}

}  // namespace detail
}  // namespace cpgvd
