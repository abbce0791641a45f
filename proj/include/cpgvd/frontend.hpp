#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpgvd/ast.hpp"
#include "cpgvd/source.hpp"

namespace cpgvd {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, int column, std::string token, const std::string& what)
      : std::runtime_error(format(line, column, token, what)),
        line_(line),
        column_(column),
        token_(std::move(token)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& token() const { return token_; }

 private:
  static std::string format(int line, int column, const std::string& token,
                            const std::string& what);
  int line_;
  int column_;
  std::string token_;
};

/// Grammar outside the supported subset, e.g. do/while or a macro invocation
/// followed by a brace block.
class UnsupportedConstruct : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

/// Parses a unit into a TranslationUnit tree. Offsets in the tree refer to
/// the newline-normalized text of the unit.
AstNode parse(const SourceUnit& unit);

struct StripResult {
  SourceUnit unit;
  bool unterminated_comment = false;
};

/// Replaces every comment character except '\n' with a space. Length and
/// line structure of the text are preserved exactly.
StripResult strip_comments_checked(const SourceUnit& unit);
SourceUnit strip_comments(const SourceUnit& unit);

/// Comment ranges found by the lexer (half-open byte ranges).
struct CommentRange {
  std::size_t begin;
  std::size_t end;
};
std::vector<CommentRange> find_comments(std::string_view text,
                                        bool* unterminated = nullptr);

bool is_c_keyword(std::string_view word);

}  // namespace cpgvd
