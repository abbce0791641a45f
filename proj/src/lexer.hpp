#pragma once

#include <string_view>
#include <vector>

#include "cpgvd/frontend.hpp"

namespace cpgvd::detail {

enum class TokKind { Ident, Keyword, Number, String, Char, Punct, Directive, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 0;
  int column = 0;

  bool is(std::string_view s) const {
    return (kind == TokKind::Punct || kind == TokKind::Keyword) && text == s;
  }
};

/// Tokenizes C source. Comments are skipped and reported through `comments`.
/// The returned vector always ends with an End token.
std::vector<Token> lex(std::string_view text, const LineIndex& lines,
                       std::vector<CommentRange>* comments);

}  // namespace cpgvd::detail
