#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cpgvd {

/// A piece of C source admitted to analysis. Text is always stored with LF
/// newlines so that line numbering is stable across platforms.
struct SourceUnit {
  std::string id;
  std::string text;
  std::optional<std::string> path;

  static SourceUnit from_text(std::string id, std::string_view text,
                              std::optional<std::string> path = std::nullopt);
};

/// Converts CRLF and lone CR line endings to LF.
std::string normalize_newlines(std::string_view text);

/// Byte offsets of the first character of each line (index 0 is line 1).
class LineIndex {
 public:
  explicit LineIndex(std::string_view text);

  int line_of(std::size_t offset) const;
  int column_of(std::size_t offset) const;
  std::size_t line_begin(int line) const;
  std::size_t line_end(int line) const;  // offset of the '\n' or text end
  int line_count() const { return static_cast<int>(starts_.size()); }

 private:
  std::vector<std::size_t> starts_;
  std::size_t size_;
  bool trailing_newline_;
};

/// Splits text into lines without their terminating '\n'.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace cpgvd
