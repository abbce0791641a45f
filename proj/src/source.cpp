#include "cpgvd/source.hpp"

#include <algorithm>

namespace cpgvd {

SourceUnit SourceUnit::from_text(std::string id, std::string_view text,
                                 std::optional<std::string> path) {
  return SourceUnit{std::move(id), normalize_newlines(text), std::move(path)};
}

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

LineIndex::LineIndex(std::string_view text)
    : size_(text.size()), trailing_newline_(!text.empty() && text.back() == '\n') {
  starts_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') starts_.push_back(i + 1);
  }
  // A trailing newline does not open a new (empty) line.
  if (starts_.size() > 1 && starts_.back() == text.size()) starts_.pop_back();
}

int LineIndex::line_of(std::size_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return static_cast<int>(it - starts_.begin());
}

int LineIndex::column_of(std::size_t offset) const {
  int line = line_of(offset);
  return static_cast<int>(offset - starts_[line - 1]) + 1;
}

std::size_t LineIndex::line_begin(int line) const {
  if (line < 1) return 0;
  if (line > line_count()) return size_;
  return starts_[line - 1];
}

std::size_t LineIndex::line_end(int line) const {
  if (line < line_count()) return starts_[line] - 1;
  return trailing_newline_ ? size_ - 1 : size_;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace cpgvd
