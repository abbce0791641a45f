#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cpgvd/cpg.hpp"
#include "cpgvd/query.hpp"
#include "cpgvd/source.hpp"

namespace cpgvd {

class DivisionGuard : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct InteracterSet {
  std::vector<int> members;     // IDENTIFIER ids, ascending
  std::vector<int> path_lines;  // ascending
};

struct SliceOptions {
  std::size_t max_closure = 10000;
};

struct Slice {
  ExecutionPath path;
  InteracterSet interacters;
  std::vector<int> closure;        // ascending node ids
  std::vector<int> closure_lines;  // ascending source lines of closure nodes
  bool truncated = false;
  std::vector<std::string> warnings;

  std::string rendered_text;
  std::vector<int> line_map;  // rendered line i+1 -> original line
  int original_loc = 0;
  int slice_loc = 0;
  double reduction_pct = 0;
};

/// Identifiers sitting on a line the path touches.
InteracterSet find_interacters(const ExecutionPath& path, const CodePropertyGraph& g);

/// Backward closure of path and interacters over DDG and CDG edges. Also
/// keeps value-free jumps directly controlled by a kept node, the labels of
/// kept gotos, and the declaration of every variable the closure names.
Slice backward_slice(const ExecutionPath& path, const InteracterSet& inter,
                     const CodePropertyGraph& g, const SliceOptions& options = {});

struct RenderedSlice {
  std::string text;
  std::vector<int> line_map;
};

/// Per function: signature, kept statements and control headers in source
/// order, and the braces/else/case scaffolding they need to parse. Text
/// comes from the comment-stripped unit; excluded parts of a line are cut.
/// `g` must be the unit's graph; it is rebuilt when null.
RenderedSlice render_slice_lines(const Slice& s, const SourceUnit& unit,
                                 const CodePropertyGraph* g = nullptr);
std::string render_slice(const Slice& s, const SourceUnit& unit);

/// 100 * (1 - sliceLoc / originalLoc).
double reduction_ratio(const Slice& s);
double reduction_ratio(int original_loc, int slice_loc);

/// find_interacters + backward_slice + render + LOC bookkeeping.
Slice slice_path(const ExecutionPath& path, const CodePropertyGraph& g, const SourceUnit& unit,
                 const SliceOptions& options = {});

/// One JSON object per line:
/// {sampleId, queryId, reductionPct, renderedText, pathLines, closureLines}.
std::string slice_record_json(const std::string& sample_id, const std::string& query_id,
                              const Slice& s);

}  // namespace cpgvd
