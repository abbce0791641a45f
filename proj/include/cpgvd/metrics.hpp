#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpgvd/ast.hpp"
#include "cpgvd/cpg.hpp"
#include "cpgvd/source.hpp"

namespace cpgvd {

class MetricMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownMetric : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Physical lines holding code once comments are removed. Blank and
/// comment-only lines do not count.
int count_loc(std::string_view text);

struct MetricsReport {
  int loc = 0;
  int cc = 0;        // sum of per-function decision counts
  int cc_graph = 0;  // E - N + 2P over the combined CFG
  int functions = 0;
  int branches = 0;
  int nesting = 0;
  std::map<std::string, int> per_function_cc;
};

/// Decision weights: if, while and for-with-condition count 1, each case
/// label counts 1 (default does not), and every && or || inside an
/// if/while/for condition adds 1.
/// Branch count b_i per conditional: if 2, loop with condition 2, switch one
/// per case/default label plus one when there is no default.
/// Nesting: a function's top-level statements sit at depth 1; each enclosing
/// if/while/for/switch adds 1.
MetricsReport compute_metrics(const SourceUnit& unit, const AstNode& ast,
                              const CodePropertyGraph& g);
MetricsReport compute_metrics(const SourceUnit& unit, const CodePropertyGraph& g);
MetricsReport compute_metrics(const SourceUnit& unit);

/// Metric names: loc, cc, functions, branches, nesting.
int metric_value(const MetricsReport& r, std::string_view metric);

/// Bins are [edges[i], edges[i+1]) with the last one closed on the right.
/// Values outside the edges are tallied in underflow/overflow.
struct Histogram {
  std::string metric;
  std::vector<double> edges;
  std::vector<int> counts;
  int underflow = 0;
  int overflow = 0;
};

Histogram bin_by_metric(const std::vector<MetricsReport>& reports, std::string_view metric,
                        const std::vector<double>& edges);

struct MetricSummaryRow {
  std::string metric;
  double mean = 0;
  int min = 0;
  int max = 0;
};

/// One row per metric in the order LOC, CC, Functions, Branches, Nesting.
std::vector<MetricSummaryRow> summarize_metrics(const std::vector<MetricsReport>& reports);
std::string format_summary_table(const std::vector<MetricSummaryRow>& rows);
std::string metrics_to_json(const MetricsReport& r);

}  // namespace cpgvd
