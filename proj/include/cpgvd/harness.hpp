#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpgvd/cpg.hpp"
#include "cpgvd/detector.hpp"
#include "cpgvd/query.hpp"
#include "cpgvd/service.hpp"
#include "cpgvd/slicer.hpp"
#include "cpgvd/transforms.hpp"

namespace cpgvd {

struct DatasetRecord {
  std::string id;
  std::string code;
  int label = 0;
  std::optional<std::string> cwe;
  std::string split = "test";  // train | validation | test
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(int line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line),
        reason_(reason) {}
  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

struct RejectedLine {
  int line = 0;
  std::string reason;
  std::string raw;
};

struct IngestResult {
  std::vector<DatasetRecord> records;
  std::vector<RejectedLine> rejects;
};

/// One JSON object per line: {"id", "code", "label", "cwe"?, "split"?}.
/// Throws SchemaError for a bad line.
DatasetRecord parse_record(std::string_view line, int line_number);
/// Blank lines are skipped; bad lines and repeated ids go to rejects.
IngestResult ingest_text(std::string_view text);
IngestResult ingest(const std::string& path);
std::string reject_json(const RejectedLine& r);

class ContextExceeded : public std::runtime_error {
 public:
  ContextExceeded(std::size_t tokens, std::size_t budget)
      : std::runtime_error("prompt needs ~" + std::to_string(tokens) + " tokens, budget is " +
                           std::to_string(budget)),
        tokens_(tokens), budget_(budget) {}
  std::size_t tokens() const { return tokens_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t tokens_, budget_;
};

/// ceil(chars / 4).
std::size_t estimate_tokens(std::string_view text);

struct QueryAttempt {
  int index = 0;  // 1-based
  std::string query_text;
  bool valid = false;
  // SYNTAX, UNKNOWN_API, TYPE_MISUSE, CODE_VS_NAME, REGEX_VS_EXACT,
  // EVALUATION or MALFORMED_OUTPUT
  std::string category;
  std::string message;
  bool empty_result = false;  // valid, but no flows
  std::vector<std::string> advisories;
};

struct QueryGenOptions {
  int max_attempts = 3;
  std::size_t context_budget = 32768;
  EvalOptions eval;
};

struct QueryGenerationResult {
  std::vector<QueryAttempt> attempts;
  bool discarded = true;
  std::string query;  // the valid script
  FlowSet flows;      // its result on the record's graph
};

/// Extracts the statement list from a {"queries": [...]} response. A
/// response whose "text"/"completion" field holds that object is accepted.
std::vector<std::string> parse_queries_response(std::string_view body);

/// Asks the service for queries and validates each answer by parsing and
/// running it on `g`. A failed attempt is fed back with its error message;
/// at most max_attempts are made. An answer with no flows counts as failed
/// when the parser attached an advisory (category = advisory kind), and as
/// valid with empty_result otherwise. ServiceUnavailable propagates.
QueryGenerationResult generate_queries(const DatasetRecord& record, const CodePropertyGraph& g,
                                       ModelTransport& service,
                                       const QueryGenOptions& options = {});

/// Offline stand-in for the query model: answers a generation prompt with
/// parameters as sources and the arguments of risky library calls as sinks
/// (any call's arguments when none is present).
class TemplateQueryService : public ModelTransport {
 public:
  std::string post(const std::string& json_body) override;
  static std::string queries_for(std::string_view code);
};

struct RunConfig {
  std::shared_ptr<ModelTransport> query_service;
  std::shared_ptr<Scorer> scorer;
  std::optional<double> gamma;                    // fixed threshold
  std::string calibration_split = "validation";  // used when gamma is unset
  double grid_step = 0.001;
  std::optional<TransformSpec> transform;
  std::size_t workers = 1;
  std::size_t max_in_flight = 4;  // concurrent scoring requests
  std::size_t max_slices = 8;     // per record
  QueryGenOptions query_options;
  SliceOptions slice_options;
  std::string out_dir;  // empty: no artifacts
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RecordResult {
  std::string id;
  int label = 0;
  std::string split;
  bool transform_skipped = false;
  std::vector<QueryAttempt> attempts;
  bool discarded = false;
  std::size_t paths = 0;
  std::vector<std::string> slice_texts;
  std::vector<std::string> slice_records;  // slice_record_json lines
  std::vector<double> reductions;
  std::string fallback;  // "", "no-query" or "no-path": the whole unit was scored
  std::optional<LogitPair> logits;
  double p_vuln = 0;
  std::optional<Verdict> verdict;
  std::string error;  // non-empty when the record failed
  std::string graph_json;
};

struct PipelineReport {
  std::vector<RecordResult> records;
  double gamma = 0.5;
  std::string gamma_source;  // "fixed" or "calibrated"
  std::string calibration_split;
  std::size_t calibration_samples = 0;
  std::size_t valid_query_records = 0;
  std::size_t discarded_records = 0;
  std::size_t empty_result_records = 0;
  std::size_t error_records = 0;
  double mean_reduction = 0;  // over records with at least one slice
  std::optional<EvalReport> eval;  // over scored records outside the calibration split
  std::vector<std::string> warnings;
};

/// Per record: transform, build CPG, obtain queries, extract paths, slice,
/// score (max over slices), then threshold. Failures stay with the record.
/// Writes graphs/ and slices/ under out_dir when set, plus report.json.
PipelineReport run_pipeline(const std::vector<DatasetRecord>& records, const RunConfig& config);

/// ingest + rejects.jsonl + run_pipeline.
PipelineReport run_dataset(const std::string& dataset_path, const RunConfig& config);

std::string report_to_json(const PipelineReport& report);

/// Recomputes the aggregate fields from the per-record rows.
PipelineReport recompute_aggregates(PipelineReport report);

/// 0 success, 2 when any record failed.
int exit_code_for(const PipelineReport& report);

}  // namespace cpgvd
