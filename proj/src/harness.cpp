#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cpgvd/frontend.hpp"
#include "cpgvd/harness.hpp"

namespace cpgvd {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (char c : id)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

// Library calls whose arguments the template service treats as sinks.
const std::vector<std::string>& risky_calls() {
  static const std::vector<std::string> v = {
      "alloca", "fgets",  "free",    "gets",   "malloc",  "memcpy",  "memmove",
      "printf", "read",   "realloc", "recv",   "scanf",   "skb_put", "snprintf",
      "sprintf", "strcat", "strcpy", "strlcpy", "strncat", "strncpy", "system", "vsprintf"};
  return v;
}

}  // namespace

DatasetRecord parse_record(std::string_view line, int line_number) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw SchemaError(line_number, "not valid JSON");
  if (!j.is_object()) throw SchemaError(line_number, "record must be a JSON object");
  DatasetRecord r;
  if (!j.contains("id")) throw SchemaError(line_number, "missing field 'id'");
  if (!j["id"].is_string() || j["id"].get<std::string>().empty())
    throw SchemaError(line_number, "'id' must be a non-empty string");
  r.id = j["id"].get<std::string>();
  if (!j.contains("code")) throw SchemaError(line_number, "missing field 'code'");
  if (!j["code"].is_string()) throw SchemaError(line_number, "'code' must be a string");
  r.code = j["code"].get<std::string>();
  if (!j.contains("label")) throw SchemaError(line_number, "missing field 'label'");
  const auto& lab = j["label"];
  if (!lab.is_number_integer() || (lab.get<long long>() != 0 && lab.get<long long>() != 1))
    throw SchemaError(line_number, "'label' must be 0 or 1");
  r.label = lab.get<int>();
  if (j.contains("cwe") && !j["cwe"].is_null()) {
    if (!j["cwe"].is_string()) throw SchemaError(line_number, "'cwe' must be a string or null");
    r.cwe = j["cwe"].get<std::string>();
  }
  if (j.contains("split")) {
    if (!j["split"].is_string()) throw SchemaError(line_number, "'split' must be a string");
    r.split = j["split"].get<std::string>();
    if (r.split != "train" && r.split != "validation" && r.split != "test")
      throw SchemaError(line_number, "'split' must be train, validation or test");
  }
  return r;
}

IngestResult ingest_text(std::string_view text) {
  IngestResult out;
  std::set<std::string> ids;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) {
      try {
        DatasetRecord r = parse_record(line, line_no);
        if (!ids.insert(r.id).second) throw SchemaError(line_no, "duplicate id '" + r.id + "'");
        out.records.push_back(std::move(r));
      } catch (const SchemaError& e) {
        out.rejects.push_back({e.line(), e.reason(), std::string(line)});
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

IngestResult ingest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ingest_text(ss.str());
}

std::string reject_json(const RejectedLine& r) {
  ojson j;
  j["line"] = r.line;
  j["reason"] = r.reason;
  j["raw"] = r.raw;
  return j.dump();
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::vector<std::string> parse_queries_response(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw MalformedModelOutput("response is not a JSON object");
  if (!j.contains("queries")) {
    for (const char* field : {"text", "completion", "answer"}) {
      if (!j.contains(field) || !j[field].is_string()) continue;
      std::string s = j[field].get<std::string>();
      auto b = s.find('{');
      auto e = s.rfind('}');
      if (b == std::string::npos || e == std::string::npos || e < b)
        throw MalformedModelOutput("'" + std::string(field) + "' holds no JSON object");
      return parse_queries_response(std::string_view(s).substr(b, e - b + 1));
    }
    throw MalformedModelOutput("response lacks the 'queries' field");
  }
  const auto& q = j["queries"];
  if (!q.is_array() || q.empty()) throw MalformedModelOutput("'queries' must be a non-empty array");
  std::vector<std::string> out;
  for (const auto& s : q) {
    if (!s.is_string()) throw MalformedModelOutput("'queries' must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

QueryGenerationResult generate_queries(const DatasetRecord& record, const CodePropertyGraph& g,
                                       ModelTransport& service, const QueryGenOptions& options) {
  if (options.max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
  const std::string tmpl = load_prompt_template("generate");
  QueryGenerationResult out;
  std::string feedback;
  for (int k = 1; k <= options.max_attempts; ++k) {
    std::string prompt = fill_template(tmpl, {{"code", record.code}, {"feedback", feedback}});
    std::size_t tokens = estimate_tokens(prompt);
    if (tokens > options.context_budget) throw ContextExceeded(tokens, options.context_budget);

    ojson req;
    req["prompt"] = prompt;
    req["sampleId"] = record.id;
    req["attempt"] = k;
    std::string body = service.post(req.dump());

    QueryAttempt a;
    a.index = k;
    try {
      auto stmts = parse_queries_response(body);
      for (std::size_t i = 0; i < stmts.size(); ++i) a.query_text += (i ? "\n" : "") + stmts[i];
      QueryParseOptions po;
      po.require_flows = true;
      QueryScript script = parse_query(a.query_text, po);
      for (const auto& adv : script.advisories) a.advisories.push_back(adv.kind + ": " + adv.message);
      QueryValue v = eval_query(script, g, options.eval);
      if (v.flows.paths.empty() && !script.advisories.empty()) {
        // The advisory explains the empty result, so it is worth a retry.
        a.category = script.advisories.front().kind;
        a.message = script.advisories.front().message;
      } else {
        a.valid = true;
        a.empty_result = v.flows.paths.empty();
        out.flows = std::move(v.flows);
      }
    } catch (const MalformedModelOutput& e) {
      a.category = "MALFORMED_OUTPUT";
      a.message = e.what();
      if (a.query_text.empty()) a.query_text = body.substr(0, 2000);
    } catch (const QueryError& e) {
      a.category = std::string(to_string(e.category()));
      a.message = e.what();
    } catch (const std::exception& e) {
      a.category = "EVALUATION";
      a.message = e.what();
    }
    out.attempts.push_back(a);
    if (a.valid) {
      out.discarded = false;
      out.query = a.query_text;
      return out;
    }
    feedback += "\nAttempt " + std::to_string(k) + " was rejected.\nQueries:\n" + a.query_text +
                "\nError: " + a.message +
                "\nReply with a corrected JSON object in the same format.\n";
  }
  return out;
}

std::string TemplateQueryService::queries_for(std::string_view code) {
  std::set<std::string> present;
  bool has_params = false;
  try {
    auto g = build_cpg(SourceUnit::from_text("template", code));
    for (const auto& n : g.nodes) {
      if (n.kind == NodeKind::CALL) present.insert(n.name);
      if (n.kind == NodeKind::PARAM) has_params = true;
    }
  } catch (const std::exception&) {
    // Unparseable input still gets a well-formed answer; validation reports it.
  }
  std::vector<std::string> sinks;
  for (const auto& r : risky_calls())
    if (present.count(r)) sinks.push_back(r);
  std::string sink;
  if (sinks.empty()) {
    sink = "cpg.call.argument";
  } else if (sinks.size() == 1) {
    sink = "cpg.call.nameExact(\"" + sinks[0] + "\").argument";
  } else {
    std::string alt;
    for (std::size_t i = 0; i < sinks.size(); ++i) alt += (i ? "|" : "") + sinks[i];
    sink = "cpg.call.name(\"" + alt + "\").argument";
  }
  ojson j;
  j["queries"] = {std::string("val source = ") + (has_params ? "cpg.parameter" : "cpg.identifier"),
                  "val sink = " + sink, "val paths = sink.reachableByFlows(source)"};
  return j.dump();
}

std::string TemplateQueryService::post(const std::string& json_body) {
  json req = json::parse(json_body, nullptr, false);
  if (req.is_discarded() || !req.contains("prompt") || !req["prompt"].is_string())
    throw std::invalid_argument("generation request lacks a prompt");
  std::string prompt = req["prompt"].get<std::string>();
  const std::string open = "```c\n";
  auto b = prompt.find(open);
  auto e = b == std::string::npos ? std::string::npos : prompt.find("\n```", b + open.size());
  std::string code = b == std::string::npos ? "" : prompt.substr(b + open.size(), e - b - open.size());
  return queries_for(code);
}

namespace {

RecordResult process_record(const DatasetRecord& rec, const RunConfig& cfg,
                            std::counting_semaphore<1024>& in_flight) {
  RecordResult r;
  r.id = rec.id;
  r.label = rec.label;
  r.split = rec.split;
  try {
    SourceUnit unit = SourceUnit::from_text(rec.id, rec.code);
    if (cfg.transform) {
      auto t = apply_transform(unit, *cfg.transform);
      r.transform_skipped = t.skipped;
      unit = std::move(t.unit);
    }
    CodePropertyGraph g = build_cpg(unit);
    r.graph_json = to_json_string(g);

    DatasetRecord view = rec;
    view.code = unit.text;
    auto qg = generate_queries(view, g, *cfg.query_service, cfg.query_options);
    r.attempts = qg.attempts;
    r.discarded = qg.discarded;
    if (!qg.discarded) {
      r.paths = qg.flows.paths.size();
      std::set<std::string> seen;
      std::string qid = "q" + std::to_string(qg.attempts.back().index);
      for (std::size_t k = 0; k < qg.flows.paths.size(); ++k) {
        if (r.slice_texts.size() >= cfg.max_slices) break;
        Slice s = slice_path(qg.flows.paths[k], g, unit, cfg.slice_options);
        if (s.rendered_text.empty() || !seen.insert(s.rendered_text).second) continue;
        r.slice_records.push_back(
            slice_record_json(rec.id, qid + "-p" + std::to_string(k + 1), s));
        r.slice_texts.push_back(std::move(s.rendered_text));
        r.reductions.push_back(s.reduction_pct);
      }
    }

    auto scored = [&](const std::string& text) {
      in_flight.acquire();
      try {
        LogitPair lp = score(text, *cfg.scorer);
        in_flight.release();
        return lp;
      } catch (...) {
        in_flight.release();
        throw;
      }
    };
    if (r.slice_texts.empty()) {
      r.fallback = r.discarded ? "no-query" : "no-path";
      r.logits = scored(strip_comments(unit).text);
      r.p_vuln = vulnerability_probability(*r.logits);
    } else {
      for (const auto& text : r.slice_texts) {
        LogitPair lp = scored(text);
        double p = vulnerability_probability(lp);
        if (!r.logits || p > r.p_vuln) {
          r.logits = lp;
          r.p_vuln = p;
        }
      }
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    r.logits.reset();
  }
  return r;
}

}  // namespace

PipelineReport recompute_aggregates(PipelineReport report) {
  report.valid_query_records = report.discarded_records = report.empty_result_records = 0;
  report.error_records = 0;
  double red_sum = 0;
  std::size_t red_n = 0;
  std::vector<std::pair<Verdict, int>> evals;
  for (const auto& r : report.records) {
    if (!r.error.empty()) ++report.error_records;
    if (r.discarded) ++report.discarded_records;
    if (!r.attempts.empty() && r.attempts.back().valid) {
      ++report.valid_query_records;
      if (r.attempts.back().empty_result) ++report.empty_result_records;
    }
    if (!r.reductions.empty()) {
      double s = 0;
      for (double x : r.reductions) s += x;
      red_sum += s / static_cast<double>(r.reductions.size());
      ++red_n;
    }
    bool held_out = report.gamma_source == "calibrated" && r.split == report.calibration_split;
    if (r.verdict && !held_out) evals.emplace_back(*r.verdict, r.label);
  }
  report.mean_reduction = red_n ? red_sum / static_cast<double>(red_n) : 0;
  if (evals.empty()) report.eval.reset();
  else report.eval = evaluate(evals);
  return report;
}

PipelineReport run_pipeline(const std::vector<DatasetRecord>& records, const RunConfig& cfg) {
  if (!cfg.query_service) throw ConfigError("no query service configured");
  if (!cfg.scorer) throw ConfigError("no scorer configured");
  if (cfg.workers == 0) throw ConfigError("workers must be at least 1");
  if (cfg.max_in_flight == 0 || cfg.max_in_flight > 1024)
    throw ConfigError("max_in_flight must lie in 1..1024");
  if (cfg.gamma && !(*cfg.gamma >= 0 && *cfg.gamma <= 1)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(cfg.grid_step > 0 && cfg.grid_step <= 0.01)) throw ConfigError("grid step must lie in (0, 0.01]");

  PipelineReport report;
  report.calibration_split = cfg.calibration_split;
  if (records.empty()) {
    report.gamma = cfg.gamma.value_or(0.5);
    report.gamma_source = cfg.gamma ? "fixed" : "none";
    report.warnings.push_back("empty dataset");
  } else if (!cfg.gamma) {
    bool any = std::any_of(records.begin(), records.end(),
                           [&](const DatasetRecord& r) { return r.split == cfg.calibration_split; });
    if (!any)
      throw ConfigError("no gamma given and no '" + cfg.calibration_split + "' records to calibrate on");
  }

  report.records.resize(records.size());
  std::counting_semaphore<1024> in_flight(static_cast<std::ptrdiff_t>(cfg.max_in_flight));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < records.size(); i = next++)
      report.records[i] = process_record(records[i], cfg, in_flight);
  };
  std::size_t nthreads = std::min(cfg.workers, records.size());
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  if (!records.empty()) {
    if (cfg.gamma) {
      report.gamma = *cfg.gamma;
      report.gamma_source = "fixed";
    } else {
      std::vector<LabeledScore> samples;
      for (const auto& r : report.records)
        if (r.split == cfg.calibration_split && r.logits) samples.push_back({*r.logits, r.label});
      report.calibration_samples = samples.size();
      if (samples.empty()) {
        report.gamma = 0.5;
        report.gamma_source = "none";
        report.warnings.push_back("every calibration record failed; no threshold applied");
      } else {
        report.gamma = calibrate(samples, cfg.grid_step);
        report.gamma_source = "calibrated";
      }
    }
    if (report.gamma_source != "none")
      for (auto& r : report.records)
        if (r.logits) r.verdict = classify(*r.logits, report.gamma);
  }
  for (const auto& r : report.records)
    if (!r.error.empty()) report.warnings.push_back("record '" + r.id + "' failed: " + r.error);
  report = recompute_aggregates(std::move(report));

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::path root(cfg.out_dir);
    fs::create_directories(root / "slices");
    fs::create_directories(root / "graphs");
    std::set<std::string> used;
    for (std::size_t i = 0; i < report.records.size(); ++i) {
      const auto& r = report.records[i];
      std::string name = safe_file_name(r.id);
      if (!used.insert(name).second) name += "_" + std::to_string(i);
      used.insert(name);
      if (!r.graph_json.empty()) write_file(root / "graphs" / (name + ".json"), r.graph_json + "\n");
      std::string lines;
      for (const auto& s : r.slice_records) lines += s + "\n";
      write_file(root / "slices" / (name + ".jsonl"), lines);
    }
    write_file(root / "report.json", report_to_json(report) + "\n");
  }
  return report;
}

PipelineReport run_dataset(const std::string& dataset_path, const RunConfig& cfg) {
  IngestResult in = ingest(dataset_path);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::string lines;
    for (const auto& r : in.rejects) lines += reject_json(r) + "\n";
    write_file(std::filesystem::path(cfg.out_dir) / "rejects.jsonl", lines);
  }
  PipelineReport report = run_pipeline(in.records, cfg);
  for (const auto& r : in.rejects)
    report.warnings.push_back("rejected line " + std::to_string(r.line) + ": " + r.reason);
  if (!cfg.out_dir.empty())
    write_file(std::filesystem::path(cfg.out_dir) / "report.json", report_to_json(report) + "\n");
  return report;
}

std::string report_to_json(const PipelineReport& report) {
  ojson j;
  j["gamma"] = report.gamma;
  j["gammaSource"] = report.gamma_source;
  j["calibrationSplit"] = report.calibration_split;
  j["calibrationSamples"] = report.calibration_samples;
  ojson agg;
  agg["records"] = report.records.size();
  agg["validQueryRecords"] = report.valid_query_records;
  agg["discardedRecords"] = report.discarded_records;
  agg["emptyResultRecords"] = report.empty_result_records;
  agg["errorRecords"] = report.error_records;
  agg["meanReductionPct"] = report.mean_reduction;
  j["aggregates"] = agg;
  j["eval"] = report.eval ? ojson::parse(eval_report_json(*report.eval)) : ojson();
  ojson recs = ojson::array();
  for (const auto& r : report.records) {
    ojson o;
    o["id"] = r.id;
    o["label"] = r.label;
    o["split"] = r.split;
    o["transformSkipped"] = r.transform_skipped;
    ojson atts = ojson::array();
    for (const auto& a : r.attempts) {
      ojson x;
      x["index"] = a.index;
      x["valid"] = a.valid;
      x["category"] = a.category;
      x["message"] = a.message;
      x["emptyResult"] = a.empty_result;
      x["query"] = a.query_text;
      atts.push_back(x);
    }
    o["attempts"] = atts;
    o["discarded"] = r.discarded;
    o["paths"] = r.paths;
    o["slices"] = r.slice_texts.size();
    ojson reds = ojson::array();
    for (double x : r.reductions) reds.push_back(x);
    o["reductionPct"] = reds;
    o["fallback"] = r.fallback;
    if (r.logits) {
      o["logits"] = {r.logits->lv, r.logits->lb};
      o["pVuln"] = r.p_vuln;
    } else {
      o["logits"] = nullptr;
      o["pVuln"] = nullptr;
    }
    o["verdict"] = r.verdict ? ojson(r.verdict->label) : ojson();
    o["error"] = r.error;
    recs.push_back(o);
  }
  j["records"] = recs;
  j["warnings"] = report.warnings;
  return j.dump(2);
}

int exit_code_for(const PipelineReport& report) { return report.error_records ? 2 : 0; }

}  // namespace cpgvd
