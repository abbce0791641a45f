#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpgvd/cpg.hpp"
#include "cpgvd/detector.hpp"
#include "cpgvd/harness.hpp"
#include "cpgvd/metrics.hpp"
#include "cpgvd/query.hpp"
#include "cpgvd/slicer.hpp"
#include "cpgvd/transforms.hpp"

#ifndef CPGVD_CONFIG_DIR
#define CPGVD_CONFIG_DIR "config"
#endif

using namespace cpgvd;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPartial = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

SourceUnit load_unit(const std::string& path) {
  return SourceUnit::from_text(std::filesystem::path(path).filename().string(), read_file(path), path);
}

// A .json input is a saved graph; anything else is C source.
CodePropertyGraph load_graph(const std::string& path, std::optional<SourceUnit>* unit_out = nullptr) {
  if (std::filesystem::path(path).extension() == ".json") return from_json_string(read_file(path));
  SourceUnit u = load_unit(path);
  auto g = build_cpg(u);
  if (unit_out) *unit_out = u;
  return g;
}

std::string query_text(const std::string& inline_q, const std::string& file_q) {
  if (!inline_q.empty() && !file_q.empty()) throw ConfigError("give --query or --query-file, not both");
  if (!file_q.empty()) return read_file(file_q);
  if (inline_q.empty()) throw ConfigError("a query is required (--query or --query-file)");
  return inline_q;
}

std::shared_ptr<Scorer> make_scorer(const std::string& kind, const std::string& rules) {
  if (kind == "local") {
    if (rules.empty()) return std::make_shared<LocalHeuristicScorer>();
    return std::make_shared<LocalHeuristicScorer>(LocalHeuristicScorer::from_json(read_file(rules)));
  }
  if (kind == "remote") {
    auto t = transport_from_env("CPGVD_SCORER_ENDPOINT");
    if (!t) throw ConfigError("remote scorer needs CPGVD_SCORER_ENDPOINT");
    return std::make_shared<RemoteScorer>(t, load_prompt_template("classify"));
  }
  throw ConfigError("unknown scorer '" + kind + "' (local or remote)");
}

std::shared_ptr<ModelTransport> make_query_service(const std::string& kind) {
  if (kind == "template") return std::make_shared<TemplateQueryService>();
  if (kind == "remote") {
    auto t = transport_from_env("CPGVD_QUERY_ENDPOINT");
    if (!t) throw ConfigError("remote query service needs CPGVD_QUERY_ENDPOINT");
    return t;
  }
  throw ConfigError("unknown query service '" + kind + "' (template or remote)");
}

std::optional<double> resolve_gamma(double gamma, const std::string& dataset_name) {
  if (gamma >= 0) return gamma;
  if (dataset_name.empty()) return std::nullopt;
  auto table = load_thresholds(std::string(CPGVD_CONFIG_DIR) + "/thresholds.json");
  auto it = table.find(dataset_name);
  if (it == table.end()) throw ConfigError("no threshold for dataset '" + dataset_name + "'");
  return it->second;
}

std::string timestamp_dir() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << "runs/" << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

struct TransformFlags {
  bool t1 = false, t2 = false, t3 = false, t4 = false;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    auto* g = app->add_option_group("transform", "semantic-preserving rewrite");
    g->add_flag("--t1", t1, "rename parameters");
    g->add_flag("--t2", t2, "insert dead code");
    g->add_flag("--t3", t3, "extract function");
    g->add_flag("--t4", t4, "remove comments");
    g->require_option(0, 1);
    app->add_option("--seed", seed, "transform seed")->capture_default_str();
  }
  std::optional<TransformSpec> spec() const {
    if (t1) return TransformSpec{TransformId::T1, seed};
    if (t2) return TransformSpec{TransformId::T2, seed};
    if (t3) return TransformSpec{TransformId::T3, seed};
    if (t4) return TransformSpec{TransformId::T4, seed};
    return std::nullopt;
  }
};

void print_report_summary(const PipelineReport& r, std::ostream& os) {
  os << "records\t" << r.records.size() << "\n"
     << "valid queries\t" << r.valid_query_records << "\n"
     << "discarded\t" << r.discarded_records << "\n"
     << "empty results\t" << r.empty_result_records << "\n"
     << "errors\t" << r.error_records << "\n"
     << "mean reduction %\t" << r.mean_reduction << "\n"
     << "gamma\t" << r.gamma << " (" << r.gamma_source << ")\n";
  if (r.eval) os << format_eval_table({{"run", *r.eval}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cpgvd: code property graph slicing and vulnerability detection"};
  app.require_subcommand(1);
  int code = kOk;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a JSONL dataset");
  std::string ingest_path, ingest_rejects;
  ingest_cmd->add_option("dataset", ingest_path, "JSONL dataset")->required();
  ingest_cmd->add_option("--rejects", ingest_rejects, "write rejected lines here (JSONL)");
  ingest_cmd->callback([&] {
    auto r = ingest(ingest_path);
    int pos = 0;
    for (const auto& rec : r.records) pos += rec.label;
    std::cout << "records\t" << r.records.size() << "\nvulnerable\t" << pos << "\nsafe\t"
              << r.records.size() - static_cast<std::size_t>(pos) << "\nrejected\t" << r.rejects.size()
              << "\n";
    std::string lines;
    for (const auto& x : r.rejects) {
      lines += reject_json(x) + "\n";
      std::cerr << "rejected line " << x.line << ": " << x.reason << "\n";
    }
    if (!ingest_rejects.empty()) write_out(ingest_rejects, lines);
    if (!r.rejects.empty()) code = kPartial;
  });

  // build-cpg
  auto* build_cmd = app.add_subcommand("build-cpg", "parse a C file and save its graph");
  std::string build_in, build_out;
  build_cmd->add_option("source", build_in, "C source file")->required();
  build_cmd->add_option("-o,--out", build_out, "graph JSON (default stdout)");
  build_cmd->callback([&] {
    std::ostringstream os;
    save_cpg(build_cpg(load_unit(build_in)), os);
    write_out(build_out, os.str());
  });

  // query
  auto* query_cmd = app.add_subcommand("query", "run a query script against a file or graph");
  std::string q_in, q_inline, q_file;
  FlowLimits q_limits;
  query_cmd->add_option("input", q_in, "C source or graph JSON")->required();
  query_cmd->add_option("-q,--query", q_inline, "query text");
  query_cmd->add_option("-f,--query-file", q_file, "query script file");
  query_cmd->add_option("--max-len", q_limits.max_len, "longest flow")->capture_default_str();
  query_cmd->add_option("--max-paths", q_limits.max_paths, "flows kept")->capture_default_str();
  query_cmd->callback([&] {
    auto g = load_graph(q_in);
    auto script = parse_query(query_text(q_inline, q_file));
    for (const auto& a : script.advisories) std::cerr << "advisory " << a.kind << ": " << a.message << "\n";
    EvalOptions eo;
    eo.limits = q_limits;
    std::cout << query_value_to_json(eval_query(script, g, eo), g) << "\n";
  });

  // slice
  auto* slice_cmd = app.add_subcommand("slice", "slice the flows a query finds");
  std::string s_in, s_inline, s_file, s_out, s_json;
  std::size_t s_max_closure = 10000;
  slice_cmd->add_option("source", s_in, "C source file")->required();
  slice_cmd->add_option("-q,--query", s_inline, "query text (must produce flows)");
  slice_cmd->add_option("-f,--query-file", s_file, "query script file");
  slice_cmd->add_option("--json", s_json, "write slice records (JSONL) here");
  slice_cmd->add_option("--max-closure", s_max_closure, "closure size cap")->capture_default_str();
  slice_cmd->callback([&] {
    SourceUnit u = load_unit(s_in);
    auto g = build_cpg(u);
    QueryParseOptions po;
    po.require_flows = true;
    auto v = eval_query(parse_query(query_text(s_inline, s_file), po), g);
    SliceOptions so;
    so.max_closure = s_max_closure;
    std::string records;
    for (std::size_t k = 0; k < v.flows.paths.size(); ++k) {
      Slice s = slice_path(v.flows.paths[k], g, u, so);
      std::cout << "// slice " << k + 1 << ": " << s.slice_loc << "/" << s.original_loc << " LOC, "
                << std::fixed << std::setprecision(1) << s.reduction_pct << "% reduction\n"
                << s.rendered_text;
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
      records += slice_record_json(u.id, "p" + std::to_string(k + 1), s) + "\n";
    }
    if (v.flows.paths.empty()) std::cerr << "query found no flows\n";
    if (v.flows.limit_exceeded) std::cerr << "warning: flow limits reached, result truncated\n";
    if (!s_json.empty()) write_out(s_json, records);
  });

  // transform
  auto* tr_cmd = app.add_subcommand("transform", "apply one of T1..T4");
  std::string tr_in, tr_out, tr_sidecar;
  TransformFlags tr_flags;
  tr_cmd->add_option("source", tr_in, "C source file")->required();
  tr_cmd->add_option("-o,--out", tr_out, "transformed file (default stdout)");
  tr_cmd->add_option("--sidecar", tr_sidecar, "line map JSON (default <out>.linemap.json)");
  tr_flags.add(tr_cmd);
  tr_cmd->callback([&] {
    auto spec = tr_flags.spec();
    if (!spec) throw ConfigError("choose one of --t1 --t2 --t3 --t4");
    auto r = apply_transform(load_unit(tr_in), *spec);
    write_out(tr_out, r.unit.text);
    std::string side = tr_sidecar;
    if (side.empty() && !tr_out.empty() && tr_out != "-") side = tr_out + ".linemap.json";
    if (!side.empty()) write_out(side, line_map_json(r, *spec) + "\n");
    if (r.skipped) std::cerr << "skipped: " << r.skip_reason << "\n";
  });

  // metrics
  auto* m_cmd = app.add_subcommand("metrics", "LOC, cyclomatic complexity, branches, nesting");
  std::vector<std::string> m_files;
  bool m_json = false;
  std::string m_bin_metric;
  std::vector<double> m_edges;
  m_cmd->add_option("files", m_files, "C source files")->required();
  m_cmd->add_flag("--json", m_json, "one JSON object per file");
  m_cmd->add_option("--bin", m_bin_metric, "histogram metric (loc, cc, functions, branches, nesting)");
  m_cmd->add_option("--edges", m_edges, "bin edges, increasing")->delimiter(',');
  m_cmd->callback([&] {
    std::vector<MetricsReport> reports;
    for (const auto& f : m_files) {
      try {
        reports.push_back(compute_metrics(load_unit(f)));
        if (m_json) std::cout << metrics_to_json(reports.back()) << "\n";
      } catch (const std::exception& e) {
        std::cerr << f << ": " << e.what() << "\n";
        code = kPartial;
      }
    }
    if (!m_json && !reports.empty()) std::cout << format_summary_table(summarize_metrics(reports));
    if (!m_bin_metric.empty()) {
      auto h = bin_by_metric(reports, m_bin_metric, m_edges);
      for (std::size_t i = 0; i < h.counts.size(); ++i)
        std::cout << "[" << h.edges[i] << ", " << h.edges[i + 1] << (i + 2 == h.edges.size() ? "]" : ")")
                  << "\t" << h.counts[i] << "\n";
      std::cout << "underflow\t" << h.underflow << "\noverflow\t" << h.overflow << "\n";
    }
  });

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "pick gamma from labelled scores");
  std::string cal_scores;
  double cal_step = 0.001;
  cal_cmd->add_option("scores", cal_scores, "JSONL of {\"lv\", \"lb\", \"label\"}")->required();
  cal_cmd->add_option("--step", cal_step, "grid step")->capture_default_str();
  cal_cmd->callback([&] {
    std::vector<LabeledScore> samples;
    std::istringstream in(read_file(cal_scores));
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("lv") || !j.contains("lb") || !j.contains("label"))
        throw ConfigError("line " + std::to_string(n) + ": expected {\"lv\", \"lb\", \"label\"}");
      samples.push_back({{j["lv"].get<double>(), j["lb"].get<double>()}, j["label"].get<int>()});
    }
    double g = calibrate(samples, cal_step);
    std::cout << std::setprecision(6) << "gamma\t" << g << "\naccuracy\t" << accuracy_at(samples, g) << "\n";
  });

  // detect
  auto* det_cmd = app.add_subcommand("detect", "score one code file and apply gamma");
  std::string det_in, det_scorer = "local", det_rules, det_dataset;
  double det_gamma = -1;
  det_cmd->add_option("input", det_in, "code or slice text file")->required();
  det_cmd->add_option("--scorer", det_scorer, "local or remote")->capture_default_str();
  det_cmd->add_option("--rules", det_rules, "local rule table JSON");
  det_cmd->add_option("--gamma", det_gamma, "threshold");
  det_cmd->add_option("--dataset", det_dataset, "use the configured threshold of this dataset");
  det_cmd->callback([&] {
    auto gamma = resolve_gamma(det_gamma, det_dataset).value_or(0.5);
    auto scorer = make_scorer(det_scorer, det_rules);
    LogitPair lp = score(read_file(det_in), *scorer);
    Verdict v = classify(lp, gamma);
    json j = {{"lv", lp.lv}, {"lb", lp.lb}, {"pVuln", v.p_vuln}, {"threshold", v.threshold},
              {"label", v.label}};
    std::cout << j.dump() << "\n";
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "end-to-end pipeline over a dataset");
  std::string run_data, run_out, run_scorer = "local", run_rules, run_qs = "template", run_dataset_name;
  std::string run_cal_split = "validation";
  double run_gamma = -1;
  TransformFlags run_flags;
  RunConfig run_cfg;
  run_cmd->add_option("dataset", run_data, "JSONL dataset")->required();
  run_cmd->add_option("--out", run_out, "output directory (default runs/<timestamp>)");
  run_cmd->add_option("--scorer", run_scorer, "local or remote")->capture_default_str();
  run_cmd->add_option("--rules", run_rules, "local rule table JSON");
  run_cmd->add_option("--query-service", run_qs, "template or remote")->capture_default_str();
  run_cmd->add_option("--gamma", run_gamma, "fixed threshold (default: calibrate)");
  run_cmd->add_option("--dataset-threshold", run_dataset_name, "configured threshold by dataset name");
  run_cmd->add_option("--calibration-split", run_cal_split, "split used to calibrate")->capture_default_str();
  run_cmd->add_option("--grid-step", run_cfg.grid_step, "calibration grid step")->capture_default_str();
  run_cmd->add_option("--workers", run_cfg.workers, "parallel records")->capture_default_str();
  run_cmd->add_option("--max-in-flight", run_cfg.max_in_flight, "concurrent scoring requests")
      ->capture_default_str();
  run_cmd->add_option("--max-slices", run_cfg.max_slices, "slices per record")->capture_default_str();
  run_cmd->add_option("--max-attempts", run_cfg.query_options.max_attempts, "query attempts")
      ->capture_default_str();
  run_cmd->add_option("--context-budget", run_cfg.query_options.context_budget, "prompt token budget")
      ->capture_default_str();
  run_flags.add(run_cmd);
  run_cmd->callback([&] {
    run_cfg.gamma = resolve_gamma(run_gamma, run_dataset_name);
    run_cfg.calibration_split = run_cal_split;
    run_cfg.transform = run_flags.spec();
    run_cfg.scorer = make_scorer(run_scorer, run_rules);
    run_cfg.query_service = make_query_service(run_qs);
    run_cfg.out_dir = run_out.empty() ? timestamp_dir() : run_out;
    auto report = run_dataset(run_data, run_cfg);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    print_report_summary(report, std::cout);
    std::cout << "output\t" << run_cfg.out_dir << "\n";
    code = exit_code_for(report);
  });

  // report
  auto* rep_cmd = app.add_subcommand("report", "summarize a run directory or report.json");
  std::string rep_in;
  rep_cmd->add_option("run", rep_in, "run directory or report.json")->required();
  rep_cmd->callback([&] {
    std::string path = rep_in;
    if (std::filesystem::is_directory(path)) path = (std::filesystem::path(path) / "report.json").string();
    json j = json::parse(read_file(path));
    const auto& a = j.at("aggregates");
    for (auto it = a.begin(); it != a.end(); ++it) std::cout << it.key() << "\t" << it.value() << "\n";
    std::cout << "gamma\t" << j.at("gamma") << " (" << j.at("gammaSource").get<std::string>() << ")\n";
    if (!j.at("eval").is_null()) {
      EvalReport e;
      e.accuracy = j["eval"]["accuracy"];
      e.precision = j["eval"]["precision"];
      e.recall = j["eval"]["recall"];
      e.f1 = j["eval"]["f1"];
      std::cout << format_eval_table({{std::filesystem::path(rep_in).filename().string(), e}});
    }
    if (j.at("aggregates").at("errorRecords").get<long>() > 0) code = kPartial;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const QueryError& e) {
    std::cerr << "query error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
  return code;
}
