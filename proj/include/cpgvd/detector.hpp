#pragma once

#include <map>
#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpgvd/service.hpp"

namespace cpgvd {

/// Logits of the two class tokens.
struct LogitPair {
  double lv = 0;  // vulnerable
  double lb = 0;  // safe
};

struct Verdict {
  double p_vuln = 0.5;
  double threshold = 0.5;
  int label = 0;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string kind() const = 0;
  virtual LogitPair score_text(std::string_view text) = 0;
};

/// Weighted regex rules over the slice text. Every match of a rule adds its
/// weight to lv (risky) or lb (safe); no match leaves both at 0.
class LocalHeuristicScorer : public Scorer {
 public:
  struct Rule {
    std::string pattern;
    double weight = 1;
    bool risky = true;
  };

  LocalHeuristicScorer();  // built-in table
  explicit LocalHeuristicScorer(std::vector<Rule> rules);
  /// [{"pattern": "...", "weight": 2.0, "class": "vulnerable"|"safe"}, ...]
  static LocalHeuristicScorer from_json(std::string_view json);
  static std::vector<Rule> default_rules();

  std::string kind() const override { return "local-heuristic"; }
  LogitPair score_text(std::string_view text) override;
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
  std::vector<std::regex> compiled_;
};

/// Sends {"prompt", "classTokens", "maxTokens"} and reads, in order of
/// preference, "logits", then "logprobs" (object keyed by class token or a
/// two-element array [vulnerable, safe]), then a one-word "answer"/"text"
/// mapped to (+10, -10) or (-10, +10). A response may name its own two class
/// tokens in "classTokens", vulnerable first.
class RemoteScorer : public Scorer {
 public:
  RemoteScorer(std::shared_ptr<ModelTransport> transport, std::string prompt_template);
  std::string kind() const override { return "remote-model-service"; }
  LogitPair score_text(std::string_view text) override;
  std::string build_prompt(std::string_view text) const;

 private:
  std::shared_ptr<ModelTransport> transport_;
  std::string template_;
};

/// Maps a service response body to logits (see RemoteScorer).
LogitPair parse_score_response(std::string_view body);

/// Rejects empty text, and non-finite logits from the backend.
LogitPair score(std::string_view text, Scorer& scorer);

/// exp(lv) / (exp(lv) + exp(lb)), computed after subtracting the max.
double vulnerability_probability(const LogitPair& lp);
Verdict classify(const LogitPair& lp, double gamma);

/// k * step for k = 0..floor(1/step), with 1 appended if missed.
std::vector<double> threshold_grid(double step);

struct LabeledScore {
  LogitPair logits;
  int truth = 0;
};

/// Fraction of samples with (p > gamma) == truth.
double accuracy_at(const std::vector<LabeledScore>& samples, double gamma);

/// Grid gamma with the highest accuracy; the smallest one on ties.
double calibrate(const std::vector<LabeledScore>& samples, double step = 0.001);

struct EvalReport {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  // Set when the metric's denominator was 0 and it was reported as 0.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};

EvalReport evaluate(const std::vector<std::pair<Verdict, int>>& verdicts);
EvalReport evaluate_counts(long tp, long fp, long tn, long fn);

/// Tab-separated rows under "Dataset\tAccuracy\tPrecision\tRecall\tF1-score",
/// four decimals.
std::string format_eval_table(const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string eval_report_json(const EvalReport& r);

/// A sample is as vulnerable as its most vulnerable slice.
double aggregate_max(const std::vector<double>& p_vulns);

/// {"PrimeVul": 0.594, ...}
std::map<std::string, double> load_thresholds(const std::string& path);

}  // namespace cpgvd
