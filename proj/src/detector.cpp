#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cpgvd/detector.hpp"

namespace cpgvd {

using json = nlohmann::json;

namespace {

constexpr double kAnswerLogit = 10.0;

const char* kClassTokens[2] = {"VULNERABLE", "SAFE"};

}  // namespace

std::vector<LocalHeuristicScorer::Rule> LocalHeuristicScorer::default_rules() {
  // Unbounded copies and formatted writes push toward vulnerable; their
  // bounded counterparts and explicit length checks push toward safe.
  return {
      {R"(\bstrcpy\s*\()", 2.0, true},
      {R"(\bstrcat\s*\()", 2.0, true},
      {R"(\bsprintf\s*\()", 1.5, true},
      {R"(\bvsprintf\s*\()", 1.5, true},
      {R"(\bgets\s*\()", 3.0, true},
      {R"(\bscanf\s*\(\s*"[^"]*%s)", 2.0, true},
      {R"(\bmemcpy\s*\()", 1.0, true},
      {R"(\bmemmove\s*\()", 0.5, true},
      {R"(\bskb_put\s*\()", 1.0, true},
      {R"(\balloca\s*\()", 1.0, true},
      {R"(\bsystem\s*\()", 1.5, true},
      {R"(\bprintf\s*\(\s*[A-Za-z_]\w*\s*\))", 2.0, true},
      {R"(\bstrncpy\s*\()", 1.0, false},
      {R"(\bstrlcpy\s*\()", 1.5, false},
      {R"(\bstrncat\s*\()", 1.0, false},
      {R"(\bsnprintf\s*\()", 1.5, false},
      {R"(\bfgets\s*\()", 1.0, false},
      {R"(\bsizeof\s*\()", 0.5, false},
      {R"(\bif\s*\([^;{]*(<|>|<=|>=)[^;{]*\)\s*\{?\s*(return|goto|break)\b)", 1.5, false},
      {R"(==\s*NULL|!=\s*NULL)", 0.5, false},
  };
}

LocalHeuristicScorer::LocalHeuristicScorer() : LocalHeuristicScorer(default_rules()) {}

LocalHeuristicScorer::LocalHeuristicScorer(std::vector<Rule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    if (!std::isfinite(r.weight)) throw std::invalid_argument("rule weight must be finite");
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw std::invalid_argument("bad rule pattern \"" + r.pattern + "\": " + e.what());
    }
  }
}

LocalHeuristicScorer LocalHeuristicScorer::from_json(std::string_view text) {
  std::vector<Rule> rules;
  try {
    json j = json::parse(text);
    if (!j.is_array()) throw std::invalid_argument("rule table must be a JSON array");
    for (const auto& r : j) {
      Rule rule;
      rule.pattern = r.at("pattern").get<std::string>();
      rule.weight = r.value("weight", 1.0);
      std::string cls = r.value("class", "vulnerable");
      if (cls != "vulnerable" && cls != "safe")
        throw std::invalid_argument("rule class must be 'vulnerable' or 'safe': " + cls);
      rule.risky = cls == "vulnerable";
      rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad rule table: ") + e.what());
  }
  return LocalHeuristicScorer(std::move(rules));
}

LogitPair LocalHeuristicScorer::score_text(std::string_view text) {
  LogitPair lp;
  std::string s(text);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    auto n = std::distance(std::sregex_iterator(s.begin(), s.end(), compiled_[i]),
                           std::sregex_iterator());
    (rules_[i].risky ? lp.lv : lp.lb) += rules_[i].weight * static_cast<double>(n);
  }
  return lp;
}

RemoteScorer::RemoteScorer(std::shared_ptr<ModelTransport> transport, std::string prompt_template)
    : transport_(std::move(transport)), template_(std::move(prompt_template)) {
  if (!transport_) throw std::invalid_argument("remote scorer needs a transport");
}

std::string RemoteScorer::build_prompt(std::string_view text) const {
  return fill_template(template_, {{"code", std::string(text)}});
}

LogitPair RemoteScorer::score_text(std::string_view text) {
  json req = {{"prompt", build_prompt(text)},
              {"classTokens", {kClassTokens[0], kClassTokens[1]}},
              {"maxTokens", 1}};
  return parse_score_response(transport_->post(req.dump()));
}

LogitPair parse_score_response(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw MalformedModelOutput("score response is not a JSON object");

  std::string vtok = kClassTokens[0], stok = kClassTokens[1];
  if (j.contains("classTokens")) {
    const auto& ct = j["classTokens"];
    if (!ct.is_array() || ct.size() != 2 || !ct[0].is_string() || !ct[1].is_string())
      throw MalformedModelOutput("classTokens must be two strings");
    vtok = ct[0].get<std::string>();
    stok = ct[1].get<std::string>();
  }

  auto pair_from = [&](const json& v, const char* field) -> LogitPair {
    LogitPair lp;
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      lp = {v[0].get<double>(), v[1].get<double>()};
    } else if (v.is_object() && v.contains(vtok) && v.contains(stok) && v[vtok].is_number() &&
               v[stok].is_number()) {
      lp = {v[vtok].get<double>(), v[stok].get<double>()};
    } else {
      throw MalformedModelOutput(std::string("'") + field + "' lacks both class tokens");
    }
    if (!std::isfinite(lp.lv) || !std::isfinite(lp.lb))
      throw MalformedModelOutput(std::string("'") + field + "' holds non-finite values");
    return lp;
  };
  if (j.contains("logits")) return pair_from(j["logits"], "logits");
  if (j.contains("logprobs")) return pair_from(j["logprobs"], "logprobs");

  for (const char* field : {"answer", "text"}) {
    if (!j.contains(field) || !j[field].is_string()) continue;
    std::string a = j[field].get<std::string>();
    std::string word;
    for (char c : a)
      if (std::isalpha(static_cast<unsigned char>(c))) word += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      else if (!word.empty()) break;
    std::string uv = vtok, us = stok;
    for (auto* s : {&uv, &us})
      for (char& c : *s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (word == uv) return {kAnswerLogit, -kAnswerLogit};
    // Some prompts call the negative class BENIGN.
    if (word == us || word == "BENIGN") return {-kAnswerLogit, kAnswerLogit};
    throw MalformedModelOutput("answer '" + a.substr(0, 40) + "' is neither class token");
  }
  throw MalformedModelOutput("score response has no logits, logprobs or answer");
}

LogitPair score(std::string_view text, Scorer& scorer) {
  if (text.empty()) throw std::invalid_argument("cannot score empty text");
  LogitPair lp = scorer.score_text(text);
  if (!std::isfinite(lp.lv) || !std::isfinite(lp.lb))
    throw MalformedModelOutput("scorer returned non-finite logits");
  return lp;
}

double vulnerability_probability(const LogitPair& lp) {
  if (!std::isfinite(lp.lv) || !std::isfinite(lp.lb))
    throw std::invalid_argument("logits must be finite");
  double m = std::max(lp.lv, lp.lb);
  double ev = std::exp(lp.lv - m), eb = std::exp(lp.lb - m);
  return ev / (ev + eb);
}

Verdict classify(const LogitPair& lp, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  Verdict v;
  v.p_vuln = vulnerability_probability(lp);
  v.threshold = gamma;
  v.label = v.p_vuln > gamma ? 1 : 0;
  return v;
}

std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0 && step <= 0.01)) throw std::invalid_argument("grid step must lie in (0, 0.01]");
  std::vector<double> grid;
  long n = std::lround(1.0 / step);
  if (std::fabs(static_cast<double>(n) * step - 1.0) < 1e-9) {
    // k / n keeps 0.594 and friends at their nearest double.
    for (long k = 0; k <= n; ++k) grid.push_back(static_cast<double>(k) / static_cast<double>(n));
    return grid;
  }
  for (long k = 0;; ++k) {
    double g = static_cast<double>(k) * step;
    if (g > 1.0) break;
    grid.push_back(g);
  }
  if (grid.back() < 1.0) grid.push_back(1.0);
  return grid;
}

double accuracy_at(const std::vector<LabeledScore>& samples, double gamma) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  long correct = 0;
  for (const auto& s : samples)
    if ((vulnerability_probability(s.logits) > gamma ? 1 : 0) == s.truth) ++correct;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double calibrate(const std::vector<LabeledScore>& samples, double step) {
  if (samples.empty()) throw std::invalid_argument("calibration needs at least one sample");
  auto grid = threshold_grid(step);
  std::vector<std::pair<double, int>> ps;
  long positives = 0;
  for (const auto& s : samples) {
    if (s.truth != 0 && s.truth != 1) throw std::invalid_argument("truth label must be 0 or 1");
    ps.emplace_back(vulnerability_probability(s.logits), s.truth);
    positives += s.truth;
  }
  std::sort(ps.begin(), ps.end());
  // Sweep gamma upward; samples with p <= gamma are predicted safe.
  std::size_t j = 0;
  long neg_below = 0, pos_below = 0;
  long best = -1;
  double best_gamma = grid.front();
  for (double g : grid) {
    while (j < ps.size() && !(ps[j].first > g)) {
      (ps[j].second ? pos_below : neg_below) += 1;
      ++j;
    }
    long correct = neg_below + (positives - pos_below);
    if (correct > best) {
      best = correct;
      best_gamma = g;
    }
  }
  return best_gamma;
}

EvalReport evaluate_counts(long tp, long fp, long tn, long fn) {
  if (tp < 0 || fp < 0 || tn < 0 || fn < 0) throw std::invalid_argument("negative count");
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  long total = tp + fp + tn + fn;
  if (total == 0) throw std::invalid_argument("evaluation needs at least one verdict");
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else r.precision_degenerate = true;
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else r.recall_degenerate = true;
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  else r.f1_degenerate = true;
  return r;
}

EvalReport evaluate(const std::vector<std::pair<Verdict, int>>& verdicts) {
  if (verdicts.empty()) throw std::invalid_argument("evaluation needs at least one verdict");
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& [v, truth] : verdicts) {
    if (truth != 0 && truth != 1) throw std::invalid_argument("truth label must be 0 or 1");
    if (v.label == 1) (truth ? tp : fp) += 1;
    else (truth ? fn : tn) += 1;
  }
  return evaluate_counts(tp, fp, tn, fn);
}

std::string format_eval_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::ostringstream out;
  out << "Dataset\tAccuracy\tPrecision\tRecall\tF1-score\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [name, r] : rows)
    out << name << '\t' << r.accuracy << '\t' << r.precision << '\t' << r.recall << '\t' << r.f1
        << '\n';
  return out.str();
}

std::string eval_report_json(const EvalReport& r) {
  json j = {{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
            {"f1", r.f1},             {"tp", r.tp},               {"fp", r.fp},
            {"tn", r.tn},             {"fn", r.fn}};
  json flags = json::array();
  if (r.precision_degenerate) flags.push_back("precision");
  if (r.recall_degenerate) flags.push_back("recall");
  if (r.f1_degenerate) flags.push_back("f1");
  j["degenerate"] = flags;
  return j.dump();
}

double aggregate_max(const std::vector<double>& p_vulns) {
  if (p_vulns.empty()) throw std::invalid_argument("no slice scores to aggregate");
  return *std::max_element(p_vulns.begin(), p_vulns.end());
}

std::map<std::string, double> load_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open thresholds file: " + path);
  json j = json::parse(in);
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    double g = it.value().get<double>();
    if (!(g >= 0 && g <= 1)) throw std::invalid_argument("threshold out of [0, 1]: " + it.key());
    out[it.key()] = g;
  }
  return out;
}

}  // namespace cpgvd
