#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "cpgvd/detector.hpp"
#include "cpgvd/service.hpp"
#include "oracles.hpp"
#include "stubs.hpp"

using namespace cpgvd;
using namespace cpgvd::testing;

namespace {

// Truncation to four decimals, the way the reference table prints.
double trunc4(double x) { return std::floor(x * 10000.0) / 10000.0; }

std::vector<std::pair<Verdict, int>> confusion(long tp, long fp, long tn, long fn) {
  std::vector<std::pair<Verdict, int>> out;
  auto add = [&](long n, int label, int truth) {
    for (long i = 0; i < n; ++i) out.push_back({Verdict{label ? 0.9 : 0.1, 0.594, label}, truth});
  };
  add(tp, 1, 1);
  add(fp, 1, 0);
  add(tn, 0, 0);
  add(fn, 0, 1);
  return out;
}

LogitPair with_p(double p) { return {std::log(p / (1 - p)), 0.0}; }

std::vector<LabeledScore> random_scores(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(1, 40);
  std::normal_distribution<double> logit(0.0, 2.5);
  std::bernoulli_distribution coin(0.5);
  std::vector<LabeledScore> out(static_cast<std::size_t>(n_dist(rng)));
  for (auto& s : out) {
    s.truth = coin(rng) ? 1 : 0;
    s.logits = {logit(rng) + (s.truth ? 0.8 : -0.8), logit(rng)};
  }
  return out;
}

}  // namespace

TEST(Classify, EqualLogitsBelowPrimeVulThreshold) {
  auto v = classify({1.5, 1.5}, 0.594);
  EXPECT_DOUBLE_EQ(v.p_vuln, 0.5);
  EXPECT_EQ(v.label, 0);
  EXPECT_DOUBLE_EQ(v.threshold, 0.594);
}

TEST(Classify, SaturatedLogitIsVulnerable) {
  for (double g : {0.0, 0.5, 0.9, 0.999}) EXPECT_EQ(classify({20.0, 0.0}, g).label, 1) << g;
  EXPECT_EQ(classify({1000.0, -1000.0}, 0.999).label, 1);
  EXPECT_EQ(classify({-1000.0, 1000.0}, 0.0).label, 0);
}

TEST(Classify, LnThreeGivesThreeQuarters) {
  auto v = classify({std::log(3.0), 0.0}, 0.7);
  EXPECT_NEAR(v.p_vuln, 0.75, 1e-15);
  EXPECT_EQ(v.label, 1);
  EXPECT_EQ(classify({std::log(3.0), 0.0}, 0.75 + 1e-9).label, 0);
}

TEST(Classify, GammaOutsideUnitIntervalIsRejected) {
  EXPECT_THROW(classify({0, 0}, -0.01), std::invalid_argument);
  EXPECT_THROW(classify({0, 0}, 1.01), std::invalid_argument);
  EXPECT_NO_THROW(classify({0, 0}, 1.0));
}

TEST(ClassifyProperties, NormalizedShiftInvariantMonotone) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30, 30), shift(-500, 500), gam(0, 1);
  for (int i = 0; i < 2000; ++i) {
    LogitPair lp{u(rng), u(rng)};
    double p = vulnerability_probability(lp);
    double q = vulnerability_probability({lp.lb, lp.lv});
    EXPECT_NEAR(p + q, 1.0, 1e-12);
    if (std::abs(lp.lv - lp.lb) < 30) {  // wider gaps round to exactly 0 or 1
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
    double g = gam(rng), c = shift(rng);
    auto a = classify(lp, g);
    auto b = classify({lp.lv + c, lp.lb + c}, g);
    EXPECT_EQ(a.label, b.label);
    EXPECT_NEAR(a.p_vuln, b.p_vuln, 1e-12);
    EXPECT_EQ(a.label, p > g ? 1 : 0);
    double g2 = std::min(1.0, g + gam(rng) * (1 - g));
    EXPECT_LE(classify(lp, g2).label, a.label);
  }
}

TEST(Calibrate, MatchesExhaustiveSearchOnRandomSets) {
  std::mt19937_64 rng(2024);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    auto samples = random_scores(rng);
    double got = calibrate(samples, 0.001);
    double want = naive_calibrate(samples, 0.001);
    if (got == want) ++exact;
    // No grid point is strictly better.
    double best = accuracy_at(samples, got);
    for (double g : threshold_grid(0.001)) EXPECT_LE(accuracy_at(samples, g), best);
  }
  EXPECT_EQ(exact, 100);
}

TEST(Calibrate, AllPositiveLabelsGiveZero) {
  std::vector<LabeledScore> s{{with_p(0.2), 1}, {with_p(0.7), 1}, {with_p(0.01), 1}};
  EXPECT_EQ(calibrate(s), 0.0);
}

TEST(Calibrate, SeparatedAtPointFour) {
  std::vector<LabeledScore> s;
  for (double p : {0.05, 0.2, 0.31, 0.399}) s.push_back({with_p(p), 0});
  for (double p : {0.401, 0.45, 0.8, 0.95}) s.push_back({with_p(p), 1});
  double g = calibrate(s);
  EXPECT_DOUBLE_EQ(accuracy_at(s, g), 1.0);
  EXPECT_NEAR(g, 0.399, 1e-12);
  // Smallest perfect grid point, found by walking the grid.
  for (double x : threshold_grid(0.001)) {
    if (accuracy_at(s, x) == 1.0) {
      EXPECT_EQ(x, g);
      break;
    }
  }
}

TEST(Calibrate, GridIsExact) {
  auto grid = threshold_grid(0.001);
  ASSERT_EQ(grid.size(), 1001u);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 1.0);
  EXPECT_EQ(grid[594], 0.594);
  EXPECT_EQ(grid[193], 0.193);
  auto coarse = threshold_grid(0.003);
  EXPECT_EQ(coarse.back(), 1.0);
  EXPECT_THROW(threshold_grid(0.0), std::invalid_argument);
  EXPECT_THROW(threshold_grid(0.02), std::invalid_argument);
}

TEST(Evaluate, AllCorrect) {
  auto r = evaluate(confusion(5, 0, 5, 0));
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(Evaluate, PrimeVulRow) {
  auto r = evaluate(confusion(9, 0, 20, 11));
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.45);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.725);
  EXPECT_NEAR(r.f1, 0.9 / 1.45, 1e-15);
  EXPECT_DOUBLE_EQ(trunc4(r.f1), 0.6206);
  EXPECT_DOUBLE_EQ(trunc4(r.accuracy), 0.7250);
  // The same row on 40 vulnerable + 40 safe samples.
  auto big = evaluate(confusion(18, 0, 40, 22));
  EXPECT_DOUBLE_EQ(big.precision, 1.0);
  EXPECT_DOUBLE_EQ(big.recall, 0.45);
  EXPECT_DOUBLE_EQ(big.accuracy, 0.725);
  EXPECT_DOUBLE_EQ(trunc4(big.f1), 0.6206);
}

TEST(Evaluate, DegenerateDenominatorsAreFlagged) {
  auto r = evaluate(confusion(0, 0, 7, 3));
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_TRUE(r.precision_degenerate);
  EXPECT_FALSE(r.recall_degenerate);
  EXPECT_TRUE(r.f1_degenerate);
  auto none = evaluate_counts(0, 2, 3, 0);
  EXPECT_TRUE(none.recall_degenerate);
  EXPECT_FALSE(none.precision_degenerate);
  EXPECT_THROW(evaluate({}), std::invalid_argument);
}

TEST(Evaluate, F1IsHarmonicMean) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> c(0, 30);
  for (int i = 0; i < 300; ++i) {
    long tp = c(rng), fp = c(rng), tn = c(rng), fn = c(rng);
    if (tp + fp + tn + fn == 0) continue;
    auto r = evaluate_counts(tp, fp, tn, fn);
    if (r.precision + r.recall > 0)
      EXPECT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
    auto v = evaluate(confusion(tp, fp, tn, fn));
    EXPECT_EQ(v.tp, tp);
    EXPECT_EQ(v.fn, fn);
    EXPECT_DOUBLE_EQ(v.f1, r.f1);
  }
}

TEST(Evaluate, TableLayout) {
  auto table = format_eval_table({{"PrimeVul", evaluate_counts(18, 0, 40, 22)}});
  EXPECT_EQ(table.substr(0, table.find('\n')), "Dataset\tAccuracy\tPrecision\tRecall\tF1-score");
  EXPECT_NE(table.find("PrimeVul\t0.7250\t1.0000\t0.4500\t0.62"), std::string::npos) << table;
  auto j = nlohmann::json::parse(eval_report_json(evaluate_counts(0, 0, 1, 1)));
  EXPECT_EQ(j["tp"], 0);
  EXPECT_FALSE(j["degenerate"].empty());
}

TEST(Aggregate, MaxOverSlices) {
  EXPECT_DOUBLE_EQ(aggregate_max({0.2, 0.7, 0.4}), 0.7);
  EXPECT_THROW(aggregate_max({}), std::invalid_argument);
}

TEST(Thresholds, ConfigHoldsOperatingPoints) {
  auto t = load_thresholds(std::string(CPGVD_CONFIG_DIR) + "/thresholds.json");
  EXPECT_DOUBLE_EQ(t.at("PrimeVul"), 0.594);
  EXPECT_DOUBLE_EQ(t.at("FormAI"), 0.547);
  EXPECT_DOUBLE_EQ(t.at("SVEN"), 0.334);
  EXPECT_DOUBLE_EQ(t.at("ReposVul"), 0.193);
  EXPECT_THROW(load_thresholds("/nonexistent/thresholds.json"), std::runtime_error);
}

TEST(LocalScorer, RiskyCallOutweighsSafe) {
  LocalHeuristicScorer s;
  auto lp = score("void f(char *d, char *s){ strcpy(d, s); }", s);
  EXPECT_GT(lp.lv, lp.lb);
  auto safe = score("void f(char *d, char *s){ strncpy(d, s, sizeof(d)); }", s);
  EXPECT_LT(safe.lv, safe.lb);
}

TEST(LocalScorer, NoRuleMatchIsNeutral) {
  LocalHeuristicScorer s;
  auto lp = score("int add(int a, int b){ return a + b; }", s);
  EXPECT_EQ(lp.lv, lp.lb);
  EXPECT_DOUBLE_EQ(classify(lp, 0.5).p_vuln, 0.5);
}

TEST(LocalScorer, DeterministicAndRejectsEmptyText) {
  LocalHeuristicScorer s;
  std::string text = "gets(buf); memcpy(a, b, n); if (n > max) return;";
  auto a = score(text, s), b = score(text, s);
  EXPECT_EQ(a.lv, b.lv);
  EXPECT_EQ(a.lb, b.lb);
  EXPECT_THROW(score("", s), std::invalid_argument);
}

TEST(LocalScorer, RulesFromJson) {
  auto s = LocalHeuristicScorer::from_json(
      R"([{"pattern": "danger\\(", "weight": 2.5, "class": "vulnerable"},
          {"pattern": "check\\(", "weight": 1, "class": "safe"}])");
  ASSERT_EQ(s.rules().size(), 2u);
  auto lp = s.score_text("danger(x); danger(y); check(x);");
  EXPECT_DOUBLE_EQ(lp.lv, 5.0);
  EXPECT_DOUBLE_EQ(lp.lb, 1.0);
  EXPECT_THROW(LocalHeuristicScorer::from_json(R"([{"pattern": "(", "class": "safe"}])"), std::invalid_argument);
  EXPECT_THROW(LocalHeuristicScorer::from_json(R"([{"pattern": "x", "class": "maybe"}])"), std::invalid_argument);
  EXPECT_THROW(LocalHeuristicScorer::from_json("{not json"), std::invalid_argument);
}

TEST(ScoreResponse, Shapes) {
  auto a = parse_score_response(R"({"logits": {"VULNERABLE": 2.0, "SAFE": -1.0}})");
  EXPECT_DOUBLE_EQ(a.lv, 2.0);
  EXPECT_DOUBLE_EQ(a.lb, -1.0);
  auto b = parse_score_response(R"({"logprobs": [-0.1, -2.3]})");
  EXPECT_DOUBLE_EQ(b.lv, -0.1);
  EXPECT_DOUBLE_EQ(b.lb, -2.3);
  auto c = parse_score_response(R"({"answer": "SAFE"})");
  EXPECT_DOUBLE_EQ(c.lv, -10);
  EXPECT_DOUBLE_EQ(c.lb, 10);
  auto d = parse_score_response(R"({"text": " VULNERABLE\n"})");
  EXPECT_DOUBLE_EQ(d.lv, 10);
  auto e = parse_score_response(R"({"classTokens": ["Yes", "No"], "logits": {"Yes": 0.5, "No": 0.5}})");
  EXPECT_DOUBLE_EQ(vulnerability_probability(e), 0.5);
  EXPECT_THROW(parse_score_response("not json"), MalformedModelOutput);
  EXPECT_THROW(parse_score_response(R"({"answer": "maybe"})"), MalformedModelOutput);
  EXPECT_THROW(parse_score_response(R"({"logits": {"VULNERABLE": 1}})"), MalformedModelOutput);
}

TEST(RemoteScorer, SendsPromptAndReadsLogits) {
  auto svc = std::make_shared<ScriptedService>(
      std::vector<ScriptedService::Reply>{{R"({"logits": {"VULNERABLE": 0.0, "SAFE": 0.0}})"}});
  RemoteScorer s(svc, load_prompt_template("classify"));
  auto lp = score("strcpy(a, b);", s);
  EXPECT_DOUBLE_EQ(classify(lp, 0.594).p_vuln, 0.5);
  auto req = nlohmann::json::parse(svc->requests().at(0));
  std::string prompt = req["prompt"];
  EXPECT_NE(prompt.find("strcpy(a, b);"), std::string::npos);
  EXPECT_NE(prompt.find("Your response must be either 'VULNERABLE' or 'SAFE'"), std::string::npos);
  EXPECT_EQ(req["classTokens"], nlohmann::json::array({"VULNERABLE", "SAFE"}));
}

TEST(RemoteScorer, NonFiniteLogitsAreMalformed) {
  struct Inf : Scorer {
    std::string kind() const override { return "inf"; }
    LogitPair score_text(std::string_view) override {
      return {std::numeric_limits<double>::infinity(), 0};
    }
  } inf;
  EXPECT_THROW(score("x", inf), MalformedModelOutput);
}

TEST(HttpTransport, RetryAfterIsSurfaced) {
  std::atomic<int> hits{0};
  StubHttpServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
    res.set_header("Retry-After", "7");
    res.set_content("{}", "application/json");
  });
  HttpOptions o;
  o.max_retries = 1;
  o.max_wait_seconds = 0.01;
  o.timeout_seconds = 5;
  HttpTransport t(server.url(), "tok", o);
  try {
    t.post("{}");
    FAIL() << "expected ServiceUnavailable";
  } catch (const ServiceUnavailable& e) {
    EXPECT_DOUBLE_EQ(e.retry_after(), 7.0);
  }
  EXPECT_EQ(hits.load(), 2);
}

TEST(HttpTransport, RemoteScorerOverHttp) {
  std::string auth, body;
  StubHttpServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    body = req.body;
    res.set_content(R"({"logits": {"VULNERABLE": 1.0986122886681098, "SAFE": 0.0}})", "application/json");
  });
  auto transport = std::make_shared<HttpTransport>(server.url("/score"), "secret");
  RemoteScorer s(transport, "Classify:\n{{code}}\n");
  auto v = classify(score("gets(buf);", s), 0.7);
  EXPECT_NEAR(v.p_vuln, 0.75, 1e-12);
  EXPECT_EQ(v.label, 1);
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_NE(body.find("gets(buf);"), std::string::npos);
}

TEST(HttpTransport, ServerErrorsAndRefusedConnections) {
  StubHttpServer bad([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad", "text/plain");
  });
  EXPECT_THROW(HttpTransport(bad.url(), "").post("{}"), std::runtime_error);
  HttpOptions o;
  o.timeout_seconds = 1;
  int port = 0;
  {
    StubHttpServer gone([](const httplib::Request&, httplib::Response&) {});
    port = gone.port();
  }
  EXPECT_THROW(HttpTransport("http://127.0.0.1:" + std::to_string(port) + "/v1", "", o).post("{}"),
               ServiceUnavailable);
  EXPECT_THROW(HttpTransport("https://example.invalid/v1", ""), std::invalid_argument);
}

TEST(Prompts, TemplatesFillPlaceholders) {
  auto cls = load_prompt_template("classify");
  EXPECT_NE(cls.find("{{code}}"), std::string::npos);
  EXPECT_EQ(fill_template("a {{x}} b {{y}} {{x}}", {{"x", "1"}, {"y", "{{x}}"}}), "a 1 b {{x}} 1");
  EXPECT_NE(load_prompt_template("generate").find("{{feedback}}"), std::string::npos);
  EXPECT_THROW(load_prompt_template("nope"), std::runtime_error);
}
