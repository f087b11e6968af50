// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "cases.hpp"
#include "oracles.hpp"
#include "pmsys/emotions.hpp"
#include "pmsys/status.hpp"
#include "pmsys/stats.hpp"
#include "pmsys/timeline.hpp"
#include "pmsys/traits.hpp"
#include "service_driver.hpp"

using namespace pmsys;

namespace {

// Pinned tolerances and limits.
constexpr double kExact = 1e-12;
constexpr double kSumTol = 1e-9;
constexpr double kOracleTol = 1e-9;
constexpr double kMahalanobisTol = 1e-10;
constexpr double kPercentTol = 0.1;
constexpr double kMatchRate = 0.95;
constexpr double kCvAccuracyPct = 90.0;
constexpr double kLexiconBudgetS = 5.0;
constexpr double kStatsBudgetS = 10.0;
constexpr double kForestBudgetS = 30.0;
constexpr double kSlowMinS = 10.0;
constexpr double kIdleMaxS = 0.1;

const std::string kSrc = PMSYS_SOURCE_DIR;

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
  void require(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome lexicon_oracle() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  oracle::Gen g(790);
  for (int i = 0; i < 500 && o.ok; ++i) {
    const auto c = cases::random_lexicon_case(g);
    const auto got = lexicon::analyze(c.text, c.build()).profile;
    o.require(got == oracle::naive_profile(c.text, c.categories, c.entries), fmt::format("case {} differs", i));
  }
  for (const auto& w : cases::wildcard_table()) {
    const lexicon::Lexicon lex("w", {"x"}, {{w.pattern, {"x"}}});
    o.require(!lex.match(w.token).empty() == w.matches, fmt::format("wildcard {} vs {}", w.pattern, w.token));
  }
  const double secs = seconds_since(start);
  o.require(secs < kLexiconBudgetS, fmt::format("took {:.2f} s", secs));
  if (o.ok) o.detail = fmt::format("500 random cases + {} wildcard cases in {:.2f} s", cases::wildcard_table().size(), secs);
  return o;
}

Outcome extraversion_model() {
  Outcome o;
  const auto model = traits::extraversion_reference_model();
  auto f = [](double a, double b, double c, double d, double e) {
    return traits::FeatureMap{{"MRC.K_F_NSAMP", a}, {"LIWC.UNIQUE", b}, {"LIWC.ABBREVIATIONS", c},
                              {"LIWC.PRONOUN", d}, {"LIWC.HEARING", e}};
  };
  o.require(traits::score_trait_linear(f(0, 0, 0, 0, 0), model) == 17.1407, "intercept is not exact");
  // 17.1407 - 3.79 - 4.015 - 0.6074 + 1.445 - 0.7882
  o.require(near(traits::score_trait_linear(f(100, 50, 1, 10, 2), model), 9.3851, kExact), "setting 1");
  // 17.1407 - 9.49395 - 5.801675 - 1.8222 + 2.09525 - 0.295575
  o.require(near(traits::score_trait_linear(f(250.5, 72.25, 3, 14.5, 0.75), model), 1.82255, kExact), "setting 2");
  // 17.1407 - 0.4548 - 7.0664 + 0 + 0.93925 - 1.5764
  o.require(near(traits::score_trait_linear(f(12, 88, 0, 6.5, 4), model), 8.98235, kExact), "setting 3");
  if (o.ok) o.detail = "intercept exact, three settings within 1e-12";
  return o;
}

Outcome questionnaire_scoring() {
  Outcome o;
  traits::QuestionnaireDef def;
  for (auto t : traits::kAllTraits) {
    def.items.push_back({"plain", t, false});
    def.items.push_back({"reversed", t, true});
  }
  const auto mid = traits::score_questionnaire(std::vector<int>(10, 3), def);
  for (auto t : traits::kAllTraits) o.require(mid.normalized[t] == 0.5, "all-3 is not 0.5");
  const auto bfi = traits::load_questionnaire(kSrc + "/data/questionnaire/bfi44.txt");
  const auto mid44 = traits::score_questionnaire(std::vector<int>(44, 3), bfi);
  for (auto t : traits::kAllTraits) o.require(mid44.normalized[t] == 0.5, "all-3 on 44 items is not 0.5");
  // pairs (plain, reversed): O (5,2) C (4,4) E (3,1) A (2,5) N (1,1)
  const auto s = traits::score_questionnaire({5, 2, 4, 4, 3, 1, 2, 5, 1, 1}, def);
  const traits::TraitVector want{0.875, 0.5, 0.75, 0.125, 0.5};
  for (auto t : traits::kAllTraits) {
    o.require(near(s.normalized[t], want[t], kExact), fmt::format("{} hand score", traits::to_string(t)));
  }
  for (int r = 1; r <= 5; ++r) {
    o.require(traits::reverse_response(traits::reverse_response(r, 1, 5), 1, 5) == r, "reversal is not an involution");
  }
  if (o.ok) o.detail = "midpoint 0.5, ten-item fixture, involution 1..5";
  return o;
}

Outcome emotion_normalization() {
  Outcome o;
  const auto lex = lexicon::load_lexicon(kSrc + "/data/lexicon/emotions.dic");
  static const std::vector<std::string> words = {"angry", "annoyed", "afraid", "worried", "happy", "thanks", "sad",
                                                 "crying", "portal", "upload", "deadline", "hate", "lost", "great"};
  oracle::Gen g(793);
  int matched = 0;
  for (int i = 0; i < 1000 && o.ok; ++i) {
    std::string text;
    for (int k = g.integer(0, 25); k > 0; --k) text += g.pick(words) + (g.coin(0.2) ? ". " : " ");
    const auto v = emotions::score_emotions(text, lex);
    o.require(near(v.sum(), 1.0, kSumTol), fmt::format("text {} sums to {}", i, v.sum()));
    o.require(emotions::score_emotions(text + "\n" + text, lex) == v, fmt::format("text {} not duplication invariant", i));
    matched += !(v == emotions::EmotionVector{});
  }
  if (o.ok) o.detail = fmt::format("1000 texts ({} with lexicon hits) sum to 1, duplication invariant", matched);
  return o;
}

Outcome status_evidence() {
  Outcome o;
  const auto rules = status::KeywordRuleSet::defaults();
  const Timestamp t0 = parse_timestamp("2019-01-06 08:00:00");
  auto run = [&](const std::string& text, double response) {
    return status::classify_event({{t0, "u", "helpdesk", text}}, {{t0, response}}, rules, t0,
                                  t0 + std::chrono::minutes(15))
        .status;
  };
  o.require(run("the portal is down", 0) == status::SystemStatus::Down, "down fixture");
  o.require(run("thanks", 0.04) == status::SystemStatus::Idle, "idle fixture");
  o.require(run("error", 2.16) == status::SystemStatus::Error, "error fixture");
  o.require(run("upload", 14.72) == status::SystemStatus::Slow, "slow fixture");
  if (o.ok) o.detail = "down/0, thanks/0.04, error/2.16, upload/14.72 labelled exactly";
  return o;
}

Outcome matching_fixture() {
  Outcome o;
  const auto f = cases::matching_fixture(795, 200);
  const auto report = matching::run_matching(f.posts, f.profiles, matching::UserIndex(f.users));
  std::size_t resolvable = 0, right = 0;
  for (std::size_t i = 0; i < f.profiles.size(); ++i) {
    if (f.planted[i] == cases::Planted::Unresolvable) continue;
    ++resolvable;
    const auto* m = std::get_if<matching::Matched>(&report.results[i].outcome);
    const auto stage = f.planted[i] == cases::Planted::UsernameInPost ? matching::MatchMethod::UsernameInPost
                                                                      : matching::MatchMethod::BasicInfo;
    right += m && m->user_id == f.truth[i] && m->method == stage;
  }
  const double rate = static_cast<double>(right) / static_cast<double>(resolvable);
  o.require(rate >= kMatchRate, fmt::format("only {}/{} resolved at the right stage", right, resolvable));
  const double total = report.username_in_post.percent + report.basic_info.percent + report.candidates.percent +
                       report.unmatched.percent;
  o.require(near(total, 100.0, kPercentTol), fmt::format("stage percentages sum to {}", total));
  for (const auto& p : f.posts) {
    for (const auto& u : matching::usernames_in_post(p.text)) {
      o.require(u.size() > matching::kMinUsernameLength, "short username '" + u + "'");
    }
  }
  oracle::Gen g(796);
  const std::vector<std::string> words = {"username", "user", "name", "is", "a", "abc", "ab1", "longer1", ":"};
  for (int i = 0; i < 5000; ++i) {
    std::string t;
    for (int k = g.integer(0, 10); k > 0; --k) t += g.pick(words) + " ";
    for (const auto& u : matching::usernames_in_post(t)) {
      o.require(u.size() > matching::kMinUsernameLength, "short username '" + u + "'");
    }
  }
  if (o.ok) o.detail = fmt::format("{}/{} resolvable profiles at the right stage, stages sum to {:.2f}%", right,
                                   resolvable, total);
  return o;
}

Outcome timeline_table() {
  Outcome o;
  const timeline::CallWindow call{parse_timestamp("2019-01-01 00:00:00"), parse_timestamp("2019-03-12 00:00:00"),
                                  parse_timestamp("2019-04-11 00:00:00")};  // 100 days
  auto day = [&](int p) { return call.call_open + std::chrono::days(p); };
  const std::array<int, 5> inside = {10, 30, 50, 75, 95};
  int agreed = 0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      for (int c = 0; c < 5; ++c)
        for (int d = 0; d < 5; ++d) {
          const timeline::UserTimeline u{1, day(inside[a]), day(inside[b]), day(inside[c]), day(inside[d])};
          const auto got = timeline::classify_behaviour(u, call);
          const char want = oracle::lookup_class({a, b, c, d});
          const std::string expect = want == '?' ? "Other" : std::string(1, want);
          if (timeline::to_string(got) == expect) ++agreed;
        }
  o.require(agreed == 625, fmt::format("{} of 625 tuples agree", agreed));
  using timeline::Segment;
  const std::vector<std::pair<double, Segment>> edges = {{0, Segment::S0},  {20, Segment::S1}, {40, Segment::S2},
                                                         {60, Segment::S3}, {90, Segment::S4}, {100, Segment::S4}};
  for (const auto& [p, s] : edges) {
    o.require(timeline::assign_segment(p) == s, fmt::format("boundary {}", p));
    o.require(timeline::assign_segment(timeline::to_percent(day(static_cast<int>(p)), call)) == s,
              fmt::format("boundary timestamp {}", p));
  }
  if (o.ok) o.detail = "625/625 tuples agree; boundaries 0/20/40/60/90/100 correct";
  return o;
}

Outcome statistics_oracles() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  oracle::Gen g(797);
  auto series = [&](std::size_t n, int levels) {
    stats::Series s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(levels ? g.integer(1, levels) : g.normal(0, 1));
    return s;
  };
  auto constant = [](const stats::Series& s) { return std::adjacent_find(s.begin(), s.end(), std::not_equal_to<>()) == s.end(); };
  int kendall = 0;
  while (kendall < 200 && o.ok) {
    const auto n = static_cast<std::size_t>(g.integer(2, 8));
    const auto x = series(n, g.integer(2, 4)), y = series(n, g.integer(2, 4));
    if (constant(x) || constant(y)) continue;
    o.require(stats::kendall_tau_b(x, y) == oracle::kendall_pairs(x, y), fmt::format("kendall case {}", kendall));
    ++kendall;
  }
  double worst = 0;
  for (int i = 0; i < 100 && o.ok; ++i) {
    const std::size_t n = 30;
    std::vector<stats::Series> cols = {series(n, 0), series(n, 0), series(n, 0)};
    auto y = series(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      cols[1][k] += 0.5 * cols[0][k];
      y[k] += cols[0][k] - cols[2][k];
    }
    worst = std::max(worst, std::fabs(stats::pearson(cols[0], y) - oracle::pearson_sums(cols[0], y)));
    worst = std::max(worst, std::fabs(stats::spearman(cols[0], y) -
                                      oracle::pearson_sums(oracle::count_ranks(cols[0]), oracle::count_ranks(y))));
    const std::vector<stats::Series> ctl = {cols[2]};
    worst = std::max(worst, std::fabs(stats::partial_pearson(cols[0], y, ctl) -
                                      oracle::pearson_sums(oracle::normal_equations(ctl, cols[0]).residuals,
                                                           oracle::normal_equations(ctl, y).residuals)));
    const auto v = stats::vif(cols);
    const auto vw = oracle::vif_from_correlation_inverse(cols);
    for (std::size_t j = 0; j < cols.size(); ++j) worst = std::max(worst, std::fabs(v[j].vif - vw[j]));
    const auto fit = stats::ols(cols, y);
    const auto ne = oracle::normal_equations(cols, y);
    for (std::size_t j = 0; j < ne.beta.size(); ++j) {
      worst = std::max(worst, std::fabs(fit.coefficients[j] - ne.beta[j]));
      worst = std::max(worst, std::fabs(fit.standard_errors[j] - ne.se[j]));
    }
  }
  o.require(worst <= kOracleTol, fmt::format("largest oracle gap {:.3g}", worst));
  const stats::Series up = {1, 2, 3, 4, 5, 6}, down = {6, 5, 4, 3, 2, 1};
  for (auto fn : {stats::kendall_tau_b, stats::pearson, stats::spearman}) {
    o.require(fn(up, up) == 1.0 && fn(up, down) == -1.0, "perfect agreement/inversion not +-1");
  }
  const double secs = seconds_since(start);
  o.require(secs < kStatsBudgetS, fmt::format("took {:.2f} s", secs));
  if (o.ok) o.detail = fmt::format("kendall 200/200 exact; other oracles within {:.1e}; {:.2f} s", worst, secs);
  return o;
}

Outcome mahalanobis() {
  Outcome o;
  const std::vector<stats::Series> rows = {{1, 2}, {3, 4}, {5, 0}, {3, 2}};
  o.require(std::fabs(stats::mahalanobis_screen(rows, 100).d2[3]) <= kExact, "mean row is not at distance 0");
  const std::vector<stats::Series> identity = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const std::vector<double> origin = {0, 0, 0};
  const std::vector<stats::Series> pts = {{1, 2, 2}, {-3, 0, 4}, {0.5, 0.5, 0.5}};
  const auto d = stats::mahalanobis_distances(pts, origin, identity);
  o.require(near(d[0], 9, kExact) && near(d[1], 25, kExact) && near(d[2], 0.75, kExact), "identity covariance");
  // 2-D: covariance [[4, 1], [1, 2]], inverse [[2, -1], [-1, 4]] / 7
  const std::vector<stats::Series> cov = {{4, 1}, {1, 2}};
  const std::vector<double> mean = {1, -1};
  const std::vector<stats::Series> probe = {{3, 0}, {-1, 2}, {1, -1}};
  const auto got = stats::mahalanobis_distances(probe, mean, cov);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double dx = probe[i][0] - mean[0], dy = probe[i][1] - mean[1];
    const double want = (2 * dx * dx - 2 * dx * dy + 4 * dy * dy) / 7;
    o.require(near(got[i], want, kMahalanobisTol), fmt::format("2-D probe {}", i));
  }
  if (o.ok) o.detail = "mean row 0, identity d2 analytic, 2-D inverse within 1e-10";
  return o;
}

Outcome forest() {
  Outcome o;
  const auto table = cases::gaussian_clusters(799, 50, 0.12);
  model::ForestParams p;
  p.n_trees = 100;
  p.seed = 17;
  const auto start = std::chrono::steady_clock::now();
  const auto cv = model::cross_validate(table, 10, p, 23);
  const double secs = seconds_since(start);
  o.require(cv.report.accuracy_pct >= kCvAccuracyPct, fmt::format("CV accuracy {:.2f}%", cv.report.accuracy_pct));
  o.require(secs < kForestBudgetS, fmt::format("took {:.2f} s", secs));
  const auto again = model::cross_validate(table, 10, p, 23);
  o.require(model::to_json(cv.report).dump() == model::to_json(again.report).dump(), "reports differ between runs");

  auto warped = table;
  for (auto& r : warped.rows) {
    for (std::size_t f = 0; f + 1 < r.values.size(); ++f) r.values[f] = std::sqrt(r.values[f]);
    r.values.back() = std::exp(r.values.back() / 20);
  }
  const auto a = model::train_forest(table, p);
  const auto b = model::train_forest(warped, p);
  const auto probe = cases::gaussian_clusters(800, 10, 0.1);
  for (std::size_t i = 0; i < probe.rows.size(); ++i) {
    auto w = probe.rows[i].values;
    for (std::size_t f = 0; f + 1 < w.size(); ++f) w[f] = std::sqrt(w[f]);
    w.back() = std::exp(w.back() / 20);
    o.require(a.predict(probe.rows[i].values).fractions == b.predict(w).fractions,
              fmt::format("probe {} changes under a monotone transform", i));
  }
  if (o.ok) {
    o.detail = fmt::format("10-fold CV {:.2f}% in {:.2f} s; identical reports; monotone invariance on {} probes",
                           cv.report.accuracy_pct, secs, probe.rows.size());
  }
  return o;
}

Outcome evaluation_metrics() {
  Outcome o;
  const std::vector<std::string> labels = {"down", "error", "idle", "slow"};
  const std::vector<std::vector<int>> cm = {{20, 3, 1, 2}, {4, 15, 0, 1}, {0, 2, 30, 3}, {1, 0, 5, 25}};
  const auto [preds, truth] = cases::from_confusion(labels, cm);
  const auto r = model::evaluate(preds, truth, labels);
  std::vector<std::vector<double>> cmd;
  for (const auto& row : cm) cmd.emplace_back(row.begin(), row.end());
  const auto w = oracle::closed_form(cmd);
  o.require(near(r.accuracy_pct, w.accuracy_pct, kOracleTol), "accuracy");
  o.require(near(r.kappa, w.kappa, kOracleTol), "kappa");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& m = r.per_label[i];
    o.require(near(m.precision, w.precision[i], kOracleTol) && near(m.recall, w.recall[i], kOracleTol) &&
                  near(m.f1, w.f1[i], kOracleTol) && near(m.tp_rate, w.tp_rate[i], kOracleTol) &&
                  near(m.fp_rate, w.fp_rate[i], kOracleTol),
              "per-label metrics for " + labels[i]);
  }
  o.require(near(r.weighted.precision, w.w_precision, kOracleTol) && near(r.weighted.recall, w.w_recall, kOracleTol) &&
                near(r.weighted.f1, w.w_f1, kOracleTol) && near(r.weighted.tp_rate, w.w_tp, kOracleTol) &&
                near(r.weighted.fp_rate, w.w_fp, kOracleTol),
            "weighted averages");
  const auto [pp, pt] = cases::from_confusion(labels, {{5, 0, 0, 0}, {0, 6, 0, 0}, {0, 0, 7, 0}, {0, 0, 0, 8}});
  const auto perfect = model::evaluate(pp, pt, labels);
  o.require(perfect.kappa == 1.0 && perfect.mae == 0.0, "perfect predictions");
  if (o.ok) o.detail = fmt::format("accuracy {:.4f}%, kappa {:.6f} match closed form; perfect -> kappa 1, MAE 0",
                                   r.accuracy_pct, r.kappa);
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const auto base = std::filesystem::temp_directory_path() / ("pmsys_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(base);
  const std::vector<std::string> goldens = {"events.json",  "matches.json", "traits.csv",      "emotions.csv",
                                            "timeline.csv", "features.csv", "evaluation.json", "cv.json"};
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* tag : {"a", "b"}) {
    const auto out = base / tag;
    const auto cmd = fmt::format("bash '{}/tools/demo.sh' '{}' '{}' '{}' >/dev/null 2>&1", kSrc, PMSYS_BINARY, kSrc,
                                 out.string());
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, fmt::format("pipeline run {} exited with {}", tag, rc));
    std::map<std::string, std::string> files;
    for (const auto& g : goldens) files[g] = slurp(out / g);
    runs.push_back(files);
  }
  std::size_t bytes = 0;
  for (const auto& g : goldens) {
    const auto golden = slurp(std::filesystem::path(kSrc) / "tests/golden" / g);
    o.require(!golden.empty(), "golden " + g + " is missing");
    o.require(runs[0][g] == runs[1][g], g + " differs between runs");
    o.require(runs[0][g] == golden, g + " differs from its golden copy");
    bytes += golden.size();
  }
  try {
    const auto report = nlohmann::json::parse(runs[0]["evaluation.json"]);
    o.require(report.contains("kappa") && report.at("instances").get<int>() > 0, "evaluation report is incomplete");
  } catch (const std::exception& e) {
    o.fail(std::string("evaluation report is not JSON: ") + e.what());
  }
  std::filesystem::remove_all(base);
  if (o.ok) o.detail = fmt::format("{} outputs byte-identical across two runs and to goldens ({} bytes)", goldens.size(), bytes);
  return o;
}

Outcome verification_service() {
  Outcome o;
  verify::ServiceConfig cfg;
  cfg.seed = 802;
  cfg.down_window = std::chrono::milliseconds(2000);
  cfg.questionnaire = traits::load_questionnaire(kSrc + "/data/questionnaire/bfi44.txt");
  verify::SessionStore store(cfg);
  driver::LiveServer live(store);
  if (live.port <= 0) {
    o.fail("could not bind a port");
    return o;
  }
  const auto run = driver::run_session(live, 36, std::vector<int>(44, 4));
  for (const auto& e : run.errors) o.fail(e);
  double slow_s = 0, idle_s = 0;
  std::map<std::string, std::string> label_by_step;
  for (std::size_t i = 0; i < run.saves.size(); ++i) {
    const auto& s = run.saves[i];
    label_by_step[std::to_string(i + 1)] = s.status;
    if (s.status == "slow") slow_s = s.elapsed_s;
    if (s.status == "idle") idle_s = s.elapsed_s;
  }
  o.require(slow_s > kSlowMinS, fmt::format("slow save took {:.3f} s", slow_s));
  o.require(idle_s < kIdleMaxS, fmt::format("idle save took {:.3f} s", idle_s));

  auto c = live.client();
  auto res = c.Get("/api/export?session=" + run.id);
  if (!res || res->status != 200) {
    o.fail("export failed");
    return o;
  }
  const auto body = nlohmann::json::parse(res->body);
  const auto& rows = body.at("rows");
  o.require(rows.size() == 4, fmt::format("export has {} rows", rows.size()));
  std::multiset<std::string> exported, revealed;
  for (const auto& r : rows) exported.insert(r.at("label").get<std::string>());
  for (const auto& s : run.saves) revealed.insert(s.status);
  o.require(exported == revealed && revealed == std::multiset<std::string>{"down", "error", "idle", "slow"},
            "exported labels do not match the session's events");

  // Replays must not change anything.
  const auto before = store.session_json(run.id);
  int code = 0;
  for (std::size_t step = 1; step <= 4; ++step) {
    const auto ack = driver::post(c, "/api/session/" + run.id + "/emotion",
                                  {{"step", step}, {"sliders", {1, 1, 1, 1, 1}}}, &code);
    o.require(code == 200, fmt::format("emotion replay {} returned {}", step, code));
    driver::post(c, "/api/session/" + run.id + "/save", {{"step", step}}, &code);
    o.require(code == 200, fmt::format("save replay {} returned {}", step, code));
  }
  driver::post(c, "/api/session/" + run.id + "/questionnaire", {{"responses", std::vector<int>(44, 4)}}, &code);
  o.require(code == 200, "questionnaire replay rejected");
  auto after = store.session_json(run.id);
  for (std::size_t i = 0; i < 4; ++i) after["events"][i]["save_latency_ms"] = before["events"][i]["save_latency_ms"];
  o.require(after == before, "replays changed the session");
  o.require(store.export_rows(run.id).table.rows.size() == 4, "replays changed the export");
  if (o.ok) o.detail = fmt::format("4 rows exported; slow save {:.2f} s, idle save {:.4f} s; replays idempotent", slow_s, idle_s);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"lexicon-oracle", lexicon_oracle},
      {"extraversion-model", extraversion_model},
      {"questionnaire-scoring", questionnaire_scoring},
      {"emotion-normalization", emotion_normalization},
      {"status-evidence", status_evidence},
      {"user-matching", matching_fixture},
      {"timeline-classes", timeline_table},
      {"statistics-oracles", statistics_oracles},
      {"mahalanobis", mahalanobis},
      {"random-forest", forest},
      {"evaluation-metrics", evaluation_metrics},
      {"end-to-end-pipeline", end_to_end},
      {"verification-service", verification_service},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failures += !o.ok;
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures;
}
