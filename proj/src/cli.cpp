#include "pmsys/cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "pmsys/csv.hpp"
#include "pmsys/emotions.hpp"
#include "pmsys/error.hpp"
#include "pmsys/ingest.hpp"
#include "pmsys/lexicon.hpp"
#include "pmsys/matching.hpp"
#include "pmsys/model.hpp"
#include "pmsys/sentiment.hpp"
#include "pmsys/stats.hpp"
#include "pmsys/status.hpp"
#include "pmsys/timeline.hpp"
#include "pmsys/traits.hpp"
#include "pmsys/verify_service.hpp"

namespace pmsys::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string input;
  std::string output;
  std::string lexicon;
  std::string trait_model;
  std::string questionnaire;
  std::string rules;
  std::string responses;
  std::string profiles;
  std::string users;
  std::string events;
  std::string match_report;
  std::string traits;
  std::string model;
  std::string call_window;
  std::string journal;
  std::string static_dir;
  std::string text;
  std::string stat = "kendall";
  std::string x;
  std::string y;
  std::vector<std::string> controls;
  std::vector<std::string> columns;
  std::optional<double> critical;
  int window_mins = 15;
  std::size_t trees = 100;
  std::optional<std::size_t> m;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 1;
  std::size_t folds = 10;
  std::size_t threads = 1;
  double train_fraction = 0.8;
  bool json = false;
  bool per_post = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  int down_ms = 8000;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << content;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// CSV and JSON outputs go to --output when given, otherwise to stdout.
void emit_data(const Options& o, Io& io, const std::string& content) {
  if (o.output.empty()) {
    io.out << content;
  } else {
    write_file(o.output, content);
  }
}

// Reports: --output receives JSON; stdout shows JSON with --json, else the table.
void emit_report(const Options& o, Io& io, const json& j, const std::string& table) {
  if (!o.output.empty()) write_file(o.output, dump(j));
  if (o.json) {
    io.out << dump(j);
  } else {
    io.out << table;
  }
}

template <typename Row>
void warn_rows(Io& io, const std::string& path, const ingest::Table<Row>& t) {
  for (const auto& e : t.errors) io.err << fmt::format("warning: {}: line {}: {}\n", path, e.line, e.message);
  if (!t.errors.empty()) io.err << fmt::format("warning: {}: skipped {} row(s)\n", path, t.errors.size());
}

template <typename Row>
ingest::Table<Row> checked(Io& io, const std::string& path, ingest::Table<Row> t) {
  warn_rows(io, path, t);
  if (t.rows.empty()) throw ValidationError("'" + path + "' contains no valid rows");
  return t;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---- analyze-text ---------------------------------------------------------

void cmd_analyze_text(const Options& o, Io& io) {
  const auto lex = lexicon::load_lexicon(o.lexicon);
  std::ifstream in(o.input, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto a = lexicon::analyze(buf.str(), lex);
  json j = {{"lexicon", lex.name()},
            {"WC", a.stats.word_count},
            {"WPS", a.stats.words_per_sentence},
            {"UNIQUE", a.stats.unique_pct},
            {"SIXLTR", a.stats.six_letter_pct},
            {"categories", a.profile}};
  std::string table = fmt::format("{:<16}{}\n{:<16}{:.4f}\n{:<16}{:.4f}\n{:<16}{:.4f}\n", "WC", a.stats.word_count,
                                  "WPS", a.stats.words_per_sentence, "UNIQUE", a.stats.unique_pct, "SIXLTR",
                                  a.stats.six_letter_pct);
  for (const auto& [cat, pct] : a.profile) table += fmt::format("{:<16}{:.4f}\n", cat, pct);
  emit_report(o, io, j, table);
}

// ---- score-traits ---------------------------------------------------------

void cmd_score_traits(const Options& o, Io& io) {
  if (o.questionnaire.empty() == o.trait_model.empty()) {
    throw ValidationError("score-traits needs exactly one of --questionnaire or --trait-model");
  }
  std::ostringstream out;
  if (!o.questionnaire.empty()) {
    const auto def = traits::load_questionnaire(o.questionnaire);
    const auto table = checked(io, o.input, ingest::load_questionnaire_responses(o.input));
    std::vector<ingest::TraitRecord> records;
    std::size_t rejected = 0;
    for (const auto& r : table.rows) {
      try {
        records.push_back({r.user_id, traits::score_questionnaire(r.responses, def).normalized});
      } catch (const ValidationError& e) {
        ++rejected;
        io.err << fmt::format("warning: user {}: {}\n", r.user_id, e.what());
      }
    }
    if (records.empty()) throw ValidationError("no questionnaire could be scored");
    ingest::write_traits(out, records);
    emit_data(o, io, out.str());
    if (!o.output.empty()) io.out << fmt::format("scored {} user(s), rejected {}\n", records.size(), rejected);
    return;
  }

  const auto models = traits::load_trait_models(o.trait_model);
  std::ifstream in(o.input, std::ios::binary);
  const auto records = csv::read(in);
  if (records.empty()) throw ValidationError("'" + o.input + "' has no header row");
  const auto& header = records.front().fields;
  if (header.size() < 2) throw ValidationError("'" + o.input + "': expected an id column followed by features");
  std::vector<std::string> out_header = {header[0]};
  for (const auto& [name, _] : models.models()) {
    out_header.push_back(name + "_raw");
    out_header.push_back(name);
  }
  csv::write_row(out, out_header);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) throw ParseError(rec.line, "wrong number of fields");
    traits::FeatureMap features;
    for (std::size_t c = 1; c < header.size(); ++c) {
      try {
        std::size_t used = 0;
        features[header[c]] = std::stod(rec.fields[c], &used);
        if (used != rec.fields[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw ParseError(rec.line, "'" + header[c] + "' is not a number");
      }
    }
    std::vector<std::string> row = {rec.fields[0]};
    for (const auto& [name, model] : models.models()) {
      const double raw = traits::score_trait_linear(features, model);
      row.push_back(ingest::format_number(raw));
      row.push_back(ingest::format_number(traits::normalize_trait(raw, model.raw_scale)));
    }
    csv::write_row(out, row);
  }
  emit_data(o, io, out.str());
}

// ---- score-emotions -------------------------------------------------------

void cmd_score_emotions(const Options& o, Io& io) {
  const auto lex = lexicon::load_lexicon(o.lexicon);
  emotions::check_emotion_lexicon(lex);
  const auto posts = checked(io, o.input, ingest::load_posts(o.input));
  std::ostringstream out;
  std::vector<std::string> header;
  if (o.per_post) {
    header = {"post", "timestamp", "user_ref"};
  } else {
    header = {"user_ref", "posts"};
  }
  for (auto e : emotions::kAllEmotions) header.emplace_back(emotions::to_string(e));
  csv::write_row(out, header);

  if (o.per_post) {
    for (std::size_t i = 0; i < posts.rows.size(); ++i) {
      const auto& p = posts.rows[i];
      const auto v = emotions::score_emotions(p.text, lex);
      std::vector<std::string> row = {std::to_string(i), format_timestamp(p.timestamp), p.user_ref};
      for (auto e : emotions::kAllEmotions) row.push_back(ingest::format_number(v[e]));
      csv::write_row(out, row);
    }
  } else {
    std::map<std::string, std::vector<std::string>> by_ref;
    for (const auto& p : posts.rows) by_ref[p.user_ref].push_back(p.text);
    std::vector<emotions::PostGroup> groups;
    for (auto& [ref, texts] : by_ref) groups.push_back({ref, texts});
    const auto vectors = emotions::batch_emotions(groups, lex);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<std::string> row = {groups[g].key, std::to_string(groups[g].texts.size())};
      for (auto e : emotions::kAllEmotions) row.push_back(ingest::format_number(vectors[g][e]));
      csv::write_row(out, row);
    }
  }
  emit_data(o, io, out.str());
}

// ---- sentiment ------------------------------------------------------------

void cmd_sentiment(const Options& o, Io& io) {
  const auto corpus = sentiment::load_corpus(o.input);
  const auto holdout = sentiment::holdout_accuracy(corpus, o.train_fraction, o.seed);
  json j = {{"corpus_size", corpus.size()},
            {"holdout", {{"accuracy", holdout.accuracy}, {"train", holdout.train_size}, {"test", holdout.test_size}}}};
  std::string table = fmt::format("corpus {} texts; holdout accuracy {:.4f} ({} train / {} test)\n", corpus.size(),
                                  holdout.accuracy, holdout.train_size, holdout.test_size);
  if (!o.text.empty()) {
    const auto model = sentiment::train_nb(corpus);
    const auto s = sentiment::classify(o.text, model);
    const auto label = sentiment::relabel(s);
    j["text"] = {{"pos", s.pos}, {"neg", s.neg}, {"neutral", s.neutral},
                 {"label", std::string(sentiment::to_string(label))}};
    table += fmt::format("text: pos {:.4f}  neg {:.4f}  neutral {:.4f}  -> {}\n", s.pos, s.neg, s.neutral,
                         sentiment::to_string(label));
  }
  emit_report(o, io, j, table);
}

// ---- label-status ---------------------------------------------------------

status::KeywordRuleSet rules_for(const Options& o) {
  return o.rules.empty() ? status::KeywordRuleSet::defaults() : status::load_rules(o.rules);
}

json events_json(const std::vector<status::StatusEvent>& events, std::size_t post_count, int window_mins) {
  json arr = json::array();
  std::map<std::string, std::size_t> summary;
  for (const auto& ev : events) {
    json kp = json::object();
    for (const auto& [s, n] : ev.evidence.keyword_posts) kp[std::string(status::to_string(s))] = n;
    json hits = json::array();
    for (const auto& h : ev.evidence.hits) hits.push_back({std::string(status::to_string(h.status)), h.phrase});
    const std::string label = ev.status ? std::string(status::to_string(*ev.status)) : "unresolved";
    ++summary[label];
    arr.push_back({{"start", format_timestamp(ev.start)},
                   {"end", format_timestamp(ev.end)},
                   {"status", ev.status ? json(label) : json(nullptr)},
                   {"rule", ev.evidence.rule},
                   {"sample_count", ev.evidence.sample_count},
                   {"median_response_s", optional_number(ev.evidence.median_response_s)},
                   {"min_response_s", optional_number(ev.evidence.min_response_s)},
                   {"keyword_posts", kp},
                   {"hits", hits},
                   {"posts", ev.post_indices}});
  }
  return {{"window_minutes", window_mins}, {"post_count", post_count}, {"summary", summary}, {"events", arr}};
}

std::vector<status::StatusEvent> events_from_json(const json& j, std::size_t post_count) {
  if (j.at("post_count").get<std::size_t>() != post_count) {
    throw ValidationError(fmt::format("events were labelled over {} posts but the posts file has {}",
                                      j.at("post_count").get<std::size_t>(), post_count));
  }
  std::vector<status::StatusEvent> events;
  for (const auto& e : j.at("events")) {
    status::StatusEvent ev;
    ev.start = parse_timestamp(e.at("start").get<std::string>());
    ev.end = parse_timestamp(e.at("end").get<std::string>());
    if (!e.at("status").is_null()) {
      ev.status = status::status_from_string(e.at("status").get<std::string>());
      if (!ev.status) throw ValidationError("unknown status in events file");
    }
    ev.evidence.rule = e.value("rule", "");
    ev.post_indices = e.at("posts").get<std::vector<std::size_t>>();
    events.push_back(std::move(ev));
  }
  return events;
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void cmd_label_status(const Options& o, Io& io) {
  if (o.window_mins <= 0) throw ValidationError("--window-mins must be positive");
  const auto posts = checked(io, o.input, ingest::load_posts(o.input));
  const auto samples = checked(io, o.responses, ingest::load_responses(o.responses));
  const auto events =
      status::label_status(posts.rows, samples.rows, rules_for(o), std::chrono::minutes(o.window_mins));
  const auto j = events_json(events, posts.rows.size(), o.window_mins);
  std::string table = fmt::format("{:<21}{:<12}{:<26}{:>10}{:>7}\n", "window start", "status", "rule", "median_s",
                                  "posts");
  for (const auto& ev : events) {
    table += fmt::format("{:<21}{:<12}{:<26}{:>10}{:>7}\n", format_timestamp(ev.start),
                         ev.status ? status::to_string(*ev.status) : "unresolved", ev.evidence.rule,
                         ev.evidence.median_response_s ? fmt::format("{:.2f}", *ev.evidence.median_response_s) : "-",
                         ev.post_indices.size());
  }
  emit_report(o, io, j, table);
}

// ---- match-users ----------------------------------------------------------

json match_json(const matching::MatchReport& report) {
  json results = json::array();
  for (const auto& r : report.results) {
    json item = {{"social_id", r.social_id}};
    if (const auto* m = std::get_if<matching::Matched>(&r.outcome)) {
      item["stage"] = std::string(matching::to_string(m->method));
      item["user_id"] = m->user_id;
    } else if (const auto* c = std::get_if<matching::Candidates>(&r.outcome)) {
      item["stage"] = "candidates";
      json cands = json::array();
      for (const auto& cand : c->ranked) cands.push_back({{"user_id", cand.user_id}, {"score", cand.score}});
      item["candidates"] = cands;
    } else {
      item["stage"] = "unmatched";
    }
    results.push_back(item);
  }
  auto stage = [](const matching::StageSummary& s) { return json{{"count", s.count}, {"percent", s.percent}}; };
  return {{"summary",
           {{"username_in_post", stage(report.username_in_post)},
            {"basic_info", stage(report.basic_info)},
            {"candidates", stage(report.candidates)},
            {"unmatched", stage(report.unmatched)}}},
          {"results", results}};
}

std::map<std::string, int> links_from_json(const json& j) {
  std::map<std::string, int> links;
  for (const auto& r : j.at("results")) {
    if (r.contains("user_id")) links[r.at("social_id").get<std::string>()] = r.at("user_id").get<int>();
  }
  return links;
}

void cmd_match_users(const Options& o, Io& io) {
  const auto posts = checked(io, o.input, ingest::load_posts(o.input));
  const auto profiles = checked(io, o.profiles, ingest::load_profiles(o.profiles));
  const auto users = checked(io, o.users, ingest::load_users(o.users));
  std::vector<matching::SocialPost> social;
  for (const auto& p : posts.rows) {
    if (!ingest::is_system_platform(p.platform)) social.push_back({p.user_ref, p.text});
  }
  const matching::UserIndex index(users.rows);
  const auto report = matching::run_matching(social, profiles.rows, index);
  auto row = [](std::string_view name, const matching::StageSummary& s) {
    return fmt::format("{:<18}{:>6}{:>9.2f}%\n", name, s.count, s.percent);
  };
  const std::string table = row("username_in_post", report.username_in_post) + row("basic_info", report.basic_info) +
                            row("candidates", report.candidates) + row("unmatched", report.unmatched);
  emit_report(o, io, match_json(report), table);
}

// ---- segment-timeline -----------------------------------------------------

void cmd_segment_timeline(const Options& o, Io& io) {
  const auto call = ingest::load_call_window(o.call_window);
  const auto timelines = checked(io, o.input, ingest::load_timelines(o.input));
  std::ostringstream out;
  csv::write_row(out, std::vector<std::string>{"user_id", "t0", "t1", "t2", "t3", "class", "alias"});
  std::map<std::string, std::size_t> counts;
  std::size_t incomplete = 0;
  for (const auto& t : timelines.rows) {
    if (!t.complete()) {
      ++incomplete;
      continue;
    }
    const std::array<Timestamp, 4> ms = {*t.t0_registration, *t.t1_first_action, *t.t2_last_action,
                                         *t.t3_submission};
    std::vector<std::string> row = {std::to_string(t.user_id)};
    for (auto ts : ms) row.emplace_back(timeline::to_string(timeline::assign_segment(timeline::to_percent(ts, call))));
    const auto cls = timeline::classify_behaviour(t, call);
    row.emplace_back(timeline::to_string(cls));
    row.emplace_back(timeline::alias(cls));
    ++counts[std::string(timeline::to_string(cls))];
    csv::write_row(out, row);
  }
  if (incomplete) io.err << fmt::format("warning: {} timeline(s) without every milestone were skipped\n", incomplete);
  emit_data(o, io, out.str());
  if (!o.output.empty()) {
    for (const auto& [cls, n] : counts) io.out << fmt::format("{:<6}{:>5}\n", cls, n);
  }
}

// ---- stats ----------------------------------------------------------------

struct Matrix {
  std::vector<std::string> names;
  std::vector<stats::Series> columns;

  const stats::Series& column(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError("no column named '" + name + "'");
    return columns[static_cast<std::size_t>(it - names.begin())];
  }
};

Matrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  const auto records = csv::read(in);
  if (records.size() < 2) throw ValidationError("'" + path + "' needs a header and at least one row");
  Matrix m;
  m.names = records.front().fields;
  m.columns.assign(m.names.size(), {});
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != m.names.size()) throw ParseError(rec.line, "wrong number of fields");
    for (std::size_t c = 0; c < rec.fields.size(); ++c) {
      try {
        std::size_t used = 0;
        const double v = std::stod(rec.fields[c], &used);
        if (used != rec.fields[c].size()) throw std::invalid_argument("trailing");
        m.columns[c].push_back(v);
      } catch (const std::logic_error&) {
        throw ParseError(rec.line, "'" + m.names[c] + "' is not a number");
      }
    }
  }
  return m;
}

Matrix select(const Matrix& m, const std::vector<std::string>& names) {
  if (names.empty()) return m;
  Matrix out;
  for (const auto& n : names) {
    out.names.push_back(n);
    out.columns.push_back(m.column(n));
  }
  return out;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void cmd_stats(const Options& o, Io& io) {
  const auto all = read_matrix(o.input);
  json j = {{"statistic", o.stat}};
  std::string table;

  if (o.stat == "kendall" || o.stat == "pearson" || o.stat == "spearman") {
    auto fn = o.stat == "kendall" ? stats::kendall_tau_b : o.stat == "pearson" ? stats::pearson : stats::spearman;
    if (!o.x.empty() || !o.y.empty()) {
      if (o.x.empty() || o.y.empty()) throw ValidationError("--x and --y go together");
      const double r = fn(all.column(o.x), all.column(o.y));
      j["x"] = o.x;
      j["y"] = o.y;
      j["value"] = finite_or_null(r);
      table = fmt::format("{}({}, {}) = {:.6f}\n", o.stat, o.x, o.y, r);
    } else {
      const auto m = select(all, o.columns);
      json matrix = json::array();
      table = fmt::format("{:<14}", "");
      for (const auto& n : m.names) table += fmt::format("{:>14}", n);
      table += "\n";
      for (std::size_t a = 0; a < m.names.size(); ++a) {
        json row = json::array();
        table += fmt::format("{:<14}", m.names[a]);
        for (std::size_t b = 0; b < m.names.size(); ++b) {
          const double r = fn(m.columns[a], m.columns[b]);
          row.push_back(finite_or_null(r));
          table += fmt::format("{:>14.6f}", r);
        }
        matrix.push_back(row);
        table += "\n";
      }
      j["columns"] = m.names;
      j["matrix"] = matrix;
    }
  } else if (o.stat == "partial") {
    if (o.x.empty() || o.y.empty() || o.controls.empty()) throw ValidationError("partial needs --x, --y and --controls");
    std::vector<stats::Series> controls;
    for (const auto& c : o.controls) controls.push_back(all.column(c));
    const double r = stats::partial_pearson(all.column(o.x), all.column(o.y), controls);
    j["x"] = o.x;
    j["y"] = o.y;
    j["controls"] = o.controls;
    j["value"] = finite_or_null(r);
    table = fmt::format("partial({}, {} | {}) = {:.6f}\n", o.x, o.y, fmt::join(o.controls, ", "), r);
  } else if (o.stat == "vif") {
    const auto m = select(all, o.columns);
    const auto entries = stats::vif(m.columns);
    json arr = json::array();
    table = fmt::format("{:<16}{:>12}{:>12}{:>12}  {}\n", "predictor", "R2", "tolerance", "VIF", "collinear");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      arr.push_back({{"predictor", m.names[i]}, {"r_squared", e.r_squared}, {"tolerance", e.tolerance},
                     {"vif", finite_or_null(e.vif)}, {"collinear", e.collinear}});
      table += fmt::format("{:<16}{:>12.6f}{:>12.6f}{:>12.4f}  {}\n", m.names[i], e.r_squared, e.tolerance, e.vif,
                           e.collinear ? "yes" : "no");
    }
    j["predictors"] = arr;
  } else if (o.stat == "mahalanobis") {
    const auto m = select(all, o.columns);
    const std::size_t n = m.columns.front().size();
    std::vector<stats::Series> rows(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (const auto& col : m.columns) rows[r].push_back(col[r]);
    }
    // Default cut-off: chi-square upper 0.1% point with one degree of freedom per column.
    const double critical = o.critical.value_or(boost::math::quantile(
        boost::math::complement(boost::math::chi_squared(static_cast<double>(m.columns.size())), 0.001)));
    const auto res = stats::mahalanobis_screen(rows, critical);
    std::vector<std::size_t> outliers;
    for (std::size_t r = 0; r < n; ++r) {
      if (!res.keep[r]) outliers.push_back(r);
    }
    j["columns"] = m.names;
    j["critical"] = critical;
    j["d2"] = res.d2;
    j["outlier_rows"] = outliers;
    table = fmt::format("{} rows, critical d2 {:.4f}, {} outlier(s)", n, critical, outliers.size());
    if (!outliers.empty()) table += fmt::format(": rows {}", fmt::join(outliers, ", "));
    table += "\n";
  } else if (o.stat == "ols") {
    if (o.y.empty()) throw ValidationError("ols needs --y");
    std::vector<std::string> predictors = o.columns;
    if (predictors.empty()) {
      for (const auto& n : all.names) {
        if (n != o.y) predictors.push_back(n);
      }
    }
    const auto m = select(all, predictors);
    const auto fit = stats::ols(m.columns, all.column(o.y));
    json coefs = json::array();
    table = fmt::format("{:<16}{:>12}{:>12}{:>12}{:>10}{:>10}\n", "term", "B", "SE", "beta", "t", "p");
    for (std::size_t i = 0; i < fit.coefficients.size(); ++i) {
      const std::string name = i == 0 ? "(intercept)" : m.names[i - 1];
      coefs.push_back({{"term", name}, {"b", fit.coefficients[i]}, {"se", finite_or_null(fit.standard_errors[i])},
                       {"beta", finite_or_null(fit.standardized[i])}, {"t", finite_or_null(fit.t_statistics[i])},
                       {"p", finite_or_null(fit.p_values[i])}});
      table += fmt::format("{:<16}{:>12.6f}{:>12.6f}{:>12.6f}{:>10.3f}{:>10.4f}\n", name, fit.coefficients[i],
                           fit.standard_errors[i], fit.standardized[i], fit.t_statistics[i], fit.p_values[i]);
    }
    table += fmt::format("R2 = {:.6f}, df = {}\n", fit.r_squared, fit.degrees_of_freedom);
    j["y"] = o.y;
    j["coefficients"] = coefs;
    j["r_squared"] = fit.r_squared;
    j["degrees_of_freedom"] = fit.degrees_of_freedom;
  } else {
    throw ValidationError("unknown statistic '" + o.stat + "'");
  }
  emit_report(o, io, j, table);
}

// ---- extract-features -----------------------------------------------------

void cmd_extract_features(const Options& o, Io& io) {
  const auto posts = checked(io, o.input, ingest::load_posts(o.input));
  const auto events = events_from_json(read_json(o.events), posts.rows.size());
  const auto links = links_from_json(read_json(o.match_report));
  const auto users = checked(io, o.users, ingest::load_users(o.users));
  const auto trait_rows = checked(io, o.traits, ingest::load_traits(o.traits));
  const auto lex = lexicon::load_lexicon(o.lexicon);
  std::map<int, traits::TraitVector> trait_map;
  for (const auto& r : trait_rows.rows) trait_map[r.user_id] = r.traits;
  const matching::UserIndex index(users.rows);

  const ingest::FeatureSources sources{posts.rows, events, links, index, trait_map, lex};
  const auto result = ingest::export_features(sources, model::FeatureSchema::defaults());
  for (const auto& e : result.exclusions) io.err << "excluded: " << e << "\n";

  std::ostringstream out;
  ingest::write_features(out, result.table.schema, result.table.rows);
  emit_data(o, io, out.str());

  std::map<std::string, std::size_t> per_label;
  for (const auto& r : result.table.rows) ++per_label[*r.label];
  std::ostream& summary = o.output.empty() ? io.err : io.out;
  summary << fmt::format("rows {}; excluded {}; unresolved events {}; unlinked posts {}\n", result.table.rows.size(),
                         result.excluded, result.unresolved_events, result.unlinked_posts);
  for (const auto& [label, n] : per_label) summary << fmt::format("  {:<8}{:>6}\n", label, n);
}

// ---- forest ---------------------------------------------------------------

model::FeatureTable load_labelled(Io& io, const std::string& path, bool need_labels) {
  model::FeatureTable table;
  auto loaded = checked(io, path, ingest::load_features(path, table.schema));
  table.rows = std::move(loaded.rows);
  if (need_labels) {
    for (const auto& r : table.rows) {
      if (!r.label) throw ValidationError("'" + path + "' has rows without a label");
    }
  }
  return table;
}

model::ForestParams forest_params(const Options& o) {
  model::ForestParams p;
  p.n_trees = o.trees;
  p.features_per_split = o.m;
  p.seed = o.seed;
  p.min_samples_leaf = o.min_leaf;
  p.threads = o.threads;
  return p;
}

model::Forest read_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return model::load_forest(in);
}

void cmd_train(const Options& o, Io& io) {
  const auto table = load_labelled(io, o.input, true);
  const auto forest = model::train_forest(table, forest_params(o));
  std::ostringstream out;
  model::save_forest(forest, out);
  write_file(o.output, out.str());
  const auto oob = model::oob_error(forest, table);
  json j = {{"trees", forest.trees().size()}, {"rows", table.rows.size()}, {"labels", forest.labels()},
            {"oob_error", oob.error}, {"oob_evaluated", oob.evaluated}, {"oob_skipped", oob.skipped}};
  if (o.json) {
    io.out << dump(j);
  } else {
    io.out << fmt::format("trained {} trees on {} rows ({} labels); out-of-bag error {:.4f} over {} rows\n",
                          forest.trees().size(), table.rows.size(), forest.labels().size(), oob.error, oob.evaluated);
  }
}

std::vector<model::Prediction> predict_all(const model::Forest& forest, const model::FeatureTable& table,
                                           const std::string& path) {
  if (!(table.schema == forest.schema())) {
    throw ValidationError("'" + path + "' columns do not match the model's feature schema");
  }
  std::vector<model::Prediction> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) out.push_back(forest.predict(r.values));
  return out;
}

void cmd_predict(const Options& o, Io& io) {
  const auto forest = read_forest(o.model);
  const auto table = load_labelled(io, o.input, false);
  const auto predictions = predict_all(forest, table, o.input);
  std::ostringstream out;
  std::vector<std::string> header = {"row", "predicted"};
  for (const auto& l : forest.labels()) header.push_back("p_" + l);
  header.emplace_back("actual");
  csv::write_row(out, header);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i), predictions[i].label};
    for (double f : predictions[i].fractions) row.push_back(ingest::format_number(f));
    row.push_back(table.rows[i].label.value_or(""));
    csv::write_row(out, row);
  }
  emit_data(o, io, out.str());
}

void cmd_evaluate(const Options& o, Io& io) {
  const auto forest = read_forest(o.model);
  const auto table = load_labelled(io, o.input, true);
  const auto predictions = predict_all(forest, table, o.input);
  std::vector<std::string> truth;
  for (const auto& r : table.rows) truth.push_back(*r.label);
  const auto report = model::evaluate(predictions, truth, forest.labels());
  emit_report(o, io, model::to_json(report), model::format_summary(report));
}

void cmd_cross_validate(const Options& o, Io& io) {
  const auto table = load_labelled(io, o.input, true);
  const auto cv = model::cross_validate(table, o.folds, forest_params(o), o.seed);
  for (const auto& w : cv.warnings) io.err << "warning: " << w << "\n";
  json j = {{"folds", o.folds}, {"stratified", cv.stratified}, {"warnings", cv.warnings},
            {"report", model::to_json(cv.report)}};
  emit_report(o, io, j,
              fmt::format("{}-fold cross-validation ({})\n", o.folds, cv.stratified ? "stratified" : "unstratified") +
                  model::format_summary(cv.report));
}

// ---- serve ----------------------------------------------------------------

verify::VerifyServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

void cmd_serve(const Options& o, Io& io) {
  verify::ServiceConfig config;
  config.seed = o.seed;
  config.questionnaire = traits::load_questionnaire(o.questionnaire);
  config.down_window = std::chrono::milliseconds(o.down_ms);
  if (!o.journal.empty()) config.journal = o.journal;
  if (!o.model.empty()) {
    config.forest = std::make_shared<const model::Forest>(read_forest(o.model));
    config.schema = config.forest->schema();
  }
  verify::SessionStore store(std::move(config));
  std::optional<fs::path> static_dir;
  if (!o.static_dir.empty()) static_dir = o.static_dir;
  verify::VerifyServer server(store, static_dir);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  io.out << fmt::format("serving on http://{}:{}\n", o.host, o.port) << std::flush;
  const bool ok = server.listen(o.host, o.port);
  g_server = nullptr;
  if (!ok) throw std::runtime_error(fmt::format("could not listen on {}:{}", o.host, o.port));
}

// ---- wiring ---------------------------------------------------------------

using Handler = void (*)(const Options&, Io&);

struct Command {
  const char* name;
  const char* help;
  Handler handler;
};

CLI::Option* file_opt(CLI::App* sub, const std::string& flag, std::string& target, const std::string& help,
                      bool required = true) {
  auto* opt = sub->add_option(flag, target, help)->check(CLI::ExistingFile);
  if (required) opt->required();
  return opt;
}

void add_forest_flags(CLI::App* sub, Options& o) {
  sub->add_option("--trees", o.trees, "number of trees")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--m", o.m, "features tried per split (default ceil(sqrt(M)))")->check(CLI::PositiveNumber);
  sub->add_option("--min-leaf", o.min_leaf, "minimum rows per leaf")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--seed", o.seed, "random seed")->capture_default_str();
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

std::vector<std::pair<CLI::App*, Handler>> build(CLI::App& app, Options& o) {
  std::vector<std::pair<CLI::App*, Handler>> subs;
  auto add = [&](const char* name, const char* help, Handler h) {
    auto* sub = app.add_subcommand(name, help);
    subs.emplace_back(sub, h);
    return sub;
  };
  auto output = [&](CLI::App* sub, const char* help) { sub->add_option("--output,-o", o.output, help); };
  auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", o.json, "print JSON instead of a table"); };

  auto* s = add("analyze-text", "word-category profile of a text file", cmd_analyze_text);
  file_opt(s, "--input,-i", o.input, "text file");
  file_opt(s, "--lexicon", o.lexicon, "category dictionary");
  output(s, "JSON report path");
  json_flag(s);

  s = add("score-traits", "Big Five scores from questionnaire responses or a linear feature model", cmd_score_traits);
  file_opt(s, "--input,-i", o.input, "responses CSV (user_id,item_1..) or features CSV (id,feature..)");
  file_opt(s, "--questionnaire", o.questionnaire, "item definition file", false);
  file_opt(s, "--trait-model", o.trait_model, "linear trait model file", false);
  output(s, "traits CSV path");

  s = add("score-emotions", "emotion vectors per user (posts concatenated) or per post", cmd_score_emotions);
  file_opt(s, "--input,-i", o.input, "posts CSV/JSONL");
  file_opt(s, "--lexicon", o.lexicon, "emotion dictionary");
  s->add_flag("--per-post", o.per_post, "one vector per post instead of per user");
  output(s, "CSV path");

  s = add("sentiment", "naive Bayes sentiment: holdout accuracy and optional text scoring", cmd_sentiment);
  file_opt(s, "--input,-i", o.input, "labelled corpus CSV (text,label)");
  s->add_option("--text", o.text, "text to classify with a model trained on the whole corpus");
  s->add_option("--train-fraction", o.train_fraction, "holdout split")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  s->add_option("--seed", o.seed, "random seed")->capture_default_str();
  output(s, "JSON report path");
  json_flag(s);

  s = add("label-status", "label time windows Idle/Slow/Down/Error from posts and response times", cmd_label_status);
  file_opt(s, "--input,-i", o.input, "posts CSV/JSONL");
  file_opt(s, "--responses", o.responses, "response-time CSV");
  file_opt(s, "--rules", o.rules, "keyword rules (default built in)", false);
  s->add_option("--window-mins", o.window_mins, "window length in minutes")->capture_default_str();
  output(s, "events JSON path");
  json_flag(s);

  s = add("match-users", "link social profiles to system users", cmd_match_users);
  file_opt(s, "--input,-i", o.input, "posts CSV/JSONL");
  file_opt(s, "--profiles", o.profiles, "social profiles CSV/JSONL");
  file_opt(s, "--users", o.users, "system users CSV");
  output(s, "match report JSON path");
  json_flag(s);

  s = add("segment-timeline", "behaviour class of each user's milestone timeline", cmd_segment_timeline);
  file_opt(s, "--input,-i", o.input, "timelines CSV");
  file_opt(s, "--call-window", o.call_window, "call window CSV");
  output(s, "CSV path");

  s = add("stats", "correlation, partial correlation, VIF, Mahalanobis screening, OLS", cmd_stats);
  file_opt(s, "--input,-i", o.input, "numeric CSV with a header");
  s->add_option("--stat", o.stat, "kendall|pearson|spearman|partial|vif|mahalanobis|ols")
      ->check(CLI::IsMember({"kendall", "pearson", "spearman", "partial", "vif", "mahalanobis", "ols"}))
      ->capture_default_str();
  s->add_option("--x", o.x, "first column");
  s->add_option("--y", o.y, "second column / response");
  s->add_option("--controls", o.controls, "control columns (partial)")->delimiter(',');
  s->add_option("--columns", o.columns, "columns to use")->delimiter(',');
  s->add_option("--critical", o.critical, "Mahalanobis d2 cut-off");
  output(s, "JSON report path");
  json_flag(s);

  s = add("extract-features", "join emotions, traits and age onto labelled events", cmd_extract_features);
  file_opt(s, "--input,-i", o.input, "posts CSV/JSONL (the file given to label-status)");
  file_opt(s, "--events", o.events, "events JSON from label-status");
  file_opt(s, "--match-report", o.match_report, "report JSON from match-users");
  file_opt(s, "--users", o.users, "system users CSV");
  file_opt(s, "--traits", o.traits, "traits CSV from score-traits");
  file_opt(s, "--lexicon", o.lexicon, "emotion dictionary");
  output(s, "features CSV path");

  s = add("train", "train a random forest", cmd_train);
  file_opt(s, "--input,-i", o.input, "labelled features CSV");
  s->add_option("--output,-o", o.output, "forest JSON path")->required();
  add_forest_flags(s, o);
  json_flag(s);

  s = add("predict", "predict labels with a trained forest", cmd_predict);
  file_opt(s, "--model", o.model, "forest JSON");
  file_opt(s, "--input,-i", o.input, "features CSV");
  output(s, "CSV path");

  s = add("evaluate", "accuracy, kappa, confusion matrix and per-label metrics", cmd_evaluate);
  file_opt(s, "--model", o.model, "forest JSON");
  file_opt(s, "--input,-i", o.input, "labelled features CSV");
  output(s, "JSON report path");
  json_flag(s);

  s = add("cross-validate", "k-fold cross-validation of the forest", cmd_cross_validate);
  file_opt(s, "--input,-i", o.input, "labelled features CSV");
  s->add_option("--folds", o.folds, "number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
  add_forest_flags(s, o);
  output(s, "JSON report path");
  json_flag(s);

  s = add("serve", "run the verification-experiment HTTP service", cmd_serve);
  file_opt(s, "--questionnaire", o.questionnaire, "item definition file");
  file_opt(s, "--model", o.model, "forest JSON used to score exports", false);
  s->add_option("--journal", o.journal, "append-only session journal (JSONL)");
  s->add_option("--static", o.static_dir, "directory with the built UI bundle")->check(CLI::ExistingDirectory);
  s->add_option("--host", o.host, "bind address")->capture_default_str();
  s->add_option("--port", o.port, "TCP port")->check(CLI::Range(1, 65535))->capture_default_str();
  s->add_option("--seed", o.seed, "session seed")->capture_default_str();
  s->add_option("--down-ms", o.down_ms, "how long saves are refused during the Down event")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  return subs;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("PMSys: affect, personality and system-status analytics", "pmsys");
  app.require_subcommand(1);
  Options o;
  const auto subs = build(app, o);
  Io io{out, err};
  if (!args.empty() && !args.front().empty() && args.front().front() != '-') {
    const auto known = std::any_of(subs.begin(), subs.end(), [&](const auto& s) { return s.first->get_name() == args.front(); });
    if (!known) {
      err << "error: unknown subcommand '" << args.front() << "'\n" << app.help();
      return kExitValidation;
    }
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (app.get_subcommands().empty()) err << app.help();
    return kExitValidation;
  }
  for (const auto& [sub, handler] : subs) {
    if (!sub->parsed()) continue;
    try {
      handler(o, io);
      return kExitOk;
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return kExitValidation;
    } catch (const ConflictError& e) {
      err << "error: " << e.what() << "\n";
      return kExitValidation;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  err << app.help();
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pmsys::cli
