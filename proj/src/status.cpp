#include "pmsys/status.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pmsys/error.hpp"
#include "pmsys/lexicon.hpp"

namespace pmsys::status {
namespace {

std::string clean(std::string_view text) {
  std::string out;
  for (const auto& token : lexicon::tokenize(text).tokens) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::string_view to_string(SystemStatus s) {
  switch (s) {
    case SystemStatus::Idle: return "idle";
    case SystemStatus::Slow: return "slow";
    case SystemStatus::Down: return "down";
    case SystemStatus::Error: return "error";
  }
  return "unknown";
}

std::optional<SystemStatus> status_from_string(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto s : kAllStatuses) {
    if (to_string(s) == key) return s;
  }
  return std::nullopt;
}

std::string_view to_string(ResponseBand b) {
  switch (b) {
    case ResponseBand::Down: return "down";
    case ResponseBand::Idle: return "idle";
    case ResponseBand::Indeterminate: return "indeterminate";
    case ResponseBand::Slow: return "slow";
  }
  return "unknown";
}

ResponseBand status_from_response(double seconds) {
  if (!std::isfinite(seconds) || seconds < 0) throw ValidationError("response time must be finite and nonnegative");
  if (seconds == 0) return ResponseBand::Down;
  if (seconds <= kInstantLimitS) return ResponseBand::Idle;
  if (seconds <= kAttentionLimitS) return ResponseBand::Indeterminate;
  return ResponseBand::Slow;
}

KeywordRuleSet::KeywordRuleSet(std::map<SystemStatus, std::vector<std::string>> phrases) {
  for (auto s : kAllStatuses) {
    auto it = phrases.find(s);
    if (it == phrases.end() || it->second.empty()) {
      throw ValidationError("keyword rules need at least one phrase for '" + std::string(to_string(s)) + "'");
    }
    std::vector<std::string> cleaned;
    for (const auto& p : it->second) {
      auto c = clean(p);
      if (c.empty()) throw ValidationError("empty keyword phrase for '" + std::string(to_string(s)) + "'");
      cleaned.push_back(std::move(c));
    }
    phrases_[s] = std::move(cleaned);
  }
}

KeywordRuleSet KeywordRuleSet::defaults() {
  return KeywordRuleSet({
      {SystemStatus::Idle, {"working fine", "thanks"}},
      {SystemStatus::Error, {"error", "ftp", "sql", "code"}},
      {SystemStatus::Down, {"down", "not working", "cannot access"}},
      {SystemStatus::Slow, {"cannot upload", "slow", "upload"}},
  });
}

KeywordRuleSet parse_rules(std::istream& in) {
  std::map<SystemStatus, std::vector<std::string>> phrases;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected '<status>: phrase, phrase'");
    const auto status = status_from_string(trim(line.substr(0, colon)));
    if (!status) throw ParseError(line_no, "unknown status '" + trim(line.substr(0, colon)) + "'");
    auto rest = line.substr(colon + 1);
    while (true) {
      const auto comma = rest.find(',');
      const auto phrase = trim(rest.substr(0, comma));
      if (phrase.empty()) throw ParseError(line_no, "empty phrase");
      phrases[*status].push_back(phrase);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  return KeywordRuleSet(std::move(phrases));
}

KeywordRuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open keyword rules '" + path.string() + "'");
  return parse_rules(in);
}

std::vector<KeywordHit> keyword_hits(std::string_view text, const KeywordRuleSet& rules) {
  const auto cleaned = clean(text);
  std::vector<KeywordHit> hits;
  for (const auto& [status, phrases] : rules.phrases()) {
    for (const auto& phrase : phrases) {
      if (cleaned.find(phrase) != std::string::npos) hits.push_back({status, phrase});
    }
  }
  return hits;
}

std::set<SystemStatus> match_keywords(std::string_view text, const KeywordRuleSet& rules) {
  std::set<SystemStatus> out;
  for (const auto& hit : keyword_hits(text, rules)) out.insert(hit.status);
  return out;
}

StatusEvent classify_event(const std::vector<Post>& posts, const std::vector<ResponseSample>& samples,
                           const KeywordRuleSet& rules, Timestamp start, Timestamp end) {
  if (posts.empty() && samples.empty()) throw ValidationError("cannot classify an empty window");
  if (!(start < end)) throw ValidationError("window start must precede its end");

  StatusEvent event;
  event.start = start;
  event.end = end;
  auto& ev = event.evidence;

  for (const auto& post : posts) {
    auto hits = keyword_hits(post.text, rules);
    std::set<SystemStatus> statuses;
    for (const auto& h : hits) statuses.insert(h.status);
    for (auto s : statuses) ++ev.keyword_posts[s];
    ev.hits.insert(ev.hits.end(), hits.begin(), hits.end());
  }

  std::vector<double> responses;
  for (const auto& s : samples) {
    if (!std::isfinite(s.avg_response_s) || s.avg_response_s < 0) {
      throw ValidationError("response samples must be finite and nonnegative");
    }
    responses.push_back(s.avg_response_s);
  }
  ev.sample_count = responses.size();
  if (!responses.empty()) {
    ev.median_response_s = median(responses);
    ev.min_response_s = *std::min_element(responses.begin(), responses.end());
  }

  const bool error_keyword = ev.keyword_posts.count(SystemStatus::Error) != 0;
  if (ev.min_response_s && *ev.min_response_s == 0) {
    event.status = SystemStatus::Down;
    ev.rule = "zero-response";
  } else if (ev.median_response_s && *ev.median_response_s > kAttentionLimitS) {
    event.status = SystemStatus::Slow;
    ev.rule = "median-above-10s";
  } else if (error_keyword && ev.median_response_s && *ev.median_response_s > kInstantLimitS) {
    event.status = SystemStatus::Error;
    ev.rule = "error-keyword-above-0.1s";
  } else if (ev.median_response_s && *ev.median_response_s <= kInstantLimitS) {
    event.status = SystemStatus::Idle;
    ev.rule = "median-at-most-0.1s";
  } else {
    std::optional<SystemStatus> best;
    std::size_t best_count = 0;
    bool tied = false;
    for (const auto& [s, count] : ev.keyword_posts) {
      if (count > best_count) {
        best = s;
        best_count = count;
        tied = false;
      } else if (count == best_count) {
        tied = true;
      }
    }
    if (best && !tied) {
      event.status = best;
      ev.rule = "keyword-plurality";
    } else {
      ev.rule = "indeterminate";
    }
  }
  return event;
}

std::vector<StatusEvent> label_status(const std::vector<Post>& posts, const std::vector<ResponseSample>& samples,
                                      const KeywordRuleSet& rules, std::chrono::minutes window) {
  if (window.count() <= 0) throw ValidationError("window length must be positive");
  const auto width = std::chrono::duration_cast<std::chrono::seconds>(window);
  auto bucket_of = [&](Timestamp ts) {
    const auto since = ts.time_since_epoch();
    auto idx = since / width;
    if (since % width < std::chrono::seconds::zero()) --idx;
    return idx;
  };

  std::map<long long, std::vector<std::size_t>> post_buckets;
  for (std::size_t i = 0; i < posts.size(); ++i) post_buckets[bucket_of(posts[i].timestamp)].push_back(i);
  std::map<long long, std::vector<ResponseSample>> sample_buckets;
  for (const auto& s : samples) sample_buckets[bucket_of(s.timestamp)].push_back(s);

  std::vector<StatusEvent> events;
  for (const auto& [bucket, indices] : post_buckets) {
    std::vector<Post> window_posts;
    for (auto i : indices) window_posts.push_back(posts[i]);
    const auto sit = sample_buckets.find(bucket);
    const std::vector<ResponseSample> no_samples;
    const Timestamp start{width * bucket};
    auto event = classify_event(window_posts, sit == sample_buckets.end() ? no_samples : sit->second, rules, start,
                                start + width);
    event.post_indices = indices;
    events.push_back(std::move(event));
  }
  return events;
}

}  // namespace pmsys::status
