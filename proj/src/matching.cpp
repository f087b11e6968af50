#include "pmsys/matching.hpp"

#include <algorithm>
#include <set>

#include "pmsys/error.hpp"
#include "pmsys/lexicon.hpp"

namespace pmsys::matching {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string normalized_field(const std::optional<std::string>& value) {
  if (!value) return {};
  std::string out;
  for (const auto& t : lexicon::tokenize(*value).tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool fields_agree(const std::optional<std::string>& a, const std::optional<std::string>& b) {
  const auto na = normalized_field(a);
  return !na.empty() && na == normalized_field(b);
}

}  // namespace

UserIndex::UserIndex(std::vector<UserRecord> users) : users_(std::move(users)) {
  for (std::size_t i = 0; i < users_.size(); ++i) {
    const auto& u = users_[i];
    if (u.username.size() < kMinUsernameLength) {
      throw ValidationError("username '" + u.username + "' is shorter than " + std::to_string(kMinUsernameLength));
    }
    if (!by_id_.emplace(u.user_id, i).second) {
      throw ValidationError("duplicate user_id " + std::to_string(u.user_id));
    }
    if (!by_username_.emplace(lower(u.username), i).second) {
      throw ValidationError("duplicate username '" + u.username + "'");
    }
  }
}

const UserRecord* UserIndex::by_username(std::string_view username) const {
  const auto it = by_username_.find(lower(username));
  return it == by_username_.end() ? nullptr : &users_[it->second];
}

const UserRecord* UserIndex::by_id(int user_id) const {
  const auto it = by_id_.find(user_id);
  return it == by_id_.end() ? nullptr : &users_[it->second];
}

std::vector<std::string> usernames_in_post(std::string_view message) {
  const auto tokens = lexicon::tokenize(message).tokens;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool marker = tokens[i] == "username" || (tokens[i] == "name" && i > 0 && tokens[i - 1] == "user");
    if (!marker || i + 1 >= tokens.size()) continue;
    std::size_t pick = i + 1;
    if (tokens[pick].size() <= kMinUsernameLength) ++pick;
    if (pick < tokens.size() && tokens[pick].size() > kMinUsernameLength) out.push_back(tokens[pick]);
  }
  return out;
}

std::optional<std::string> find_username_in_post(std::string_view message) {
  auto all = usernames_in_post(message);
  if (all.empty()) return std::nullopt;
  return all.front();
}

double name_similarity(std::string_view a, std::string_view b) {
  const auto ta = lexicon::tokenize(a).tokens;
  const auto tb = lexicon::tokenize(b).tokens;
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::optional<int> match_username(std::string_view token, std::string_view display_name, const UserIndex& users,
                                  const MatchConfig& config) {
  const auto* user = users.by_username(token);
  if (!user) return std::nullopt;
  if (name_similarity(display_name, user->name) < config.name_threshold) return std::nullopt;
  return user->user_id;
}

double basic_info_score(const SocialProfile& profile, const UserRecord& user, const MatchConfig& config) {
  double score = config.weight_name * name_similarity(profile.display_name, user.name);
  if (fields_agree(profile.gender, user.gender)) score += config.weight_gender;
  if (fields_agree(profile.city, user.city)) score += config.weight_city;
  if (fields_agree(profile.university, user.university)) score += config.weight_university;
  return score;
}

std::vector<Candidate> propose_candidates(const SocialProfile& profile, const UserIndex& users, std::size_t k,
                                          const MatchConfig& config) {
  if (k == 0) throw ValidationError("candidate count k must be at least 1");
  std::vector<Candidate> all;
  all.reserve(users.users().size());
  for (const auto& u : users.users()) all.push_back({u.user_id, basic_info_score(profile, u, config)});
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.user_id < b.user_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::optional<int> match_basic_info(const SocialProfile& profile, const UserIndex& users, const MatchConfig& config) {
  const auto top = propose_candidates(profile, users, 2, config);
  if (top.empty() || top[0].score < config.match_threshold) return std::nullopt;
  if (top.size() > 1 && top[1].score == top[0].score) return std::nullopt;
  return top[0].user_id;
}

std::string_view to_string(MatchMethod m) {
  return m == MatchMethod::UsernameInPost ? "username_in_post" : "basic_info";
}

MatchReport run_matching(const std::vector<SocialPost>& posts, const std::vector<SocialProfile>& profiles,
                         const UserIndex& users, const MatchConfig& config) {
  std::map<std::string, std::vector<const SocialPost*>> posts_by_profile;
  for (const auto& p : posts) posts_by_profile[p.social_id].push_back(&p);

  std::set<std::string> seen;
  MatchReport report;
  for (const auto& profile : profiles) {
    if (!seen.insert(profile.social_id).second) {
      throw ValidationError("duplicate social_id '" + profile.social_id + "'");
    }
    ProfileResult result{profile.social_id, Unmatched{}};

    std::optional<int> hit;
    if (const auto it = posts_by_profile.find(profile.social_id); it != posts_by_profile.end()) {
      for (const auto* post : it->second) {
        for (const auto& token : usernames_in_post(post->text)) {
          hit = match_username(token, profile.display_name, users, config);
          if (hit) break;
        }
        if (hit) break;
      }
    }

    if (hit) {
      result.outcome = Matched{*hit, MatchMethod::UsernameInPost};
      ++report.username_in_post.count;
    } else if (const auto basic = match_basic_info(profile, users, config)) {
      result.outcome = Matched{*basic, MatchMethod::BasicInfo};
      ++report.basic_info.count;
    } else {
      auto ranked = propose_candidates(profile, users, config.candidates_k, config);
      if (!ranked.empty() && ranked.front().score >= config.candidate_floor) {
        result.outcome = Candidates{std::move(ranked)};
        ++report.candidates.count;
      } else {
        ++report.unmatched.count;
      }
    }
    report.results.push_back(std::move(result));
  }

  const double total = static_cast<double>(profiles.size());
  for (auto* stage : {&report.username_in_post, &report.basic_info, &report.candidates, &report.unmatched}) {
    stage->percent = total > 0 ? 100.0 * static_cast<double>(stage->count) / total : 0.0;
  }
  return report;
}

}  // namespace pmsys::matching
