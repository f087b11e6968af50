#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pmsys::matching {

struct UserRecord {
  int user_id = 0;
  std::string username;
  std::string name;
  std::optional<std::string> gender;
  std::optional<std::string> city;
  std::optional<std::string> university;
  std::optional<double> age;
};

struct SocialProfile {
  std::string social_id;
  std::string display_name;
  std::optional<std::string> gender;
  std::optional<std::string> city;
  std::optional<std::string> university;
};

struct MatchConfig {
  double name_threshold = 0.5;  // Jaccard needed to confirm a username hit
  double weight_name = 0.4;
  double weight_gender = 0.2;
  double weight_city = 0.2;
  double weight_university = 0.2;
  double match_threshold = 0.7;
  double candidate_floor = 0.4;  // lowest top score that still yields a review list
  std::size_t candidates_k = 5;
};

/// Minimum username length accepted by the system.
inline constexpr std::size_t kMinUsernameLength = 3;

/// Index of system users by lowercase username. Validates unique ids and usernames.
class UserIndex {
 public:
  explicit UserIndex(std::vector<UserRecord> users);

  const std::vector<UserRecord>& users() const noexcept { return users_; }
  const UserRecord* by_username(std::string_view username) const;
  const UserRecord* by_id(int user_id) const;

 private:
  std::vector<UserRecord> users_;
  std::map<std::string, std::size_t> by_username_;
  std::map<int, std::size_t> by_id_;
};

/// Every token following "username" (or the bigram "user name"); a token of
/// length <= 3 is skipped in favour of the one after it. Tokens of length <= 3
/// are never returned.
std::vector<std::string> usernames_in_post(std::string_view message);

/// First entry of usernames_in_post, if any.
std::optional<std::string> find_username_in_post(std::string_view message);

/// Token-set Jaccard similarity of two names (tokenized, lowercase). Empty vs empty -> 0.
double name_similarity(std::string_view a, std::string_view b);

std::optional<int> match_username(std::string_view token, std::string_view display_name, const UserIndex& users,
                                  const MatchConfig& config = {});

/// Weighted agreement of name Jaccard, gender, city and university. A field
/// missing on either side contributes nothing.
double basic_info_score(const SocialProfile& profile, const UserRecord& user, const MatchConfig& config = {});

/// Unique top score at or above match_threshold -> that user; ties or lower -> none.
std::optional<int> match_basic_info(const SocialProfile& profile, const UserIndex& users,
                                    const MatchConfig& config = {});

struct Candidate {
  int user_id = 0;
  double score = 0;
};

/// Top-k by score descending, ties by user_id ascending. k must be >= 1.
std::vector<Candidate> propose_candidates(const SocialProfile& profile, const UserIndex& users, std::size_t k,
                                          const MatchConfig& config = {});

enum class MatchMethod { UsernameInPost, BasicInfo };

std::string_view to_string(MatchMethod m);

struct Matched {
  int user_id = 0;
  MatchMethod method = MatchMethod::UsernameInPost;
};
struct Candidates {
  std::vector<Candidate> ranked;
};
struct Unmatched {};

using MatchOutcome = std::variant<Matched, Candidates, Unmatched>;

struct ProfileResult {
  std::string social_id;
  MatchOutcome outcome;
};

struct StageSummary {
  std::size_t count = 0;
  double percent = 0;
};

struct MatchReport {
  std::vector<ProfileResult> results;  // one per profile, input order
  StageSummary username_in_post;
  StageSummary basic_info;
  StageSummary candidates;
  StageSummary unmatched;
};

struct SocialPost {
  std::string social_id;
  std::string text;
};

/// Stages in order: username found in one of the profile's posts, basic-info
/// match, ranked candidates for manual review, unmatched. Each profile is
/// resolved at exactly one stage.
MatchReport run_matching(const std::vector<SocialPost>& posts, const std::vector<SocialProfile>& profiles,
                         const UserIndex& users, const MatchConfig& config = {});

}  // namespace pmsys::matching
