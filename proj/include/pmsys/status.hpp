#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pmsys/time_util.hpp"

namespace pmsys::status {

enum class SystemStatus { Idle, Slow, Down, Error };

inline constexpr std::array<SystemStatus, 4> kAllStatuses = {SystemStatus::Idle, SystemStatus::Slow,
                                                             SystemStatus::Down, SystemStatus::Error};

std::string_view to_string(SystemStatus s);
std::optional<SystemStatus> status_from_string(std::string_view name);

/// Perceptual response-time limits (seconds).
inline constexpr double kInstantLimitS = 0.1;
inline constexpr double kAttentionLimitS = 10.0;

enum class ResponseBand { Down, Idle, Indeterminate, Slow };

std::string_view to_string(ResponseBand b);

/// 0 -> Down; (0, 0.1] -> Idle; (0.1, 10] -> Indeterminate; > 10 -> Slow.
/// Negative or non-finite input throws ValidationError.
ResponseBand status_from_response(double seconds);

struct ResponseSample {
  Timestamp timestamp;
  double avg_response_s = 0;
};

struct Post {
  Timestamp timestamp;
  std::string user_ref;
  std::string platform;
  std::string text;
};

/// Lowercase keyword phrases per status.
class KeywordRuleSet {
 public:
  /// Validates: every status has at least one non-empty phrase.
  explicit KeywordRuleSet(std::map<SystemStatus, std::vector<std::string>> phrases);

  /// Idle: working fine, thanks; Error: error, ftp, sql, code;
  /// Down: down, not working, cannot access; Slow: cannot upload, slow, upload.
  static KeywordRuleSet defaults();

  const std::map<SystemStatus, std::vector<std::string>>& phrases() const noexcept { return phrases_; }

 private:
  std::map<SystemStatus, std::vector<std::string>> phrases_;
};

/// "<status>: phrase, phrase" per line; '#' comments.
KeywordRuleSet parse_rules(std::istream& in);
KeywordRuleSet load_rules(const std::filesystem::path& path);

struct KeywordHit {
  SystemStatus status;
  std::string phrase;
};

/// Substring match of each phrase against the cleaned text (tokens joined by
/// single spaces), both lowercase.
std::vector<KeywordHit> keyword_hits(std::string_view text, const KeywordRuleSet& rules);
std::set<SystemStatus> match_keywords(std::string_view text, const KeywordRuleSet& rules);

struct Evidence {
  std::map<SystemStatus, std::size_t> keyword_posts;  // posts mentioning each status
  std::vector<KeywordHit> hits;
  std::size_t sample_count = 0;
  std::optional<double> median_response_s;
  std::optional<double> min_response_s;
  std::string rule;  // which resolution step decided the status
};

struct StatusEvent {
  Timestamp start;
  Timestamp end;
  std::optional<SystemStatus> status;  // empty when the evidence is indeterminate
  Evidence evidence;
  std::vector<std::size_t> post_indices;  // into the caller's post list
};

/// Resolution order: any zero sample -> Down; median > 10 s -> Slow; Error
/// keyword with median > 0.1 s -> Error; median <= 0.1 s -> Idle; otherwise
/// the status with strictly the most keyword posts, else indeterminate.
/// Both inputs empty -> ValidationError.
StatusEvent classify_event(const std::vector<Post>& posts, const std::vector<ResponseSample>& samples,
                           const KeywordRuleSet& rules, Timestamp start, Timestamp end);

/// Buckets posts into fixed windows aligned to the Unix epoch and classifies
/// every window that holds at least one post. Results are ordered by window start.
std::vector<StatusEvent> label_status(const std::vector<Post>& posts, const std::vector<ResponseSample>& samples,
                                      const KeywordRuleSet& rules, std::chrono::minutes window);

}  // namespace pmsys::status
