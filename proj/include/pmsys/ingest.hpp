#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "pmsys/lexicon.hpp"
#include "pmsys/matching.hpp"
#include "pmsys/model.hpp"
#include "pmsys/status.hpp"
#include "pmsys/timeline.hpp"
#include "pmsys/traits.hpp"

namespace pmsys::ingest {

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct Provenance {
  std::string source;
  std::size_t rows = 0;
  std::size_t skipped = 0;
  std::string loaded_at;  // UTC, canonical timestamp form
};

/// Rows that passed validation plus one error per skipped row.
template <typename Row>
struct Table {
  std::vector<Row> rows;
  std::vector<RowError> errors;
  Provenance provenance;
};

struct QuestionnaireResponse {
  int user_id = 0;
  std::vector<int> responses;
};

struct TraitRecord {
  int user_id = 0;
  traits::TraitVector traits;
};

enum class TableKind { Posts, Responses, Users, Profiles, Timelines, Questionnaire, Traits, Features };

std::string_view to_string(TableKind kind);
std::optional<TableKind> table_kind_from_string(std::string_view name);

// Each loader needs a header naming its required columns (any order, extra
// columns ignored). A missing file or bad header throws ValidationError; bad
// rows are skipped and recorded.

/// CSV: timestamp,user_ref,platform,text; ".jsonl" files hold one object per line with the same keys.
Table<status::Post> load_posts(const std::filesystem::path& path);
/// CSV: timestamp,avg_response_s
Table<status::ResponseSample> load_responses(const std::filesystem::path& path);
/// CSV: user_id,username,name,gender,city,university,age
Table<matching::UserRecord> load_users(const std::filesystem::path& path);
/// CSV or JSONL: social_id,display_name,gender,city,university
Table<matching::SocialProfile> load_profiles(const std::filesystem::path& path);
/// CSV: user_id,t0,t1,t2,t3 (empty cells allowed)
Table<timeline::UserTimeline> load_timelines(const std::filesystem::path& path);
/// CSV: user_id,item_1..item_n
Table<QuestionnaireResponse> load_questionnaire_responses(const std::filesystem::path& path);
/// CSV: user_id,openness,conscientiousness,extraversion,agreeableness,neuroticism
Table<TraitRecord> load_traits(const std::filesystem::path& path);
/// CSV: schema columns followed by an optional "label" column.
Table<model::FeatureRow> load_features(const std::filesystem::path& path, model::FeatureSchema& schema_out);
/// CSV with one row: call_open,call_close,extension_close
timeline::CallWindow load_call_window(const std::filesystem::path& path);

using AnyTable = std::variant<Table<status::Post>, Table<status::ResponseSample>, Table<matching::UserRecord>,
                              Table<matching::SocialProfile>, Table<timeline::UserTimeline>,
                              Table<QuestionnaireResponse>, Table<TraitRecord>, Table<model::FeatureRow>>;

AnyTable load_table(TableKind kind, const std::filesystem::path& path);

// Canonical writers: fixed column order, UTC "YYYY-MM-DD hh:mm:ss" timestamps,
// shortest round-trip decimal numbers.
void write_posts(std::ostream& out, const std::vector<status::Post>& rows);
void write_responses(std::ostream& out, const std::vector<status::ResponseSample>& rows);
void write_users(std::ostream& out, const std::vector<matching::UserRecord>& rows);
void write_profiles(std::ostream& out, const std::vector<matching::SocialProfile>& rows);
void write_timelines(std::ostream& out, const std::vector<timeline::UserTimeline>& rows);
void write_traits(std::ostream& out, const std::vector<TraitRecord>& rows);
void write_features(std::ostream& out, const model::FeatureSchema& schema, const std::vector<model::FeatureRow>& rows);

std::string format_number(double value);

/// Inputs for joining affect, traits and age onto labelled status events.
struct FeatureSources {
  const std::vector<status::Post>& posts;
  const std::vector<status::StatusEvent>& events;
  const std::map<std::string, int>& social_links;  // social_id -> user_id
  const matching::UserIndex& users;
  const std::map<int, traits::TraitVector>& traits;
  const lexicon::Lexicon& emotion_lexicon;
};

struct FeatureExport {
  model::FeatureTable table;
  std::size_t excluded = 0;  // (user, event) pairs missing a feature
  std::vector<std::string> exclusions;
  std::size_t unresolved_events = 0;
  std::size_t unlinked_posts = 0;
};

/// Platforms whose user_ref is already a system user_id.
bool is_system_platform(const std::string& platform);

/// One row per (user, resolved status event) in which the user posted. The
/// user's posts in the window are concatenated and scored once for emotions.
/// Throws ValidationError on an unknown schema feature or an empty join.
FeatureExport export_features(const FeatureSources& sources, const model::FeatureSchema& schema);

}  // namespace pmsys::ingest
