#include "pmsys/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "pmsys/csv.hpp"
#include "pmsys/emotions.hpp"
#include "pmsys/error.hpp"
#include "pmsys/time_util.hpp"

namespace pmsys::ingest {
namespace {

class Fields {
 public:
  Fields(const std::map<std::string, std::size_t>& index, const std::vector<std::string>& values)
      : index_(index), values_(values) {}

  const std::string& get(const std::string& column) const { return values_.at(index_.at(column)); }
  bool has(const std::string& column) const { return index_.count(column) != 0; }
  // JSON objects may leave optional keys out.
  std::string get_or_empty(const std::string& column) const { return has(column) ? get(column) : std::string(); }

 private:
  const std::map<std::string, std::size_t>& index_;
  const std::vector<std::string>& values_;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& raw, const std::string& column) {
  const auto text = trim(raw);
  double value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ValidationError("column '" + column + "': invalid number '" + raw + "'");
  }
  return value;
}

int parse_int(const std::string& raw, const std::string& column) {
  const auto text = trim(raw);
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ValidationError("column '" + column + "': invalid integer '" + raw + "'");
  }
  return value;
}

std::optional<std::string> optional_text(const std::string& raw) {
  auto t = trim(raw);
  if (t.empty()) return std::nullopt;
  return t;
}

std::optional<Timestamp> optional_timestamp(const std::string& raw) {
  const auto t = trim(raw);
  if (t.empty()) return std::nullopt;
  return parse_timestamp(t);
}

std::string now_utc() {
  return format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

template <typename Row>
void finish(Table<Row>& table, const std::filesystem::path& path) {
  table.provenance.source = path.string();
  table.provenance.rows = table.rows.size();
  table.provenance.skipped = table.errors.size();
  table.provenance.loaded_at = now_utc();
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

template <typename Row, typename Parse>
Table<Row> load_csv(const std::filesystem::path& path, const std::vector<std::string>& required, Parse&& parse) {
  auto in = open(path);
  const auto records = csv::read(in);
  if (records.empty()) throw ValidationError("'" + path.string() + "' has no header row");
  std::map<std::string, std::size_t> index;
  const auto& header = records.front();
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    if (!index.emplace(trim(header.fields[i]), i).second) {
      throw ValidationError("'" + path.string() + "': duplicate column '" + header.fields[i] + "'");
    }
  }
  for (const auto& col : required) {
    if (!index.count(col)) throw ValidationError("'" + path.string() + "': header lacks column '" + col + "'");
  }

  Table<Row> table;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.fields.size()) {
      table.errors.push_back({rec.line, "expected " + std::to_string(header.fields.size()) + " fields, got " +
                                            std::to_string(rec.fields.size())});
      continue;
    }
    try {
      table.rows.push_back(parse(Fields(index, rec.fields)));
    } catch (const ValidationError& e) {
      table.errors.push_back({rec.line, e.what()});
    }
  }
  finish(table, path);
  return table;
}

template <typename Row, typename Parse>
Table<Row> load_jsonl(const std::filesystem::path& path, Parse&& parse) {
  auto in = open(path);
  Table<Row> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw ValidationError("line is not a JSON object");
      std::map<std::string, std::size_t> index;
      std::vector<std::string> values;
      for (const auto& [key, value] : j.items()) {
        index[key] = values.size();
        values.push_back(value.is_string() ? value.template get<std::string>() : value.is_null() ? "" : value.dump());
      }
      table.rows.push_back(parse(Fields(index, values)));
    } catch (const nlohmann::json::exception& e) {
      table.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const std::out_of_range&) {
      table.errors.push_back({line_no, "missing required key"});
    } catch (const ValidationError& e) {
      table.errors.push_back({line_no, e.what()});
    }
  }
  finish(table, path);
  return table;
}

bool is_jsonl(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".ndjson";
}

status::Post parse_post(const Fields& f) {
  status::Post p;
  p.timestamp = parse_timestamp(f.get("timestamp"));
  p.user_ref = trim(f.get("user_ref"));
  p.platform = trim(f.get("platform"));
  p.text = f.get("text");
  return p;
}

matching::SocialProfile parse_profile(const Fields& f) {
  matching::SocialProfile p;
  p.social_id = trim(f.get("social_id"));
  if (p.social_id.empty()) throw ValidationError("empty social_id");
  p.display_name = trim(f.get("display_name"));
  p.gender = optional_text(f.get_or_empty("gender"));
  p.city = optional_text(f.get_or_empty("city"));
  p.university = optional_text(f.get_or_empty("university"));
  return p;
}

void write_header(std::ostream& out, const std::vector<std::string>& columns) { csv::write_row(out, columns); }

std::string opt(const std::optional<std::string>& v) { return v.value_or(""); }
std::string opt(const std::optional<Timestamp>& v) { return v ? format_timestamp(*v) : std::string(); }

}  // namespace

std::string format_number(double value) { return fmt::format("{}", value); }

std::string_view to_string(TableKind kind) {
  switch (kind) {
    case TableKind::Posts: return "posts";
    case TableKind::Responses: return "responses";
    case TableKind::Users: return "users";
    case TableKind::Profiles: return "profiles";
    case TableKind::Timelines: return "timelines";
    case TableKind::Questionnaire: return "questionnaire";
    case TableKind::Traits: return "traits";
    case TableKind::Features: return "features";
  }
  return "unknown";
}

std::optional<TableKind> table_kind_from_string(std::string_view name) {
  for (auto k : {TableKind::Posts, TableKind::Responses, TableKind::Users, TableKind::Profiles, TableKind::Timelines,
                 TableKind::Questionnaire, TableKind::Traits, TableKind::Features}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

Table<status::Post> load_posts(const std::filesystem::path& path) {
  if (is_jsonl(path)) return load_jsonl<status::Post>(path, parse_post);
  return load_csv<status::Post>(path, {"timestamp", "user_ref", "platform", "text"}, parse_post);
}

Table<status::ResponseSample> load_responses(const std::filesystem::path& path) {
  return load_csv<status::ResponseSample>(path, {"timestamp", "avg_response_s"}, [](const Fields& f) {
    status::ResponseSample s;
    s.timestamp = parse_timestamp(f.get("timestamp"));
    s.avg_response_s = parse_double(f.get("avg_response_s"), "avg_response_s");
    if (s.avg_response_s < 0) throw ValidationError("negative response time");
    return s;
  });
}

Table<matching::UserRecord> load_users(const std::filesystem::path& path) {
  std::set<int> ids;
  std::set<std::string> usernames;
  return load_csv<matching::UserRecord>(
      path, {"user_id", "username", "name", "gender", "city", "university", "age"}, [&](const Fields& f) {
        matching::UserRecord u;
        u.user_id = parse_int(f.get("user_id"), "user_id");
        u.username = trim(f.get("username"));
        if (u.username.size() < matching::kMinUsernameLength) throw ValidationError("username too short");
        u.name = trim(f.get("name"));
        u.gender = optional_text(f.get("gender"));
        u.city = optional_text(f.get("city"));
        u.university = optional_text(f.get("university"));
        if (const auto age = optional_text(f.get("age"))) {
          u.age = parse_double(*age, "age");
          if (!(*u.age > 0)) throw ValidationError("age must be positive");
        }
        std::string lowered = u.username;
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ids.count(u.user_id)) throw ValidationError("duplicate user_id " + std::to_string(u.user_id));
        if (usernames.count(lowered)) throw ValidationError("duplicate username '" + u.username + "'");
        ids.insert(u.user_id);
        usernames.insert(lowered);
        return u;
      });
}

Table<matching::SocialProfile> load_profiles(const std::filesystem::path& path) {
  if (is_jsonl(path)) return load_jsonl<matching::SocialProfile>(path, parse_profile);
  return load_csv<matching::SocialProfile>(path, {"social_id", "display_name", "gender", "city", "university"},
                                           parse_profile);
}

Table<timeline::UserTimeline> load_timelines(const std::filesystem::path& path) {
  return load_csv<timeline::UserTimeline>(path, {"user_id", "t0", "t1", "t2", "t3"}, [](const Fields& f) {
    timeline::UserTimeline t;
    t.user_id = parse_int(f.get("user_id"), "user_id");
    t.t0_registration = optional_timestamp(f.get("t0"));
    t.t1_first_action = optional_timestamp(f.get("t1"));
    t.t2_last_action = optional_timestamp(f.get("t2"));
    t.t3_submission = optional_timestamp(f.get("t3"));
    const std::array<std::optional<Timestamp>, 4> ms = {t.t0_registration, t.t1_first_action, t.t2_last_action,
                                                        t.t3_submission};
    std::optional<Timestamp> previous;
    for (const auto& m : ms) {
      if (!m) continue;
      if (previous && *m < *previous) throw ValidationError("milestones out of order");
      previous = m;
    }
    return t;
  });
}

Table<QuestionnaireResponse> load_questionnaire_responses(const std::filesystem::path& path) {
  auto in = open(path);
  const auto records = csv::read(in);
  if (records.empty()) throw ValidationError("'" + path.string() + "' has no header row");
  const auto& header = records.front().fields;
  if (header.empty() || trim(header[0]) != "user_id" || header.size() < 2) {
    throw ValidationError("'" + path.string() + "': header must be user_id,item_1,...,item_n");
  }
  Table<QuestionnaireResponse> table;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    try {
      if (rec.fields.size() != header.size()) throw ValidationError("wrong number of fields");
      QuestionnaireResponse q;
      q.user_id = parse_int(rec.fields[0], "user_id");
      for (std::size_t i = 1; i < rec.fields.size(); ++i) q.responses.push_back(parse_int(rec.fields[i], header[i]));
      table.rows.push_back(std::move(q));
    } catch (const ValidationError& e) {
      table.errors.push_back({rec.line, e.what()});
    }
  }
  finish(table, path);
  return table;
}

Table<TraitRecord> load_traits(const std::filesystem::path& path) {
  std::vector<std::string> required = {"user_id"};
  for (auto t : traits::kAllTraits) required.emplace_back(traits::to_string(t));
  return load_csv<TraitRecord>(path, required, [](const Fields& f) {
    TraitRecord rec;
    rec.user_id = parse_int(f.get("user_id"), "user_id");
    for (auto t : traits::kAllTraits) {
      const std::string name(traits::to_string(t));
      const double v = parse_double(f.get(name), name);
      if (v < 0 || v > 1) throw ValidationError("trait '" + name + "' must lie in [0,1]");
      rec.traits[t] = v;
    }
    return rec;
  });
}

Table<model::FeatureRow> load_features(const std::filesystem::path& path, model::FeatureSchema& schema_out) {
  auto in = open(path);
  const auto records = csv::read(in);
  if (records.empty()) throw ValidationError("'" + path.string() + "' has no header row");
  const auto& header = records.front().fields;
  model::FeatureSchema schema;
  std::optional<std::size_t> label_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    if (name == "label") {
      if (label_col) throw ValidationError("'" + path.string() + "': duplicate label column");
      label_col = i;
    } else {
      if (name.empty()) throw ValidationError("'" + path.string() + "': empty column name");
      if (schema.index_of(name)) throw ValidationError("'" + path.string() + "': duplicate column '" + name + "'");
      schema.names.push_back(name);
    }
  }
  if (schema.names.empty()) throw ValidationError("'" + path.string() + "': no feature columns");

  Table<model::FeatureRow> table;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    try {
      if (rec.fields.size() != header.size()) throw ValidationError("wrong number of fields");
      model::FeatureRow row;
      for (std::size_t i = 0; i < rec.fields.size(); ++i) {
        if (label_col && i == *label_col) {
          row.label = optional_text(rec.fields[i]);
        } else {
          row.values.push_back(parse_double(rec.fields[i], trim(header[i])));
        }
      }
      model::validate_row(schema, row);
      table.rows.push_back(std::move(row));
    } catch (const ValidationError& e) {
      table.errors.push_back({rec.line, e.what()});
    }
  }
  finish(table, path);
  schema_out = std::move(schema);
  return table;
}

timeline::CallWindow load_call_window(const std::filesystem::path& path) {
  auto table = load_csv<timeline::CallWindow>(path, {"call_open", "call_close", "extension_close"}, [](const Fields& f) {
    timeline::CallWindow call{parse_timestamp(f.get("call_open")), parse_timestamp(f.get("call_close")),
                              parse_timestamp(f.get("extension_close"))};
    timeline::validate(call);
    return call;
  });
  if (!table.errors.empty()) {
    throw ValidationError("'" + path.string() + "' line " + std::to_string(table.errors.front().line) + ": " +
                          table.errors.front().message);
  }
  if (table.rows.size() != 1) throw ValidationError("'" + path.string() + "' must hold exactly one call window");
  return table.rows.front();
}

AnyTable load_table(TableKind kind, const std::filesystem::path& path) {
  switch (kind) {
    case TableKind::Posts: return load_posts(path);
    case TableKind::Responses: return load_responses(path);
    case TableKind::Users: return load_users(path);
    case TableKind::Profiles: return load_profiles(path);
    case TableKind::Timelines: return load_timelines(path);
    case TableKind::Questionnaire: return load_questionnaire_responses(path);
    case TableKind::Traits: return load_traits(path);
    case TableKind::Features: {
      model::FeatureSchema schema;
      return load_features(path, schema);
    }
  }
  throw ValidationError("unknown table kind");
}

void write_posts(std::ostream& out, const std::vector<status::Post>& rows) {
  write_header(out, {"timestamp", "user_ref", "platform", "text"});
  for (const auto& p : rows) {
    const std::vector<std::string> f = {format_timestamp(p.timestamp), p.user_ref, p.platform, p.text};
    csv::write_row(out, f);
  }
}

void write_responses(std::ostream& out, const std::vector<status::ResponseSample>& rows) {
  write_header(out, {"timestamp", "avg_response_s"});
  for (const auto& s : rows) {
    const std::vector<std::string> f = {format_timestamp(s.timestamp), format_number(s.avg_response_s)};
    csv::write_row(out, f);
  }
}

void write_users(std::ostream& out, const std::vector<matching::UserRecord>& rows) {
  write_header(out, {"user_id", "username", "name", "gender", "city", "university", "age"});
  for (const auto& u : rows) {
    const std::vector<std::string> f = {std::to_string(u.user_id), u.username, u.name, opt(u.gender),
                                        opt(u.city), opt(u.university), u.age ? format_number(*u.age) : ""};
    csv::write_row(out, f);
  }
}

void write_profiles(std::ostream& out, const std::vector<matching::SocialProfile>& rows) {
  write_header(out, {"social_id", "display_name", "gender", "city", "university"});
  for (const auto& p : rows) {
    const std::vector<std::string> f = {p.social_id, p.display_name, opt(p.gender), opt(p.city), opt(p.university)};
    csv::write_row(out, f);
  }
}

void write_timelines(std::ostream& out, const std::vector<timeline::UserTimeline>& rows) {
  write_header(out, {"user_id", "t0", "t1", "t2", "t3"});
  for (const auto& t : rows) {
    const std::vector<std::string> f = {std::to_string(t.user_id), opt(t.t0_registration), opt(t.t1_first_action),
                                        opt(t.t2_last_action), opt(t.t3_submission)};
    csv::write_row(out, f);
  }
}

void write_traits(std::ostream& out, const std::vector<TraitRecord>& rows) {
  std::vector<std::string> header = {"user_id"};
  for (auto t : traits::kAllTraits) header.emplace_back(traits::to_string(t));
  write_header(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> f = {std::to_string(r.user_id)};
    for (auto t : traits::kAllTraits) f.push_back(format_number(r.traits[t]));
    csv::write_row(out, f);
  }
}

void write_features(std::ostream& out, const model::FeatureSchema& schema, const std::vector<model::FeatureRow>& rows) {
  auto header = schema.names;
  header.emplace_back("label");
  write_header(out, header);
  for (const auto& row : rows) {
    std::vector<std::string> f;
    for (double v : row.values) f.push_back(format_number(v));
    f.push_back(row.label.value_or(""));
    csv::write_row(out, f);
  }
}

bool is_system_platform(const std::string& platform) {
  return platform == "helpdesk" || platform == "system";
}

FeatureExport export_features(const FeatureSources& sources, const model::FeatureSchema& schema) {
  enum class Source { Emotion, Trait, Age };
  struct Column {
    Source source;
    emotions::Emotion emotion = emotions::Emotion::Anger;
    traits::Trait trait = traits::Trait::Openness;
  };
  std::vector<Column> columns;
  for (const auto& name : schema.names) {
    if (const auto e = emotions::emotion_from_string(name)) {
      columns.push_back({Source::Emotion, *e});
    } else if (const auto t = traits::trait_from_string(name)) {
      columns.push_back({Source::Trait, {}, *t});
    } else if (name == "age") {
      columns.push_back({Source::Age});
    } else {
      throw ValidationError("feature '" + name + "' has no upstream source");
    }
  }
  emotions::check_emotion_lexicon(sources.emotion_lexicon);

  FeatureExport result;
  result.table.schema = schema;

  auto resolve = [&](const status::Post& post) -> std::optional<int> {
    if (is_system_platform(post.platform)) {
      int id = 0;
      const auto* end = post.user_ref.data() + post.user_ref.size();
      const auto [ptr, ec] = std::from_chars(post.user_ref.data(), end, id);
      if (ec == std::errc() && ptr == end && sources.users.by_id(id)) return id;
      return std::nullopt;
    }
    const auto it = sources.social_links.find(post.user_ref);
    if (it == sources.social_links.end()) return std::nullopt;
    return it->second;
  };

  std::set<std::size_t> unlinked;
  for (const auto& event : sources.events) {
    if (!event.status) {
      ++result.unresolved_events;
      continue;
    }
    std::map<int, std::vector<std::string>> texts_by_user;
    for (auto idx : event.post_indices) {
      if (idx >= sources.posts.size()) throw ValidationError("event references a missing post");
      const auto& post = sources.posts[idx];
      if (const auto user = resolve(post)) {
        texts_by_user[*user].push_back(post.text);
      } else {
        unlinked.insert(idx);
      }
    }
    for (const auto& [user_id, texts] : texts_by_user) {
      const auto* user = sources.users.by_id(user_id);
      const auto traits_it = sources.traits.find(user_id);
      std::string missing;
      if (!user) missing = "user record";
      for (const auto& c : columns) {
        if (c.source == Source::Age && (!user || !user->age)) missing = "age";
        if (c.source == Source::Trait && traits_it == sources.traits.end()) missing = "traits";
      }
      if (!missing.empty()) {
        ++result.excluded;
        result.exclusions.push_back("user " + std::to_string(user_id) + " @ " + format_timestamp(event.start) +
                                    ": missing " + missing);
        continue;
      }
      const auto affect = emotions::batch_emotions({{std::to_string(user_id), texts}}, sources.emotion_lexicon).front();
      model::FeatureRow row;
      for (const auto& c : columns) {
        switch (c.source) {
          case Source::Emotion: row.values.push_back(affect[c.emotion]); break;
          case Source::Trait: row.values.push_back(traits_it->second[c.trait]); break;
          case Source::Age: row.values.push_back(*user->age); break;
        }
      }
      row.label = std::string(status::to_string(*event.status));
      result.table.rows.push_back(std::move(row));
    }
  }
  result.unlinked_posts = unlinked.size();
  if (result.table.rows.empty()) throw ValidationError("feature join produced no rows");
  return result;
}

}  // namespace pmsys::ingest
