#include "pmsys/verify_service.hpp"

#include <algorithm>
#include <cmath>
#include <httplib.h>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "pmsys/error.hpp"
#include "pmsys/ingest.hpp"
#include "pmsys/random.hpp"

namespace pmsys::verify {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

const std::array<std::string, kEventsPerSession> kPrompts = {
    "What is the title of your most recent degree?",
    "Which institution awarded your most recent degree?",
    "In one sentence, why are you applying to this programme?",
    "Which documents are you ready to upload today?",
};

constexpr const char* kDebrief =
    "Thank you. The slow responses, errors and outage you may have seen were simulated for this study; "
    "nothing you entered was lost.";

json emotion_json(const emotions::EmotionVector& v) {
  json j;
  for (auto e : emotions::kAllEmotions) j[std::string(emotions::to_string(e))] = v[e];
  return j;
}

json traits_json(const traits::TraitVector& v) {
  json j;
  for (auto t : traits::kAllTraits) j[std::string(traits::to_string(t))] = v[t];
  return j;
}

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Questionnaire: return "questionnaire";
    case Phase::Simulation: return "simulation";
    case Phase::Complete: return "complete";
  }
  return "unknown";
}

SessionStore::SessionStore(ServiceConfig config) : config_(std::move(config)) {
  traits::validate(config_.questionnaire);
  if (config_.slow_delay <= std::chrono::milliseconds(10000)) {
    throw ValidationError("slow delay must exceed 10 seconds");
  }
  if (config_.down_window.count() < 0) throw ValidationError("down window must be nonnegative");
  for (const auto& name : config_.schema.names) {
    if (!emotions::emotion_from_string(name) && !traits::trait_from_string(name) && name != "age") {
      throw ValidationError("export schema feature '" + name + "' is not collected by the verification service");
    }
  }
  if (config_.forest && !(config_.forest->schema() == config_.schema)) {
    throw ValidationError("loaded model schema differs from the export schema");
  }
  if (config_.journal) {
    if (std::filesystem::exists(*config_.journal)) replay(*config_.journal);
    journal_.open(*config_.journal, std::ios::app);
    if (!journal_) throw ValidationError("cannot open session journal '" + config_.journal->string() + "'");
  }
}

void SessionStore::append(const json& record) {
  if (replaying_ || !journal_.is_open()) return;
  journal_ << record.dump() << '\n';
  journal_.flush();
}

void SessionStore::replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t line_no = 0;
  replaying_ = true;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = json::parse(line);
      const auto op = j.at("op").get<std::string>();
      if (op == "create") {
        const auto id = create_locked(j.at("age").get<double>());
        if (id != j.at("id").get<std::string>()) throw ValidationError("session id mismatch (different seed?)");
      } else if (op == "questionnaire") {
        questionnaire_locked(find(j.at("id")), j.at("responses").get<std::vector<int>>());
      } else if (op == "save") {
        auto& s = find(j.at("id"));
        const auto step = j.at("step").get<std::size_t>();
        if (step >= 1 && step <= kEventsPerSession) ++s.events[step - 1].save_attempts;
      } else if (op == "emotion") {
        std::optional<double> latency;
        if (j.contains("latency_ms") && !j["latency_ms"].is_null()) latency = j["latency_ms"].get<double>();
        emotion_locked(find(j.at("id")), j.at("step").get<std::size_t>(),
                       j.at("sliders").get<std::array<double, 5>>(), latency);
      } else {
        throw ValidationError("unknown journal op '" + op + "'");
      }
    }
  } catch (const std::exception& e) {
    replaying_ = false;
    throw ValidationError(fmt::format("journal '{}' line {}: {}", path.string(), line_no, e.what()));
  }
  replaying_ = false;
}

Session& SessionStore::find(const std::string& id) {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

const Session& SessionStore::find(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

std::string SessionStore::create_session(double age) {
  std::lock_guard lock(mutex_);
  return create_locked(age);
}

std::string SessionStore::create_locked(double age) {
  if (!std::isfinite(age) || !(age > 0)) throw ValidationError("age must be a positive number");
  Session s;
  s.ordinal = order_.size();
  s.id = fmt::format("{:016x}", mix_seed(config_.seed, s.ordinal));
  s.age = age;
  std::vector<status::SystemStatus> script(status::kAllStatuses.begin(), status::kAllStatuses.end());
  Rng rng(mix_seed(config_.seed ^ 0x5E55105E55105EULL, s.ordinal));
  shuffle(script, rng);
  json order = json::array();
  for (std::size_t i = 0; i < kEventsPerSession; ++i) {
    s.events[i].status = script[i];
    s.events[i].prompt = kPrompts[i];
    order.push_back(std::string(status::to_string(script[i])));
  }
  const auto id = s.id;
  sessions_.emplace(id, std::move(s));
  order_.push_back(id);
  append({{"op", "create"}, {"id", id}, {"age", age}, {"order", order}});
  return id;
}

traits::QuestionnaireScore SessionStore::submit_questionnaire(const std::string& id, const std::vector<int>& responses) {
  std::lock_guard lock(mutex_);
  return questionnaire_locked(find(id), responses);
}

traits::QuestionnaireScore SessionStore::questionnaire_locked(Session& s, const std::vector<int>& responses) {
  if (s.phase != Phase::Questionnaire) {
    if (s.traits && s.responses == responses) return *s.traits;
    throw ConflictError("questionnaire already submitted for session '" + s.id + "'");
  }
  const auto score = traits::score_questionnaire(responses, config_.questionnaire);
  s.responses = responses;
  s.traits = score;
  s.phase = Phase::Simulation;
  s.step = 0;
  append({{"op", "questionnaire"}, {"id", s.id}, {"responses", responses}});
  return score;
}

EventDescriptor SessionStore::next_event(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto& s = find(id);
  if (s.phase == Phase::Questionnaire) throw ConflictError("questionnaire not yet submitted");
  if (s.phase == Phase::Complete) throw ConflictError("session already complete");
  return {s.step + 1, s.events[s.step].prompt};
}

SaveDirective SessionStore::begin_save(const std::string& id, std::size_t step) {
  std::lock_guard lock(mutex_);
  auto& s = find(id);
  if (s.phase == Phase::Questionnaire) throw ConflictError("questionnaire not yet submitted");
  if (step < 1 || step > kEventsPerSession) throw ValidationError("step must be between 1 and 4");
  SaveDirective d;
  d.status = s.events[step - 1].status;
  if (s.phase == Phase::Complete || step < s.step + 1) {
    d.behaviour = SaveBehaviour::Replay;
    return d;
  }
  if (step > s.step + 1) throw ConflictError(fmt::format("step {} is not current (current step {})", step, s.step + 1));

  auto& ev = s.events[step - 1];
  ++ev.save_attempts;
  switch (ev.status) {
    case status::SystemStatus::Idle: d.behaviour = SaveBehaviour::Instant; break;
    case status::SystemStatus::Slow:
      d.behaviour = SaveBehaviour::Delayed;
      d.delay = config_.slow_delay;
      break;
    case status::SystemStatus::Error: d.behaviour = SaveBehaviour::ServerError; break;
    case status::SystemStatus::Down: {
      const auto now = Clock::now();
      if (!ev.first_save) ev.first_save = now;
      d.behaviour = now - *ev.first_save < config_.down_window ? SaveBehaviour::Refused : SaveBehaviour::Recovered;
      break;
    }
  }
  append({{"op", "save"}, {"id", s.id}, {"step", step}});
  return d;
}

void SessionStore::record_save_latency(const std::string& id, std::size_t step, double latency_ms) {
  std::lock_guard lock(mutex_);
  auto& s = find(id);
  if (step >= 1 && step <= kEventsPerSession) s.events[step - 1].save_latency_ms = latency_ms;
}

nlohmann::json SessionStore::submit_emotion(const std::string& id, std::size_t step,
                                            const std::array<double, 5>& sliders,
                                            std::optional<double> response_latency_ms) {
  std::lock_guard lock(mutex_);
  return emotion_locked(find(id), step, sliders, response_latency_ms);
}

nlohmann::json SessionStore::emotion_locked(Session& s, std::size_t step, const std::array<double, 5>& sliders,
                                            std::optional<double> latency) {
  if (s.phase == Phase::Questionnaire) throw ConflictError("questionnaire not yet submitted");
  if (step < 1 || step > kEventsPerSession) throw ValidationError("step must be between 1 and 4");
  auto& ev = s.events[step - 1];
  if (ev.emotion) return ev.ack;  // replay
  if (step != s.step + 1) throw ConflictError(fmt::format("step {} is not current (current step {})", step, s.step + 1));
  if (ev.save_attempts == 0) throw ConflictError("save the answer before reporting emotions");
  for (double v : sliders) {
    if (!std::isfinite(v) || v < 0 || v > 1) throw ValidationError("slider values must lie in [0,1]");
  }

  ev.sliders = sliders;
  ev.emotion = emotions::normalize(sliders);
  ev.response_latency_ms = latency;
  ++s.step;
  if (s.step == kEventsPerSession) s.phase = Phase::Complete;

  json ack = {{"session", s.id}, {"step", step}, {"emotion", emotion_json(*ev.emotion)}};
  if (s.phase == Phase::Complete) {
    ack["next"] = "complete";
    ack["debrief"] = kDebrief;
    json events = json::array();
    for (std::size_t i = 0; i < kEventsPerSession; ++i) {
      events.push_back({{"step", i + 1}, {"status", std::string(status::to_string(s.events[i].status))}});
    }
    ack["events"] = events;
  } else {
    ack["next"] = s.step + 1;
  }
  ev.ack = ack;
  json record = {{"op", "emotion"}, {"id", s.id}, {"step", step}, {"sliders", sliders}};
  record["latency_ms"] = latency ? json(*latency) : json(nullptr);
  append(record);
  return ack;
}

Session SessionStore::snapshot(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return find(id);
}

nlohmann::json SessionStore::session_json(const std::string& id) const {
  const auto s = snapshot(id);
  json j = {{"id", s.id}, {"age", s.age}, {"phase", std::string(to_string(s.phase))}};
  if (s.phase == Phase::Simulation) j["step"] = s.step + 1;
  if (s.traits) j["traits"] = traits_json(s.traits->normalized);
  json events = json::array();
  for (std::size_t i = 0; i < kEventsPerSession; ++i) {
    const auto& ev = s.events[i];
    json e = {{"step", i + 1}, {"save_attempts", ev.save_attempts}};
    e["save_latency_ms"] = ev.save_latency_ms ? json(*ev.save_latency_ms) : json(nullptr);
    if (ev.emotion) e["emotion"] = emotion_json(*ev.emotion);
    if (s.phase == Phase::Complete) e["status"] = std::string(status::to_string(ev.status));
    events.push_back(e);
  }
  j["events"] = events;
  return j;
}

ExportResult SessionStore::export_rows(const std::optional<std::string>& only) const {
  std::lock_guard lock(mutex_);
  ExportResult result;
  result.table.schema = config_.schema;
  if (only) find(*only);
  for (const auto& id : order_) {
    if (only && id != *only) continue;
    const auto& s = sessions_.at(id);
    if (s.phase != Phase::Complete) continue;
    for (const auto& ev : s.events) {
      model::FeatureRow row;
      for (const auto& name : config_.schema.names) {
        if (const auto e = emotions::emotion_from_string(name)) {
          row.values.push_back((*ev.emotion)[*e]);
        } else if (const auto t = traits::trait_from_string(name)) {
          row.values.push_back(s.traits->normalized[*t]);
        } else {
          row.values.push_back(s.age);
        }
      }
      row.label = std::string(status::to_string(ev.status));
      result.table.rows.push_back(std::move(row));
      result.session_ids.push_back(id);
    }
  }
  if (result.table.rows.empty()) {
    result.warnings.push_back("no completed sessions to export");
    return result;
  }
  if (config_.forest) {
    std::vector<std::string> truth;
    for (const auto& row : result.table.rows) {
      result.predictions.push_back(config_.forest->predict(row.values));
      truth.push_back(*row.label);
    }
    std::vector<std::string> labels = config_.forest->labels();
    for (const auto& t : truth) {
      if (!std::binary_search(labels.begin(), labels.end(), t)) {
        result.warnings.push_back("label '" + t + "' unknown to the model; report skipped");
        return result;
      }
    }
    result.report = model::evaluate(result.predictions, truth, labels);
  }
  return result;
}

// ---------------------------------------------------------------------------
// HTTP layer

VerifyServer::VerifyServer(SessionStore& store, std::optional<std::filesystem::path> static_dir)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  install_routes();
  if (static_dir) {
    if (!server_->set_mount_point("/", static_dir->string())) {
      throw ValidationError("static directory '" + static_dir->string() + "' does not exist");
    }
  }
}

VerifyServer::~VerifyServer() { stop(); }

bool VerifyServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int VerifyServer::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool VerifyServer::listen_after_bind() { return server_->listen_after_bind(); }

void VerifyServer::stop() {
  if (server_) server_->stop();
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  try {
    auto j = json::parse(req.body.empty() ? std::string("{}") : req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const json::exception&) {
    throw std::invalid_argument("request body is not valid JSON");
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const std::invalid_argument& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
    } catch (const ValidationError& e) {
      send_json(res, 422, {{"error", e.what()}});
    } catch (const ConflictError& e) {
      send_json(res, 409, {{"error", e.what()}});
    } catch (const NotFoundError& e) {
      send_json(res, 404, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

std::size_t step_of(const json& body) {
  if (!body.contains("step") || !body["step"].is_number_integer() || body["step"].get<long long>() < 1) {
    throw std::invalid_argument("body needs a positive integer 'step'");
  }
  return body["step"].get<std::size_t>();
}

}  // namespace

void VerifyServer::install_routes() {
  auto& srv = *server_;
  auto& store = store_;

  srv.Post("/api/session", guarded([&store](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             if (!body.contains("age") || !body["age"].is_number()) throw std::invalid_argument("body needs numeric 'age'");
             const double age = body["age"].get<double>();
             if (!(age > 0)) throw std::invalid_argument("age must be positive");
             const auto id = store.create_session(age);
             send_json(res, 201, {{"session", id}, {"phase", "questionnaire"}});
           }));

  srv.Get("/api/questionnaire", guarded([&store](const httplib::Request&, httplib::Response& res) {
            const auto& def = store.config().questionnaire;
            json items = json::array();
            for (std::size_t i = 0; i < def.items.size(); ++i) {
              items.push_back({{"index", i}, {"prompt", def.items[i].prompt}});
            }
            send_json(res, 200, {{"scale", {{"lo", def.lo}, {"hi", def.hi}}}, {"items", items}});
          }));

  srv.Post("/api/session/:id/questionnaire", guarded([&store](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             if (!body.contains("responses") || !body["responses"].is_array()) {
               throw std::invalid_argument("body needs a 'responses' array");
             }
             const auto score = store.submit_questionnaire(req.path_params.at("id"),
                                                           body["responses"].get<std::vector<int>>());
             send_json(res, 200, {{"traits", traits_json(score.normalized)}, {"raw", traits_json(score.raw)}});
           }));

  srv.Get("/api/session/:id/event", guarded([&store](const httplib::Request& req, httplib::Response& res) {
            const auto ev = store.next_event(req.path_params.at("id"));
            send_json(res, 200, {{"step", ev.step}, {"of", kEventsPerSession}, {"prompt", ev.prompt}});
          }));

  srv.Post("/api/session/:id/save", guarded([&store](const httplib::Request& req, httplib::Response& res) {
             const auto id = req.path_params.at("id");
             const auto step = step_of(parse_body(req));
             const auto started = Clock::now();
             const auto d = store.begin_save(id, step);
             auto elapsed_ms = [&] {
               return std::chrono::duration<double, std::milli>(Clock::now() - started).count();
             };
             switch (d.behaviour) {
               case SaveBehaviour::Instant:
               case SaveBehaviour::Recovered:
               case SaveBehaviour::Replay:
                 store.record_save_latency(id, step, elapsed_ms());
                 send_json(res, 200, {{"saved", true}, {"step", step},
                                      {"recovered", d.behaviour == SaveBehaviour::Recovered},
                                      {"replay", d.behaviour == SaveBehaviour::Replay}});
                 break;
               case SaveBehaviour::Delayed:
                 std::this_thread::sleep_for(d.delay);
                 store.record_save_latency(id, step, elapsed_ms());
                 send_json(res, 200, {{"saved", true}, {"step", step}, {"recovered", false}, {"replay", false}});
                 break;
               case SaveBehaviour::ServerError:
                 store.record_save_latency(id, step, elapsed_ms());
                 send_json(res, 500, {{"saved", false},
                                      {"error", "Database Error: Unable to connect to the database"},
                                      {"code", "DB_CONNECT"}});
                 break;
               case SaveBehaviour::Refused:
                 store.record_save_latency(id, step, elapsed_ms());
                 // A provider that fails drops the connection before any body is sent.
                 res.set_content_provider(
                     16, "application/json",
                     [](std::size_t, std::size_t, httplib::DataSink&) { return false; });
                 break;
             }
           }));

  srv.Post("/api/session/:id/emotion", guarded([&store](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const auto step = step_of(body);
             if (!body.contains("sliders")) throw std::invalid_argument("body needs 'sliders'");
             std::array<double, 5> sliders{};
             const auto& s = body["sliders"];
             if (s.is_array()) {
               if (s.size() != 5) throw std::invalid_argument("'sliders' array needs five values");
               sliders = s.get<std::array<double, 5>>();
             } else if (s.is_object()) {
               for (std::size_t i = 0; i < emotions::kAllEmotions.size(); ++i) {
                 const std::string key(emotions::to_string(emotions::kAllEmotions[i]));
                 sliders[i] = s.value(key, 0.0);
               }
             } else {
               throw std::invalid_argument("'sliders' must be an array or object");
             }
             std::optional<double> latency;
             if (body.contains("latency_ms") && body["latency_ms"].is_number()) latency = body["latency_ms"].get<double>();
             send_json(res, 200, store.submit_emotion(req.path_params.at("id"), step, sliders, latency));
           }));

  srv.Get("/api/session/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, store.session_json(req.path_params.at("id")));
          }));

  srv.Get("/api/export", guarded([&store](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> only;
            if (req.has_param("session")) only = req.get_param_value("session");
            const auto result = store.export_rows(only);
            if (req.has_param("format") && req.get_param_value("format") == "csv") {
              std::ostringstream out;
              ingest::write_features(out, result.table.schema, result.table.rows);
              res.status = 200;
              res.set_content(out.str(), "text/csv");
              return;
            }
            json rows = json::array();
            for (std::size_t i = 0; i < result.table.rows.size(); ++i) {
              const auto& row = result.table.rows[i];
              json r = {{"session", result.session_ids[i]}, {"label", *row.label}};
              for (std::size_t c = 0; c < row.values.size(); ++c) r[result.table.schema.names[c]] = row.values[c];
              if (!result.predictions.empty()) r["predicted"] = result.predictions[i].label;
              rows.push_back(r);
            }
            json body = {{"schema", result.table.schema.names}, {"rows", rows}, {"warnings", result.warnings}};
            if (result.report) body["report"] = model::to_json(*result.report);
            send_json(res, 200, body);
          }));
}

}  // namespace pmsys::verify
