#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pmsys/emotions.hpp"
#include "pmsys/model.hpp"
#include "pmsys/status.hpp"
#include "pmsys/traits.hpp"

namespace httplib {
class Server;
}

namespace pmsys::verify {

inline constexpr std::size_t kEventsPerSession = 4;

struct ServiceConfig {
  std::uint64_t seed = 1;
  std::chrono::milliseconds slow_delay{10500};  // must exceed the 10 s attention limit
  std::chrono::milliseconds down_window{8000};  // saves are refused this long after the first attempt
  std::optional<std::filesystem::path> journal;  // append-only JSONL session log
  traits::QuestionnaireDef questionnaire;
  model::FeatureSchema schema = model::FeatureSchema::defaults();
  std::shared_ptr<const model::Forest> forest;  // optional; enables predictions in exports
};

enum class Phase { Questionnaire, Simulation, Complete };

std::string_view to_string(Phase p);

struct EventState {
  status::SystemStatus status = status::SystemStatus::Idle;
  std::string prompt;
  std::size_t save_attempts = 0;
  std::optional<std::chrono::steady_clock::time_point> first_save;
  std::optional<double> save_latency_ms;  // server-side, last save
  std::optional<std::array<double, 5>> sliders;
  std::optional<emotions::EmotionVector> emotion;
  std::optional<double> response_latency_ms;
  nlohmann::json ack;
};

struct Session {
  std::string id;
  std::size_t ordinal = 0;
  double age = 0;
  std::vector<int> responses;
  std::optional<traits::QuestionnaireScore> traits;
  std::array<EventState, kEventsPerSession> events;
  std::size_t step = 0;  // index of the current event while in simulation
  Phase phase = Phase::Questionnaire;
};

struct EventDescriptor {
  std::size_t step = 0;  // 1-based
  std::string prompt;
};

enum class SaveBehaviour { Instant, Delayed, Refused, ServerError, Recovered, Replay };

struct SaveDirective {
  SaveBehaviour behaviour = SaveBehaviour::Instant;
  std::chrono::milliseconds delay{0};
  status::SystemStatus status = status::SystemStatus::Idle;
};

struct ExportResult {
  model::FeatureTable table;
  std::vector<std::string> session_ids;  // one per row
  std::vector<model::Prediction> predictions;
  std::optional<model::EvalReport> report;
  std::vector<std::string> warnings;
};

/// Session state machine for the verification experiment. Every mutation is
/// serialized and, when a journal is configured, appended to it before the
/// call returns; the journal is replayed on construction.
class SessionStore {
 public:
  explicit SessionStore(ServiceConfig config);

  const ServiceConfig& config() const noexcept { return config_; }

  /// Age must be positive (ValidationError). Event order is a seeded shuffle.
  std::string create_session(double age);

  /// Valid only before the simulation; an identical resubmission returns the stored scores.
  traits::QuestionnaireScore submit_questionnaire(const std::string& id, const std::vector<int>& responses);

  EventDescriptor next_event(const std::string& id);

  /// Decides how the save for `step` behaves; call record_save_latency once it has been carried out.
  SaveDirective begin_save(const std::string& id, std::size_t step);
  void record_save_latency(const std::string& id, std::size_t step, double latency_ms);

  /// Sliders in [0,1] for anger, disgust, fear, joy, sadness. Replays of a recorded step return the stored ack.
  nlohmann::json submit_emotion(const std::string& id, std::size_t step, const std::array<double, 5>& sliders,
                                std::optional<double> response_latency_ms);

  Session snapshot(const std::string& id) const;
  nlohmann::json session_json(const std::string& id) const;

  /// Four rows per completed session (all sessions, or just `only`).
  ExportResult export_rows(const std::optional<std::string>& only = std::nullopt) const;

 private:
  Session& find(const std::string& id);
  const Session& find(const std::string& id) const;
  std::string create_locked(double age);
  traits::QuestionnaireScore questionnaire_locked(Session& s, const std::vector<int>& responses);
  nlohmann::json emotion_locked(Session& s, std::size_t step, const std::array<double, 5>& sliders,
                                std::optional<double> latency);
  void append(const nlohmann::json& record);
  void replay(const std::filesystem::path& path);

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::vector<std::string> order_;
  std::ofstream journal_;
  bool replaying_ = false;
};

/// HTTP/JSON front end:
///   POST /api/session                     {"age": n}
///   GET  /api/questionnaire
///   POST /api/session/{id}/questionnaire  {"responses": [...]}
///   GET  /api/session/{id}/event
///   POST /api/session/{id}/save           {"step": n, "answer": "..."}
///   POST /api/session/{id}/emotion        {"step": n, "sliders": {...}, "latency_ms": x}
///   GET  /api/session/{id}
///   GET  /api/export[?format=csv&session=id]
class VerifyServer {
 public:
  VerifyServer(SessionStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~VerifyServer();
  VerifyServer(const VerifyServer&) = delete;
  VerifyServer& operator=(const VerifyServer&) = delete;

  /// Binds and serves until stop(); returns false if the port could not be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (or -1); then call listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

 private:
  void install_routes();

  SessionStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace pmsys::verify
