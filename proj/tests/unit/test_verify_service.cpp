#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "pmsys/error.hpp"
#include "service_driver.hpp"

using namespace pmsys;
using namespace pmsys::verify;
using status::SystemStatus;

namespace {

ServiceConfig base_config(std::uint64_t seed = 9) {
  ServiceConfig c;
  c.seed = seed;
  c.questionnaire = traits::load_questionnaire(PMSYS_SOURCE_DIR "/data/questionnaire/bfi44.txt");
  return c;
}

std::vector<int> answers(int v = 3) { return std::vector<int>(44, v); }

void complete(SessionStore& store, const std::string& id) {
  store.submit_questionnaire(id, answers());
  for (std::size_t step = 1; step <= kEventsPerSession; ++step) {
    store.begin_save(id, step);
    store.submit_emotion(id, step, {0.2, 0.0, 0.4, 0.2, 0.2}, 800.0);
  }
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pmsys_vs_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Store, ConfigValidation) {
  auto c = base_config();
  c.slow_delay = std::chrono::milliseconds(10000);
  EXPECT_THROW(SessionStore{c}, ValidationError);
  c = base_config();
  c.schema.names.push_back("shoe_size");
  EXPECT_THROW(SessionStore{c}, ValidationError);
  c = base_config();
  c.questionnaire.items.clear();
  EXPECT_THROW(SessionStore{c}, ValidationError);
}

TEST(Store, SessionsGetSeededPermutations) {
  SessionStore a(base_config()), b(base_config()), other(base_config(10));
  std::set<std::vector<SystemStatus>> orders;
  for (int i = 0; i < 12; ++i) {
    const auto id = a.create_session(30);
    EXPECT_EQ(id.size(), 16u);
    EXPECT_EQ(b.create_session(30), id);
    EXPECT_NE(other.create_session(30), id);
    const auto s = a.snapshot(id);
    std::vector<SystemStatus> order;
    for (const auto& e : s.events) order.push_back(e.status);
    EXPECT_EQ(std::set<SystemStatus>(order.begin(), order.end()).size(), 4u);
    orders.insert(order);
  }
  EXPECT_GT(orders.size(), 1u);
  EXPECT_THROW(a.create_session(0), ValidationError);
  EXPECT_THROW(a.create_session(std::nan("")), ValidationError);
}

TEST(Store, PhaseOrderIsEnforced) {
  SessionStore store(base_config());
  const auto id = store.create_session(25);
  EXPECT_THROW(store.next_event(id), ConflictError);
  EXPECT_THROW(store.begin_save(id, 1), ConflictError);
  EXPECT_THROW(store.submit_emotion(id, 1, {0, 0, 0, 0, 0}, {}), ConflictError);
  EXPECT_THROW(store.submit_questionnaire(id, std::vector<int>(10, 3)), ValidationError);
  const auto score = store.submit_questionnaire(id, answers());
  EXPECT_EQ(store.submit_questionnaire(id, answers()).normalized, score.normalized);
  EXPECT_THROW(store.submit_questionnaire(id, answers(4)), ConflictError);

  EXPECT_EQ(store.next_event(id).step, 1u);
  EXPECT_THROW(store.submit_emotion(id, 1, {0, 0, 0, 0, 0}, {}), ConflictError);  // no save yet
  EXPECT_THROW(store.begin_save(id, 2), ConflictError);
  EXPECT_THROW(store.begin_save(id, 5), ValidationError);
  store.begin_save(id, 1);
  EXPECT_THROW(store.submit_emotion(id, 1, {0, 1.5, 0, 0, 0}, {}), ValidationError);
  const auto ack = store.submit_emotion(id, 1, {0.5, 0.5, 0, 0, 0}, 900.0);
  EXPECT_EQ(ack.at("next"), 2);
  EXPECT_DOUBLE_EQ(ack.at("emotion").at("anger").get<double>(), 0.5);
  // replays are idempotent
  EXPECT_EQ(store.submit_emotion(id, 1, {1, 1, 1, 1, 1}, {}), ack);
  EXPECT_EQ(store.begin_save(id, 1).behaviour, SaveBehaviour::Replay);
  EXPECT_EQ(store.snapshot(id).events[0].save_attempts, 1u);
  EXPECT_THROW(store.submit_emotion(id, 3, {0, 0, 0, 0, 0}, {}), ConflictError);
  EXPECT_THROW(store.snapshot("nope"), NotFoundError);
}

TEST(Store, SaveBehaviourFollowsTheScript) {
  auto c = base_config();
  c.down_window = std::chrono::milliseconds(60000);
  SessionStore store(c);
  const auto id = store.create_session(40);
  store.submit_questionnaire(id, answers());
  const auto s = store.snapshot(id);
  for (std::size_t step = 1; step <= kEventsPerSession; ++step) {
    const auto st = s.events[step - 1].status;
    const auto d = store.begin_save(id, step);
    EXPECT_EQ(d.status, st);
    switch (st) {
      case SystemStatus::Idle: EXPECT_EQ(d.behaviour, SaveBehaviour::Instant); break;
      case SystemStatus::Slow:
        EXPECT_EQ(d.behaviour, SaveBehaviour::Delayed);
        EXPECT_GT(d.delay, std::chrono::milliseconds(10000));
        break;
      case SystemStatus::Error: EXPECT_EQ(d.behaviour, SaveBehaviour::ServerError); break;
      case SystemStatus::Down:
        EXPECT_EQ(d.behaviour, SaveBehaviour::Refused);
        EXPECT_EQ(store.begin_save(id, step).behaviour, SaveBehaviour::Refused);
        break;
    }
    store.submit_emotion(id, step, {0, 0, 0, 1, 0}, {});
  }
  EXPECT_EQ(store.snapshot(id).phase, Phase::Complete);
}

TEST(Store, DownRecoversAfterTheWindow) {
  auto c = base_config();
  c.down_window = std::chrono::milliseconds(0);
  SessionStore store(c);
  const auto id = store.create_session(40);
  store.submit_questionnaire(id, answers());
  const auto s = store.snapshot(id);
  for (std::size_t step = 1; step <= kEventsPerSession; ++step) {
    const auto d = store.begin_save(id, step);
    if (s.events[step - 1].status == SystemStatus::Down) EXPECT_EQ(d.behaviour, SaveBehaviour::Recovered);
    store.submit_emotion(id, step, {0, 0, 0, 1, 0}, {});
  }
}

TEST(Store, StatusesStayHiddenUntilComplete) {
  SessionStore store(base_config());
  const auto id = store.create_session(30);
  store.submit_questionnaire(id, answers());
  for (const auto& e : store.session_json(id).at("events")) EXPECT_FALSE(e.contains("status"));
  store.begin_save(id, 1);
  store.submit_emotion(id, 1, {0, 0, 0, 0, 0}, {});
  store.begin_save(id, 2);
  store.submit_emotion(id, 2, {0, 0, 0, 0, 0}, {});
  store.begin_save(id, 3);
  store.submit_emotion(id, 3, {0, 0, 0, 0, 0}, {});
  store.begin_save(id, 4);
  const auto ack = store.submit_emotion(id, 4, {0, 0, 0, 0, 0}, {});
  EXPECT_EQ(ack.at("next"), "complete");
  EXPECT_TRUE(ack.contains("debrief"));
  EXPECT_EQ(ack.at("events").size(), 4u);
  for (const auto& e : store.session_json(id).at("events")) EXPECT_TRUE(e.contains("status"));
  // all-zero sliders fall back to the uniform vector
  EXPECT_DOUBLE_EQ(ack.at("emotion").at("joy").get<double>(), 0.2);
  EXPECT_THROW(store.next_event(id), ConflictError);
}

TEST(Store, ExportHasFourRowsPerCompletedSession) {
  SessionStore store(base_config());
  EXPECT_FALSE(store.export_rows().warnings.empty());
  const auto a = store.create_session(31);
  const auto b = store.create_session(45);
  complete(store, a);
  store.submit_questionnaire(b, answers());
  const auto ex = store.export_rows();
  ASSERT_EQ(ex.table.rows.size(), 4u);
  std::set<std::string> labels;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ex.session_ids[i], a);
    labels.insert(*ex.table.rows[i].label);
    const auto& v = ex.table.rows[i].values;
    EXPECT_EQ(v.back(), 31.0);
    model::validate_row(ex.table.schema, ex.table.rows[i]);
  }
  EXPECT_EQ(labels, (std::set<std::string>{"down", "error", "idle", "slow"}));
  EXPECT_TRUE(store.export_rows(b).table.rows.empty());
  EXPECT_THROW(store.export_rows(std::string("zzz")), NotFoundError);
}

TEST(Store, ExportScoresWithAForest) {
  auto c = base_config();
  // A tiny forest over the default schema.
  model::FeatureTable t{model::FeatureSchema::defaults(), {}};
  const std::vector<std::string> labels = {"down", "error", "idle", "slow"};
  for (int i = 0; i < 40; ++i) {
    model::FeatureRow r{{0.2, 0.2, 0.2, 0.2, 0.2, 0.5, 0.5, 20.0 + i}, labels[i % 4]};
    r.values[i % 4] = 0.6;
    t.rows.push_back(r);
  }
  model::ForestParams p;
  p.n_trees = 5;
  c.forest = std::make_shared<model::Forest>(model::train_forest(t, p));
  SessionStore store(c);
  complete(store, store.create_session(33));
  const auto ex = store.export_rows();
  EXPECT_EQ(ex.predictions.size(), 4u);
  ASSERT_TRUE(ex.report.has_value());
  EXPECT_EQ(ex.report->instances, 4u);
}

TEST(Journal, ReplayRestoresSessions) {
  const auto path = temp_file("journal.jsonl");
  std::filesystem::remove(path);
  auto c = base_config();
  c.journal = path;
  std::string done, partial;
  nlohmann::json before;
  {
    SessionStore store(c);
    done = store.create_session(29);
    complete(store, done);
    partial = store.create_session(52);
    store.submit_questionnaire(partial, answers(2));
    store.begin_save(partial, 1);
    before = store.session_json(partial);
  }
  {
    SessionStore store(c);
    EXPECT_EQ(store.snapshot(done).phase, Phase::Complete);
    auto after = store.session_json(partial);
    before["events"][0].erase("save_latency_ms");
    after["events"][0].erase("save_latency_ms");
    EXPECT_EQ(after, before);
    // continues where it stopped, with new ids following the old ones
    store.submit_emotion(partial, 1, {0, 0, 1, 0, 0}, {});
    EXPECT_EQ(store.export_rows().table.rows.size(), 4u);
    const auto third = store.create_session(60);
    EXPECT_NE(third, done);
    EXPECT_NE(third, partial);
  }
  {
    SessionStore store(c);
    EXPECT_EQ(store.snapshot(partial).step, 1u);
  }
  auto other_seed = c;
  other_seed.seed = 99;
  EXPECT_THROW(SessionStore{other_seed}, ValidationError);
  std::ofstream(path, std::ios::app) << "{\"op\":\"teleport\"}\n";
  try {
    SessionStore broken(c);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("teleport"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Http, ErrorMapping) {
  SessionStore store(base_config());
  driver::LiveServer live(store);
  ASSERT_GT(live.port, 0);
  auto c = live.client();
  auto res = c.Post("/api/session", "not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = c.Post("/api/session", R"({"age": -3})", "application/json");
  EXPECT_EQ(res->status, 400);
  res = c.Get("/api/session/ffffffffffffffff");
  EXPECT_EQ(res->status, 404);
  res = c.Post("/api/session", R"({"age": 27})", "application/json");
  ASSERT_EQ(res->status, 201);
  const std::string id = nlohmann::json::parse(res->body).at("session");
  res = c.Get("/api/session/" + id + "/event");
  EXPECT_EQ(res->status, 409);
  res = c.Post("/api/session/" + id + "/questionnaire", R"({"responses": [1,2,3]})", "application/json");
  EXPECT_EQ(res->status, 422);
  res = c.Post("/api/session/" + id + "/save", R"({"step": 0})", "application/json");
  EXPECT_EQ(res->status, 400);
  res = c.Get("/api/questionnaire");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(nlohmann::json::parse(res->body).at("items").size(), 44u);
}

TEST(Http, FullSessionOverTheWire) {
  auto cfg = base_config();
  cfg.down_window = std::chrono::milliseconds(1500);
  SessionStore store(cfg);
  driver::LiveServer live(store);
  ASSERT_GT(live.port, 0);
  const auto run = driver::run_session(live, 34, answers(4));
  ASSERT_TRUE(run.errors.empty()) << run.errors.front();
  ASSERT_EQ(run.saves.size(), 4u);
  for (const auto& s : run.saves) {
    if (s.status == "idle") {
      EXPECT_EQ(s.http_status, 200);
      EXPECT_LT(s.elapsed_s, 0.1);
    } else if (s.status == "slow") {
      EXPECT_EQ(s.http_status, 200);
      EXPECT_GT(s.elapsed_s, 10.0);
    } else if (s.status == "error") {
      EXPECT_EQ(s.http_status, 500);
      EXPECT_EQ(s.body.at("code"), "DB_CONNECT");
      EXPECT_EQ(s.body.at("saved"), false);
    } else {
      EXPECT_EQ(s.status, "down");
      EXPECT_GT(s.attempts, 1);  // first attempts are dropped
      EXPECT_EQ(s.http_status, 200);
      EXPECT_EQ(s.body.at("recovered"), true);
    }
  }
  auto c = live.client();
  auto res = c.Get("/api/export");
  ASSERT_EQ(res->status, 200);
  const auto body = nlohmann::json::parse(res->body);
  EXPECT_EQ(body.at("rows").size(), 4u);
  EXPECT_EQ(body.at("schema").size(), 8u);
  res = c.Get("/api/export?format=csv&session=" + run.id);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(std::count(res->body.begin(), res->body.end(), '\n'), 5);
  res = c.Get("/api/session/" + run.id);
  EXPECT_EQ(nlohmann::json::parse(res->body).at("phase"), "complete");
}
