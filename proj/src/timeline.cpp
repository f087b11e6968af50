#include "pmsys/timeline.hpp"

#include <string>

#include "pmsys/error.hpp"

namespace pmsys::timeline {
namespace {

struct ClassRow {
  BehaviourClass cls;
  SegmentTuple tuple;
};

using S = Segment;
constexpr std::array<ClassRow, 8> kClassTable = {{
    {BehaviourClass::A, {S::S1, S::S3, S::S3, S::S3}},
    {BehaviourClass::B, {S::S2, S::S2, S::S2, S::S2}},
    {BehaviourClass::C, {S::S2, S::S3, S::S3, S::S3}},
    {BehaviourClass::D, {S::S2, S::S3, S::S4, S::S4}},
    {BehaviourClass::E, {S::S3, S::S3, S::S3, S::S3}},
    {BehaviourClass::F, {S::S3, S::S3, S::S4, S::S4}},
    {BehaviourClass::G, {S::S3, S::S4, S::S4, S::S4}},
    {BehaviourClass::H, {S::S4, S::S4, S::S4, S::S4}},
}};

void check_in_window(Timestamp ts, const CallWindow& call) {
  if (ts < call.call_open || ts > call.extension_close) {
    throw ValidationError("timestamp " + format_timestamp(ts) + " is outside the call window");
  }
}

}  // namespace

void validate(const CallWindow& call) {
  if (!(call.call_open < call.call_close) || call.call_close > call.extension_close) {
    throw ValidationError("call window must satisfy open < close <= extension close");
  }
}

SegmentBounds bounds(Segment s) {
  switch (s) {
    case Segment::S0: return {0, 20};
    case Segment::S1: return {20, 40};
    case Segment::S2: return {40, 60};
    case Segment::S3: return {60, 90};
    case Segment::S4: return {90, 100};
  }
  return {0, 0};
}

std::string_view to_string(Segment s) {
  constexpr std::array<std::string_view, 5> names = {"S0", "S1", "S2", "S3", "S4"};
  return names[static_cast<std::size_t>(s)];
}

double to_percent(Timestamp ts, const CallWindow& call) {
  validate(call);
  check_in_window(ts, call);
  const auto span = static_cast<double>((call.extension_close - call.call_open).count());
  return 100.0 * static_cast<double>((ts - call.call_open).count()) / span;
}

Segment assign_segment(double percent) {
  if (!(percent >= 0 && percent <= 100)) throw ValidationError("percent must lie in [0,100]");
  for (auto s : kAllSegments) {
    if (percent < bounds(s).finish) return s;
  }
  return Segment::S4;
}

std::string_view to_string(BehaviourClass c) {
  constexpr std::array<std::string_view, 9> names = {"A", "B", "C", "D", "E", "F", "G", "H", "Other"};
  return names[static_cast<std::size_t>(c)];
}

std::string_view alias(BehaviourClass c) {
  switch (c) {
    case BehaviourClass::A: return "EverythingEarly";
    case BehaviourClass::B: return "QuiteEarlyAndQuick";
    case BehaviourClass::D: return "VeryCautious";
    case BehaviourClass::C:
    case BehaviourClass::E:
    case BehaviourClass::F:
    case BehaviourClass::G: return "Cautious";
    case BehaviourClass::H: return "EverythingLastMinute";
    case BehaviourClass::Other: return "Other";
  }
  return "Other";
}

BehaviourClass classify_segments(const SegmentTuple& tuple) {
  for (const auto& row : kClassTable) {
    if (row.tuple == tuple) return row.cls;
  }
  return BehaviourClass::Other;
}

BehaviourClass classify_behaviour(const UserTimeline& timeline, const CallWindow& call) {
  if (!timeline.complete()) {
    throw ValidationError("user " + std::to_string(timeline.user_id) + " is missing a timeline milestone");
  }
  const SegmentTuple tuple = {
      assign_segment(to_percent(*timeline.t0_registration, call)),
      assign_segment(to_percent(*timeline.t1_first_action, call)),
      assign_segment(to_percent(*timeline.t2_last_action, call)),
      assign_segment(to_percent(*timeline.t3_submission, call)),
  };
  return classify_segments(tuple);
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Start: return "Start";
    case Stage::Uploading: return "Uploading";
    case Stage::Submission: return "Submission";
    case Stage::AfterSubmission: return "After-Submission";
    case Stage::Extension: return "Extension";
  }
  return "unknown";
}

Stage assign_stage(Timestamp ts, const UserTimeline& timeline, const CallWindow& call) {
  validate(call);
  check_in_window(ts, call);
  if (!timeline.t1_first_action || !timeline.t2_last_action || !timeline.t3_submission) {
    throw ValidationError("user " + std::to_string(timeline.user_id) + " is missing a timeline milestone");
  }
  const auto t1 = *timeline.t1_first_action;
  const auto t2 = *timeline.t2_last_action;
  const auto t3 = *timeline.t3_submission;
  if (!(t1 <= t2 && t2 <= t3)) throw ValidationError("timeline milestones are out of order");
  if (ts < t1) return Stage::Start;
  if (ts <= t2) return Stage::Uploading;
  if (ts <= t3) return Stage::Submission;
  if (ts <= call.call_close) return Stage::AfterSubmission;
  return Stage::Extension;
}

}  // namespace pmsys::timeline
