#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "pmsys/time_util.hpp"

namespace pmsys::timeline {

struct CallWindow {
  Timestamp call_open;
  Timestamp call_close;
  Timestamp extension_close;
};

/// Throws ValidationError unless call_open < call_close <= extension_close.
void validate(const CallWindow& call);

/// Milestones: registration, first action, last action, submission.
struct UserTimeline {
  int user_id = 0;
  std::optional<Timestamp> t0_registration;
  std::optional<Timestamp> t1_first_action;
  std::optional<Timestamp> t2_last_action;
  std::optional<Timestamp> t3_submission;

  bool complete() const { return t0_registration && t1_first_action && t2_last_action && t3_submission; }
};

enum class Segment { S0, S1, S2, S3, S4 };

inline constexpr std::array<Segment, 5> kAllSegments = {Segment::S0, Segment::S1, Segment::S2, Segment::S3,
                                                        Segment::S4};

struct SegmentBounds {
  double start;
  double finish;
};

/// Percentage bounds of each segment: 0-20, 20-40, 40-60, 60-90, 90-100.
SegmentBounds bounds(Segment s);
std::string_view to_string(Segment s);

/// 100 * (ts - open) / (extension_close - open). Out-of-window ts throws ValidationError.
double to_percent(Timestamp ts, const CallWindow& call);

/// Buckets are right-open except S4, which includes 100.
Segment assign_segment(double percent);

enum class BehaviourClass { A, B, C, D, E, F, G, H, Other };

std::string_view to_string(BehaviourClass c);
std::string_view alias(BehaviourClass c);

using SegmentTuple = std::array<Segment, 4>;

/// Exact lookup of the (T0, T1, T2, T3) segment tuple; anything else is Other.
BehaviourClass classify_segments(const SegmentTuple& tuple);

/// Throws ValidationError if a milestone is missing or lies outside the call window.
BehaviourClass classify_behaviour(const UserTimeline& timeline, const CallWindow& call);

enum class Stage { Start = 1, Uploading = 2, Submission = 3, AfterSubmission = 4, Extension = 5 };

std::string_view to_string(Stage s);

/// 1: ts < t1; 2: t1 <= ts <= t2; 3: t2 < ts <= t3; 4: t3 < ts <= close;
/// 5: close < ts <= extension_close. Checked in that order.
Stage assign_stage(Timestamp ts, const UserTimeline& timeline, const CallWindow& call);

}  // namespace pmsys::timeline
