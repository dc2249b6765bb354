#pragma once

#include "castelet/clips.hpp"
#include "castelet/retarget.hpp"

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace castelet {

enum class FsmState { idle, transition_in, acting, transition_out, suspending, live };

std::string_view to_string(FsmState s);
// Edges the state machine may take; anything else is a bug.
bool is_legal_transition(FsmState from, FsmState to);

inline constexpr double kDefaultFadeDuration = 0.4;

struct ClipSlot {
  std::string clip;
  double clock = 0.0;
  friend bool operator==(const ClipSlot&, const ClipSlot&) = default;
};

// One of the two buses: an action channel mixed over an idle channel.
struct Bus {
  std::optional<ClipSlot> action;
  ClipSlot idle;
  double channel_weight = 0.0;  // 1 = action fully audible
  friend bool operator==(const Bus&, const Bus&) = default;
};

enum class TriggerOutcome { accepted, queued, rejected };
std::string_view to_string(TriggerOutcome o);

struct TriggerResult {
  TriggerOutcome outcome = TriggerOutcome::rejected;
  std::string reason;
};

struct ControlResult {
  bool applied = false;
  std::string detail;  // chosen idle, or why the call was a no-op / rejected
};

struct MixWeight {
  std::string source;
  double weight = 0.0;
  friend bool operator==(const MixWeight&, const MixWeight&) = default;
};

struct FsmTransition {
  FsmState from;
  FsmState to;
  friend bool operator==(const FsmTransition&, const FsmTransition&) = default;
};

struct FsmNotice {
  std::string message;
};

struct FsmSnapshot {
  FsmState state = FsmState::idle;
  std::string idle_id;    // current (or target) idle
  std::string action_id;  // current action, empty when none
  std::array<Bus, 2> buses;
  double bus_crossfade = 0.0;
  int audible_bus = 0;
  double live_weight = 0.0;
  std::vector<MixWeight> mix;
  std::vector<FsmTransition> transitions;  // taken during the last tick or call
  std::vector<std::string> queue;

  double audible_channel_weight() const { return buses[static_cast<std::size_t>(audible_bus)].channel_weight; }
  friend bool operator==(const FsmSnapshot&, const FsmSnapshot&) = default;
};

// Per-avatar animation state machine: two buses, each mixing an action channel
// over an idle channel, a bus crossfade, and an optional live override.
class OavFsm {
 public:
  OavFsm(const ClipLibrary& library, std::string initial_idle, double fade_duration = kDefaultFadeDuration,
         IdleSampler sampler = palindrome_sampler());

  void set_live_binding(std::shared_ptr<const BoundRetarget> binding) { binding_ = std::move(binding); }
  const std::shared_ptr<const BoundRetarget>& live_binding() const { return binding_; }

  TriggerResult trigger_action(const std::string& action_id, const ClipLibrary& library);
  ControlResult suspend();
  ControlResult set_live(bool on, const ClipLibrary& library);

  // Source-skeleton pose from the mocap stream; retargeted through the binding.
  void push_stream_pose(const Pose& source_pose);

  const Pose& tick(double dt, const ClipLibrary& library, const Pose* stream_source_pose = nullptr);

  FsmState state() const { return state_; }
  double fade_duration() const { return fade_; }
  const Pose& output() const { return output_; }
  // Latest retargeted stream pose, or the held pose when none arrived yet.
  const Pose& live_pose() const { return has_live_pose_ ? live_pose_ : frozen_; }
  bool has_live_pose() const { return has_live_pose_; }
  FsmSnapshot snapshot() const;
  std::vector<FsmNotice> take_notices() { return std::exchange(notices_, {}); }

 private:
  struct Ramp {
    double from = 0.0;
    double to = 0.0;
    double elapsed = 0.0;
    double duration = 0.0;
    double value() const;
    bool done() const { return elapsed >= duration; }
  };

  void go_to(FsmState next);
  void start_transition_in(const AnimationClip& action);
  void start_transition_out(const ClipLibrary& library);
  void land_idle(const std::string& idle);
  void drain_queue(const ClipLibrary& library);
  void clear_queue(const std::string& why);
  void evaluate(const ClipLibrary& library);
  void sample_bus(const Bus& bus, const ClipLibrary& library, Pose& out, Pose& scratch) const;

  IdleSampler sampler_;
  double fade_;
  std::string skeleton_ref_;

  FsmState state_ = FsmState::idle;
  std::string idle_id_;
  std::string action_id_;
  std::string action_start_idle_;
  std::string action_end_idle_;
  double action_duration_ = 0.0;
  std::array<Bus, 2> buses_;
  int audible_ = 0;
  double crossfade_ = 0.0;
  std::optional<Ramp> weight_ramp_;
  std::optional<Ramp> crossfade_ramp_;
  double live_weight_ = 0.0;
  std::optional<Ramp> live_ramp_;
  std::deque<std::string> queue_;

  std::shared_ptr<const BoundRetarget> binding_;
  Pose live_pose_;
  bool has_live_pose_ = false;
  Pose frozen_;     // base pose while Live; fade-out source after leaving Live
  Pose output_;

  std::vector<FsmTransition> transitions_;          // taken during the last tick
  std::vector<FsmTransition> pending_transitions_;  // taken by calls since then
  std::vector<FsmNotice> notices_;
  std::vector<MixWeight> mix_;

  Pose scratch_[4];
};

}  // namespace castelet
