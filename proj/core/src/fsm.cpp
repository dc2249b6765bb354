#include "castelet/fsm.hpp"

#include "castelet/error.hpp"

#include <algorithm>
#include <limits>

namespace castelet {

std::string_view to_string(FsmState s) {
  switch (s) {
    case FsmState::idle: return "Idle";
    case FsmState::transition_in: return "TransitionIn";
    case FsmState::acting: return "Acting";
    case FsmState::transition_out: return "TransitionOut";
    case FsmState::suspending: return "Suspending";
    case FsmState::live: return "Live";
  }
  return "?";
}

std::string_view to_string(TriggerOutcome o) {
  switch (o) {
    case TriggerOutcome::accepted: return "accepted";
    case TriggerOutcome::queued: return "queued";
    case TriggerOutcome::rejected: return "rejected";
  }
  return "?";
}

bool is_legal_transition(FsmState from, FsmState to) {
  using S = FsmState;
  if (to == S::live) return from != S::live;
  switch (from) {
    case S::idle: return to == S::transition_in;
    case S::transition_in: return to == S::acting || to == S::suspending;
    case S::acting: return to == S::transition_out || to == S::suspending;
    case S::transition_out: return to == S::idle || to == S::suspending;
    case S::suspending: return to == S::idle;
    case S::live: return to == S::idle;
  }
  return false;
}

double OavFsm::Ramp::value() const {
  if (duration <= 0.0 || elapsed >= duration) return to;
  const double u = std::clamp(elapsed / duration, 0.0, 1.0);
  return from + (to - from) * u;
}

OavFsm::OavFsm(const ClipLibrary& library, std::string initial_idle, double fade_duration, IdleSampler sampler)
    : sampler_(std::move(sampler)), fade_(fade_duration) {
  if (!(fade_duration >= 0.0)) throw ContractError("fade_duration must be nonnegative");
  const AnimationClip* idle = library.find(initial_idle);
  if (!idle) throw ContractError("unknown initial idle '" + initial_idle + "'");
  if (idle->kind != ClipKind::idle) throw ContractError("initial clip '" + initial_idle + "' is not an idle");
  skeleton_ref_ = idle->skeleton_ref;
  idle_id_ = initial_idle;
  for (auto& b : buses_) b.idle = {initial_idle, 0.0};
  evaluate(library);
  frozen_ = output_;
}

void OavFsm::go_to(FsmState next) {
  if (!is_legal_transition(state_, next))
    throw std::logic_error("illegal FSM transition " + std::string(to_string(state_)) + " -> " +
                           std::string(to_string(next)));
  pending_transitions_.push_back({state_, next});
  state_ = next;
}

void OavFsm::start_transition_in(const AnimationClip& action) {
  Bus& bus = buses_[static_cast<std::size_t>(audible_)];
  bus.action = ClipSlot{action.id, 0.0};
  bus.channel_weight = 0.0;
  weight_ramp_ = Ramp{0.0, 1.0, 0.0, fade_};
  action_id_ = action.id;
  action_start_idle_ = action.start_idle_id;
  action_end_idle_ = action.end_idle_id;
  action_duration_ = action.duration();
  go_to(FsmState::transition_in);
}

void OavFsm::start_transition_out(const ClipLibrary& library) {
  const AnimationClip& action = library.at(action_id_);
  const int other = 1 - audible_;
  Bus& next = buses_[static_cast<std::size_t>(other)];
  next = Bus{std::nullopt, ClipSlot{action.end_idle_id, 0.0}, 0.0};
  crossfade_ramp_ = Ramp{crossfade_, static_cast<double>(other), 0.0, fade_};
  audible_ = other;
  idle_id_ = action.end_idle_id;
  go_to(FsmState::transition_out);
}

void OavFsm::land_idle(const std::string& idle) {
  Bus& silent = buses_[static_cast<std::size_t>(1 - audible_)];
  silent.action.reset();
  silent.channel_weight = 0.0;
  Bus& bus = buses_[static_cast<std::size_t>(audible_)];
  bus.action.reset();
  bus.channel_weight = 0.0;
  crossfade_ = static_cast<double>(audible_);
  crossfade_ramp_.reset();
  weight_ramp_.reset();
  idle_id_ = idle;
  action_id_.clear();
  go_to(FsmState::idle);
}

void OavFsm::drain_queue(const ClipLibrary& library) {
  while (state_ == FsmState::idle && !queue_.empty()) {
    const std::string id = queue_.front();
    queue_.pop_front();
    const AnimationClip& action = library.at(id);
    if (action.start_idle_id == idle_id_) {
      start_transition_in(action);
      notices_.push_back({"queued action '" + id + "' started"});
    } else {
      notices_.push_back({"queued action '" + id + "' rejected: current idle '" + idle_id_ +
                          "' != start idle '" + action.start_idle_id + "'"});
    }
  }
}

void OavFsm::clear_queue(const std::string& why) {
  for (const auto& id : queue_) notices_.push_back({"queued action '" + id + "' dropped: " + why});
  queue_.clear();
}

TriggerResult OavFsm::trigger_action(const std::string& action_id, const ClipLibrary& library) {
  const AnimationClip* action = library.find(action_id);
  if (!action) throw ContractError("unknown action id '" + action_id + "'");
  if (action->kind != ClipKind::action) throw ContractError("clip '" + action_id + "' is not an action");
  switch (state_) {
    case FsmState::idle:
      if (action->start_idle_id != idle_id_)
        return {TriggerOutcome::rejected,
                "mismatch: current idle '" + idle_id_ + "' != start idle '" + action->start_idle_id + "'"};
      start_transition_in(*action);
      return {TriggerOutcome::accepted, ""};
    case FsmState::live:
      return {TriggerOutcome::rejected, "avatar is under live control"};
    default:
      queue_.push_back(action_id);
      return {TriggerOutcome::queued, "position " + std::to_string(queue_.size())};
  }
}

ControlResult OavFsm::suspend() {
  switch (state_) {
    case FsmState::idle:
    case FsmState::live:
    case FsmState::suspending:
      return {false, "suspend ignored in state " + std::string(to_string(state_))};
    case FsmState::transition_out:
      clear_queue("suspended");
      go_to(FsmState::suspending);
      return {true, idle_id_};
    case FsmState::transition_in:
    case FsmState::acting:
      break;
  }
  const Bus& current = buses_[static_cast<std::size_t>(audible_)];
  const double clock = current.action ? current.action->clock : 0.0;
  const double progress = action_duration_ > 0.0 ? clock / action_duration_ : 1.0;
  const std::string target = progress > 0.5 ? action_end_idle_ : action_start_idle_;
  // The start idle keeps running under the action; reuse its clock so the
  // crossfade lands exactly on what the idle channel is already playing.
  const double idle_clock = target == current.idle.clip ? current.idle.clock : 0.0;
  const int other = 1 - audible_;
  buses_[static_cast<std::size_t>(other)] = Bus{std::nullopt, ClipSlot{target, idle_clock}, 0.0};
  weight_ramp_.reset();
  crossfade_ramp_ = Ramp{crossfade_, static_cast<double>(other), 0.0, fade_};
  audible_ = other;
  idle_id_ = target;
  clear_queue("suspended");
  go_to(FsmState::suspending);
  return {true, target};
}

ControlResult OavFsm::set_live(bool on, const ClipLibrary& library) {
  if (on) {
    if (!binding_) return {false, "no live retarget binding for this avatar"};
    if (state_ == FsmState::live) return {false, "already live"};
    clear_queue("live control");
    frozen_ = output_;
    has_live_pose_ = false;
    for (auto& b : buses_) {
      b.action.reset();
      b.channel_weight = 0.0;
    }
    weight_ramp_.reset();
    crossfade_ramp_.reset();
    crossfade_ = static_cast<double>(audible_);
    action_id_.clear();
    live_ramp_ = Ramp{live_weight_, 1.0, 0.0, fade_};
    go_to(FsmState::live);
    return {true, ""};
  }
  if (state_ != FsmState::live) return {false, "not live"};
  const AnimationClip* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const AnimationClip* idle : library.idles()) {
    if (idle->skeleton_ref != skeleton_ref_) continue;
    const double d = pose_distance(output_, idle->samples.front().pose);
    if (d < best_d) {
      best_d = d;
      best = idle;
    }
  }
  if (!best) return {false, "no idle clip available"};
  frozen_ = output_;
  has_live_pose_ = false;
  Bus& bus = buses_[static_cast<std::size_t>(audible_)];
  bus = Bus{std::nullopt, ClipSlot{best->id, 0.0}, 0.0};
  live_weight_ = 1.0;
  live_ramp_ = Ramp{1.0, 0.0, 0.0, fade_};
  land_idle(best->id);
  return {true, best->id};
}

void OavFsm::push_stream_pose(const Pose& source_pose) {
  if (!binding_ || state_ != FsmState::live) return;
  binding_->apply_into(source_pose, live_pose_);
  has_live_pose_ = true;
}

void OavFsm::sample_bus(const Bus& bus, const ClipLibrary& library, Pose& out, Pose& scratch) const {
  const AnimationClip& idle = library.at(bus.idle.clip);
  if (bus.channel_weight >= 1.0 && bus.action) {
    sample_clip_into(library.at(bus.action->clip), bus.action->clock, out);
    return;
  }
  sampler_(idle, bus.idle.clock, out);
  if (bus.channel_weight > 0.0 && bus.action) {
    sample_clip_into(library.at(bus.action->clip), bus.action->clock, scratch);
    Pose mixed;
    lerp_pose_into(out, scratch, bus.channel_weight, mixed);
    out = std::move(mixed);
  }
}

void OavFsm::evaluate(const ClipLibrary& library) {
  mix_.clear();
  const double lw = live_weight_;
  if (state_ == FsmState::live) {
    const Pose& src = has_live_pose_ ? live_pose_ : frozen_;
    if (lw < 1.0) mix_.push_back({"held", 1.0 - lw});
    if (lw > 0.0) mix_.push_back({has_live_pose_ ? "live" : "held", lw});
    lerp_pose_into(frozen_, src, lw, output_);
    return;
  }

  const double share_b = crossfade_;
  const double share[2] = {1.0 - share_b, share_b};
  for (std::size_t b = 0; b < 2; ++b) {
    if (share[b] <= 0.0) continue;
    const Bus& bus = buses_[b];
    const double s = share[b] * (1.0 - lw);
    const std::string tag = b == 0 ? "A." : "B.";
    if (bus.channel_weight < 1.0) mix_.push_back({tag + "idle:" + bus.idle.clip, s * (1.0 - bus.channel_weight)});
    if (bus.channel_weight > 0.0 && bus.action)
      mix_.push_back({tag + "action:" + bus.action->clip, s * bus.channel_weight});
  }
  if (lw > 0.0) mix_.push_back({"live_exit", lw});

  Pose& bus_a = scratch_[0];
  Pose& bus_b = scratch_[1];
  Pose& tmp = scratch_[2];
  Pose& base = scratch_[3];
  if (share_b <= 0.0) {
    sample_bus(buses_[0], library, base, tmp);
  } else if (share_b >= 1.0) {
    sample_bus(buses_[1], library, base, tmp);
  } else {
    sample_bus(buses_[0], library, bus_a, tmp);
    sample_bus(buses_[1], library, bus_b, tmp);
    lerp_pose_into(bus_a, bus_b, share_b, base);
  }
  if (lw > 0.0) {
    lerp_pose_into(base, frozen_, lw, output_);
  } else {
    output_ = base;
  }
}

const Pose& OavFsm::tick(double dt, const ClipLibrary& library, const Pose* stream_source_pose) {
  if (!(dt > 0.0)) throw ContractError("tick dt must be positive");
  transitions_ = std::move(pending_transitions_);
  pending_transitions_.clear();
  if (stream_source_pose) push_stream_pose(*stream_source_pose);

  for (auto& b : buses_) {
    b.idle.clock += dt;
    if (b.action) b.action->clock += dt;
  }
  if (weight_ramp_) {
    weight_ramp_->elapsed += dt;
    buses_[static_cast<std::size_t>(audible_)].channel_weight = weight_ramp_->value();
  }
  if (crossfade_ramp_) {
    crossfade_ramp_->elapsed += dt;
    crossfade_ = crossfade_ramp_->value();
  }
  if (live_ramp_) {
    live_ramp_->elapsed += dt;
    live_weight_ = live_ramp_->value();
    if (live_ramp_->done()) live_ramp_.reset();
  }

  for (bool moved = true; moved;) {
    moved = false;
    switch (state_) {
      case FsmState::transition_in:
        if (weight_ramp_->done()) {
          weight_ramp_.reset();
          buses_[static_cast<std::size_t>(audible_)].channel_weight = 1.0;
          go_to(FsmState::acting);
          moved = true;
        }
        break;
      case FsmState::acting: {
        const Bus& bus = buses_[static_cast<std::size_t>(audible_)];
        if (bus.action->clock >= library.at(bus.action->clip).duration()) {
          start_transition_out(library);
          moved = true;
        }
        break;
      }
      case FsmState::transition_out:
      case FsmState::suspending:
        if (!crossfade_ramp_ || crossfade_ramp_->done()) {
          land_idle(idle_id_);
          drain_queue(library);
          moved = true;
        }
        break;
      case FsmState::idle:
      case FsmState::live:
        break;
    }
  }

  evaluate(library);
  transitions_.insert(transitions_.end(), pending_transitions_.begin(), pending_transitions_.end());
  pending_transitions_.clear();
  return output_;
}

FsmSnapshot OavFsm::snapshot() const {
  FsmSnapshot s;
  s.state = state_;
  s.idle_id = idle_id_;
  s.action_id = action_id_;
  s.buses = buses_;
  s.bus_crossfade = crossfade_;
  s.audible_bus = audible_;
  s.live_weight = live_weight_;
  s.mix = mix_;
  s.transitions = transitions_;
  s.transitions.insert(s.transitions.end(), pending_transitions_.begin(), pending_transitions_.end());
  s.queue.assign(queue_.begin(), queue_.end());
  return s;
}

}  // namespace castelet
