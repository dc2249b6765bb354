#include "castelet/engine.hpp"

#include "castelet/error.hpp"
#include "castelet/frame_io.hpp"

#include <algorithm>
#include <limits>

namespace castelet {

using nlohmann::json;

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
constexpr double kDueEpsilon = 1e-9;

std::string step_kind(const CueStep& s) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, step::TriggerAction>) return "trigger";
        else if constexpr (std::is_same_v<T, step::Suspend>) return "suspend";
        else if constexpr (std::is_same_v<T, step::SetLive>) return "set_live";
        else if constexpr (std::is_same_v<T, step::Effect>) return "effect";
        else return "wait";
      },
      s);
}

std::string step_target(const CueStep& s) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, step::Effect>) return describe(x.effect);
        else if constexpr (std::is_same_v<T, step::Wait>) return "";
        else return x.oav;
      },
      s);
}

json bus_json(const Bus& b) {
  json j = {{"idle", b.idle.clip}, {"idle_clock", b.idle.clock}, {"channel_weight", b.channel_weight}};
  if (b.action) {
    j["action"] = b.action->clip;
    j["action_clock"] = b.action->clock;
  } else {
    j["action"] = nullptr;
  }
  return j;
}

}  // namespace

std::string_view to_string(RecordingState s) {
  switch (s) {
    case RecordingState::stopped: return "stopped";
    case RecordingState::armed: return "armed";
    case RecordingState::rolling: return "rolling";
  }
  return "?";
}

json to_json(const FsmSnapshot& s) {
  json mix = json::array(), transitions = json::array();
  for (const auto& m : s.mix) mix.push_back({{"source", m.source}, {"weight", m.weight}});
  for (const auto& t : s.transitions)
    transitions.push_back({{"from", std::string(to_string(t.from))}, {"to", std::string(to_string(t.to))}});
  return {{"state", std::string(to_string(s.state))},
          {"idle", s.idle_id},
          {"action", s.action_id},
          {"buses", {bus_json(s.buses[0]), bus_json(s.buses[1])}},
          {"bus_crossfade", s.bus_crossfade},
          {"audible_bus", s.audible_bus},
          {"live_weight", s.live_weight},
          {"mix", mix},
          {"transitions", transitions},
          {"queue", s.queue}};
}

json to_json(const StreamHealth& h) {
  return {{"connected", h.connected}, {"frames_per_second", h.frames_per_second},
          {"frames", h.frames},       {"sequence_gaps", h.sequence_gaps},
          {"dropped", h.dropped},     {"discarded", h.discarded},
          {"last_frame_age", h.last_frame_age}};
}

json to_json(const EngineSnapshot& s) {
  json oavs = json::array(), streams = json::object();
  for (const auto& o : s.oavs)
    oavs.push_back({{"id", o.id}, {"visible", o.visible}, {"casts_shadow", o.casts_shadow}, {"fsm", to_json(o.fsm)}});
  for (const auto& [id, h] : s.streams) streams[id] = to_json(h);
  return {{"tick", s.tick},
          {"clock", s.clock},
          {"cursor", s.cursor},
          {"cue_count", s.cue_count},
          {"oavs", oavs},
          {"recording",
           {{"oav", s.recording.oav},
            {"state", std::string(to_string(s.recording.state))},
            {"samples", s.recording.samples}}},
          {"streams", streams},
          {"notices", s.notices}};
}

json to_json(const GoResult& r) {
  json steps = json::array();
  for (const auto& o : r.steps)
    steps.push_back({{"step", o.step}, {"kind", o.kind}, {"target", o.target}, {"status", o.status}, {"detail", o.detail}});
  return {{"fired", r.fired}, {"status", r.status}, {"cue", r.cue},
          {"label", r.label}, {"steps", steps},     {"cursor", r.cursor}};
}

Engine::Engine(Show show) : pristine_(show), show_(std::move(show)) {
  if (!(show_.tick_rate > 0.0)) throw ContractError("tick_rate must be positive");
  if (!show_.library) throw ContractError("show has no clip library");
  if (show_.avatars.size() != show_.scene.oavs.size()) throw ContractError("avatar configs do not match scene avatars");
  build();
}

void Engine::build() {
  fsms_.clear();
  streams_.clear();
  fsms_.reserve(show_.avatars.size());
  for (const auto& a : show_.avatars) {
    fsms_.emplace_back(*show_.library, a.initial_idle, a.fade_duration);
    StreamSlot slot;
    if (a.live) {
      fsms_.back().set_live_binding(a.live->binding);
      slot.layout = std::make_shared<const ChannelLayout>(a.live->binding->source());
      slot.unit_scale = a.live->unit_scale;
    }
    streams_.push_back(std::move(slot));
  }
  poses_.resize(fsms_.size());
  for (std::size_t i = 0; i < fsms_.size(); ++i) poses_[i] = fsms_[i].output();
  scheduled_.clear();
  rec_state_ = RecordingState::stopped;
  rec_samples_.clear();
  rec_oav_.clear();
}

void Engine::set_event_sink(EventSink sink) {
  sink_ = std::move(sink);
  log("session", {{"type", "session"}, {"show", show_.name}, {"tick_rate", show_.tick_rate}, {"dt", dt()}});
}

void Engine::log(const std::string& source, json event) {
  if (!sink_) return;
  sink_(json{{"tick", tick_}, {"source", source}, {"event", std::move(event)}});
}

void Engine::notice(std::string message) {
  notices_.push_back(std::move(message));
  if (notices_.size() > 256) notices_.erase(notices_.begin());
}

std::size_t Engine::oav_index(const std::string& id) const {
  for (std::size_t i = 0; i < show_.scene.oavs.size(); ++i)
    if (show_.scene.oavs[i].id == id) return i;
  return npos;
}

StepOutcome Engine::apply_step(const CueStep& s, std::size_t index) {
  StepOutcome out;
  out.step = index;
  out.kind = step_kind(s);
  out.target = step_target(s);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, step::Effect>) {
          try {
            apply_scene_effect_in_place(show_.scene, x.effect);
            out.status = "applied";
          } catch (const EffectError& e) {
            out.status = "rejected";
            out.detail = e.what();
          }
        } else if constexpr (std::is_same_v<T, step::Wait>) {
          out.status = "applied";
          out.detail = "wait " + std::to_string(x.seconds) + " s";
        } else {
          const std::size_t i = oav_index(x.oav);
          if (i == npos) {
            out.status = "rejected";
            out.detail = "unknown oav '" + x.oav + "'";
            return;
          }
          if constexpr (std::is_same_v<T, step::TriggerAction>) {
            const TriggerResult r = fsms_[i].trigger_action(x.action, *show_.library);
            out.status = std::string(to_string(r.outcome));
            out.detail = r.reason.empty() ? x.action : x.action + ": " + r.reason;
          } else if constexpr (std::is_same_v<T, step::Suspend>) {
            const ControlResult r = fsms_[i].suspend();
            out.status = r.applied ? "applied" : "noop";
            out.detail = r.detail;
          } else {
            const ControlResult r = fsms_[i].set_live(x.on, *show_.library);
            out.status = r.applied ? "applied" : "rejected";
            out.detail = r.detail;
          }
        }
      },
      s);
  return out;
}

GoResult Engine::go() {
  log("control", {{"type", "go"}});
  GoResult r;
  if (show_.cursor >= show_.cues.size()) {
    r.status = "end of show";
    r.cursor = show_.cursor;
    return r;
  }
  const Cue& cue = show_.cues[show_.cursor];
  ++show_.cursor;
  r.fired = true;
  r.status = "fired";
  r.cue = cue.index;
  r.label = cue.label;
  double offset = 0.0;
  for (std::size_t k = 0; k < cue.steps.size(); ++k) {
    const CueStep& s = cue.steps[k];
    if (const auto* w = std::get_if<step::Wait>(&s)) {
      offset += w->seconds;
      r.steps.push_back(apply_step(s, k));
      continue;
    }
    if (offset > 0.0) {
      Scheduled sc{show_.clock + offset, cue.index, k, s};
      const auto at = std::upper_bound(scheduled_.begin(), scheduled_.end(), sc.due,
                                       [](double due, const Scheduled& e) { return due < e.due; });
      scheduled_.insert(at, std::move(sc));
      r.steps.push_back({k, step_kind(s), step_target(s), "scheduled", "in " + std::to_string(offset) + " s"});
      continue;
    }
    r.steps.push_back(apply_step(s, k));
  }
  r.cursor = show_.cursor;
  return r;
}

CursorResult Engine::back() {
  log("control", {{"type", "back"}});
  if (show_.cursor == 0) return {false, "already at first cue", "", 0};
  --show_.cursor;
  return {true, "ok", "cursor moved without rolling back the stage; state and cursor may disagree", show_.cursor};
}

CursorResult Engine::goto_cue(std::size_t index) {
  log("control", {{"type", "goto"}, {"args", {{"index", index}}}});
  if (index > show_.cues.size()) return {false, "index out of range", "", show_.cursor};
  show_.cursor = index;
  return {true, "ok", "cursor moved without rolling back the stage; state and cursor may disagree", show_.cursor};
}

StepOutcome Engine::suspend(const std::string& oav) {
  log("control", {{"type", "suspend"}, {"args", {{"oav", oav}}}});
  return apply_step(step::Suspend{oav}, 0);
}

StepOutcome Engine::set_live(const std::string& oav, bool on) {
  log("control", {{"type", "set_live"}, {"args", {{"oav", oav}, {"on", on}}}});
  return apply_step(step::SetLive{oav, on}, 0);
}

void Engine::reset() {
  log("control", {{"type", "reset"}});
  show_ = pristine_;
  build();
  for (std::size_t i = 0; i < fsms_.size(); ++i) poses_[i] = fsms_[i].output();
  notice("show reset to its initial state");
}

void Engine::start_recording(const std::string& oav) {
  log("control", {{"type", "start_recording"}, {"args", {{"oav", oav}}}});
  if (rec_state_ != RecordingState::stopped) throw ContractError("a recording is already rolling");
  const std::size_t i = oav_index(oav);
  if (i == npos) throw ContractError("unknown oav '" + oav + "'");
  if (fsms_[i].state() != FsmState::live) throw ContractError("oav '" + oav + "' is not live");
  rec_oav_ = oav;
  rec_state_ = RecordingState::armed;
  rec_samples_.clear();
}

Take Engine::stop_recording() {
  log("control", {{"type", "stop_recording"}});
  if (rec_state_ == RecordingState::stopped) throw ContractError("no recording is rolling");
  Take take;
  take.id = rec_oav_ + "_take";
  take.skeleton_ref = show_.scene.oavs[oav_index(rec_oav_)].rig->id;
  take.samples = std::move(rec_samples_);
  take.frame_time = rec_dt_;
  rec_samples_.clear();
  rec_state_ = RecordingState::stopped;
  return take;
}

void Engine::push_stream_channels(const std::string& oav, std::uint32_t sequence, std::span<const float> channels) {
  const std::size_t i = oav_index(oav);
  if (i == npos) throw ContractError("unknown oav '" + oav + "'");
  StreamSlot& slot = streams_[i];
  if (!slot.layout) throw ContractError("oav '" + oav + "' has no live retarget");
  if (channels.size() != slot.layout->channel_count())
    throw ContractError("stream frame has " + std::to_string(channels.size()) + " channels, expected " +
                        std::to_string(slot.layout->channel_count()));
  if (sink_) log("mocap", {{"oav", oav}, {"seq", sequence}, {"channels", channels}});
  row_.assign(channels.begin(), channels.end());
  if (slot.pending) ++slot.discarded;
  else slot.pending.emplace();
  slot.layout->to_pose(row_, slot.unit_scale, *slot.pending);
  ++slot.received;
}

void Engine::set_stream_health(const std::string& oav, const StreamHealth& health) { external_health_[oav] = health; }

const RenderFrame& Engine::tick(double dt) {
  if (!(dt > 0.0)) throw ContractError("tick dt must be positive");
  while (!scheduled_.empty() && scheduled_.front().due <= show_.clock + kDueEpsilon) {
    Scheduled sc = std::move(scheduled_.front());
    scheduled_.pop_front();
    const StepOutcome o = apply_step(sc.action, sc.step);
    notice("cue " + std::to_string(sc.cue) + " step " + std::to_string(sc.step) + " (" + o.kind + " " + o.target +
           "): " + o.status + (o.detail.empty() ? "" : " - " + o.detail));
  }

  const ClipLibrary& lib = *show_.library;
  for (std::size_t i = 0; i < fsms_.size(); ++i) {
    StreamSlot& slot = streams_[i];
    poses_[i] = fsms_[i].tick(dt, lib, slot.pending ? &*slot.pending : nullptr);
    slot.pending.reset();
    for (auto& n : fsms_[i].take_notices()) notice(show_.scene.oavs[i].id + ": " + n.message);
  }

  if (rec_state_ != RecordingState::stopped) {
    const std::size_t i = oav_index(rec_oav_);
    if (fsms_[i].state() == FsmState::live) {
      if (rec_state_ == RecordingState::armed) {
        rec_state_ = RecordingState::rolling;
        rec_start_ = show_.clock;
        rec_dt_ = dt;
      }
      rec_samples_.push_back({show_.clock - rec_start_, fsms_[i].live_pose()});
    } else if (rec_state_ == RecordingState::rolling) {
      notice("recording of '" + rec_oav_ + "' paused: oav left live");
    }
  }

  frame_ = compose_frame(show_.scene, poses_, tick_, show_.clock);
  if (hash_frames_ && sink_) log("engine", {{"type", "frame"}, {"hash", frame_hash(frame_)}});
  show_.clock += dt;
  ++tick_;
  return frame_;
}

EngineSnapshot Engine::snapshot() {
  EngineSnapshot s;
  s.tick = tick_;
  s.clock = show_.clock;
  s.cursor = show_.cursor;
  s.cue_count = show_.cues.size();
  for (std::size_t i = 0; i < fsms_.size(); ++i) {
    const OavInstance& o = show_.scene.oavs[i];
    s.oavs.push_back({o.id, fsms_[i].snapshot(), o.visible, o.casts_shadow});
    if (!streams_[i].layout) continue;
    StreamHealth h;
    if (const auto it = external_health_.find(o.id); it != external_health_.end()) h = it->second;
    h.discarded += streams_[i].discarded;
    if (h.frames == 0) h.frames = streams_[i].received;
    s.streams[o.id] = h;
  }
  s.recording = {rec_oav_, rec_state_, rec_samples_.size()};
  s.notices = std::exchange(notices_, {});
  return s;
}

}  // namespace castelet
