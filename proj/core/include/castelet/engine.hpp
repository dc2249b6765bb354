#pragma once

#include "castelet/bvh.hpp"
#include "castelet/fsm.hpp"
#include "castelet/scene.hpp"
#include "castelet/show.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace castelet {

struct StepOutcome {
  std::size_t step = 0;
  std::string kind;    // trigger, suspend, set_live, effect, wait
  std::string target;  // oav, light or screen
  std::string status;  // accepted, queued, rejected, applied, noop, scheduled
  std::string detail;
};

struct GoResult {
  bool fired = false;
  std::string status;  // "fired" or "end of show"
  std::size_t cue = 0;
  std::string label;
  std::vector<StepOutcome> steps;
  std::size_t cursor = 0;
};

struct CursorResult {
  bool ok = false;
  std::string status;
  std::string warning;
  std::size_t cursor = 0;
};

enum class RecordingState { stopped, armed, rolling };
std::string_view to_string(RecordingState s);

struct RecordingStatus {
  std::string oav;
  RecordingState state = RecordingState::stopped;
  std::size_t samples = 0;
};

struct StreamHealth {
  bool connected = false;
  double frames_per_second = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t sequence_gaps = 0;
  std::uint64_t dropped = 0;    // out-of-order frames
  std::uint64_t discarded = 0;  // superseded before a tick consumed them
  double last_frame_age = 0.0;
};

struct OavSnapshot {
  std::string id;
  FsmSnapshot fsm;
  bool visible = true;
  bool casts_shadow = true;
};

struct EngineSnapshot {
  std::uint64_t tick = 0;
  double clock = 0.0;
  std::size_t cursor = 0;
  std::size_t cue_count = 0;
  std::vector<OavSnapshot> oavs;
  RecordingStatus recording;
  std::map<std::string, StreamHealth> streams;
  std::vector<std::string> notices;  // since the previous snapshot
};

nlohmann::json to_json(const FsmSnapshot& s);
nlohmann::json to_json(const EngineSnapshot& s);
nlohmann::json to_json(const GoResult& r);
nlohmann::json to_json(const StreamHealth& h);

// One event-log record: {"tick", "source", "event"}.
using EventSink = std::function<void(const nlohmann::json&)>;

// Owns a show, one FSM per avatar, the cue cursor and the recorder. Not
// thread-safe: one thread drives it.
class Engine {
 public:
  explicit Engine(Show show);

  void set_event_sink(EventSink sink);
  // When on, every tick logs the frame hash (needs a sink).
  void set_hash_frames(bool on) { hash_frames_ = on; }

  GoResult go();
  CursorResult back();
  CursorResult goto_cue(std::size_t index);
  StepOutcome suspend(const std::string& oav);
  StepOutcome set_live(const std::string& oav, bool on);
  void reset();

  void start_recording(const std::string& oav);  // throws ContractError
  Take stop_recording();                          // throws ContractError

  // Mocap channels for one avatar, in the bound source skeleton's channel
  // order. Latest wins until the next tick.
  void push_stream_channels(const std::string& oav, std::uint32_t sequence, std::span<const float> channels);
  void set_stream_health(const std::string& oav, const StreamHealth& health);

  const RenderFrame& tick(double dt);
  const RenderFrame& tick() { return tick(dt()); }

  EngineSnapshot snapshot();
  const RenderFrame& last_frame() const { return frame_; }

  double dt() const { return 1.0 / show_.tick_rate; }
  std::uint64_t tick_count() const { return tick_; }
  double clock() const { return show_.clock; }
  std::size_t cursor() const { return show_.cursor; }
  const Show& show() const { return show_; }
  const OavFsm& fsm(std::size_t i) const { return fsms_.at(i); }

 private:
  struct Scheduled {
    double due = 0.0;
    std::size_t cue = 0;
    std::size_t step = 0;
    CueStep action;
  };
  struct StreamSlot {
    std::optional<Pose> pending;
    std::uint64_t received = 0;
    std::uint64_t discarded = 0;
    std::shared_ptr<const ChannelLayout> layout;
    double unit_scale = 0.01;
  };

  void build();
  StepOutcome apply_step(const CueStep& s, std::size_t index);
  std::size_t oav_index(const std::string& id) const;
  void log(const std::string& source, nlohmann::json event);
  void notice(std::string message);

  Show pristine_;
  Show show_;
  std::vector<OavFsm> fsms_;
  std::vector<StreamSlot> streams_;
  std::map<std::string, StreamHealth> external_health_;
  std::deque<Scheduled> scheduled_;
  std::vector<Pose> poses_;
  RenderFrame frame_;
  std::uint64_t tick_ = 0;

  std::string rec_oav_;
  RecordingState rec_state_ = RecordingState::stopped;
  std::vector<PoseSample> rec_samples_;
  double rec_dt_ = 0.0;
  double rec_start_ = 0.0;

  EventSink sink_;
  bool hash_frames_ = false;
  std::vector<std::string> notices_;
  std::vector<double> row_;
};

}  // namespace castelet
