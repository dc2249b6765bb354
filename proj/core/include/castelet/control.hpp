#pragma once

#include "castelet/engine.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace castelet {

enum class ControlType {
  go,
  back,
  goto_cue,
  suspend,
  set_live,
  reset,
  subscribe_frames,
  subscribe_state,
  ping,
  start_recording,
  stop_recording,
};

std::string_view to_string(ControlType t);

// {"type": ..., "args": {...}, "id": <echoed>}
struct ControlMessage {
  ControlType type = ControlType::ping;
  std::size_t index = 0;  // goto
  std::string oav;        // suspend, set_live, start_recording
  bool on = true;         // set_live, subscribe_*
  double rate = 30.0;     // subscribe_frames, frames per second
  nlohmann::json id;      // client correlation id, echoed in the reply

  bool touches_engine() const;
  nlohmann::json to_json() const;
};

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejects unknown types and malformed arguments with ControlError.
ControlMessage parse_control(const nlohmann::json& j);
ControlMessage parse_control(std::string_view text);

// Receives the take produced by stop_recording; returns where it was stored.
using TakeHandler = std::function<std::string(const Take&)>;

// Applies one engine-bound message. Returns the "result" part of the ack;
// engine-level refusals come back as {"ok": false, "error": ...}.
nlohmann::json apply_control(Engine& engine, const ControlMessage& msg, const TakeHandler& on_take = {});

nlohmann::json make_ack(const ControlMessage& msg, nlohmann::json result, std::size_t cursor, double clock);
nlohmann::json make_error(const nlohmann::json& id, std::string_view message, std::size_t cursor, double clock);
// Ack for accepted results; an error reply (still carrying the result) when
// the engine refused the request.
nlohmann::json make_reply(const ControlMessage& msg, nlohmann::json result, std::size_t cursor, double clock);

}  // namespace castelet
