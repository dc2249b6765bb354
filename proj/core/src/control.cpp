#include "castelet/control.hpp"

#include "castelet/error.hpp"

#include <array>
#include <cmath>

namespace castelet {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ControlType, std::string_view>, 11> kNames{{
    {ControlType::go, "go"},
    {ControlType::back, "back"},
    {ControlType::goto_cue, "goto"},
    {ControlType::suspend, "suspend"},
    {ControlType::set_live, "set_live"},
    {ControlType::reset, "reset"},
    {ControlType::subscribe_frames, "subscribe_frames"},
    {ControlType::subscribe_state, "subscribe_state"},
    {ControlType::ping, "ping"},
    {ControlType::start_recording, "start_recording"},
    {ControlType::stop_recording, "stop_recording"},
}};

const json& arg(const json& args, const char* name) {
  if (!args.contains(name) || args.at(name).is_null()) throw ControlError(std::string("missing argument '") + name + "'");
  return args.at(name);
}

std::string oav_arg(const json& args) {
  const json& v = arg(args, "oav");
  if (!v.is_string() || v.get<std::string>().empty()) throw ControlError("argument 'oav' must be a non-empty string");
  return v.get<std::string>();
}

json outcome_json(const StepOutcome& o) {
  return {{"ok", o.status != "rejected"}, {"status", o.status}, {"target", o.target}, {"detail", o.detail}};
}

json cursor_json(const CursorResult& r) {
  json j = {{"ok", r.ok}, {"status", r.status}};
  if (!r.ok) j["error"] = r.status;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

}  // namespace

std::string_view to_string(ControlType t) {
  for (const auto& [k, n] : kNames)
    if (k == t) return n;
  return "?";
}

bool ControlMessage::touches_engine() const {
  return type != ControlType::subscribe_frames && type != ControlType::subscribe_state && type != ControlType::ping;
}

json ControlMessage::to_json() const {
  json j = {{"type", std::string(to_string(type))}};
  switch (type) {
    case ControlType::goto_cue: j["args"] = {{"index", index}}; break;
    case ControlType::suspend:
    case ControlType::start_recording: j["args"] = {{"oav", oav}}; break;
    case ControlType::set_live: j["args"] = {{"oav", oav}, {"on", on}}; break;
    case ControlType::subscribe_frames: j["args"] = {{"rate", rate}, {"on", on}}; break;
    case ControlType::subscribe_state: j["args"] = {{"on", on}}; break;
    default: break;
  }
  if (!id.is_null()) j["id"] = id;
  return j;
}

ControlMessage parse_control(const json& j) {
  if (!j.is_object()) throw ControlError("message must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) throw ControlError("message needs a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  ControlMessage m;
  bool known = false;
  for (const auto& [k, n] : kNames)
    if (n == type) {
      m.type = k;
      known = true;
    }
  if (!known) throw ControlError("unknown message type '" + type + "'");
  if (j.contains("id")) m.id = j.at("id");
  const json args = j.value("args", json::object());
  if (!args.is_object()) throw ControlError("'args' must be an object");

  switch (m.type) {
    case ControlType::goto_cue: {
      const json& v = arg(args, "index");
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ControlError("argument 'index' must be a nonnegative integer");
      m.index = v.get<std::size_t>();
      break;
    }
    case ControlType::suspend:
    case ControlType::start_recording: m.oav = oav_arg(args); break;
    case ControlType::set_live: {
      m.oav = oav_arg(args);
      const json& v = arg(args, "on");
      if (!v.is_boolean()) throw ControlError("argument 'on' must be a boolean");
      m.on = v.get<bool>();
      break;
    }
    case ControlType::subscribe_frames:
      if (args.contains("rate")) {
        const json& v = args.at("rate");
        if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>()))
          throw ControlError("argument 'rate' must be a positive number");
        m.rate = v.get<double>();
      }
      [[fallthrough]];
    case ControlType::subscribe_state:
      if (args.contains("on")) {
        if (!args.at("on").is_boolean()) throw ControlError("argument 'on' must be a boolean");
        m.on = args.at("on").get<bool>();
      }
      break;
    default: break;
  }
  return m;
}

ControlMessage parse_control(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ControlError(std::string("malformed JSON: ") + e.what());
  }
  return parse_control(j);
}

json apply_control(Engine& engine, const ControlMessage& msg, const TakeHandler& on_take) {
  switch (msg.type) {
    case ControlType::go: {
      const GoResult r = engine.go();
      json j = to_json(r);
      j["ok"] = r.fired;
      if (!r.fired) j["error"] = r.status;
      return j;
    }
    case ControlType::back: return cursor_json(engine.back());
    case ControlType::goto_cue: return cursor_json(engine.goto_cue(msg.index));
    case ControlType::suspend: return outcome_json(engine.suspend(msg.oav));
    case ControlType::set_live: return outcome_json(engine.set_live(msg.oav, msg.on));
    case ControlType::reset: engine.reset(); return {{"ok", true}};
    case ControlType::start_recording:
      try {
        engine.start_recording(msg.oav);
        return {{"ok", true}};
      } catch (const ContractError& e) {
        return {{"ok", false}, {"error", e.what()}};
      }
    case ControlType::stop_recording:
      try {
        const Take t = engine.stop_recording();
        json j = {{"ok", true}, {"samples", t.samples.size()}, {"frame_time", t.frame_time}};
        if (on_take && !t.samples.empty()) j["path"] = on_take(t);
        return j;
      } catch (const ContractError& e) {
        return {{"ok", false}, {"error", e.what()}};
      }
    case ControlType::ping: return {{"ok", true}, {"pong", engine.clock()}};
    default: return {{"ok", true}};
  }
}

json make_ack(const ControlMessage& msg, json result, std::size_t cursor, double clock) {
  json j = {{"type", "ack"}, {"request", std::string(to_string(msg.type))}, {"cursor", cursor}, {"clock", clock},
            {"result", std::move(result)}};
  if (!msg.id.is_null()) j["id"] = msg.id;
  return j;
}

json make_error(const json& id, std::string_view message, std::size_t cursor, double clock) {
  json j = {{"type", "error"}, {"message", message}, {"cursor", cursor}, {"clock", clock}};
  if (!id.is_null()) j["id"] = id;
  return j;
}

json make_reply(const ControlMessage& msg, json result, std::size_t cursor, double clock) {
  if (result.value("ok", true)) return make_ack(msg, std::move(result), cursor, clock);
  json j = make_error(msg.id, result.value("error", "request refused"), cursor, clock);
  j["request"] = std::string(to_string(msg.type));
  j["result"] = std::move(result);
  return j;
}

}  // namespace castelet
