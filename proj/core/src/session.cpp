#include "castelet/session.hpp"

#include "castelet/control.hpp"
#include "castelet/error.hpp"
#include "castelet/frame_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace castelet {

using nlohmann::json;

Script script_from_json(const json& j, double tick_rate) {
  Script s;
  const double duration = j.value("duration", 0.0);
  if (!(duration >= 0.0)) throw ValidationError("script duration must be nonnegative");
  s.ticks = j.contains("ticks") ? j.at("ticks").get<std::uint64_t>()
                                : static_cast<std::uint64_t>(std::llround(duration * tick_rate));
  for (const auto& e : j.value("events", json::array())) {
    ScriptEvent ev;
    if (e.contains("tick")) {
      ev.tick = e.at("tick").get<std::uint64_t>();
    } else {
      const double at = e.at("at").get<double>();
      if (!(at >= 0.0)) throw ValidationError("script event time must be nonnegative");
      ev.tick = static_cast<std::uint64_t>(std::llround(at * tick_rate));
    }
    ev.message = e.at("message");
    parse_control(ev.message);
    s.events.push_back(std::move(ev));
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const ScriptEvent& a, const ScriptEvent& b) { return a.tick < b.tick; });
  if (!s.events.empty()) s.ticks = std::max(s.ticks, s.events.back().tick + 1);
  return s;
}

RenderResult run_script(Engine& engine, const Script& script, const std::function<void(const RenderFrame&)>& on_frame) {
  RenderResult r;
  std::size_t next = 0;
  const std::uint64_t start = engine.tick_count();
  for (std::uint64_t t = 0; t < script.ticks; ++t) {
    while (next < script.events.size() && script.events[next].tick <= t) {
      const ControlMessage msg = parse_control(script.events[next].message);
      json result = msg.touches_engine() ? apply_control(engine, msg) : json{{"ok", true}};
      r.replies.push_back(make_reply(msg, std::move(result), engine.cursor(), engine.clock()));
      ++next;
    }
    const RenderFrame& f = engine.tick();
    r.hashes.push_back(frame_hash(f));
    if (on_frame) on_frame(f);
  }
  r.ticks = engine.tick_count() - start;
  if (!r.hashes.empty()) r.final_hash = r.hashes.back();
  return r;
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw ValidationError("cannot open event log '" + path.string() + "'");
}

void EventLogWriter::write(const json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
}

EventSink EventLogWriter::sink() {
  return [this](const json& r) { write(r); };
}

std::filesystem::path session_log_dir() {
  if (const char* dir = std::getenv("CASTELET_LOG_DIR"); dir && *dir) return dir;
  return std::filesystem::current_path() / "logs";
}

std::filesystem::path new_session_log_path(const std::string& show_name) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  std::string stem = show_name.empty() ? "session" : show_name;
  std::replace_if(stem.begin(), stem.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); }, '_');
  return session_log_dir() / (stem + "-" + std::to_string(ms) + ".ndjson");
}

ReplayResult replay_log(Engine& engine, std::istream& log) {
  std::vector<json> records;
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(n, e.what());
    }
  }

  double dt = engine.dt();
  std::map<std::uint64_t, std::string> expected;
  std::uint64_t last_tick = 0;
  bool any = false;
  for (const auto& r : records) {
    const std::string source = r.at("source").get<std::string>();
    const json& ev = r.at("event");
    if (source == "session") dt = ev.value("dt", dt);
    if (source == "engine" && ev.value("type", "") == "frame") {
      const auto t = r.at("tick").get<std::uint64_t>();
      expected[t] = ev.at("hash").get<std::string>();
      last_tick = std::max(last_tick, t);
      any = true;
    }
  }

  ReplayResult result;
  if (!any) return result;
  const std::uint64_t base = records.empty() ? 0 : records.front().at("tick").get<std::uint64_t>();
  std::size_t next = 0;
  std::vector<float> channels;
  for (std::uint64_t t = base; t <= last_tick; ++t) {
    for (; next < records.size() && records[next].at("tick").get<std::uint64_t>() <= t; ++next) {
      const json& r = records[next];
      const std::string source = r.at("source").get<std::string>();
      const json& ev = r.at("event");
      if (source == "control") {
        const ControlMessage msg = parse_control(ev);
        if (msg.touches_engine()) apply_control(engine, msg);
      } else if (source == "mocap") {
        channels = ev.at("channels").get<std::vector<float>>();
        engine.push_stream_channels(ev.at("oav").get<std::string>(), ev.at("seq").get<std::uint32_t>(), channels);
      }
    }
    const std::string h = frame_hash(engine.tick(dt));
    ++result.ticks;
    result.final_hash = h;
    if (const auto it = expected.find(t); it != expected.end()) {
      ++result.compared;
      if (it->second != h) {
        ++result.mismatches;
        if (!result.first_mismatch) result.first_mismatch = t;
      }
    }
  }
  return result;
}

}  // namespace castelet
