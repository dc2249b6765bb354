#pragma once

#include "castelet/engine.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace castelet {

// Operator events at fixed engine ticks. File form:
// {"duration": seconds, "events": [{"at": seconds | "tick": n, "message": {...}}]}
struct ScriptEvent {
  std::uint64_t tick = 0;
  nlohmann::json message;
};

struct Script {
  std::uint64_t ticks = 0;
  std::vector<ScriptEvent> events;  // sorted by tick, stable
};

Script script_from_json(const nlohmann::json& j, double tick_rate);

struct RenderResult {
  std::uint64_t ticks = 0;
  std::vector<std::string> hashes;
  std::string final_hash;
  std::vector<nlohmann::json> replies;
};

// Headless deterministic run: events quantized to ticks, applied before the
// tick they are stamped with.
RenderResult run_script(Engine& engine, const Script& script,
                        const std::function<void(const RenderFrame&)>& on_frame = {});

// Appends NDJSON records to a file, flushing every line.
class EventLogWriter {
 public:
  explicit EventLogWriter(const std::filesystem::path& path);
  void write(const nlohmann::json& record);
  EventSink sink();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// CASTELET_LOG_DIR if set, else ./logs.
std::filesystem::path session_log_dir();
std::filesystem::path new_session_log_path(const std::string& show_name);

struct ReplayResult {
  std::uint64_t ticks = 0;
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::optional<std::uint64_t> first_mismatch;
  std::string final_hash;
  bool ok() const { return compared > 0 && mismatches == 0; }
};

// Re-applies every control and mocap record of a session log at its tick and
// compares the recomputed frame hashes with the logged ones.
ReplayResult replay_log(Engine& engine, std::istream& log);

}  // namespace castelet
