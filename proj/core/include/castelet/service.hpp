#pragma once

#include "castelet/bvh.hpp"
#include "castelet/engine.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace castelet {

// What the engine thread publishes after every tick. Immutable once shared.
struct Published {
  std::uint64_t tick = 0;
  double clock = 0.0;
  std::size_t cursor = 0;
  std::shared_ptr<const RenderFrame> frame;
  std::shared_ptr<const EngineSnapshot> snapshot;
};

// Runs an Engine on its own thread at a fixed timestep. Other threads reach
// the engine only through post() and the latest-wins stream slots.
class EngineRunner {
 public:
  using Task = std::function<void(Engine&)>;
  using Listener = std::function<void(const std::shared_ptr<const Published>&)>;
  using HealthSource = std::function<StreamHealth()>;

  explicit EngineRunner(Engine& engine);
  ~EngineRunner();
  EngineRunner(const EngineRunner&) = delete;
  EngineRunner& operator=(const EngineRunner&) = delete;

  void start();
  void stop();
  bool running() const;

  // Operator events: ordered, never dropped, run before the next tick.
  void post(Task task);
  // Newest frame per avatar wins; superseded frames are counted as discarded.
  void post_stream(const std::string& oav, std::uint32_t sequence, std::vector<float> channels);
  void add_health_source(const std::string& oav, HealthSource source);

  int add_listener(Listener listener);
  void remove_listener(int id);
  std::shared_ptr<const Published> latest() const;

  // Runs the loop body once on the calling thread; for tests without start().
  void step();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ControlServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  double max_frame_rate = 60.0;
  double default_frame_rate = 30.0;
  std::size_t max_queued_frames = 8;
  std::function<std::string(const Take&)> on_take;  // stop_recording output
};

// WebSocket JSON control protocol.
class ControlServer {
 public:
  ControlServer(EngineRunner& runner, ControlServerOptions options);
  ~ControlServer();
  void start();
  void stop();
  std::uint16_t port() const;
  std::size_t session_count() const;

 struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

struct MocapServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;
  std::string oav;
};

// Raw TCP mocap listener for one avatar; one connection at a time.
class MocapServer {
 public:
  MocapServer(EngineRunner& runner, const Engine& engine, MocapServerOptions options);
  ~MocapServer();
  void start();
  void stop();
  std::uint16_t port() const;
  StreamHealth health() const;
  std::string last_rejection() const;

 struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

struct StreamClientOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  double rate = 0.0;  // frames per second; 0 sends as fast as possible
  std::uint32_t first_sequence = 0;
  double handshake_wait = 0.2;  // seconds to wait for a rejection line
};

// Sends a BVH document over the mocap wire protocol. Returns the server's
// rejection reason, or an empty string when every frame was sent.
std::string stream_bvh(const BvhDocument& doc, const StreamClientOptions& options);

}  // namespace castelet
