#include "castelet/service.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

namespace castelet {

namespace {

struct StreamSlot {
  bool pending = false;
  std::uint32_t sequence = 0;
  std::vector<float> channels;
  std::uint64_t discarded = 0;
};

}  // namespace

struct EngineRunner::Impl {
  explicit Impl(Engine& e) : engine(e) {}

  Engine& engine;
  std::thread thread;
  std::atomic<bool> running{false};
  std::mutex wake_mutex;
  std::condition_variable wake;

  std::mutex task_mutex;
  std::deque<Task> tasks;

  std::mutex stream_mutex;
  std::map<std::string, StreamSlot> streams;
  std::map<std::string, HealthSource> health;

  mutable std::mutex listener_mutex;
  std::map<int, Listener> listeners;
  int next_listener = 0;
  std::shared_ptr<const Published> latest;

  void step() {
    std::deque<Task> todo;
    {
      std::lock_guard lock(task_mutex);
      todo.swap(tasks);
    }
    for (auto& t : todo) {
      try {
        t(engine);
      } catch (const std::exception&) {
      }
    }

    std::vector<std::tuple<std::string, std::uint32_t, std::vector<float>>> frames;
    std::map<std::string, std::uint64_t> discards;
    std::map<std::string, HealthSource> sources;
    {
      std::lock_guard lock(stream_mutex);
      for (auto& [oav, slot] : streams) {
        if (slot.pending) frames.emplace_back(oav, slot.sequence, std::move(slot.channels));
        slot.pending = false;
        slot.channels.clear();
        discards[oav] = slot.discarded;
      }
      sources = health;
    }
    for (auto& [oav, seq, ch] : frames) {
      try {
        engine.push_stream_channels(oav, seq, ch);
      } catch (const std::exception&) {
      }
    }
    for (auto& [oav, src] : sources) {
      StreamHealth h = src();
      h.discarded += discards[oav];
      engine.set_stream_health(oav, h);
    }

    auto pub = std::make_shared<Published>();
    pub->frame = std::make_shared<const RenderFrame>(engine.tick());
    pub->snapshot = std::make_shared<const EngineSnapshot>(engine.snapshot());
    pub->tick = engine.tick_count();
    pub->clock = engine.clock();
    pub->cursor = engine.cursor();
    std::shared_ptr<const Published> shared = std::move(pub);
    std::map<int, Listener> ls;
    {
      std::lock_guard lock(listener_mutex);
      latest = shared;
      ls = listeners;
    }
    for (auto& [id, l] : ls) l(shared);
  }

  void loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(engine.dt()));
    auto next = clock::now();
    while (running) {
      step();
      next += period;
      const auto now = clock::now();
      if (now - next > 5 * period) next = now;
      std::unique_lock lock(wake_mutex);
      wake.wait_until(lock, next, [&] { return !running; });
    }
  }
};

EngineRunner::EngineRunner(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}

EngineRunner::~EngineRunner() { stop(); }

void EngineRunner::start() {
  if (impl_->running.exchange(true)) return;
  impl_->thread = std::thread([this] { impl_->loop(); });
}

void EngineRunner::stop() {
  {
    std::lock_guard lock(impl_->wake_mutex);
    impl_->running = false;
  }
  impl_->wake.notify_all();
  if (impl_->thread.joinable()) impl_->thread.join();
}

bool EngineRunner::running() const { return impl_->running; }

void EngineRunner::post(Task task) {
  std::lock_guard lock(impl_->task_mutex);
  impl_->tasks.push_back(std::move(task));
}

void EngineRunner::post_stream(const std::string& oav, std::uint32_t sequence, std::vector<float> channels) {
  std::lock_guard lock(impl_->stream_mutex);
  StreamSlot& slot = impl_->streams[oav];
  if (slot.pending) ++slot.discarded;
  slot.pending = true;
  slot.sequence = sequence;
  slot.channels = std::move(channels);
}

void EngineRunner::add_health_source(const std::string& oav, HealthSource source) {
  std::lock_guard lock(impl_->stream_mutex);
  impl_->health[oav] = std::move(source);
}

int EngineRunner::add_listener(Listener listener) {
  std::lock_guard lock(impl_->listener_mutex);
  const int id = impl_->next_listener++;
  impl_->listeners.emplace(id, std::move(listener));
  return id;
}

void EngineRunner::remove_listener(int id) {
  std::lock_guard lock(impl_->listener_mutex);
  impl_->listeners.erase(id);
}

std::shared_ptr<const Published> EngineRunner::latest() const {
  std::lock_guard lock(impl_->listener_mutex);
  return impl_->latest;
}

void EngineRunner::step() { impl_->step(); }

}  // namespace castelet
