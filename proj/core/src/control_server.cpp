#include "castelet/control.hpp"
#include "castelet/frame_io.hpp"
#include "castelet/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <deque>
#include <limits>
#include <thread>

namespace castelet {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

class Session;

}  // namespace

struct ControlServer::Impl : std::enable_shared_from_this<ControlServer::Impl> {
  Impl(EngineRunner& r, ControlServerOptions o) : runner(r), options(std::move(o)), acceptor(ioc) {}

  void accept();
  void broadcast(const std::shared_ptr<const Published>& pub);

  EngineRunner& runner;
  ControlServerOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread thread;
  int listener = -1;
  std::vector<std::weak_ptr<Session>> sessions;
  std::atomic<std::size_t> live_sessions{0};
  std::uint16_t bound_port = 0;
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, std::shared_ptr<ControlServer::Impl> server)
      : ws_(std::move(socket)), server_(std::move(server)) {
    rate_ = server_->options.default_frame_rate;
  }

  void run() {
    ++server_->live_sessions;
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->finish();
      self->read();
    });
  }

  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  void publish(const std::shared_ptr<const Published>& pub, std::shared_ptr<const std::string>& frame_text) {
    if (closed_) return;
    if (frames_ && pub->frame && pub->frame->time - last_frame_time_ >= 1.0 / rate_ - 1e-9) {
      last_frame_time_ = pub->frame->time;
      if (!frame_text)
        frame_text = std::make_shared<const std::string>(
            json{{"type", "frame"}, {"frame", frame_to_json(*pub->frame)}}.dump());
      send(frame_text, true);
    }
    if (state_ && pub->snapshot) send_state(*pub->snapshot);
  }

 private:
  void finish() {
    if (closed_) return;
    closed_ = true;
    --server_->live_sessions;
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      if (!self->ws_.got_text()) {
        self->ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "binary frames are not part of the protocol"),
                              [self](beast::error_code) { self->finish(); });
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      self->read();
    });
  }

  void reply(const json& j) { send(std::make_shared<const std::string>(j.dump()), false); }

  void handle(const std::string& text) {
    const auto latest = server_->runner.latest();
    const std::size_t cursor = latest ? latest->cursor : 0;
    const double clock = latest ? latest->clock : 0.0;
    ControlMessage msg;
    try {
      msg = parse_control(std::string_view(text));
    } catch (const ControlError& e) {
      json id;
      const json j = json::parse(text, nullptr, false);
      if (j.is_object() && j.contains("id")) id = j.at("id");
      reply(make_error(id, e.what(), cursor, clock));
      return;
    }
    switch (msg.type) {
      case ControlType::subscribe_frames:
        frames_ = msg.on;
        rate_ = std::min(msg.rate, server_->options.max_frame_rate);
        last_frame_time_ = -std::numeric_limits<double>::infinity();
        reply(make_ack(msg, {{"ok", true}, {"rate", rate_}}, cursor, clock));
        return;
      case ControlType::subscribe_state:
        state_ = msg.on;
        last_state_.clear();
        reply(make_ack(msg, {{"ok", true}}, cursor, clock));
        if (state_ && latest && latest->snapshot) send_state(*latest->snapshot);
        return;
      case ControlType::ping: {
        json j = {{"type", "pong"}, {"clock", clock}, {"cursor", cursor}};
        if (!msg.id.is_null()) j["id"] = msg.id;
        reply(j);
        return;
      }
      default: break;
    }
    server_->runner.post([self = shared_from_this(), msg](Engine& engine) {
      json result;
      try {
        result = apply_control(engine, msg, self->server_->options.on_take);
      } catch (const std::exception& e) {
        result = {{"ok", false}, {"error", e.what()}};
      }
      auto text = std::make_shared<const std::string>(make_reply(msg, std::move(result), engine.cursor(), engine.clock()).dump());
      asio::post(self->ws_.get_executor(), [self, text] { self->send(text, false); });
    });
  }

  void send_state(const EngineSnapshot& s) {
    json j = to_json(s);
    json key = j;
    key.erase("tick");
    key.erase("clock");
    std::string k = key.dump();
    if (k == last_state_) return;
    last_state_ = std::move(k);
    reply({{"type", "state"}, {"state", std::move(j)}});
  }

  void send(std::shared_ptr<const std::string> text, bool is_frame) {
    if (closed_) return;
    if (is_frame) {
      if (queued_frames_ >= server_->options.max_queued_frames) return;
      ++queued_frames_;
    }
    outbox_.push_back({std::move(text), is_frame});
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*outbox_.front().text), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (self->outbox_.front().frame) --self->queued_frames_;
      self->outbox_.pop_front();
      if (ec) {
        self->writing_ = false;
        return self->finish();
      }
      self->write_next();
    });
  }

  struct Outgoing {
    std::shared_ptr<const std::string> text;
    bool frame = false;
  };

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<ControlServer::Impl> server_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> outbox_;
  bool writing_ = false;
  bool closed_ = false;
  bool frames_ = false;
  bool state_ = false;
  double rate_ = 30.0;
  double last_frame_time_ = -std::numeric_limits<double>::infinity();
  std::size_t queued_frames_ = 0;
  std::string last_state_;
};

}  // namespace

void ControlServer::Impl::accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    auto s = std::make_shared<Session>(std::move(socket), self);
    std::erase_if(self->sessions, [](const std::weak_ptr<Session>& w) { return w.expired(); });
    self->sessions.push_back(s);
    s->run();
    self->accept();
  });
}

void ControlServer::Impl::broadcast(const std::shared_ptr<const Published>& pub) {
  std::shared_ptr<const std::string> frame_text;
  for (auto& w : sessions)
    if (auto s = w.lock()) s->publish(pub, frame_text);
}

ControlServer::ControlServer(EngineRunner& runner, ControlServerOptions options)
    : impl_(std::make_shared<Impl>(runner, std::move(options))) {}

ControlServer::~ControlServer() { stop(); }

void ControlServer::start() {
  const tcp::endpoint ep(asio::ip::make_address(impl_->options.address), impl_->options.port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->bound_port = impl_->acceptor.local_endpoint().port();
  impl_->accept();
  std::weak_ptr<Impl> weak = impl_;
  impl_->listener = impl_->runner.add_listener([weak](const std::shared_ptr<const Published>& pub) {
    if (auto self = weak.lock()) asio::post(self->ioc, [self, pub] { self->broadcast(pub); });
  });
  impl_->thread = std::thread([impl = impl_] {
    auto guard = asio::make_work_guard(impl->ioc);
    impl->ioc.run();
  });
}

void ControlServer::stop() {
  if (!impl_->thread.joinable()) return;
  if (impl_->listener >= 0) impl_->runner.remove_listener(impl_->listener);
  impl_->listener = -1;
  asio::post(impl_->ioc, [impl = impl_] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (auto& w : impl->sessions)
      if (auto s = w.lock()) s->close();
    impl->ioc.stop();
  });
  impl_->thread.join();
}

std::uint16_t ControlServer::port() const { return impl_->bound_port; }

std::size_t ControlServer::session_count() const { return impl_->live_sessions; }

}  // namespace castelet
