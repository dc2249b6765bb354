#include "castelet/error.hpp"
#include "castelet/service.hpp"
#include "castelet/stream.hpp"

#include <boost/asio.hpp>

#include <array>
#include <chrono>
#include <deque>
#include <iterator>
#include <mutex>
#include <optional>
#include <thread>

namespace castelet {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using steady = std::chrono::steady_clock;

struct MocapServer::Impl : std::enable_shared_from_this<MocapServer::Impl> {
  Impl(EngineRunner& r, MocapServerOptions o) : runner(r), options(std::move(o)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept([self = shared_from_this()](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      if (self->client) {
        auto s = std::make_shared<tcp::socket>(std::move(socket));
        self->reject(s, "another client is already streaming to this port");
      } else {
        self->client = std::make_shared<tcp::socket>(std::move(socket));
        self->decoder = StreamDecoder{};
        {
          std::lock_guard lock(self->mutex);
          self->stats = {};
          self->stats.connected = true;
          self->arrivals.clear();
          self->last_frame.reset();
        }
        self->read(self->client);
      }
      self->accept();
    });
  }

  void reject(const std::shared_ptr<tcp::socket>& s, const std::string& reason) {
    {
      std::lock_guard lock(mutex);
      rejection = reason;
    }
    auto text = std::make_shared<std::string>("REJECT " + reason + "\n");
    asio::async_write(*s, asio::buffer(*text), [s, text](boost::system::error_code, std::size_t) {
      boost::system::error_code ec;
      s->shutdown(tcp::socket::shutdown_both, ec);
      s->close(ec);
    });
  }

  void disconnect(const std::shared_ptr<tcp::socket>& s) {
    if (client == s) client.reset();
    std::lock_guard lock(mutex);
    stats.connected = false;
  }

  void read(const std::shared_ptr<tcp::socket>& s) {
    s->async_read_some(asio::buffer(buffer), [self = shared_from_this(), s](boost::system::error_code ec, std::size_t n) {
      if (ec) return self->disconnect(s);
      std::vector<StreamEvent> events;
      try {
        self->decoder.feed(std::span<const std::uint8_t>(self->buffer.data(), n), events);
      } catch (const HandshakeError& e) {
        self->disconnect(s);
        return self->reject(s, e.what());
      }
      for (auto& ev : events) {
        if (const auto* h = std::get_if<StreamHeader>(&ev)) {
          const std::string why = self->check_header(*h);
          if (!why.empty()) {
            self->disconnect(s);
            return self->reject(s, why);
          }
        } else if (auto* f = std::get_if<StreamFrame>(&ev)) {
          self->runner.post_stream(self->options.oav, f->sequence, std::move(f->channels));
          const auto now = steady::now();
          std::lock_guard lock(self->mutex);
          ++self->stats.frames;
          self->arrivals.push_back(now);
          self->last_frame = now;
        }
      }
      {
        std::lock_guard lock(self->mutex);
        self->stats.sequence_gaps = self->decoder.gap_count();
        self->stats.dropped = self->decoder.dropped_count();
      }
      self->read(s);
    });
  }

  std::string check_header(const StreamHeader& h) const {
    const Skeleton& got = *decoder.skeleton();
    if (h.channel_count != source.channel_count())
      return "handshake declares " + std::to_string(h.channel_count) + " channels, the bound retarget source has " +
             std::to_string(source.channel_count());
    if (!got.same_topology(source)) return "handshake skeleton does not match the bound retarget source";
    return {};
  }

  StreamHealth health() {
    std::lock_guard lock(mutex);
    StreamHealth h = stats;
    const auto now = steady::now();
    while (!arrivals.empty() && now - arrivals.front() > std::chrono::seconds(1)) arrivals.pop_front();
    h.frames_per_second = static_cast<double>(arrivals.size());
    h.last_frame_age = last_frame ? std::chrono::duration<double>(now - *last_frame).count() : 0.0;
    return h;
  }

  EngineRunner& runner;
  MocapServerOptions options;
  Skeleton source;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread thread;
  std::uint16_t bound_port = 0;
  std::shared_ptr<tcp::socket> client;
  StreamDecoder decoder;
  std::array<std::uint8_t, 65536> buffer{};

  mutable std::mutex mutex;
  StreamHealth stats;
  std::deque<steady::time_point> arrivals;
  std::optional<steady::time_point> last_frame;
  std::string rejection;
};

MocapServer::MocapServer(EngineRunner& runner, const Engine& engine, MocapServerOptions options)
    : impl_(std::make_shared<Impl>(runner, std::move(options))) {
  const auto i = engine.show().avatar_index(impl_->options.oav);
  if (!i) throw ContractError("unknown oav '" + impl_->options.oav + "'");
  const AvatarConfig& a = engine.show().avatars[*i];
  if (!a.live) throw ContractError("oav '" + a.id + "' has no live retarget");
  impl_->source = a.live->binding->source();
}

MocapServer::~MocapServer() { stop(); }

void MocapServer::start() {
  const tcp::endpoint ep(asio::ip::make_address(impl_->options.address), impl_->options.port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->bound_port = impl_->acceptor.local_endpoint().port();
  std::weak_ptr<Impl> weak = impl_;
  impl_->runner.add_health_source(impl_->options.oav, [weak] {
    if (auto self = weak.lock()) return self->health();
    return StreamHealth{};
  });
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] {
    auto guard = asio::make_work_guard(impl->ioc);
    impl->ioc.run();
  });
}

void MocapServer::stop() {
  if (!impl_->thread.joinable()) return;
  asio::post(impl_->ioc, [impl = impl_] {
    boost::system::error_code ec;
    impl->acceptor.close(ec);
    if (impl->client) impl->client->close(ec);
    impl->ioc.stop();
  });
  impl_->thread.join();
}

std::uint16_t MocapServer::port() const { return impl_->bound_port; }

StreamHealth MocapServer::health() const { return impl_->health(); }

std::string MocapServer::last_rejection() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->rejection;
}

std::string stream_bvh(const BvhDocument& doc, const StreamClientOptions& options) {
  asio::io_context ioc;
  tcp::socket socket(ioc);
  socket.connect(tcp::endpoint(asio::ip::make_address(options.host), options.port));
  socket.set_option(tcp::no_delay(true));
  asio::write(socket, asio::buffer(encode_handshake(make_stream_header(doc.skeleton, doc.frame_time))));

  auto rejection = [&]() -> std::optional<std::string> {
    boost::system::error_code ec;
    if (socket.available(ec) == 0) return std::nullopt;
    asio::streambuf buf;
    asio::read_until(socket, buf, '\n', ec);
    std::string line((std::istreambuf_iterator<char>(&buf)), std::istreambuf_iterator<char>());
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (line.starts_with("REJECT ")) line.erase(0, 7);
    return line.empty() ? std::string("connection refused by server") : line;
  };
  const auto wait_until = steady::now() + std::chrono::duration_cast<steady::duration>(
                                              std::chrono::duration<double>(options.handshake_wait));
  while (steady::now() < wait_until) {
    if (auto r = rejection()) return *r;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  const auto period = options.rate > 0.0 ? std::chrono::duration_cast<steady::duration>(
                                               std::chrono::duration<double>(1.0 / options.rate))
                                         : steady::duration::zero();
  auto next = steady::now();
  std::vector<float> channels;
  std::vector<std::uint8_t> bytes;
  std::uint32_t seq = options.first_sequence;
  for (const auto& row : doc.frames) {
    channels.assign(row.begin(), row.end());
    bytes.clear();
    append_frame(bytes, seq++, channels);
    boost::system::error_code ec;
    asio::write(socket, asio::buffer(bytes), ec);
    if (ec) {
      if (auto r = rejection()) return *r;
      return "connection lost: " + ec.message();
    }
    if (period != steady::duration::zero()) {
      next += period;
      std::this_thread::sleep_until(next);
    }
  }
  if (auto r = rejection()) return *r;
  boost::system::error_code ec;
  socket.shutdown(tcp::socket::shutdown_send, ec);
  return {};
}

}  // namespace castelet
