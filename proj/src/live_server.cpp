// WebSocket transport for LiveSession.
//
// Threads: one io_context thread owns every socket and the session set; one
// simulation thread owns the LiveSession. Commands cross into the simulation
// through a mailbox drained at tick boundaries; replies and snapshots cross
// back as serialized strings posted to the io_context.
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <deque>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "colony/live.hpp"

namespace colony {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kMaxQueuedSnapshots = 32;

class WsSession;

struct Pending {
  Command command;
  std::weak_ptr<WsSession> origin;
};

struct Hub {
  net::io_context ioc;
  std::set<std::shared_ptr<WsSession>> sessions;  // io thread only

  std::mutex mailbox_mutex;
  std::condition_variable mailbox_cv;
  std::deque<Pending> mailbox;
  bool stopping = false;

  void enqueue(Pending pending) {
    {
      std::lock_guard lock(mailbox_mutex);
      mailbox.push_back(std::move(pending));
    }
    mailbox_cv.notify_one();
  }
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->hub_.sessions.insert(self);
      self->read();
    });
  }

  // Snapshots are droppable under backpressure; replies never are.
  void send(std::shared_ptr<const std::string> message, bool droppable) {
    if (closed_) return;
    if (droppable && queue_.size() >= kMaxQueuedSnapshots) return;
    queue_.push_back(std::move(message));
    if (queue_.size() == 1) write();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->drop();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      try {
        self->hub_.enqueue({parse_command(text), self});
      } catch (const CommandError& e) {
        nlohmann::json id;
        auto doc = nlohmann::json::parse(text, nullptr, false);
        if (doc.is_object() && doc.contains("id")) id = doc.at("id");
        self->send(std::make_shared<const std::string>(error_message(e.code(), e.what(), id)), false);
      }
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->drop();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  void drop() {
    closed_ = true;
    hub_.sessions.erase(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  Hub& hub_;
  bool closed_ = false;
};

void accept_loop(Hub& hub, tcp::acceptor& acceptor) {
  acceptor.async_accept([&hub, &acceptor](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<WsSession>(std::move(socket), hub)->start();
    accept_loop(hub, acceptor);
  });
}

}  // namespace

struct LiveServer::Impl {
  ScenarioConfig config;
  ServeOptions options;
  Hub hub;
  tcp::acceptor acceptor{hub.ioc};
  std::thread io_thread;
  std::thread sim_thread;
  std::atomic<unsigned short> bound_port{0};
  bool running = false;

  void reply(const std::weak_ptr<WsSession>& origin, std::string message) {
    auto shared = std::make_shared<const std::string>(std::move(message));
    net::post(hub.ioc, [origin, shared] {
      if (auto session = origin.lock()) session->send(shared, false);
    });
  }

  void publish(const Snapshot& snapshot) {
    auto shared = std::make_shared<const std::string>(to_json(snapshot).dump());
    net::post(hub.ioc, [this, shared] {
      for (const auto& session : hub.sessions) session->send(shared, true);
    });
  }

  void simulate() {
    LiveSession live(config, options.speed);
    const double dt = config.world.dt;
    const auto publish_period = std::chrono::duration<double>(1.0 / options.snapshot_hz);
    auto tick_period = [&] { return std::chrono::duration<double>(dt / live.speed()); };

    auto next_tick = Clock::now();
    auto next_publish = Clock::now();
    std::int64_t published_tick = -1;
    std::uint64_t published_run = 0;

    std::unique_lock lock(hub.mailbox_mutex);
    while (!hub.stopping) {
      // Commands apply at the tick boundary, before the next tick runs.
      while (!hub.mailbox.empty()) {
        Pending pending = std::move(hub.mailbox.front());
        hub.mailbox.pop_front();
        lock.unlock();
        try {
          const bool was_paused = live.paused();
          const std::int64_t at = live.apply(pending.command);
          if (was_paused && !live.paused()) next_tick = Clock::now();
          reply(pending.origin, ack_message(pending.command, at));
        } catch (const CommandError& e) {
          reply(pending.origin, error_message(e.code(), e.what(), pending.command.id));
        }
        lock.lock();
      }
      lock.unlock();

      const auto now = Clock::now();
      if (!live.paused() && now >= next_tick) {
        live.advance();
        next_tick += std::chrono::duration_cast<Clock::duration>(tick_period());
        if (now - next_tick > std::chrono::seconds(1)) next_tick = now;  // fell behind; do not burst
      }
      if (now >= next_publish) {
        const Snapshot snap = live.snapshot();
        if (snap.tick != published_tick || snap.run != published_run) {
          publish(snap);
          published_tick = snap.tick;
          published_run = snap.run;
        }
        next_publish += std::chrono::duration_cast<Clock::duration>(publish_period);
        if (now - next_publish > std::chrono::seconds(1)) next_publish = now;
      }

      lock.lock();
      if (!hub.mailbox.empty() || hub.stopping) continue;
      auto wake = next_publish;
      if (!live.paused()) wake = std::min(wake, next_tick);
      hub.mailbox_cv.wait_until(lock, wake, [&] { return hub.stopping || !hub.mailbox.empty(); });
    }
  }
};

LiveServer::LiveServer(ScenarioConfig config, ServeOptions options) : impl_(std::make_unique<Impl>()) {
  config.seed = options.seed;
  config.validate();
  if (!(options.speed > 0.0)) throw std::invalid_argument("serve: speed must be positive");
  if (!(options.snapshot_hz > 0.0)) throw std::invalid_argument("serve: snapshot rate must be positive");
  impl_->config = std::move(config);
  impl_->options = std::move(options);
}

LiveServer::~LiveServer() { stop(); }

void LiveServer::start() {
  Impl& im = *impl_;
  if (im.running) return;
  try {
    const tcp::endpoint endpoint(net::ip::make_address(im.options.address), im.options.port);
    im.acceptor.open(endpoint.protocol());
    im.acceptor.set_option(net::socket_base::reuse_address(true));
    im.acceptor.bind(endpoint);
    im.acceptor.listen();
    im.bound_port = im.acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on " + im.options.address + ":" + std::to_string(im.options.port) + ": " +
                             e.code().message());
  }
  accept_loop(im.hub, im.acceptor);
  im.running = true;
  im.io_thread = std::thread([&im] {
    auto guard = net::make_work_guard(im.hub.ioc);
    im.hub.ioc.run();
  });
  im.sim_thread = std::thread([&im] { im.simulate(); });
}

void LiveServer::stop() {
  Impl& im = *impl_;
  if (!im.running) return;
  im.running = false;
  {
    std::lock_guard lock(im.hub.mailbox_mutex);
    im.hub.stopping = true;
  }
  im.hub.mailbox_cv.notify_all();
  if (im.sim_thread.joinable()) im.sim_thread.join();
  net::post(im.hub.ioc, [&im] {
    beast::error_code ec;
    im.acceptor.close(ec);
    for (const auto& session : im.hub.sessions) session->close();
    im.hub.sessions.clear();
    im.hub.ioc.stop();
  });
  if (im.io_thread.joinable()) im.io_thread.join();
}

unsigned short LiveServer::port() const { return impl_->bound_port; }

int serve_forever(const ScenarioConfig& config, const ServeOptions& options) {
  LiveServer server(config, options);
  try {
    server.start();
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  std::cout << "serving ws://" << options.address << ":" << server.port() << " (speed x" << options.speed << ", seed "
            << options.seed << ")" << std::endl;

  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](const beast::error_code&, int) {});
  signals_ctx.run();
  server.stop();
  return 0;
}

}  // namespace colony
