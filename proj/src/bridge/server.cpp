#include "telekinesis/bridge/server.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <iostream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "telekinesis/bridge/session.hpp"

namespace tk::bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
namespace fs = std::filesystem;

namespace {

const char* mime_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

// Resolves a request target under root; nullopt for anything escaping it.
std::optional<fs::path> resolve_static(const fs::path& root, std::string_view target) {
  std::string path(target.substr(0, target.find_first_of("?#")));
  if (path.empty() || path.front() != '/') return std::nullopt;
  if (path.back() == '/') path += "index.html";
  const fs::path rel = fs::path(path.substr(1)).lexically_normal();
  if (rel.empty() || rel.is_absolute()) return std::nullopt;
  for (const auto& part : rel)
    if (part == "..") return std::nullopt;
  return root / rel;
}

struct Outbound {
  std::string text;
  bool droppable = false;  // snapshots may be dropped under back-pressure
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, SessionOptions opts, std::size_t max_queue)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), session_(std::move(opts)), max_queue_(max_queue) {}

  ~WsConnection() {
    try {
      flush();
    } catch (...) {
    }
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->next_tick_ = std::chrono::steady_clock::now();
      self->schedule_tick();
      self->do_read();
    });
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return shutdown();
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (auto& m : session_.handle(text)) enqueue({std::move(m), false});
    if (session_.closed()) {
      closing_ = true;
      timer_.cancel();
      do_write();
      return;
    }
    do_read();
  }

  void schedule_tick() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(session_.tick_period()));
    next_tick_ += period;
    const auto now = std::chrono::steady_clock::now();
    if (next_tick_ + period < now) next_tick_ = now;  // fell behind; do not burst
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_ || self->done_) return;
      try {
        for (auto& m : self->session_.tick()) {
          const bool snapshot = m.rfind(R"({"kind":"snapshot")", 0) == 0;
          self->enqueue({std::move(m), snapshot});
        }
      } catch (const std::exception& e) {
        self->enqueue({error_message(e.what()), false});
        self->closing_ = true;
        self->do_write();
        return;
      }
      self->schedule_tick();
    });
  }

  void enqueue(Outbound msg) {
    queue_.push_back(std::move(msg));
    if (queue_.size() > max_queue_) {
      // The head may be mid-write; drop the oldest snapshot behind it.
      for (auto it = queue_.begin() + (writing_ ? 1 : 0); it != queue_.end(); ++it) {
        if (it->droppable) {
          queue_.erase(it);
          break;
        }
      }
    }
    do_write();
  }

  void do_write() {
    if (writing_ || done_) return;
    if (queue_.empty()) {
      if (closing_) {
        done_ = true;
        ws_.async_close(websocket::close_code::normal,
                        [self = shared_from_this()](beast::error_code) { self->shutdown(); });
      }
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front().text), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->shutdown();
      self->queue_.pop_front();
      self->do_write();
    });
  }

  void shutdown() {
    done_ = true;
    timer_.cancel();
    flush();
  }

  void flush() {
    if (flushed_) return;
    flushed_ = true;
    session_.flush_recording();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  asio::steady_timer timer_;
  std::chrono::steady_clock::time_point next_tick_;
  Session session_;
  std::deque<Outbound> queue_;
  std::size_t max_queue_;
  bool writing_ = false;
  bool closing_ = false;
  bool done_ = false;
  bool flushed_ = false;
};

}  // namespace

struct Server::Impl {
  ServerOptions options;
  asio::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::atomic<unsigned short> bound_port{0};
  std::uint64_t connections = 0;

  class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
   public:
    HttpConnection(Impl& server, tcp::socket socket) : server_(server), stream_(std::move(socket)) {}

    void run() { do_read(); }

   private:
    void do_read() {
      req_ = {};
      stream_.expires_after(std::chrono::seconds(30));
      http::async_read(stream_, buffer_, req_,
                       [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
      if (ec) {
        beast::error_code ignored;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      if (websocket::is_upgrade(req_)) {
        if (req_.target() != "/session") return send(text_response(http::status::not_found, "no such endpoint\n"));
        stream_.expires_never();
        SessionOptions opts;
        opts.base_config = server_.options.config;
        opts.default_seed = server_.options.seed;
        const auto id = server_.connections++;
        if (server_.options.record_dir)
          opts.record_dir = *server_.options.record_dir / ("session-" + std::to_string(id));
        std::make_shared<WsConnection>(stream_.release_socket(), std::move(opts), server_.options.max_queue)
            ->run(std::move(req_));
        return;
      }
      serve_file();
    }

    http::response<http::string_body> text_response(http::status status, std::string body) {
      http::response<http::string_body> res{status, req_.version()};
      res.set(http::field::content_type, "text/plain; charset=utf-8");
      res.keep_alive(req_.keep_alive());
      res.body() = std::move(body);
      res.prepare_payload();
      return res;
    }

    void serve_file() {
      if (req_.method() != http::verb::get && req_.method() != http::verb::head)
        return send(text_response(http::status::method_not_allowed, "method not allowed\n"));
      if (!server_.options.static_dir) return send(text_response(http::status::not_found, "no static directory\n"));
      const auto path = resolve_static(*server_.options.static_dir, std::string_view(req_.target().data(), req_.target().size()));
      if (!path) return send(text_response(http::status::bad_request, "bad path\n"));
      beast::error_code ec;
      http::file_body::value_type body;
      body.open(path->string().c_str(), beast::file_mode::scan, ec);
      if (ec || fs::is_directory(*path)) return send(text_response(http::status::not_found, "not found\n"));
      const auto size = body.size();
      if (req_.method() == http::verb::head) {
        http::response<http::empty_body> res{http::status::ok, req_.version()};
        res.set(http::field::content_type, mime_type(*path));
        res.content_length(size);
        res.keep_alive(req_.keep_alive());
        return send(std::move(res));
      }
      http::response<http::file_body> res{std::piecewise_construct, std::make_tuple(std::move(body)),
                                          std::make_tuple(http::status::ok, req_.version())};
      res.set(http::field::content_type, mime_type(*path));
      res.content_length(size);
      res.keep_alive(req_.keep_alive());
      send(std::move(res));
    }

    template <typename Body>
    void send(http::response<Body>&& res) {
      auto sp = std::make_shared<http::response<Body>>(std::move(res));
      http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (sp->need_eof()) {
          beast::error_code ignored;
          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
          return;
        }
        self->do_read();
      });
    }

    Impl& server_;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
  };

  void bind() {
    const tcp::endpoint ep{asio::ip::make_address(options.address), options.port};
    acceptor.open(ep.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(asio::socket_base::max_listen_connections);
    bound_port = acceptor.local_endpoint().port();
    do_accept();
  }

  void do_accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<HttpConnection>(*this, std::move(socket))->run();
      do_accept();
    });
  }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  validate(options.config);
  impl_->options = std::move(options);
}

Server::~Server() { stop(); }

void Server::start() {
  impl_->bind();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void Server::run() {
  impl_->bind();
  asio::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code, int) {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->ioc.stop();
  });
  impl_->ioc.run();
}

void Server::stop() {
  if (!impl_) return;
  asio::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

unsigned short Server::port() const { return impl_->bound_port; }

}  // namespace tk::bridge
