#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "telekinesis/bridge/server.hpp"
#include "unit/helpers.hpp"

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace ws = beast::websocket;
using asio::ip::tcp;
using nlohmann::json;

namespace {

struct Fixture {
  std::filesystem::path static_dir = testing::scratch("server_static");
  std::filesystem::path record_dir = testing::scratch("server_records");
  std::unique_ptr<tk::bridge::Server> server;

  Fixture() {
    testing::spit(static_dir / "index.html", "<html>steer</html>");
    testing::spit(static_dir / "app.js", "console.log(1);");
    tk::bridge::ServerOptions opt;
    opt.port = 0;
    opt.static_dir = static_dir;
    opt.record_dir = record_dir;
    server = std::make_unique<tk::bridge::Server>(opt);
    server->start();
  }
  ~Fixture() { server->stop(); }

  http::response<http::string_body> get(const std::string& target) {
    asio::io_context io;
    tcp::socket sock(io);
    sock.connect({asio::ip::make_address("127.0.0.1"), server->port()});
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "localhost");
    http::write(sock, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(sock, buf, res);
    return res;
  }
};

struct Client {
  asio::io_context io;
  ws::stream<tcp::socket> stream{io};
  beast::flat_buffer buf;

  explicit Client(unsigned short port, const std::string& target = "/session") {
    stream.next_layer().connect({asio::ip::make_address("127.0.0.1"), port});
    stream.handshake("localhost", target);
  }

  void send(const std::string& text) { stream.write(asio::buffer(text)); }

  json recv() {
    buf.clear();
    stream.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
};

}  // namespace

TEST_CASE("static files are served") {
  Fixture f;
  auto res = f.get("/");
  CHECK(res.result() == http::status::ok);
  CHECK(res.body() == "<html>steer</html>");
  CHECK(res[http::field::content_type].starts_with("text/html"));
  res = f.get("/app.js");
  CHECK(res.result() == http::status::ok);
  CHECK(res[http::field::content_type].find("javascript") != std::string::npos);
  CHECK(f.get("/missing.css").result() == http::status::not_found);
  CHECK(f.get("/../CMakeLists.txt").result() != http::status::ok);
}

TEST_CASE("session protocol over the websocket") {
  Fixture f;
  Client c(f.server->port());
  c.send(R"({"kind":"hello","client":"test"})");
  c.send(R"({"kind":"configure","condition":"c=no,s=no,e=yes","snapshot_rate":90})");
  const auto first = c.recv();
  CHECK(first["kind"] == "snapshot");
  const auto tick0 = first["snapshot"]["tick"].get<int>();
  const auto second = c.recv();
  CHECK(second["kind"] == "snapshot");
  CHECK(second["snapshot"]["tick"].get<int>() == tick0 + 1);
  CHECK(second["snapshot"]["objects"].size() == 3);
  CHECK(second["snapshot"]["gate"]["active"] == false);

  c.send(R"({"kind":"input","openness":0.95,"gaze_point":[0.35,0.85,1.1]})");
  bool active = false;
  for (int n = 0; n < 30 && !active; ++n) {
    const auto m = c.recv();
    if (m["kind"] == "snapshot") active = m["snapshot"]["gate"]["active"].get<bool>();
  }
  CHECK(active);
  c.stream.close(ws::close_code::normal);
}

TEST_CASE("malformed input gets an error and a close") {
  Fixture f;
  Client c(f.server->port());
  c.send(R"({"kind":"configure"})");
  c.recv();
  c.send("{broken");
  bool saw_error = false;
  try {
    for (int n = 0; n < 200; ++n) {
      const auto m = c.recv();
      if (m["kind"] == "error") {
        saw_error = true;
        CHECK(m["message"].is_string());
      }
    }
    FAIL("the server kept the socket open");
  } catch (const beast::system_error& e) {
    CHECK(e.code() == ws::error::closed);
  }
  CHECK(saw_error);
}

TEST_CASE("upgrades elsewhere are refused") {
  Fixture f;
  CHECK_THROWS(Client(f.server->port(), "/other"));
}

TEST_CASE("sessions are recorded when the client leaves") {
  std::filesystem::path records;
  {
    Fixture f;
    records = f.record_dir;
    Client c(f.server->port());
    c.send(R"({"kind":"configure","condition":"c=no,s=yes,e=no","seed":4})");
    for (int n = 0; n < 20; ++n) c.recv();
    c.stream.close(ws::close_code::normal);
  }
  bool found = false;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(records))
    found = found || entry.path().filename() == "trace.jsonl";
  CHECK(found);
}
