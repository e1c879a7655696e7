#include "minicar/gateway.hpp"

#include <atomic>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace minicar {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

nlohmann::ordered_json server_hello(const Simulation& sim) {
  const auto& cfg = sim.config();
  nlohmann::ordered_json lanes = nlohmann::ordered_json::array();
  const auto samples = sample_track(sim.track(), 0.05);
  for (const auto& lane : sim.track().lanes()) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& smp : samples) {
      if (smp.lane == lane.id()) points.push_back({smp.pose.x, smp.pose.y});
    }
    lanes.push_back({{"id", lane.id()}, {"length", lane.length()}, {"points", points}});
  }
  nlohmann::ordered_json played = nlohmann::ordered_json::array();
  for (int id : cfg.fleet.gamified) played.push_back(id);
  return {{"server", "minicar"},
          {"protocol_version", kProtocolVersion},
          {"scenario", cfg.name},
          {"dt", cfg.dt},
          {"frame_rate", cfg.game.frame_rate},
          {"vehicle_count", cfg.fleet.count},
          {"played", played},
          {"body_length", cfg.vehicle.body_length},
          {"body_width", cfg.vehicle.body_width},
          {"track", {{"lane_spacing", sim.track().lane_spacing()}, {"lanes", lanes}}}};
}

namespace {

std::string warning(const std::string& detail) {
  SimEvent e;
  e.type = "warning";
  e.detail = detail;
  return encode_message("event", event_to_json(e));
}

}  // namespace

struct Gateway::Impl {
  class Client;

  GameSession& session;
  GatewayOptions options;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::atomic<bool> running{false};
  std::string hello;
  std::set<std::shared_ptr<Client>> clients;
  // vehicle id -> controlling client. Touched only on the I/O thread.
  std::map<int, Client*> controllers;
  std::atomic<std::size_t> client_total{0};

  Impl(GameSession& s, GatewayOptions o) : session(s), options(std::move(o)) {}

  void accept();
  void broadcast(std::shared_ptr<const std::string> text);
  void on_message(Client& client, const std::string& text);
  void on_closed(const std::shared_ptr<Client>& client);
  bool claim(Client& client, int vehicle);
};

class Gateway::Impl::Client : public std::enable_shared_from_this<Client> {
 public:
  Client(Impl& owner, tcp::socket socket) : owner_(owner), ws_(std::move(socket)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->ready_ = true;
      self->send(std::make_shared<const std::string>(self->owner_.hello));
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> text, bool droppable = false) {
    // Frames broadcast while the handshake is still running are skipped;
    // writing them would corrupt the upgrade response.
    if (closed_ || (droppable && !ready_)) return;
    if (droppable && queue_.size() >= owner_.options.max_queued_frames) {
      // Never drop the message being written.
      if (queue_.size() > 1) queue_.erase(queue_.begin() + 1);
    }
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
    owner_.on_closed(shared_from_this());
  }

  std::set<int> controlled;

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->owner_.on_message(*self, text);
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->close();
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  Impl& owner_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool ready_{false};
  bool closed_{false};
};

void Gateway::Impl::accept() {
  acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
    if (!running) return;
    if (!ec) {
      auto client = std::make_shared<Client>(*this, std::move(socket));
      clients.insert(client);
      client_total = clients.size();
      client->start();
    }
    accept();
  });
}

void Gateway::Impl::broadcast(std::shared_ptr<const std::string> text) {
  for (const auto& c : clients) c->send(text, true);
}

bool Gateway::Impl::claim(Client& client, int vehicle) {
  const auto it = controllers.find(vehicle);
  if (it != controllers.end()) return it->second == &client;
  const auto& played = session.simulation().config().fleet.gamified;
  // Only played vehicles can be claimed; commands for the rest still reach
  // the engine, which rejects them with an event.
  if (std::find(played.begin(), played.end(), vehicle) == played.end()) return true;
  controllers[vehicle] = &client;
  client.controlled.insert(vehicle);
  return true;
}

void Gateway::Impl::on_message(Client& client, const std::string& text) {
  Message m;
  try {
    m = decode_message(text);
  } catch (const ProtocolError& e) {
    client.send(std::make_shared<const std::string>(warning(e.what())));
    return;
  }
  if (m.type == "hello") {
    if (m.payload.is_object() && m.payload.contains("control") && m.payload["control"].is_array()) {
      for (const auto& id : m.payload["control"]) {
        if (!id.is_number_integer()) continue;
        if (!claim(client, id.get<int>())) {
          client.send(std::make_shared<const std::string>(
              warning("vehicle " + std::to_string(id.get<int>()) + " already has a controller")));
        }
      }
    }
    return;
  }
  if (m.type == "command") {
    Command c;
    try {
      c = command_from_json(m.payload);
    } catch (const ProtocolError& e) {
      client.send(std::make_shared<const std::string>(warning(e.what())));
      return;
    }
    if (!claim(client, c.vehicle)) {
      client.send(std::make_shared<const std::string>(
          warning("vehicle " + std::to_string(c.vehicle) + " is controlled by another client")));
      return;
    }
    session.submit(c);
    return;
  }
  client.send(std::make_shared<const std::string>(warning("ignored message of type '" + m.type + "'")));
}

void Gateway::Impl::on_closed(const std::shared_ptr<Client>& client) {
  for (int id : client->controlled) {
    controllers.erase(id);
    session.release(id);
  }
  client->controlled.clear();
  clients.erase(client);
  client_total = clients.size();
}

Gateway::Gateway(GameSession& session, GatewayOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  Impl& im = *impl_;
  im.hello = encode_message("hello", server_hello(im.session.simulation()));
  beast::error_code ec;
  const auto address = asio::ip::make_address(im.options.address, ec);
  if (ec) throw GatewayError("invalid bind address '" + im.options.address + "': " + ec.message());
  const tcp::endpoint endpoint(address, im.options.port);
  im.acceptor.open(endpoint.protocol(), ec);
  if (!ec) im.acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor.bind(endpoint, ec);
  if (!ec) im.acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw GatewayError("cannot listen on " + im.options.address + ":" +
                       std::to_string(im.options.port) + ": " + ec.message());
  }
  im.session.set_frame_sink([&im](const Frame& frame) {
    auto text = std::make_shared<const std::string>(encode_message("frame", frame_to_json(frame)));
    asio::post(im.io, [&im, text] { im.broadcast(text); });
  });
  im.running = true;
  im.accept();
  im.thread = std::thread([&im] { im.io.run(); });
}

void Gateway::stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  Impl& im = *impl_;
  im.session.set_frame_sink(nullptr);
  im.io.stop();
  if (im.thread.joinable()) im.thread.join();
  // The I/O thread is gone, so the remaining state is ours to tear down.
  beast::error_code ignored;
  im.acceptor.close(ignored);
  const auto clients = im.clients;
  for (const auto& c : clients) c->close();
}

unsigned short Gateway::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

std::size_t Gateway::client_count() const { return impl_->client_total; }

}  // namespace minicar
