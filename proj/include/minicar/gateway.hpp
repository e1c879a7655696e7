#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "minicar/session.hpp"

namespace minicar {

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GatewayOptions {
  std::string address{"127.0.0.1"};
  // 0 picks a free port; see Gateway::port().
  unsigned short port{8765};
  // Frames queued for a slow client beyond this many are dropped, oldest first.
  std::size_t max_queued_frames{64};
};

/// Payload of the server hello: protocol version, played vehicles, timing
/// and the track polylines a client needs to draw the scene.
nlohmann::ordered_json server_hello(const Simulation& sim);

/// WebSocket endpoint for a GameSession.
///
/// Every client receives a hello, then every published frame. A client may
/// claim played vehicles by listing them under "control" in its own hello or
/// implicitly by commanding a free one; each vehicle has at most one
/// controller. When a controller disconnects its vehicles are released back
/// to automatic mode. Unknown or malformed messages are answered with a
/// warning event and otherwise ignored.
class Gateway {
 public:
  Gateway(GameSession& session, GatewayOptions options = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds and starts the I/O thread. Throws GatewayError when the address
  /// cannot be bound, for example because the port is busy.
  void start();
  /// Closes every connection. Stop the session's run() first, since this
  /// replaces the frame sink the session thread calls.
  void stop();

  unsigned short port() const;
  std::size_t client_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace minicar
