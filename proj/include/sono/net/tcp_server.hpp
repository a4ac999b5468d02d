#pragma once

#include <boost/asio.hpp>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "sono/protocol.hpp"

namespace sono::net {

// Splits "host:port"; a bare port binds 127.0.0.1. Throws InvalidArgument.
boost::asio::ip::tcp::endpoint parse_endpoint(const std::string& text);

class TcpClient;

// Framed-message endpoint. Every connected client receives every broadcast
// message in order; inbound messages go to the handler on the io thread. A
// client that sends a corrupt stream or falls too far behind is dropped
// without affecting the others.
class TcpServer {
 public:
  using Handler = std::function<void(const protocol::Message&)>;

  // Throws BindError when the endpoint cannot be bound.
  TcpServer(boost::asio::io_context& io, const boost::asio::ip::tcp::endpoint& endpoint,
            Handler on_message);
  ~TcpServer();

  std::uint16_t port() const { return port_; }
  std::size_t client_count() const;

  // Thread-safe.
  void broadcast(const protocol::Message& m);
  void close();

 private:
  friend class TcpClient;
  void accept();
  void drop(const std::shared_ptr<TcpClient>& client);

  boost::asio::io_context& io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  Handler on_message_;
  std::uint16_t port_ = 0;
  mutable std::mutex mutex_;
  std::set<std::shared_ptr<TcpClient>> clients_;
};

}  // namespace sono::net
