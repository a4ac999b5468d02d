#include "sono/net/tcp_server.hpp"

#include <deque>
#include <spdlog/spdlog.h>

#include "sono/error.hpp"

namespace sono::net {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

constexpr std::size_t kMaxQueuedFrames = 4096;

}  // namespace

tcp::endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : text.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? text : text.substr(colon + 1);
  boost::system::error_code ec;
  const auto address = asio::ip::make_address(host.empty() ? "0.0.0.0" : host, ec);
  if (ec) fail(ErrorCode::InvalidArgument, "bad address '" + host + "'");
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size() || port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "bad port '" + port_text + "'");
  }
  return {address, static_cast<std::uint16_t>(port)};
}

class TcpClient : public std::enable_shared_from_this<TcpClient> {
 public:
  TcpClient(tcp::socket socket, TcpServer& server) : socket_(std::move(socket)), server_(server) {}

  void start() { read(); }

  void send(std::shared_ptr<const std::vector<std::uint8_t>> frame) {
    if (closed_) return;
    if (queue_.size() >= kMaxQueuedFrames) {
      spdlog::warn("dropping slow client");
      shutdown();
      return;
    }
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) write();
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    server_.drop(shared_from_this());
  }

 private:
  void read() {
    auto self = shared_from_this();
    socket_.async_read_some(asio::buffer(buffer_), [this, self](boost::system::error_code ec,
                                                                std::size_t n) {
      if (ec) {
        shutdown();
        return;
      }
      try {
        const auto messages = decoder_.feed(std::span<const std::uint8_t>(buffer_.data(), n));
        for (const auto& m : messages) {
          if (server_.on_message_) server_.on_message_(m);
        }
      } catch (const Error& e) {
        spdlog::warn("client stream rejected: {}", e.what());
        shutdown();
        return;
      }
      if (!closed_) read();
    });
  }

  void write() {
    auto self = shared_from_this();
    asio::async_write(socket_, asio::buffer(*queue_.front()),
                      [this, self](boost::system::error_code ec, std::size_t) {
                        if (ec) {
                          shutdown();
                          return;
                        }
                        queue_.pop_front();
                        if (!queue_.empty()) write();
                      });
  }

  tcp::socket socket_;
  TcpServer& server_;
  protocol::FrameDecoder decoder_;
  std::array<std::uint8_t, 8192> buffer_{};
  std::deque<std::shared_ptr<const std::vector<std::uint8_t>>> queue_;
  bool closed_ = false;
};

TcpServer::TcpServer(asio::io_context& io, const tcp::endpoint& endpoint, Handler on_message)
    : io_(io), acceptor_(io), on_message_(std::move(on_message)) {
  boost::system::error_code ec;
  acceptor_.open(endpoint.protocol(), ec);
  if (!ec) acceptor_.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) acceptor_.bind(endpoint, ec);
  if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    fail(ErrorCode::BindError, "cannot bind " + endpoint.address().to_string() + ":" +
                                   std::to_string(endpoint.port()) + ": " + ec.message());
  }
  port_ = acceptor_.local_endpoint().port();
  accept();
}

TcpServer::~TcpServer() {
  boost::system::error_code ec;
  acceptor_.close(ec);
}

void TcpServer::accept() {
  acceptor_.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    auto client = std::make_shared<TcpClient>(std::move(socket), *this);
    {
      std::lock_guard lock(mutex_);
      clients_.insert(client);
    }
    client->start();
    accept();
  });
}

void TcpServer::drop(const std::shared_ptr<TcpClient>& client) {
  std::lock_guard lock(mutex_);
  clients_.erase(client);
}

std::size_t TcpServer::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

void TcpServer::broadcast(const protocol::Message& m) {
  auto frame = std::make_shared<const std::vector<std::uint8_t>>(protocol::encode_frame(m));
  asio::post(io_, [this, frame] {
    std::vector<std::shared_ptr<TcpClient>> targets;
    {
      std::lock_guard lock(mutex_);
      targets.assign(clients_.begin(), clients_.end());
    }
    for (const auto& c : targets) c->send(frame);
  });
}

void TcpServer::close() {
  asio::post(io_, [this] {
    boost::system::error_code ec;
    acceptor_.close(ec);
    std::vector<std::shared_ptr<TcpClient>> targets;
    {
      std::lock_guard lock(mutex_);
      targets.assign(clients_.begin(), clients_.end());
    }
    for (const auto& c : targets) c->shutdown();
  });
}

}  // namespace sono::net
