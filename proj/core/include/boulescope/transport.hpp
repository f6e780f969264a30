#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace boulescope {

/// A bidirectional byte stream read one LF-terminated line at a time.
class LineStream {
public:
    virtual ~LineStream() = default;

    /// Next line without its terminator; nullopt on EOF or timeout.
    virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
    virtual void write(std::string_view bytes) = 0;
    virtual void close() = 0;
    /// True once the peer has closed and no buffered line remains.
    virtual bool at_eof() = 0;
};

/// Hands out server-side streams; `accept` returns nullptr once shut down.
class Acceptor {
public:
    virtual ~Acceptor() = default;
    virtual std::unique_ptr<LineStream> accept() = 0;
    virtual void shutdown() = 0;
};

/// Opens a client stream to `address`; throws Error{device_unavailable}.
using Connector = std::function<std::unique_ptr<LineStream>(const std::string& address)>;

// ---- TCP -----------------------------------------------------------------

struct HostPort {
    std::string host;
    std::uint16_t port = 0;

    static HostPort parse(std::string_view address);
};

class TcpAcceptor final : public Acceptor {
public:
    /// Binds and listens; port 0 picks an ephemeral port.
    explicit TcpAcceptor(const std::string& address);
    ~TcpAcceptor() override;

    TcpAcceptor(const TcpAcceptor&) = delete;
    TcpAcceptor& operator=(const TcpAcceptor&) = delete;

    std::unique_ptr<LineStream> accept() override;
    void shutdown() override;

    std::uint16_t port() const { return port_; }
    std::string address() const;

private:
    int fd_ = -1;
    std::string host_;
    std::uint16_t port_ = 0;
    int wake_pipe_[2] = {-1, -1};
};

std::unique_ptr<LineStream> tcp_connect(const std::string& address,
                                        std::chrono::milliseconds timeout);

Connector tcp_connector(std::chrono::milliseconds timeout = std::chrono::seconds(5));

// ---- In-memory -----------------------------------------------------------

/// Connected pair of in-memory streams.
std::pair<std::unique_ptr<LineStream>, std::unique_ptr<LineStream>> make_pipe();

class InMemoryAcceptor final : public Acceptor {
public:
    /// Returns the client end; the server end is queued for accept().
    std::unique_ptr<LineStream> connect();

    std::unique_ptr<LineStream> accept() override;
    void shutdown() override;

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::unique_ptr<LineStream>> pending_;
    bool shut_down_ = false;
};

/// Address book of in-memory acceptors, for tests that want the service to
/// reach devices without sockets.
class InMemoryNetwork {
public:
    std::shared_ptr<InMemoryAcceptor> listen(const std::string& address);
    Connector connector();

private:
    std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
    std::shared_ptr<std::map<std::string, std::weak_ptr<InMemoryAcceptor>>> endpoints_ =
        std::make_shared<std::map<std::string, std::weak_ptr<InMemoryAcceptor>>>();
};

}  // namespace boulescope
