#include "boulescope/transport.hpp"

#include "boulescope/error.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fcntl.h>
#include <fmt/format.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace boulescope {

namespace {

using Clock = std::chrono::steady_clock;

int poll_timeout_ms(Clock::time_point deadline, bool infinite) {
    if (infinite) return -1;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

class TcpStream final : public LineStream {
public:
    explicit TcpStream(int fd) : fd_(fd) {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    ~TcpStream() override { close(); }

    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
        const bool infinite = timeout.count() < 0;
        const auto deadline = Clock::now() + (infinite ? std::chrono::milliseconds(0) : timeout);
        for (;;) {
            if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
                std::string line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                return line;
            }
            if (fd_ < 0 || eof_) return std::nullopt;
            pollfd pfd{fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, poll_timeout_ms(deadline, infinite));
            if (ready < 0 && errno == EINTR) continue;
            if (ready <= 0) return std::nullopt;
            char chunk[4096];
            const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
                eof_ = true;
                continue;
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void write(std::string_view bytes) override {
        while (!bytes.empty()) {
            if (fd_ < 0) throw Error(ErrorCode::device_unavailable, "write on closed stream");
            const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorCode::device_unavailable,
                            fmt::format("send failed: {}", std::strerror(errno)));
            }
            bytes.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    bool at_eof() override {
        return (fd_ < 0 || eof_) && buffer_.find('\n') == std::string::npos;
    }

    void close() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_;
    bool eof_ = false;
    std::string buffer_;
};

addrinfo* resolve(const HostPort& hp, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* result = nullptr;
    const auto port = std::to_string(hp.port);
    const int rc = ::getaddrinfo(hp.host.empty() ? nullptr : hp.host.c_str(), port.c_str(), &hints,
                                 &result);
    if (rc != 0) {
        throw Error(ErrorCode::device_unavailable,
                    fmt::format("cannot resolve {}: {}", hp.host, ::gai_strerror(rc)));
    }
    return result;
}

}  // namespace

HostPort HostPort::parse(std::string_view address) {
    const auto colon = address.rfind(':');
    if (colon == std::string_view::npos) {
        throw Error(ErrorCode::configuration, fmt::format("address '{}' lacks a port", address));
    }
    HostPort hp;
    hp.host = std::string(address.substr(0, colon));
    const auto digits = address.substr(colon + 1);
    unsigned port = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535) {
        throw Error(ErrorCode::configuration, fmt::format("bad port in address '{}'", address));
    }
    hp.port = static_cast<std::uint16_t>(port);
    return hp;
}

TcpAcceptor::TcpAcceptor(const std::string& address) {
    const auto hp = HostPort::parse(address);
    host_ = hp.host.empty() ? "0.0.0.0" : hp.host;
    addrinfo* info = resolve(hp, true);
    fd_ = ::socket(info->ai_family, info->ai_socktype, info->ai_protocol);
    if (fd_ < 0) {
        ::freeaddrinfo(info);
        throw Error(ErrorCode::configuration, fmt::format("socket: {}", std::strerror(errno)));
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const int bound = ::bind(fd_, info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (bound < 0 || ::listen(fd_, 16) < 0) {
        const std::string why = std::strerror(errno);
        ::close(fd_);
        throw Error(ErrorCode::configuration, fmt::format("cannot listen on {}: {}", address, why));
    }
    sockaddr_in actual{};
    socklen_t len = sizeof(actual);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&actual), &len);
    port_ = ntohs(actual.sin_port);
    if (::pipe(wake_pipe_) < 0) {
        ::close(fd_);
        throw Error(ErrorCode::configuration, "cannot create wake pipe");
    }
}

TcpAcceptor::~TcpAcceptor() {
    shutdown();
    if (fd_ >= 0) ::close(fd_);
    for (int& p : wake_pipe_) {
        if (p >= 0) ::close(p);
        p = -1;
    }
}

std::string TcpAcceptor::address() const { return fmt::format("{}:{}", host_, port_); }

std::unique_ptr<LineStream> TcpAcceptor::accept() {
    for (;;) {
        pollfd pfds[2] = {{fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
        const int ready = ::poll(pfds, 2, -1);
        if (ready < 0) {
            if (errno == EINTR) continue;
            return nullptr;
        }
        if (pfds[1].revents != 0) return nullptr;
        if (pfds[0].revents & POLLIN) {
            const int client = ::accept(fd_, nullptr, nullptr);
            if (client < 0) {
                if (errno == EINTR || errno == ECONNABORTED) continue;
                return nullptr;
            }
            return std::make_unique<TcpStream>(client);
        }
    }
}

void TcpAcceptor::shutdown() {
    if (wake_pipe_[1] >= 0) {
        const char byte = 'x';
        [[maybe_unused]] auto n = ::write(wake_pipe_[1], &byte, 1);
    }
}

std::unique_ptr<LineStream> tcp_connect(const std::string& address,
                                        std::chrono::milliseconds timeout) {
    HostPort hp;
    try {
        hp = HostPort::parse(address);
    } catch (const Error& e) {
        throw Error(ErrorCode::device_unavailable, e.what());
    }
    if (hp.host.empty() || hp.host == "0.0.0.0") hp.host = "127.0.0.1";
    addrinfo* info = resolve(hp, false);
    const int fd = ::socket(info->ai_family, info->ai_socktype, info->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(info);
        throw Error(ErrorCode::device_unavailable, fmt::format("socket: {}", std::strerror(errno)));
    }
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (rc < 0 && errno == EINPROGRESS) {
        pollfd pfd{fd, POLLOUT, 0};
        rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (rc == 1) {
            int err = 0;
            socklen_t len = sizeof(err);
            ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
            rc = err == 0 ? 0 : -1;
            errno = err;
        } else {
            if (rc == 0) errno = ETIMEDOUT;
            rc = -1;
        }
    }
    if (rc < 0) {
        const std::string why = std::strerror(errno);
        ::close(fd);
        throw Error(ErrorCode::device_unavailable,
                    fmt::format("cannot connect to {}: {}", address, why));
    }
    ::fcntl(fd, F_SETFL, flags);
    return std::make_unique<TcpStream>(fd);
}

Connector tcp_connector(std::chrono::milliseconds timeout) {
    return [timeout](const std::string& address) { return tcp_connect(address, timeout); };
}

// ---- In-memory -----------------------------------------------------------

namespace {

struct Channel {
    std::mutex mutex;
    std::condition_variable cv;
    std::string bytes;
    bool closed = false;
};

class PipeEnd final : public LineStream {
public:
    PipeEnd(std::shared_ptr<Channel> in, std::shared_ptr<Channel> out)
        : in_(std::move(in)), out_(std::move(out)) {}
    ~PipeEnd() override { close(); }

    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
        std::unique_lock lock(in_->mutex);
        auto has_line = [&] { return in_->bytes.find('\n') != std::string::npos || in_->closed; };
        if (timeout.count() < 0) {
            in_->cv.wait(lock, has_line);
        } else if (!in_->cv.wait_for(lock, timeout, has_line)) {
            return std::nullopt;
        }
        const auto pos = in_->bytes.find('\n');
        if (pos == std::string::npos) return std::nullopt;
        std::string line = in_->bytes.substr(0, pos);
        in_->bytes.erase(0, pos + 1);
        return line;
    }

    void write(std::string_view bytes) override {
        std::lock_guard lock(out_->mutex);
        if (out_->closed) throw Error(ErrorCode::device_unavailable, "write on closed pipe");
        out_->bytes.append(bytes);
        out_->cv.notify_all();
    }

    bool at_eof() override {
        std::lock_guard lock(in_->mutex);
        return in_->closed && in_->bytes.find('\n') == std::string::npos;
    }

    void close() override {
        for (auto* ch : {in_.get(), out_.get()}) {
            std::lock_guard lock(ch->mutex);
            ch->closed = true;
            ch->cv.notify_all();
        }
    }

private:
    std::shared_ptr<Channel> in_;
    std::shared_ptr<Channel> out_;
};

}  // namespace

std::pair<std::unique_ptr<LineStream>, std::unique_ptr<LineStream>> make_pipe() {
    auto a_to_b = std::make_shared<Channel>();
    auto b_to_a = std::make_shared<Channel>();
    return {std::make_unique<PipeEnd>(b_to_a, a_to_b), std::make_unique<PipeEnd>(a_to_b, b_to_a)};
}

std::unique_ptr<LineStream> InMemoryAcceptor::connect() {
    auto [client, server] = make_pipe();
    {
        std::lock_guard lock(mutex_);
        if (shut_down_) throw Error(ErrorCode::device_unavailable, "in-memory device is shut down");
        pending_.push_back(std::move(server));
    }
    cv_.notify_one();
    return std::move(client);
}

std::unique_ptr<LineStream> InMemoryAcceptor::accept() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return shut_down_ || !pending_.empty(); });
    if (shut_down_) return nullptr;
    auto stream = std::move(pending_.front());
    pending_.pop_front();
    return stream;
}

void InMemoryAcceptor::shutdown() {
    {
        std::lock_guard lock(mutex_);
        shut_down_ = true;
    }
    cv_.notify_all();
}

std::shared_ptr<InMemoryAcceptor> InMemoryNetwork::listen(const std::string& address) {
    auto acceptor = std::make_shared<InMemoryAcceptor>();
    std::lock_guard lock(*mutex_);
    (*endpoints_)[address] = acceptor;
    return acceptor;
}

Connector InMemoryNetwork::connector() {
    return [mutex = mutex_, endpoints = endpoints_](const std::string& address) {
        std::shared_ptr<InMemoryAcceptor> acceptor;
        {
            std::lock_guard lock(*mutex);
            const auto it = endpoints->find(address);
            if (it != endpoints->end()) acceptor = it->second.lock();
        }
        if (!acceptor) {
            throw Error(ErrorCode::device_unavailable,
                        fmt::format("no in-memory device at '{}'", address));
        }
        return acceptor->connect();
    };
}

}  // namespace boulescope
