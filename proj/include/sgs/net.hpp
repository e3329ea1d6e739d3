#pragma once

// Thin RAII wrappers over POSIX sockets.

#include <sys/socket.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "sgs/model.hpp"

namespace sgs::net {

using Millis = std::chrono::milliseconds;

class Address {
public:
    Address() = default;
    Address(const sockaddr* sa, socklen_t len);

    /// "host:port", "[v6]:port" or ":port" (loopback). Throws Io.
    static Address parse(std::string_view host_port);
    static Address loopback(std::uint16_t port);

    [[nodiscard]] const sockaddr* get() const noexcept { return reinterpret_cast<const sockaddr*>(&storage_); }
    [[nodiscard]] socklen_t size() const noexcept { return len_; }
    [[nodiscard]] std::uint16_t port() const noexcept;
    [[nodiscard]] int family() const noexcept { return storage_.ss_family; }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Address& a, const Address& b) { return a.str() == b.str(); }

private:
    sockaddr_storage storage_{};
    socklen_t len_ = 0;
};

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    ~Socket() { close(); }
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    [[nodiscard]] int fd() const noexcept { return fd_; }
    [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
    [[nodiscard]] std::uint16_t local_port() const;
    /// Unblocks readers in other threads without releasing the descriptor.
    void shutdown() noexcept;
    void close() noexcept;

    /// True when readable before the timeout.
    [[nodiscard]] bool wait_readable(Millis timeout) const;

private:
    int fd_ = -1;
};

class UdpSocket {
public:
    static UdpSocket bind(const Address& local);
    /// Unbound socket of the right family for talking to `remote`.
    static UdpSocket open_for(const Address& remote);

    void send_to(std::span<const std::uint8_t> data, const Address& to) const;
    /// nullopt on timeout.
    std::optional<std::pair<Bytes, Address>> receive(Millis timeout) const;

    [[nodiscard]] std::uint16_t local_port() const { return sock_.local_port(); }
    void shutdown() noexcept { sock_.shutdown(); }

private:
    Socket sock_;
};

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(Socket s) : sock_(std::move(s)) {}

    /// Throws GatewayUnreachable.
    static TcpStream connect(const Address& remote, Millis timeout = Millis{2000});

    /// Throws Io when the peer is gone.
    void write_all(std::span<const std::uint8_t> data) const;
    /// 0 on orderly EOF; nullopt on timeout. Throws Io on errors.
    std::optional<std::size_t> read_some(std::span<std::uint8_t> buf, Millis timeout) const;

    [[nodiscard]] bool valid() const noexcept { return sock_.valid(); }
    void shutdown() noexcept { sock_.shutdown(); }

private:
    Socket sock_;
};

class TcpListener {
public:
    static TcpListener bind(const Address& local, int backlog = 64);
    std::optional<std::pair<TcpStream, Address>> accept(Millis timeout) const;
    [[nodiscard]] std::uint16_t local_port() const { return sock_.local_port(); }
    void shutdown() noexcept { sock_.shutdown(); }

private:
    Socket sock_;
};

}  // namespace sgs::net
