#include "sgs/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "sgs/error.hpp"

namespace sgs::net {

namespace {

[[noreturn]] void io_error(const std::string& what) {
    throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

int poll_timeout(Millis t) {
    return static_cast<int>(std::max<Millis::rep>(0, t.count()));
}

}  // namespace

Address::Address(const sockaddr* sa, socklen_t len) : len_(len) {
    std::memcpy(&storage_, sa, std::min<std::size_t>(len, sizeof storage_));
}

Address Address::parse(std::string_view host_port) {
    std::string host;
    std::string port;
    if (!host_port.empty() && host_port.front() == '[') {
        const auto close = host_port.find(']');
        if (close == std::string_view::npos || close + 1 >= host_port.size() || host_port[close + 1] != ':')
            throw Error(ErrorCode::Io, "bad address '" + std::string(host_port) + "'");
        host = host_port.substr(1, close - 1);
        port = host_port.substr(close + 2);
    } else {
        const auto colon = host_port.rfind(':');
        if (colon == std::string_view::npos) throw Error(ErrorCode::Io, "address needs a port: '" + std::string(host_port) + "'");
        host = host_port.substr(0, colon);
        port = host_port.substr(colon + 1);
    }
    if (host.empty()) host = "127.0.0.1";

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_flags = AI_NUMERICSERV;
    addrinfo* result = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result); rc != 0)
        throw Error(ErrorCode::Io, "cannot resolve '" + std::string(host_port) + "': " + ::gai_strerror(rc));
    Address a(result->ai_addr, result->ai_addrlen);
    ::freeaddrinfo(result);
    return a;
}

Address Address::loopback(std::uint16_t port) {
    sockaddr_in sin{};
    sin.sin_family = AF_INET;
    sin.sin_port = htons(port);
    sin.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    return Address(reinterpret_cast<const sockaddr*>(&sin), sizeof sin);
}

std::uint16_t Address::port() const noexcept {
    if (storage_.ss_family == AF_INET) return ntohs(reinterpret_cast<const sockaddr_in*>(&storage_)->sin_port);
    if (storage_.ss_family == AF_INET6) return ntohs(reinterpret_cast<const sockaddr_in6*>(&storage_)->sin6_port);
    return 0;
}

std::string Address::str() const {
    char buf[INET6_ADDRSTRLEN] = {};
    if (storage_.ss_family == AF_INET) {
        ::inet_ntop(AF_INET, &reinterpret_cast<const sockaddr_in*>(&storage_)->sin_addr, buf, sizeof buf);
        return std::string(buf) + ":" + std::to_string(port());
    }
    if (storage_.ss_family == AF_INET6) {
        ::inet_ntop(AF_INET6, &reinterpret_cast<const sockaddr_in6*>(&storage_)->sin6_addr, buf, sizeof buf);
        return "[" + std::string(buf) + "]:" + std::to_string(port());
    }
    return "?";
}

std::uint16_t Socket::local_port() const {
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len) != 0) io_error("getsockname");
    return Address(reinterpret_cast<const sockaddr*>(&ss), len).port();
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool Socket::wait_readable(Millis timeout) const {
    pollfd p{fd_, POLLIN, 0};
    while (true) {
        const int rc = ::poll(&p, 1, poll_timeout(timeout));
        if (rc < 0 && errno == EINTR) continue;
        if (rc < 0) io_error("poll");
        return rc > 0;
    }
}

UdpSocket UdpSocket::bind(const Address& local) {
    UdpSocket s;
    s.sock_ = Socket(::socket(local.family(), SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!s.sock_.valid()) io_error("socket");
    const int one = 1;
    ::setsockopt(s.sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rcvbuf = 4 << 20;
    ::setsockopt(s.sock_.fd(), SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);
    if (::bind(s.sock_.fd(), local.get(), local.size()) != 0) io_error("bind udp " + local.str());
    return s;
}

UdpSocket UdpSocket::open_for(const Address& remote) {
    UdpSocket s;
    s.sock_ = Socket(::socket(remote.family(), SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!s.sock_.valid()) io_error("socket");
    return s;
}

void UdpSocket::send_to(std::span<const std::uint8_t> data, const Address& to) const {
    if (::sendto(sock_.fd(), data.data(), data.size(), MSG_NOSIGNAL, to.get(), to.size()) < 0)
        io_error("sendto " + to.str());
}

std::optional<std::pair<Bytes, Address>> UdpSocket::receive(Millis timeout) const {
    if (!sock_.wait_readable(timeout)) return std::nullopt;
    Bytes buf(65536);
    sockaddr_storage from{};
    socklen_t len = sizeof from;
    const auto n = ::recvfrom(sock_.fd(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n < 0) {
        if (errno == EAGAIN || errno == EINTR) return std::nullopt;
        io_error("recvfrom");
    }
    buf.resize(static_cast<std::size_t>(n));
    return std::make_pair(std::move(buf), Address(reinterpret_cast<const sockaddr*>(&from), len));
}

TcpStream TcpStream::connect(const Address& remote, Millis timeout) {
    Socket s(::socket(remote.family(), SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
    if (!s.valid()) io_error("socket");
    auto unreachable = [&](const std::string& why) {
        throw Error(ErrorCode::GatewayUnreachable, "cannot connect to " + remote.str() + ": " + why);
    };
    if (::connect(s.fd(), remote.get(), remote.size()) != 0) {
        if (errno != EINPROGRESS) unreachable(std::strerror(errno));
        pollfd p{s.fd(), POLLOUT, 0};
        if (::poll(&p, 1, poll_timeout(timeout)) <= 0) unreachable("timed out");
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) unreachable(std::strerror(err));
    }
    const int flags = ::fcntl(s.fd(), F_GETFL);
    ::fcntl(s.fd(), F_SETFL, flags & ~O_NONBLOCK);
    const int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpStream(std::move(s));
}

void TcpStream::write_all(std::span<const std::uint8_t> data) const {
    while (!data.empty()) {
        const auto n = ::send(sock_.fd(), data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            io_error("send");
        }
        data = data.subspan(static_cast<std::size_t>(n));
    }
}

std::optional<std::size_t> TcpStream::read_some(std::span<std::uint8_t> buf, Millis timeout) const {
    if (!sock_.wait_readable(timeout)) return std::nullopt;
    while (true) {
        const auto n = ::recv(sock_.fd(), buf.data(), buf.size(), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) io_error("recv");
        return static_cast<std::size_t>(n);
    }
}

TcpListener TcpListener::bind(const Address& local, int backlog) {
    TcpListener l;
    l.sock_ = Socket(::socket(local.family(), SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!l.sock_.valid()) io_error("socket");
    const int one = 1;
    ::setsockopt(l.sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(l.sock_.fd(), local.get(), local.size()) != 0) io_error("bind tcp " + local.str());
    if (::listen(l.sock_.fd(), backlog) != 0) io_error("listen");
    return l;
}

std::optional<std::pair<TcpStream, Address>> TcpListener::accept(Millis timeout) const {
    if (!sock_.wait_readable(timeout)) return std::nullopt;
    sockaddr_storage from{};
    socklen_t len = sizeof from;
    const int fd = ::accept4(sock_.fd(), reinterpret_cast<sockaddr*>(&from), &len, SOCK_CLOEXEC);
    if (fd < 0) {
        if (errno == EAGAIN || errno == EINTR || errno == ECONNABORTED) return std::nullopt;
        io_error("accept");
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_pair(TcpStream(Socket(fd)), Address(reinterpret_cast<const sockaddr*>(&from), len));
}

}  // namespace sgs::net
