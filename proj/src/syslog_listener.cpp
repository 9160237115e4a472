#include "idfw/syslog_listener.hpp"

#include <cerrno>
#include <cstring>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace idfw {

namespace {
constexpr std::size_t kMaxDatagram = 8 * 1024;
}

SyslogListener::SyslogListener(const std::string& host, std::uint16_t port,
                               std::vector<SyslogPattern> patterns, Sink sink)
    : patterns_(std::move(patterns)), sink_(std::move(sink)) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw IdfwError(std::string("socket: ") + std::strerror(errno));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw IdfwError("invalid bind address: " + host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd_);
        throw IdfwError("bind " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

SyslogListener::~SyslogListener() {
    stop();
    if (fd_ >= 0) ::close(fd_);
}

void SyslogListener::start() {
    if (running_.exchange(true)) return;
    thread_ = std::thread([this] { run(); });
}

void SyslogListener::stop() {
    if (!running_.exchange(false)) return;
    if (thread_.joinable()) thread_.join();
}

void SyslogListener::run() {
    char buffer[kMaxDatagram];
    pollfd pfd{fd_, POLLIN, 0};
    while (running_.load()) {
        int ready = ::poll(&pfd, 1, 50);
        if (ready <= 0) continue;
        sockaddr_in peer{};
        socklen_t peer_len = sizeof(peer);
        ssize_t n = ::recvfrom(fd_, buffer, sizeof(buffer), 0,
                               reinterpret_cast<sockaddr*>(&peer), &peer_len);
        if (n < 0) {
            if (errno != EAGAIN && errno != EINTR) ++errors_;
            continue;
        }
        Ipv4 sender(ntohl(peer.sin_addr.s_addr));
        auto now = std::chrono::time_point_cast<Duration>(Clock::now());
        auto result = parse_syslog_datagram(std::string_view(buffer, static_cast<std::size_t>(n)),
                                            sender, patterns_, now);
        if (auto* event = std::get_if<SessionEvent>(&result)) {
            sink_(std::move(*event));
        } else if (std::holds_alternative<ParseError>(result)) {
            ++errors_;
        } else {
            ++skips_;
        }
    }
}

}  // namespace idfw
