#include "llnsim/cli/serve.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <list>

#include <fmt/format.h>

#include "llnsim/cli/session.hpp"

namespace llnsim::cli {

namespace {

constexpr int kPollMs = 20;
constexpr std::size_t kMaxLineBytes = 1 << 20;

struct Client {
    int fd = -1;
    std::string inbox;
    std::string outbox;
};

void queue(Client& c, const Session::Frames& frames) {
    for (const auto& f : frames) {
        c.outbox += f;
        c.outbox += '\n';
    }
}

// Returns false when the peer is gone.
bool flush(Client& c) {
    while (!c.outbox.empty()) {
        const ssize_t n = ::send(c.fd, c.outbox.data(), c.outbox.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n < 0) return errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR;
        c.outbox.erase(0, static_cast<std::size_t>(n));
    }
    return true;
}

int open_listener(std::uint16_t port, std::string& error) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
        error = std::strerror(errno);
        return -1;
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 8) < 0) {
        error = std::strerror(errno);
        ::close(fd);
        return -1;
    }
    return fd;
}

}  // namespace

int serve(const RunConfig& config, std::ostream& out, std::ostream& err, const std::atomic<bool>& stop) {
    sim::Scenario scenario;
    try {
        scenario = prepare_scenario(config);
    } catch (const std::exception& e) {
        err << "llnsim: " << e.what() << '\n';
        return 2;
    }
    const std::uint16_t port = config.serve_port.value_or(0);
    std::string error;
    const int listener = open_listener(port, error);
    if (listener < 0) {
        err << fmt::format("llnsim: cannot listen on 127.0.0.1:{}: {}\n", port, error);
        return 3;
    }

    Session session(std::move(scenario), notes_path_for(config.scenario));
    if (config.verbosity != Verbosity::quiet) {
        out << fmt::format("listening on 127.0.0.1:{} (paused; send {{\"cmd\":\"start\"}})\n", port) << std::flush;
    }

    std::list<Client> clients;
    auto broadcast = [&](const Session::Frames& frames) {
        if (frames.empty()) return;
        for (auto& c : clients) queue(c, frames);
    };

    auto last = std::chrono::steady_clock::now();
    while (!stop.load()) {
        std::vector<pollfd> fds;
        fds.push_back({listener, POLLIN, 0});
        for (const auto& c : clients) {
            fds.push_back({c.fd, static_cast<short>(POLLIN | (c.outbox.empty() ? 0 : POLLOUT)), 0});
        }
        const int ready = ::poll(fds.data(), fds.size(), kPollMs);
        if (ready < 0 && errno != EINTR) {
            err << fmt::format("llnsim: poll failed: {}\n", std::strerror(errno));
            break;
        }

        if (ready > 0 && (fds[0].revents & POLLIN)) {
            const int fd = ::accept(listener, nullptr, nullptr);
            if (fd >= 0) {
                clients.push_back({fd, {}, {}});
                queue(clients.back(), session.greeting());
                if (config.verbosity == Verbosity::verbose) err << "client connected\n";
            }
        }

        std::size_t i = 1;
        for (auto it = clients.begin(); it != clients.end(); ++i) {
            bool alive = true;
            if (ready > 0 && (fds[i].revents & (POLLIN | POLLHUP | POLLERR))) {
                char buf[4096];
                const ssize_t n = ::recv(it->fd, buf, sizeof buf, MSG_DONTWAIT);
                if (n > 0) {
                    it->inbox.append(buf, static_cast<std::size_t>(n));
                    std::size_t nl;
                    while ((nl = it->inbox.find('\n')) != std::string::npos) {
                        std::string line = it->inbox.substr(0, nl);
                        it->inbox.erase(0, nl + 1);
                        if (!line.empty() && line.back() == '\r') line.pop_back();
                        if (line.empty()) continue;
                        broadcast(session.handle_line(line));
                    }
                    if (it->inbox.size() > kMaxLineBytes) {
                        it->inbox.clear();
                        broadcast(session.handle_line("{\"oversized\":true}"));
                    }
                } else if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) {
                    alive = false;
                }
            }
            // Pending output goes out either way; a full socket just waits.
            if (alive) alive = flush(*it);
            if (!alive) {
                ::close(it->fd);
                it = clients.erase(it);
                if (config.verbosity == Verbosity::verbose) err << "client disconnected\n";
            } else {
                ++it;
            }
        }

        const auto now = std::chrono::steady_clock::now();
        broadcast(session.advance(std::chrono::duration_cast<std::chrono::microseconds>(now - last)));
        last = now;
        for (auto& c : clients) flush(c);
    }

    for (auto& c : clients) ::close(c.fd);
    ::close(listener);

    try {
        session.engine().export_reports(config.out_dir);
    } catch (const std::exception& e) {
        err << "llnsim: " << e.what() << '\n';
        return 1;
    }
    if (config.verbosity != Verbosity::quiet) {
        out << fmt::format("stopped at {:.3f} s virtual time; reports written to {}\n",
                           static_cast<double>(session.engine().now()) / 1e6, config.out_dir.string());
    }
    return 0;
}

}  // namespace llnsim::cli
