#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/core.h>

#include "scenfuzz/errors.hpp"
#include "scenfuzz/sim/protocol.hpp"
#include "scenfuzz/sim/sut.hpp"

namespace scenfuzz::sim {

namespace {

using Clock = std::chrono::steady_clock;

// Line-oriented duplex byte stream over file descriptors.
class Channel {
 public:
  Channel(int read_fd, int write_fd, pid_t child = -1) : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  ~Channel() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      ::kill(child_, SIGTERM);
      ::waitpid(child_, nullptr, 0);
    }
  }

  bool broken() const { return broken_; }

  bool write_line(const std::string& line) {
    if (broken_) return false;
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = send_or_write(write_fd_, data.data() + off, data.size() - off, socket_);
      if (n < 0) {
        if (errno == EINTR) continue;
        broken_ = true;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  std::optional<std::string> read_line(Clock::time_point deadline) {
    while (!broken_) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) return std::nullopt;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left));
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) return std::nullopt;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        broken_ = true;
        return std::nullopt;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    return std::nullopt;
  }

  void mark_socket() { socket_ = true; }
  void mark_broken() { broken_ = true; }

 private:
  static ssize_t send_or_write(int fd, const char* p, std::size_t n, bool socket) {
    return socket ? ::send(fd, p, n, MSG_NOSIGNAL) : ::write(fd, p, n);
  }

  int read_fd_;
  int write_fd_;
  pid_t child_;
  bool socket_ = false;
  bool broken_ = false;
  std::string buffer_;
};

std::unique_ptr<Channel> spawn_process(const std::string& command) {
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw SutUnreachable(fmt::format("pipe: {}", std::strerror(errno)));
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw SutUnreachable(fmt::format("pipe: {}", std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw SutUnreachable(fmt::format("fork: {}", std::strerror(errno)));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<Channel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Channel> connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw SutUnreachable(fmt::format("cannot resolve {}:{}: {}", host, port, ::gai_strerror(rc)));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw SutUnreachable(fmt::format("cannot connect to {}:{}", host, port));
  auto ch = std::make_unique<Channel>(fd, fd);
  ch->mark_socket();
  return ch;
}

class ExternalSut : public Sut {
 public:
  ExternalSut(std::function<std::unique_ptr<Channel>()> connect, const MapModel& map, SutOptions opts)
      : connect_(std::move(connect)), map_(map), opts_(std::move(opts)) {}

  void begin(const Handshake& hello) override {
    channel_ = connect_();
    hello_ = hello;
    if (!channel_->write_line(hello_message(hello).dump())) {
      channel_.reset();
      throw SutUnreachable("controller closed its input before the handshake");
    }
  }

  std::optional<Action> act(const WorldState& world) override {
    if (!channel_ || channel_->broken()) return std::nullopt;
    const auto deadline = Clock::now() + opts_.deadline;
    if (!channel_->write_line(step_message(world, hello_.map_ref).dump())) return std::nullopt;
    auto line = channel_->read_line(deadline);
    if (!line) {
      // A late reply would desynchronise the stream.
      channel_->mark_broken();
      return std::nullopt;
    }
    try {
      return action_from_reply(nlohmann::json::parse(*line), world, map_, hello_.route, opts_.limits);
    } catch (const std::exception&) {
      channel_->mark_broken();
      return std::nullopt;
    }
  }

  void end(TerminationReason reason) override {
    if (channel_ && !channel_->broken()) channel_->write_line(end_message(reason).dump());
    channel_.reset();
  }

 private:
  std::function<std::unique_ptr<Channel>()> connect_;
  const MapModel& map_;
  SutOptions opts_;
  Handshake hello_;
  std::unique_ptr<Channel> channel_;
};

}  // namespace

SutFactory make_sut_factory(const std::string& spec, const MapModel& map, const SutOptions& opts) {
  if (spec == "builtin") {
    return [&map, opts] { return std::make_unique<Autopilot>(map, opts.autopilot); };
  }
  if (spec == "null") {
    return [] { return std::make_unique<NullSut>(); };
  }
  if (spec.rfind("stdio:", 0) == 0) {
    const std::string command = spec.substr(6);
    if (command.empty()) throw ConfigError("stdio SUT needs a command");
    return [&map, opts, command] {
      return std::make_unique<ExternalSut>([command] { return spawn_process(command); }, map, opts);
    };
  }
  if (spec.rfind("tcp://", 0) == 0) {
    const std::string rest = spec.substr(6);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
      throw ConfigError(fmt::format("malformed TCP endpoint '{}'", spec));
    }
    const std::string host = rest.substr(0, colon);
    const std::string port = rest.substr(colon + 1);
    return [&map, opts, host, port] {
      return std::make_unique<ExternalSut>([host, port] { return connect_tcp(host, port); }, map, opts);
    };
  }
  throw ConfigError(fmt::format("unknown SUT '{}': expected builtin, null, tcp://host:port or stdio:<command>", spec));
}

}  // namespace scenfuzz::sim
