#include "dsfec/harness/ipc.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <json.hpp>
#include <stdexcept>

namespace dsfec {
namespace {

using nlohmann::json;

sockaddr_un make_address(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() + 1 > sizeof(addr.sun_path)) {
    throw std::invalid_argument("ipc: socket path too long: " + path);
  }
  std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
  return addr;
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("ipc: write failed: " +
                               std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Reads one newline-terminated frame into line_out. Returns false on a
// clean close between frames; throws on timeout, errors, or EOF mid-frame.
bool read_frame(int fd, std::string& inbox, int timeout_ms,
                std::string& line_out) {
  for (;;) {
    const auto nl = inbox.find('\n');
    if (nl != std::string::npos) {
      line_out = inbox.substr(0, nl);
      inbox.erase(0, nl + 1);
      return true;
    }
    pollfd pfd{fd, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr == 0) throw std::runtime_error("ipc: timed out waiting for peer");
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("ipc: poll failed");
    }
    char buf[4096];
    const ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("ipc: read failed: " +
                               std::string(std::strerror(errno)));
    }
    if (n == 0) {
      if (inbox.empty()) return false;
      throw std::runtime_error("ipc: peer closed mid-frame");
    }
    inbox.append(buf, static_cast<std::size_t>(n));
  }
}

CodecStatus status_from_string(const std::string& s) {
  if (s == "Success") return CodecStatus::kSuccess;
  if (s == "Failed") return CodecStatus::kFailed;
  if (s == "NotDecoded") return CodecStatus::kNotDecoded;
  throw std::runtime_error("ipc: unknown status '" + s + "'");
}

json parse_frame(const std::string& line, const char* expected_type) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("ipc: malformed frame: ") + e.what());
  }
  if (!j.is_object() || j.value("type", "") != expected_type) {
    throw std::runtime_error(std::string("ipc: expected '") + expected_type +
                             "' frame, got: " + line);
  }
  return j;
}

}  // namespace

IpcRatePolicy::IpcRatePolicy(std::string socket_path, int timeout_ms,
                             std::string policy_name)
    : path_(std::move(socket_path)),
      timeout_ms_(timeout_ms),
      name_(std::move(policy_name)) {}

IpcRatePolicy::~IpcRatePolicy() { close_connection(); }

void IpcRatePolicy::close_connection() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  inbox_.clear();
}

void IpcRatePolicy::begin_round(std::uint64_t) {
  close_connection();
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("ipc: cannot create socket");
  sockaddr_un addr = make_address(path_);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw std::runtime_error("ipc: cannot connect to " + path_ + ": " +
                             std::strerror(errno));
  }
  current_action_id_ = -1;
  pe_estimate_ = 0.0;
}

void IpcRatePolicy::send_line(const std::string& line) {
  if (fd_ < 0) throw std::logic_error("ipc: not connected");
  write_all(fd_, line + "\n");
}

std::string IpcRatePolicy::read_line() {
  if (fd_ < 0) throw std::logic_error("ipc: not connected");
  std::string line;
  if (!read_frame(fd_, inbox_, timeout_ms_, line)) {
    throw std::runtime_error("ipc: agent closed the connection");
  }
  return line;
}

RateDecision IpcRatePolicy::initial_decision(SimTime now) {
  const json j = parse_frame(read_line(), "action");
  current_action_id_ = j.at("action_id").get<std::int64_t>();
  pe_estimate_ = j.value("pe_est", 0.0);
  return RateDecision{j.at("rc").get<double>(), current_action_id_, now};
}

std::optional<RateDecision> IpcRatePolicy::on_feedback(
    const ResolvedFeedback& fb, SimTime now) {
  json out = {
      {"type", "feedback"},
      {"action_id", fb.record.action_id},
      {"matrix_id", fb.record.matrix_id},
      {"I", fb.record.info_count},
      {"K", fb.record.k_max},
      {"N", fb.record.total_count},
      {"tx_time_ms", fb.record.tx_time},
      {"time_ms", now},
      {"total", fb.feedback.total},
      {"received", fb.feedback.received},
      {"status", to_string(fb.feedback.status)},
  };
  send_line(out.dump());

  const json j = parse_frame(read_line(), "action");
  const std::int64_t id = j.at("action_id").get<std::int64_t>();
  const double rc = j.at("rc").get<double>();
  if (id == current_action_id_) return std::nullopt;  // no new decision
  current_action_id_ = id;
  pe_estimate_ = j.value("pe_est", 0.0);
  return RateDecision{rc, id, now};
}

AgentServer::AgentServer(std::string socket_path, RatePolicy& policy,
                         int max_rounds, int timeout_ms)
    : path_(std::move(socket_path)),
      policy_(policy),
      max_rounds_(max_rounds),
      timeout_ms_(timeout_ms) {
  ::unlink(path_.c_str());
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("ipc: cannot create socket");
  sockaddr_un addr = make_address(path_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
      0) {
    throw std::runtime_error("ipc: cannot bind " + path_ + ": " +
                             std::strerror(errno));
  }
  if (::listen(listen_fd_, 1) != 0) {
    throw std::runtime_error("ipc: cannot listen on " + path_);
  }
}

AgentServer::~AgentServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
  ::unlink(path_.c_str());
}

void AgentServer::run() {
  for (int round = 0; round < max_rounds_; ++round) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) throw std::runtime_error("ipc: accept failed");
    try {
      serve_connection(fd, static_cast<std::uint64_t>(round));
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
  }
}

void AgentServer::serve_connection(int fd, std::uint64_t round) {
  std::unordered_map<std::int64_t, double> issued_rc;
  std::string inbox;
  std::int64_t last_id = -1;
  double last_rc = 0.0;

  auto send_action = [&](const RateDecision& d) {
    issued_rc[d.action_id] = d.rc;
    last_id = d.action_id;
    last_rc = d.rc;
    const json j = {{"type", "action"},
                    {"action_id", d.action_id},
                    {"rc", d.rc},
                    {"pe_est", policy_.trace_pe_estimate()}};
    write_all(fd, j.dump() + "\n");
  };

  policy_.begin_round(round);
  send_action(policy_.initial_decision(0));

  for (;;) {
    std::string line;
    if (!read_frame(fd, inbox, timeout_ms_, line)) {
      return;  // clean close between frames ends the round
    }
    const json j = parse_frame(line, "feedback");
    ResolvedFeedback fb;
    fb.record.action_id = j.at("action_id").get<std::int64_t>();
    fb.record.matrix_id = j.at("matrix_id").get<std::int64_t>();
    fb.record.info_count = j.at("I").get<std::int64_t>();
    fb.record.k_max = j.at("K").get<std::int64_t>();
    fb.record.total_count = j.at("N").get<std::int64_t>();
    fb.record.tx_time = j.at("tx_time_ms").get<SimTime>();
    const auto rc_it = issued_rc.find(fb.record.action_id);
    fb.record.rc_used = rc_it != issued_rc.end() ? rc_it->second : 0.0;
    fb.feedback.matrix_id = fb.record.matrix_id;
    fb.feedback.total = j.at("total").get<std::int64_t>();
    fb.feedback.received = j.at("received").get<std::int64_t>();
    fb.feedback.status = status_from_string(j.at("status").get<std::string>());
    const SimTime now = j.at("time_ms").get<SimTime>();

    if (auto d = policy_.on_feedback(fb, now)) {
      send_action(*d);
    } else {
      const json repeat = {{"type", "action"},
                           {"action_id", last_id},
                           {"rc", last_rc},
                           {"pe_est", policy_.trace_pe_estimate()}};
      write_all(fd, repeat.dump() + "\n");
    }
  }
}

}  // namespace dsfec
