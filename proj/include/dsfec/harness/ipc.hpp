#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "dsfec/rate/policy.hpp"

namespace dsfec {

// Client side of the external-agent bridge. Each round opens one connection
// to a Unix stream socket; the server pushes the round's initial action on
// connect, then answers every feedback line with exactly one action line.
// Replaying the current action id means "no new decision". Newline-delimited
// JSON frames:
//   out: {"type":"feedback","action_id":..,"matrix_id":..,"I":..,"K":..,
//         "N":..,"tx_time_ms":..,"time_ms":..,"total":..,"received":..,
//         "status":"Success|Failed|NotDecoded"}
//   in:  {"type":"action","action_id":..,"rc":..,"pe_est":..}
class IpcRatePolicy final : public RatePolicy {
 public:
  IpcRatePolicy(std::string socket_path, int timeout_ms,
                std::string policy_name);
  ~IpcRatePolicy() override;

  IpcRatePolicy(const IpcRatePolicy&) = delete;
  IpcRatePolicy& operator=(const IpcRatePolicy&) = delete;

  void begin_round(std::uint64_t round) override;
  RateDecision initial_decision(SimTime now) override;
  std::optional<RateDecision> on_feedback(const ResolvedFeedback& fb,
                                          SimTime now) override;
  std::string name() const override { return name_; }
  double trace_pe_estimate() const override { return pe_estimate_; }

 private:
  void close_connection();
  void send_line(const std::string& line);
  std::string read_line();

  std::string path_;
  int timeout_ms_;
  std::string name_;
  int fd_ = -1;
  std::string inbox_;
  std::int64_t current_action_id_ = -1;
  double pe_estimate_ = 0.0;
};

// Hosts any in-process policy behind the wire protocol: one accepted
// connection per round, initial action pushed immediately, one action reply
// per feedback line. Returns after serving max_rounds connections.
class AgentServer {
 public:
  AgentServer(std::string socket_path, RatePolicy& policy, int max_rounds,
              int timeout_ms = 60000);
  ~AgentServer();

  AgentServer(const AgentServer&) = delete;
  AgentServer& operator=(const AgentServer&) = delete;

  void run();

 private:
  void serve_connection(int fd, std::uint64_t round);

  std::string path_;
  RatePolicy& policy_;
  int max_rounds_;
  int timeout_ms_;
  int listen_fd_ = -1;
};

}  // namespace dsfec
