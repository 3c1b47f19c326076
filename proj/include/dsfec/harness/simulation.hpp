#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dsfec/channel/link.hpp"
#include "dsfec/channel/loss_model.hpp"
#include "dsfec/fec/decoder.hpp"
#include "dsfec/fec/encoder.hpp"
#include "dsfec/harness/config.hpp"
#include "dsfec/ltp/receiver.hpp"
#include "dsfec/ltp/sender.hpp"
#include "dsfec/rate/policy.hpp"
#include "dsfec/sim/event_loop.hpp"

namespace dsfec {

struct RoundResult {
  int round = 0;
  std::string policy;
  std::string scenario;
  std::uint64_t seed = 0;
  double goodput_mbps = 0.0;
  double delay_s = 0.0;
  std::int64_t decoding_failures = 0;
  std::int64_t retx_rounds = 0;
};

struct LossTraceRow {
  SimTime time_ms = 0;
  double pe = 0.0;
};

struct DecisionTraceRow {
  SimTime time_ms = 0;
  std::int64_t action_id = 0;
  double rc = 0.0;
  double pe_estimate = 0.0;
};

struct MatrixTraceRow {
  std::int64_t matrix_id = 0;
  std::int64_t action_id = 0;
  double rc = 0.0;
  std::int64_t info = 0;
  std::int64_t total = 0;
  SimTime tx_time_ms = 0;
  CodecStatus status = CodecStatus::kNotDecoded;
  std::int64_t received = 0;
};

struct RoundTraces {
  std::vector<LossTraceRow> loss;
  std::vector<DecisionTraceRow> decisions;
  std::vector<MatrixTraceRow> matrices;
};

// One end-to-end file transfer: LTP sender feeding the coding layer over the
// lossy downlink, reports and matrix feedback returning on the uplink, the
// policy steering the code rate from feedback. The policy outlives rounds;
// everything else is rebuilt per round from the round seed.
class TransferSimulation {
 public:
  TransferSimulation(const ScenarioConfig& cfg, std::uint64_t round_seed,
                     RatePolicy& policy, std::uint64_t round_index);

  RoundResult run();
  const RoundTraces& traces() const { return traces_; }

 private:
  void on_resolved(const ResolvedFeedback& fb);

  const ScenarioConfig& cfg_;
  std::uint64_t round_index_;
  std::uint64_t seed_;
  RatePolicy& policy_;

  EventLoop loop_;
  Rng evolution_;
  Rng drops_;
  std::unique_ptr<LossProcess> loss_;
  std::unique_ptr<Link> link_;
  std::unique_ptr<FecDecoder> decoder_;
  std::unique_ptr<FecEncoder> encoder_;
  std::unique_ptr<LtpReceiver> receiver_;
  std::unique_ptr<LtpSender> sender_;
  MatrixInfoBuffer buffer_;

  RoundTraces traces_;
  std::vector<MatrixInfoRecord> sealed_;
  std::int64_t sender_failures_ = 0;
  bool complete_ = false;
};

}  // namespace dsfec
