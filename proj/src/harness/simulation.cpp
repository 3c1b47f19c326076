#include "dsfec/harness/simulation.hpp"

#include <stdexcept>

namespace dsfec {

TransferSimulation::TransferSimulation(const ScenarioConfig& cfg,
                                       std::uint64_t round_seed,
                                       RatePolicy& policy,
                                       std::uint64_t round_index)
    : cfg_(cfg),
      round_index_(round_index),
      seed_(round_seed),
      policy_(policy),
      evolution_(derive_seed(round_seed, "loss-model")),
      drops_(derive_seed(round_seed, "loss-model/drops")) {
  loss_ = std::make_unique<LossProcess>(loop_, cfg.loss_config(), evolution_);
  link_ = std::make_unique<Link>(loop_, cfg.link_config(), loss_.get(),
                                 &drops_);
  decoder_ = std::make_unique<FecDecoder>(
      loop_, cfg.fec_config(),
      FecDecoder::Callbacks{
          [this](const Segment& s) { receiver_->on_segment(s); },
          [this](const MatrixFeedback& f) {
            link_->transmit(Direction::kUp, kFeedbackPacketBytes, [this, f] {
              if (auto resolved = buffer_.complete(f)) {
                on_resolved(*resolved);
              }
            });
          }});
  encoder_ = std::make_unique<FecEncoder>(
      loop_, *link_, cfg.fec_config(),
      FecEncoder::Callbacks{
          [this](const MatrixInfoRecord& r) {
            buffer_.insert(r);
            sealed_.push_back(r);
          },
          [this](const FecSymbol& s) { decoder_->on_symbol(s); },
          [this](const Segment& s) { sender_->on_checkpoint_departed(s); }});
  receiver_ = std::make_unique<LtpReceiver>(
      loop_, [this](const ReportSegment& r) {
        link_->transmit(Direction::kUp, report_wire_size(r.claims.size()),
                        [this, r] { sender_->on_report(r); });
      });
  sender_ = std::make_unique<LtpSender>(
      loop_, cfg.ltp_config(), static_cast<std::size_t>(cfg.file_bytes),
      [this](const Segment& s) { encoder_->push(s); },
      [this] {
        complete_ = true;
        loss_->stop();
      });
}

void TransferSimulation::on_resolved(const ResolvedFeedback& fb) {
  if (fb.feedback.status == CodecStatus::kFailed) ++sender_failures_;
  traces_.matrices.push_back(MatrixTraceRow{
      fb.record.matrix_id, fb.record.action_id, fb.record.rc_used,
      fb.record.info_count, fb.feedback.total, fb.record.tx_time,
      fb.feedback.status, fb.feedback.received});
  if (auto d = policy_.on_feedback(fb, loop_.now())) {
    encoder_->set_decision(*d);
    traces_.decisions.push_back(DecisionTraceRow{
        d->issued_at, d->action_id, d->rc, policy_.trace_pe_estimate()});
  }
}

RoundResult TransferSimulation::run() {
  policy_.begin_round(round_index_);
  loss_->start([this](SimTime t, double pe) {
    traces_.loss.push_back(LossTraceRow{t, pe});
  });
  const RateDecision initial = policy_.initial_decision(loop_.now());
  encoder_->set_decision(initial);
  traces_.decisions.push_back(DecisionTraceRow{initial.issued_at,
                                               initial.action_id, initial.rc,
                                               policy_.trace_pe_estimate()});
  sender_->start();
  try {
    loop_.run_to_completion();
  } catch (const std::exception& e) {
    throw std::runtime_error("round " + std::to_string(round_index_) +
                             " (seed " + std::to_string(seed_) +
                             "): " + e.what());
  }

  if (!complete_ || !sender_->finished()) {
    throw std::logic_error("round ended without completing the transfer");
  }
  if (buffer_.size() != 0 ||
      sealed_.size() != traces_.matrices.size() ||
      sender_failures_ != decoder_->failure_count()) {
    throw std::logic_error("matrix accounting out of balance at round end");
  }

  RoundResult r;
  r.round = static_cast<int>(round_index_);
  r.policy = cfg_.policy;
  r.scenario = cfg_.name;
  r.seed = seed_;
  r.delay_s = static_cast<double>(receiver_->last_completion_ms()) / 1000.0;
  r.goodput_mbps =
      (static_cast<double>(cfg_.file_bytes) * 8.0 / 1e6) / r.delay_s;
  r.decoding_failures = sender_failures_;
  r.retx_rounds = sender_->retx_round_total();
  return r;
}

}  // namespace dsfec
