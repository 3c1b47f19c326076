#include "dsfec/rate/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsfec {

double compute_ps(std::int64_t received, std::int64_t total) {
  if (total < 1) throw std::invalid_argument("compute_ps: total must be >= 1");
  if (received < 0 || received > total) {
    throw std::invalid_argument("compute_ps: received out of range");
  }
  return static_cast<double>(received) / static_cast<double>(total);
}

double feedback_weight(CodecStatus status, std::int64_t total) {
  if (status == CodecStatus::kFailed) return 1.0;
  if (total > 50) return 0.5;
  return 0.5 * static_cast<double>(total) / 50.0;
}

double feedback_update(double pe_old, CodecStatus status, std::int64_t received,
                       std::int64_t total) {
  const double w = feedback_weight(status, total);
  const double ps = compute_ps(received, total);
  return w * (1.0 - ps) + (1.0 - w) * pe_old;
}

double rate_from_pe(double pe) {
  return std::clamp(1.0 - kRateMargin * pe, kRateFloor, kRateCeil);
}

RateDecision FeedbackRatePolicy::initial_decision(SimTime now) {
  return {rate_from_pe(pe_est_), next_action_id_++, now};
}

std::optional<RateDecision> FeedbackRatePolicy::on_feedback(
    const ResolvedFeedback& fb, SimTime now) {
  pe_est_ = feedback_update(pe_est_, fb.feedback.status, fb.feedback.received,
                            fb.feedback.total);
  return RateDecision{rate_from_pe(pe_est_), next_action_id_++, now};
}

}  // namespace dsfec
