#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dsfec/fec/types.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

inline constexpr double kRateFloor = 2.0 / 3.0;
inline constexpr double kRateCeil = 8.0 / 9.0;
inline constexpr double kRateMargin = 1.15;

struct RateDecision {
  double rc = 0.0;
  std::int64_t action_id = 0;
  SimTime issued_at = 0;
};

// Fraction of a matrix's symbols that survived. total must be >= 1.
double compute_ps(std::int64_t received, std::int64_t total);

// Blend weight for the loss estimate: full on decode failure, otherwise
// half, scaled down for small matrices.
double feedback_weight(CodecStatus status, std::int64_t total);

double feedback_update(double pe_old, CodecStatus status, std::int64_t received,
                       std::int64_t total);

// clamp(1 - margin * p_e) into [floor, ceil].
double rate_from_pe(double pe);

class RatePolicy {
 public:
  virtual ~RatePolicy() = default;

  // Campaign-persistent state stays; per-round transients reset here.
  virtual void begin_round(std::uint64_t round) = 0;

  virtual RateDecision initial_decision(SimTime now) = 0;

  // A new decision, or nullopt to keep the current one.
  virtual std::optional<RateDecision> on_feedback(const ResolvedFeedback& fb,
                                                  SimTime now) = 0;

  virtual std::string name() const = 0;

  // Loss estimate to log alongside decisions.
  virtual double trace_pe_estimate() const = 0;
};

class FixedRatePolicy final : public RatePolicy {
 public:
  explicit FixedRatePolicy(double rc) : rc_(rc) {}

  void begin_round(std::uint64_t) override {}
  RateDecision initial_decision(SimTime now) override {
    return {rc_, 0, now};
  }
  std::optional<RateDecision> on_feedback(const ResolvedFeedback&,
                                          SimTime) override {
    return std::nullopt;
  }
  std::string name() const override { return "fixed"; }
  double trace_pe_estimate() const override { return 0.0; }

 private:
  double rc_;
};

// Tracks a loss estimate from matrix survival fractions and maps it straight
// to a code rate. The estimate persists across rounds of a campaign.
class FeedbackRatePolicy final : public RatePolicy {
 public:
  void begin_round(std::uint64_t) override {}
  RateDecision initial_decision(SimTime now) override;
  std::optional<RateDecision> on_feedback(const ResolvedFeedback& fb,
                                          SimTime now) override;
  std::string name() const override { return "feedback"; }
  double trace_pe_estimate() const override { return pe_est_; }

 private:
  double pe_est_ = 0.0;
  std::int64_t next_action_id_ = 0;
};

}  // namespace dsfec
