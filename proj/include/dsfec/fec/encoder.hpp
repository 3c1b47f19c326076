#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "dsfec/channel/link.hpp"
#include "dsfec/fec/types.hpp"
#include "dsfec/rate/policy.hpp"
#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

struct FecConfig {
  std::int64_t k_max = 512;   // info symbols per matrix
  std::int64_t n_max = 768;   // total symbols per matrix
  SimTime agg_timer_ms = 50;  // max aggregation latency once a matrix opens
  SimTime gap_timer_ms = 100;       // decoder conclusion timeout
  std::int64_t decode_overhead = 0; // extra symbols beyond I needed to decode
  std::size_t info_overhead_bytes = 2;
  std::size_t redundancy_bytes = 1026;
};

// Lowest selectable code rate; seal clamps into [kSealFloor, kRateCeil].
inline constexpr double kSealFloor = 0.66;

std::int64_t redundancy_total(std::int64_t info_count, double rc,
                              std::int64_t n_max);

// Aggregates segments into coding matrices and streams their symbols onto
// the downlink. A matrix opens once the previous matrix has fully left the
// serializer and at least one segment waits; it seals when k_max info
// symbols accumulate or the aggregation timer expires. Deferring the open
// until the link is ready keeps seal time, and the code rate in force at
// seal, aligned with wire time.
class FecEncoder {
 public:
  struct Callbacks {
    std::function<void(const MatrixInfoRecord&)> on_sealed;
    std::function<void(const FecSymbol&)> on_deliver;
    std::function<void(const Segment&)> on_checkpoint_departed;
  };

  FecEncoder(EventLoop& loop, Link& link, const FecConfig& cfg, Callbacks cb);

  void push(const Segment& seg);

  void set_decision(const RateDecision& d) { decision_ = d; }
  const RateDecision& decision() const { return decision_; }

  std::int64_t sealed_count() const { return next_matrix_id_; }
  std::size_t backlog() const { return queue_.size() + pending_.size(); }

 private:
  void try_open();
  void pull();
  void seal();

  EventLoop& loop_;
  Link& link_;
  FecConfig cfg_;
  Callbacks cb_;
  RateDecision decision_{kRateCeil, -1, 0};
  std::deque<Segment> queue_;
  std::vector<Segment> pending_;
  bool open_ = false;
  bool link_ready_ = true;
  EventId agg_timer_ = 0;
  bool agg_armed_ = false;
  std::int64_t next_matrix_id_ = 0;
};

}  // namespace dsfec
