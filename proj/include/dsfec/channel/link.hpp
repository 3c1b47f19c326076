#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "dsfec/channel/loss_model.hpp"
#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/rng.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

enum class Direction { kDown, kUp };

struct LinkConfig {
  std::int64_t down_bps = 10'000'000;
  std::int64_t up_bps = 100'000;
  SimTime owd_ms = 0;
  // Per-packet serializer occupancy beyond bits/rate (sender processing).
  double down_overhead_ms = 0.0;
  double up_overhead_ms = 0.0;
};

struct TransmitTimes {
  SimTime departure_ms;  // last bit on the wire
  SimTime arrival_ms;    // departure + one-way delay
};

// Two independent FIFO serializers with exact accumulation: per-direction
// busy time is tracked in units of ms*rate so a packet of b bytes occupies
// exactly b*8000 units (plus the configured overhead) and rounding to whole
// milliseconds never drifts. Downlink packets face one Bernoulli drop draw at
// departure time against the loss process's current p_e; the uplink is
// lossless and consumes no randomness.
class Link {
 public:
  Link(EventLoop& loop, const LinkConfig& cfg, LossProcess* loss,
       Rng* drop_rng);

  // on_depart fires when the last bit leaves (always); on_deliver fires at
  // arrival unless the packet was dropped.
  TransmitTimes transmit(Direction dir, std::size_t bytes,
                         std::function<void()> on_deliver,
                         std::function<void()> on_depart = {});

  std::int64_t drop_count() const { return drops_; }

 private:
  struct Serializer {
    std::int64_t rate_bps = 0;
    std::int64_t overhead_units = 0;
    std::int64_t busy_until_units = 0;
  };

  EventLoop& loop_;
  LinkConfig cfg_;
  LossProcess* loss_;
  Rng* drop_rng_;
  Serializer down_;
  Serializer up_;
  std::int64_t drops_ = 0;
};

}  // namespace dsfec
