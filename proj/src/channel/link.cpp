#include "dsfec/channel/link.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace dsfec {

Link::Link(EventLoop& loop, const LinkConfig& cfg, LossProcess* loss,
           Rng* drop_rng)
    : loop_(loop), cfg_(cfg), loss_(loss), drop_rng_(drop_rng) {
  if (cfg.down_bps <= 0 || cfg.up_bps <= 0) {
    throw std::invalid_argument("Link: rates must be positive");
  }
  if (cfg.owd_ms < 0) throw std::invalid_argument("Link: negative delay");
  down_ = {cfg.down_bps,
           std::llround(cfg.down_overhead_ms * static_cast<double>(cfg.down_bps)),
           0};
  up_ = {cfg.up_bps,
         std::llround(cfg.up_overhead_ms * static_cast<double>(cfg.up_bps)),
         0};
}

TransmitTimes Link::transmit(Direction dir, std::size_t bytes,
                             std::function<void()> on_deliver,
                             std::function<void()> on_depart) {
  if (bytes == 0) throw std::invalid_argument("Link::transmit: empty packet");
  Serializer& s = dir == Direction::kDown ? down_ : up_;
  const std::int64_t now_units = loop_.now() * s.rate_bps;
  const std::int64_t start = std::max(now_units, s.busy_until_units);
  const std::int64_t end =
      start + static_cast<std::int64_t>(bytes) * 8000 + s.overhead_units;
  s.busy_until_units = end;
  const SimTime departure = (end + s.rate_bps / 2) / s.rate_bps;
  const SimTime arrival = departure + cfg_.owd_ms;
  const bool down = dir == Direction::kDown;
  loop_.schedule_at(
      departure, down ? "down-depart" : "up-depart",
      [this, down, arrival, deliver = std::move(on_deliver),
       depart = std::move(on_depart)]() mutable {
        bool dropped = false;
        if (down && loss_ != nullptr && drop_rng_ != nullptr) {
          dropped = drop_rng_->bernoulli(loss_->current_pe());
        }
        if (depart) depart();
        if (dropped) {
          ++drops_;
          return;
        }
        if (deliver) {
          loop_.schedule_at(arrival, down ? "down-arrive" : "up-arrive",
                            std::move(deliver));
        }
      });
  return {departure, arrival};
}

}  // namespace dsfec
