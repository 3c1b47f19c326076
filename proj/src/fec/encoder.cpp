#include "dsfec/fec/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace dsfec {

std::int64_t redundancy_total(std::int64_t info_count, double rc,
                              std::int64_t n_max) {
  if (info_count < 1) throw std::invalid_argument("redundancy_total: empty matrix");
  if (rc <= 0.0 || rc > 1.0) throw std::invalid_argument("redundancy_total: bad rate");
  // Tolerance absorbs division noise so exact ratios (e.g. rc = 2/3) do not
  // round up a full extra symbol.
  const auto n = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(info_count) / rc - 1e-9));
  return std::min(std::max(n, info_count), n_max);
}

FecEncoder::FecEncoder(EventLoop& loop, Link& link, const FecConfig& cfg,
                       Callbacks cb)
    : loop_(loop), link_(link), cfg_(cfg), cb_(std::move(cb)) {
  if (cfg.k_max < 1 || cfg.n_max < cfg.k_max) {
    throw std::invalid_argument("FecEncoder: bad matrix bounds");
  }
  if (cfg.agg_timer_ms < 1) {
    throw std::invalid_argument("FecEncoder: aggregation timer must be positive");
  }
  pending_.reserve(static_cast<std::size_t>(cfg.k_max));
}

void FecEncoder::push(const Segment& seg) {
  queue_.push_back(seg);
  if (open_) {
    pull();
  } else {
    try_open();
  }
}

void FecEncoder::try_open() {
  if (open_ || !link_ready_ || queue_.empty()) return;
  open_ = true;
  agg_timer_ = loop_.schedule(cfg_.agg_timer_ms, "fec-agg", [this] {
    agg_armed_ = false;
    seal();
  });
  agg_armed_ = true;
  pull();
}

void FecEncoder::pull() {
  while (!queue_.empty() &&
         pending_.size() < static_cast<std::size_t>(cfg_.k_max)) {
    pending_.push_back(queue_.front());
    queue_.pop_front();
  }
  if (pending_.size() == static_cast<std::size_t>(cfg_.k_max)) seal();
}

void FecEncoder::seal() {
  if (agg_armed_) {
    loop_.cancel(agg_timer_);
    agg_armed_ = false;
  }
  open_ = false;
  link_ready_ = false;

  const auto i_count = static_cast<std::int64_t>(pending_.size());
  const double rc = std::clamp(decision_.rc, kSealFloor, kRateCeil);
  const std::int64_t n = redundancy_total(i_count, rc, cfg_.n_max);
  const std::int64_t id = next_matrix_id_++;

  MatrixInfoRecord record{id,      decision_.action_id, i_count, cfg_.k_max,
                          n,       loop_.now(),         rc};
  if (cb_.on_sealed) cb_.on_sealed(record);

  auto info = std::make_shared<const std::vector<Segment>>(std::move(pending_));
  pending_.clear();
  pending_.reserve(static_cast<std::size_t>(cfg_.k_max));

  TransmitTimes last{};
  for (std::int64_t j = 0; j < n; ++j) {
    FecSymbol sym;
    sym.matrix_id = id;
    sym.index = j;
    sym.redundancy = j >= i_count;
    sym.wire_bytes = sym.redundancy
                         ? cfg_.redundancy_bytes
                         : (*info)[static_cast<std::size_t>(j)].size +
                               cfg_.info_overhead_bytes;
    sym.matrix_n = n;
    sym.matrix_i = i_count;
    sym.info = info;

    std::function<void()> on_depart;
    if (!sym.redundancy &&
        (*info)[static_cast<std::size_t>(j)].checkpoint &&
        cb_.on_checkpoint_departed) {
      on_depart = [this, seg = (*info)[static_cast<std::size_t>(j)]] {
        cb_.on_checkpoint_departed(seg);
      };
    }
    last = link_.transmit(
        Direction::kDown, sym.wire_bytes,
        [this, sym] {
          if (cb_.on_deliver) cb_.on_deliver(sym);
        },
        std::move(on_depart));
  }

  loop_.schedule_at(last.departure_ms, "fec-link-ready", [this] {
    link_ready_ = true;
    try_open();
  });
}

}  // namespace dsfec
