#include "dsfec/ltp/sender.hpp"

#include <stdexcept>
#include <utility>

namespace dsfec {

LtpSender::LtpSender(EventLoop& loop, const LtpConfig& cfg,
                     std::size_t total_bytes, PushFn push,
                     std::function<void()> on_complete)
    : loop_(loop),
      cfg_(cfg),
      push_(std::move(push)),
      on_complete_(std::move(on_complete)) {
  if (cfg.max_sessions < 1) {
    throw std::invalid_argument("LtpSender: need at least one session");
  }
  if (cfg.cp_timer_ms < 1) {
    throw std::invalid_argument("LtpSender: checkpoint timer must be positive");
  }
  const auto block_sizes = segment_sizes(total_bytes, cfg.block_bytes);
  blocks_.resize(block_sizes.size());
  for (std::size_t i = 0; i < block_sizes.size(); ++i) {
    blocks_[i].id = static_cast<std::int64_t>(i);
    blocks_[i].sizes = segment_sizes(block_sizes[i], cfg.segment_bytes);
  }
}

Segment LtpSender::base_segment(const Block& b, std::int64_t index) const {
  Segment s;
  s.block_id = b.id;
  s.index = index;
  s.size = b.sizes[static_cast<std::size_t>(index)];
  return s;
}

void LtpSender::start() {
  if (started_) throw std::logic_error("LtpSender: started twice");
  started_ = true;
  open_next();
}

void LtpSender::open_next() {
  while (open_ < cfg_.max_sessions &&
         next_block_ < static_cast<std::int64_t>(blocks_.size())) {
    Block& b = blocks_[static_cast<std::size_t>(next_block_++)];
    b.open = true;
    ++open_;
    push_block(b);
  }
}

void LtpSender::push_block(Block& b) {
  const auto count = static_cast<std::int64_t>(b.sizes.size());
  for (std::int64_t i = 0; i < count; ++i) {
    Segment s = base_segment(b, i);
    if (i == count - 1) {
      s.checkpoint = true;
      s.block_segment_count = count;
    }
    push_(s);
  }
}

void LtpSender::on_checkpoint_departed(const Segment& seg) {
  Block& b = blocks_.at(static_cast<std::size_t>(seg.block_id));
  if (!b.open || b.done) return;
  disarm_timer(b);
  b.cp_timer = loop_.schedule(cfg_.cp_timer_ms, "ltp-cp-timer",
                              [this, id = b.id] {
                                Block& blk = blocks_[static_cast<std::size_t>(id)];
                                blk.timer_armed = false;
                                resend_checkpoint(blk);
                              });
  b.timer_armed = true;
}

void LtpSender::resend_checkpoint(Block& b) {
  if (b.done) return;
  ++b.cp_resends;
  ++cp_resends_;
  if (b.cp_resends > cfg_.max_retx_rounds) {
    throw std::runtime_error("LtpSender: block " + std::to_string(b.id) +
                             " exceeded checkpoint resend limit");
  }
  const auto count = static_cast<std::int64_t>(b.sizes.size());
  Segment s = base_segment(b, count - 1);
  s.checkpoint = true;
  s.retransmission = true;
  s.block_segment_count = count;
  push_(s);
}

void LtpSender::on_report(const ReportSegment& report) {
  Block& b = blocks_.at(static_cast<std::size_t>(report.block_id));
  if (b.done) return;
  if (!b.seen_serials.insert(report.serial).second) return;

  const auto missing = missing_from_report(report);
  if (missing.empty()) {
    close_block(b);
    return;
  }

  ++b.retx_rounds;
  ++retx_rounds_;
  if (b.retx_rounds > cfg_.max_retx_rounds) {
    throw std::runtime_error("LtpSender: block " + std::to_string(b.id) +
                             " exceeded retransmission round limit");
  }
  disarm_timer(b);  // the round's fresh checkpoint re-arms it on departure
  for (std::size_t i = 0; i < missing.size(); ++i) {
    Segment s = base_segment(b, missing[i]);
    s.retransmission = true;
    if (i + 1 == missing.size()) {
      s.checkpoint = true;
      s.block_segment_count = static_cast<std::int64_t>(b.sizes.size());
    }
    push_(s);
  }
}

void LtpSender::close_block(Block& b) {
  disarm_timer(b);
  b.done = true;
  b.open = false;
  --open_;
  ++completed_;
  open_next();
  if (finished() && on_complete_) on_complete_();
}

void LtpSender::disarm_timer(Block& b) {
  if (b.timer_armed) {
    loop_.cancel(b.cp_timer);
    b.timer_armed = false;
  }
}

}  // namespace dsfec
