#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "dsfec/ltp/segment.hpp"
#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

struct LtpConfig {
  std::size_t block_bytes = 600000;
  std::size_t segment_bytes = 1024;
  int max_sessions = 5;
  SimTime cp_timer_ms = 3100;
  int max_retx_rounds = 50;
};

// Splits a transfer into blocks, keeps up to max_sessions blocks in flight,
// and drives retransmission from reception reports. Every block's last
// segment is a checkpoint; the checkpoint timer arms when that symbol leaves
// the wire and fires a lone checkpoint resend if no report shows up. A report
// listing missing segments triggers one retransmission round: the gaps are
// re-queued in index order with the last one flagged as a fresh checkpoint.
class LtpSender {
 public:
  using PushFn = std::function<void(const Segment&)>;

  LtpSender(EventLoop& loop, const LtpConfig& cfg, std::size_t total_bytes,
            PushFn push, std::function<void()> on_complete);

  void start();
  void on_checkpoint_departed(const Segment& seg);
  void on_report(const ReportSegment& report);

  std::int64_t block_count() const {
    return static_cast<std::int64_t>(blocks_.size());
  }
  std::int64_t blocks_completed() const { return completed_; }
  int open_sessions() const { return open_; }
  std::int64_t retx_round_total() const { return retx_rounds_; }
  std::int64_t cp_resend_total() const { return cp_resends_; }
  bool finished() const { return completed_ == block_count(); }

 private:
  struct Block {
    std::int64_t id = 0;
    std::vector<std::size_t> sizes;
    std::int64_t retx_rounds = 0;
    std::int64_t cp_resends = 0;
    std::set<std::int64_t> seen_serials;
    EventId cp_timer = 0;
    bool timer_armed = false;
    bool open = false;
    bool done = false;
  };

  Segment base_segment(const Block& b, std::int64_t index) const;
  void open_next();
  void push_block(Block& b);
  void close_block(Block& b);
  void disarm_timer(Block& b);
  void resend_checkpoint(Block& b);

  EventLoop& loop_;
  LtpConfig cfg_;
  PushFn push_;
  std::function<void()> on_complete_;
  std::vector<Block> blocks_;
  std::int64_t next_block_ = 0;
  std::int64_t completed_ = 0;
  int open_ = 0;
  std::int64_t retx_rounds_ = 0;
  std::int64_t cp_resends_ = 0;
  bool started_ = false;
};

}  // namespace dsfec
