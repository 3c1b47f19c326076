#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>

#include "dsfec/ltp/segment.hpp"
#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

// Collects segments per block, learns the block's extent from checkpoints,
// and answers every checkpoint with a reception report. Duplicate segments
// are absorbed; a block is complete once all indices are present.
class LtpReceiver {
 public:
  using ReportFn = std::function<void(const ReportSegment&)>;

  LtpReceiver(EventLoop& loop, ReportFn on_report);

  void on_segment(const Segment& seg);

  std::int64_t blocks_completed() const { return completed_; }
  SimTime last_completion_ms() const { return last_completion_; }
  std::int64_t reports_sent() const { return reports_; }
  std::size_t bytes_received() const { return bytes_; }

 private:
  struct Block {
    std::set<std::int64_t> indices;
    std::int64_t segment_count = -1;
    std::int64_t next_serial = 0;
    bool done = false;
  };

  void send_report(std::int64_t block_id, Block& b);

  EventLoop& loop_;
  ReportFn on_report_;
  std::map<std::int64_t, Block> blocks_;
  std::int64_t completed_ = 0;
  std::int64_t reports_ = 0;
  SimTime last_completion_ = 0;
  std::size_t bytes_ = 0;
};

}  // namespace dsfec
