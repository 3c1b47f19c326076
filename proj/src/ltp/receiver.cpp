#include "dsfec/ltp/receiver.hpp"

#include <utility>
#include <vector>

namespace dsfec {

LtpReceiver::LtpReceiver(EventLoop& loop, ReportFn on_report)
    : loop_(loop), on_report_(std::move(on_report)) {}

void LtpReceiver::on_segment(const Segment& seg) {
  Block& b = blocks_[seg.block_id];
  if (!b.done) {
    if (b.indices.insert(seg.index).second) bytes_ += seg.size;
    if (seg.checkpoint) b.segment_count = seg.block_segment_count;
    if (b.segment_count >= 0 &&
        static_cast<std::int64_t>(b.indices.size()) == b.segment_count) {
      b.done = true;
      ++completed_;
      last_completion_ = loop_.now();
    }
  }
  // every checkpoint is answered, duplicates included
  if (seg.checkpoint) send_report(seg.block_id, b);
}

void LtpReceiver::send_report(std::int64_t block_id, Block& b) {
  ReportSegment report;
  report.block_id = block_id;
  report.serial = b.next_serial++;
  report.segment_count = b.segment_count;
  report.claims = ranges_from_indices(
      std::vector<std::int64_t>(b.indices.begin(), b.indices.end()));
  ++reports_;
  if (on_report_) on_report_(report);
}

}  // namespace dsfec
