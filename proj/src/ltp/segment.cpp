#include "dsfec/ltp/segment.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsfec {

std::vector<std::size_t> segment_sizes(std::size_t block_bytes,
                                       std::size_t max_bytes) {
  if (block_bytes == 0 || max_bytes == 0) {
    throw std::invalid_argument("segment_sizes: sizes must be positive");
  }
  std::vector<std::size_t> sizes(block_bytes / max_bytes, max_bytes);
  if (const std::size_t rem = block_bytes % max_bytes; rem > 0) {
    sizes.push_back(rem);
  }
  return sizes;
}

std::size_t report_wire_size(std::size_t range_count) {
  return std::min<std::size_t>(200, 24 + 8 * range_count);
}

std::vector<ClaimRange> ranges_from_indices(
    const std::vector<std::int64_t>& sorted) {
  std::vector<ClaimRange> ranges;
  for (std::int64_t idx : sorted) {
    if (!ranges.empty() && ranges.back().last == idx) {
      ++ranges.back().last;
    } else {
      ranges.push_back({idx, idx + 1});
    }
  }
  return ranges;
}

std::vector<std::int64_t> missing_from_report(const ReportSegment& report) {
  std::vector<std::int64_t> missing;
  std::int64_t cursor = 0;
  for (const ClaimRange& r : report.claims) {
    for (std::int64_t i = cursor; i < r.first; ++i) missing.push_back(i);
    cursor = std::max(cursor, r.last);
  }
  for (std::int64_t i = cursor; i < report.segment_count; ++i) {
    missing.push_back(i);
  }
  return missing;
}

}  // namespace dsfec
