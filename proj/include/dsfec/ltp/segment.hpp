#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dsfec {

struct Segment {
  std::int64_t block_id = 0;
  std::int64_t index = 0;
  std::size_t size = 0;
  bool checkpoint = false;
  bool retransmission = false;
  std::int64_t block_segment_count = 0;  // carried on checkpoint segments
};

// Full segments of max_bytes plus one remainder segment if it does not
// divide evenly.
std::vector<std::size_t> segment_sizes(std::size_t block_bytes,
                                       std::size_t max_bytes);

struct ClaimRange {
  std::int64_t first = 0;  // inclusive
  std::int64_t last = 0;   // exclusive
  bool operator==(const ClaimRange&) const = default;
};

struct ReportSegment {
  std::int64_t block_id = 0;
  std::int64_t serial = 0;
  std::int64_t segment_count = 0;
  std::vector<ClaimRange> claims;
};

// Header plus eight bytes per claim range, capped at 200 bytes.
std::size_t report_wire_size(std::size_t range_count);

// Maximal runs over a sorted, duplicate-free index list.
std::vector<ClaimRange> ranges_from_indices(
    const std::vector<std::int64_t>& sorted);

// Complement of the claims over [0, segment_count).
std::vector<std::int64_t> missing_from_report(const ReportSegment& report);

}  // namespace dsfec
