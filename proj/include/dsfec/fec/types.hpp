#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "dsfec/ltp/segment.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

inline constexpr std::size_t kFeedbackPacketBytes = 64;

enum class CodecStatus { kSuccess, kFailed, kNotDecoded };

const char* to_string(CodecStatus s);

struct FecSymbol {
  std::int64_t matrix_id = 0;
  std::int64_t index = 0;  // 0..matrix_n-1; indices >= matrix_i are redundancy
  bool redundancy = false;
  std::size_t wire_bytes = 0;
  std::int64_t matrix_n = 0;  // total symbols in the matrix
  std::int64_t matrix_i = 0;  // info symbols in the matrix
  // The matrix's info segments, shared by every symbol of the matrix so a
  // successful decode can hand the receiver segments whose own symbols were
  // dropped.
  std::shared_ptr<const std::vector<Segment>> info;
};

struct MatrixFeedback {
  std::int64_t matrix_id = 0;
  CodecStatus status = CodecStatus::kNotDecoded;
  std::int64_t total = 0;  // 0 when the receiver never saw the matrix
  std::int64_t received = 0;
};

struct MatrixInfoRecord {
  std::int64_t matrix_id = 0;
  std::int64_t action_id = -1;
  std::int64_t info_count = 0;
  std::int64_t k_max = 0;
  std::int64_t total_count = 0;
  SimTime tx_time = 0;
  double rc_used = 0.0;
};

struct ResolvedFeedback {
  MatrixInfoRecord record;
  MatrixFeedback feedback;  // total substituted from the record when 0
};

// Sender-side ring of sealed-matrix records awaiting receiver feedback.
// Feedback arrives in matrix order, so matching a feedback also purges any
// older leftovers. Feedback for an unknown (already purged) matrix is stale.
class MatrixInfoBuffer {
 public:
  void insert(const MatrixInfoRecord& record);
  std::optional<ResolvedFeedback> complete(const MatrixFeedback& feedback);

  std::size_t size() const { return records_.size(); }
  std::int64_t stale_count() const { return stale_; }

 private:
  std::map<std::int64_t, MatrixInfoRecord> records_;
  std::int64_t stale_ = 0;
};

}  // namespace dsfec
