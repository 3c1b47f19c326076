#include "dsfec/fec/types.hpp"

namespace dsfec {

const char* to_string(CodecStatus s) {
  switch (s) {
    case CodecStatus::kSuccess:
      return "Success";
    case CodecStatus::kFailed:
      return "Failed";
    case CodecStatus::kNotDecoded:
      return "NotDecoded";
  }
  return "?";
}

void MatrixInfoBuffer::insert(const MatrixInfoRecord& record) {
  records_[record.matrix_id] = record;
}

std::optional<ResolvedFeedback> MatrixInfoBuffer::complete(
    const MatrixFeedback& feedback) {
  auto it = records_.find(feedback.matrix_id);
  if (it == records_.end()) {
    ++stale_;
    return std::nullopt;
  }
  ResolvedFeedback resolved{it->second, feedback};
  if (resolved.feedback.total == 0) {
    resolved.feedback.total = it->second.total_count;
  }
  records_.erase(records_.begin(), std::next(it));
  return resolved;
}

}  // namespace dsfec
