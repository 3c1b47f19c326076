#include "dsfec/fec/decoder.hpp"

#include <utility>

namespace dsfec {

FecDecoder::FecDecoder(EventLoop& loop, const FecConfig& cfg, Callbacks cb)
    : loop_(loop), cfg_(cfg), cb_(std::move(cb)) {}

void FecDecoder::on_symbol(const FecSymbol& s) {
  if (s.matrix_id < watermark_) {
    ++late_symbols_;  // only reachable under extreme loss runs
    return;
  }
  for (std::int64_t id = watermark_; id < s.matrix_id; ++id) conclude(id);

  Open& m = open_[s.matrix_id];
  if (m.n == 0) {
    m.n = s.matrix_n;
    m.i = s.matrix_i;
    m.info = s.info;
  }
  ++m.received_total;
  if (!s.redundancy) m.info_indices.insert(s.index);

  if (m.received_total == m.n) {
    conclude(s.matrix_id);
    return;
  }
  if (m.gap_armed) loop_.cancel(m.gap_timer);
  m.gap_timer = loop_.schedule(cfg_.gap_timer_ms, "fec-gap",
                               [this, id = s.matrix_id] {
                                 auto it = open_.find(id);
                                 if (it == open_.end()) return;
                                 it->second.gap_armed = false;
                                 conclude(id);
                               });
  m.gap_armed = true;
}

void FecDecoder::conclude(std::int64_t id) {
  if (id < watermark_) return;
  ++concluded_;
  auto it = open_.find(id);
  if (it == open_.end()) {
    // every symbol of this matrix was lost; the receiver cannot know N
    ++failed_;
    watermark_ = id + 1;
    if (cb_.on_feedback) {
      cb_.on_feedback({id, CodecStatus::kFailed, 0, 0});
    }
    return;
  }

  Open m = std::move(it->second);
  open_.erase(it);
  if (m.gap_armed) loop_.cancel(m.gap_timer);
  watermark_ = id + 1;

  CodecStatus status;
  if (static_cast<std::int64_t>(m.info_indices.size()) == m.i) {
    status = CodecStatus::kNotDecoded;
    ++not_decoded_;
  } else if (m.received_total >= m.i + cfg_.decode_overhead) {
    status = CodecStatus::kSuccess;
    ++success_;
  } else {
    status = CodecStatus::kFailed;
    ++failed_;
  }

  if (cb_.on_segment) {
    if (status == CodecStatus::kFailed) {
      for (std::int64_t idx : m.info_indices) {
        cb_.on_segment((*m.info)[static_cast<std::size_t>(idx)]);
      }
    } else {
      for (std::int64_t idx = 0; idx < m.i; ++idx) {
        cb_.on_segment((*m.info)[static_cast<std::size_t>(idx)]);
      }
    }
  }
  if (cb_.on_feedback) {
    cb_.on_feedback({id, status, m.n, m.received_total});
  }
}

}  // namespace dsfec
