#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "dsfec/fec/encoder.hpp"
#include "dsfec/fec/types.hpp"
#include "dsfec/sim/event_loop.hpp"

namespace dsfec {

// Receiver-side matrix reassembly. Matrices conclude when every symbol
// arrived, when the inter-arrival gap timer expires, or when a symbol of a
// later matrix proves this one is over (symbols leave the wire in matrix
// order, so a later arrival is a watermark). Matrices that lost every symbol
// are reported with total=0 once the watermark passes them. On conclusion the
// decoder hands recovered segments to the receiver in index order, then
// emits one feedback for the matrix.
class FecDecoder {
 public:
  struct Callbacks {
    std::function<void(const Segment&)> on_segment;
    std::function<void(const MatrixFeedback&)> on_feedback;
  };

  FecDecoder(EventLoop& loop, const FecConfig& cfg, Callbacks cb);

  void on_symbol(const FecSymbol& s);

  std::int64_t concluded_count() const { return concluded_; }
  std::int64_t success_count() const { return success_; }
  std::int64_t failure_count() const { return failed_; }
  std::int64_t not_decoded_count() const { return not_decoded_; }
  std::int64_t late_symbol_count() const { return late_symbols_; }
  std::size_t open_count() const { return open_.size(); }

 private:
  struct Open {
    std::int64_t n = 0;
    std::int64_t i = 0;
    std::int64_t received_total = 0;
    std::set<std::int64_t> info_indices;
    std::shared_ptr<const std::vector<Segment>> info;
    EventId gap_timer = 0;
    bool gap_armed = false;
  };

  void conclude(std::int64_t id);

  EventLoop& loop_;
  FecConfig cfg_;
  Callbacks cb_;
  std::map<std::int64_t, Open> open_;
  std::int64_t watermark_ = 0;  // every id below is concluded
  std::int64_t concluded_ = 0;
  std::int64_t success_ = 0;
  std::int64_t failed_ = 0;
  std::int64_t not_decoded_ = 0;
  std::int64_t late_symbols_ = 0;
};

}  // namespace dsfec
