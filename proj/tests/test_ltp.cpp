#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <vector>

#include "dsfec/channel/link.hpp"
#include "dsfec/channel/loss_model.hpp"
#include "dsfec/fec/decoder.hpp"
#include "dsfec/fec/encoder.hpp"
#include "dsfec/fec/types.hpp"
#include "dsfec/ltp/receiver.hpp"
#include "dsfec/ltp/segment.hpp"
#include "dsfec/ltp/sender.hpp"
#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/rng.hpp"

using namespace dsfec;

TEST_CASE("block segmentation") {
  const auto sizes = segment_sizes(600000, 1024);
  REQUIRE(sizes.size() == 586);
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    CHECK(sizes[i] == 1024);
    total += sizes[i];
  }
  CHECK(sizes.back() == 960);
  CHECK(total + sizes.back() == 600000);

  const auto tail = segment_sizes(200000, 1024);
  CHECK(tail.size() == 196);
  CHECK(tail.back() == 320);

  const auto blocks = segment_sizes(50000000, 600000);
  CHECK(blocks.size() == 84);
  CHECK(blocks.back() == 200000);
  std::size_t segs = 0;
  for (const auto b : blocks) segs += segment_sizes(b, 1024).size();
  CHECK(segs == 48834);

  CHECK(segment_sizes(1024, 1024) == std::vector<std::size_t>{1024});
  CHECK_THROWS(segment_sizes(0, 1024));
}

TEST_CASE("claim ranges round-trip") {
  CHECK(ranges_from_indices({}).empty());
  CHECK(ranges_from_indices({0, 1, 2}) == std::vector<ClaimRange>{{0, 3}});
  CHECK(ranges_from_indices({0, 2, 3, 7}) ==
        std::vector<ClaimRange>{{0, 1}, {2, 4}, {7, 8}});

  ReportSegment r;
  r.segment_count = 10;
  r.claims = {{0, 3}, {5, 6}};
  CHECK(missing_from_report(r) ==
        std::vector<std::int64_t>{3, 4, 6, 7, 8, 9});
  r.claims = {{0, 10}};
  CHECK(missing_from_report(r).empty());
  r.claims = {};
  CHECK(missing_from_report(r).size() == 10);
}

TEST_CASE("report wire size is header plus ranges, capped") {
  CHECK(report_wire_size(0) == 24);
  CHECK(report_wire_size(1) == 32);
  CHECK(report_wire_size(22) == 200);
  CHECK(report_wire_size(23) == 200);
  CHECK(report_wire_size(1000) == 200);
}

namespace {

struct SenderRig {
  EventLoop loop;
  std::vector<Segment> pushed;
  int completions = 0;
  std::unique_ptr<LtpSender> sender;

  SenderRig(std::size_t total, const LtpConfig& cfg) {
    sender = std::make_unique<LtpSender>(
        loop, cfg, total, [this](const Segment& s) { pushed.push_back(s); },
        [this] { ++completions; });
  }
};

ReportSegment full_claims(std::int64_t block, std::int64_t serial,
                          std::int64_t count) {
  ReportSegment r;
  r.block_id = block;
  r.serial = serial;
  r.segment_count = count;
  r.claims = {{0, count}};
  return r;
}

}  // namespace

TEST_CASE("sender keeps a window of sessions and queues whole blocks") {
  LtpConfig cfg;
  cfg.max_sessions = 2;
  SenderRig rig(1800000, cfg);
  CHECK(rig.sender->block_count() == 3);
  rig.sender->start();
  CHECK(rig.sender->open_sessions() == 2);
  REQUIRE(rig.pushed.size() == 1172);
  CHECK(rig.pushed[0].block_id == 0);
  CHECK(rig.pushed[0].index == 0);
  CHECK_FALSE(rig.pushed[0].checkpoint);
  CHECK(rig.pushed[585].checkpoint);
  CHECK(rig.pushed[585].block_segment_count == 586);
  CHECK(rig.pushed[585].size == 960);
  CHECK(rig.pushed[586].block_id == 1);

  // closing block 0 opens block 2
  rig.sender->on_report(full_claims(0, 0, 586));
  CHECK(rig.sender->blocks_completed() == 1);
  CHECK(rig.sender->open_sessions() == 2);
  CHECK(rig.pushed.size() == 1758);
  CHECK(rig.pushed.back().block_id == 2);

  rig.sender->on_report(full_claims(1, 0, 586));
  rig.sender->on_report(full_claims(2, 0, 586));
  CHECK(rig.completions == 1);
  CHECK(rig.sender->finished());
  CHECK(rig.sender->open_sessions() == 0);
}

TEST_CASE("checkpoint timer resends the checkpoint alone until answered") {
  LtpConfig cfg;
  cfg.max_sessions = 1;
  cfg.cp_timer_ms = 3100;
  SenderRig rig(600000, cfg);
  rig.sender->start();
  REQUIRE(rig.pushed.size() == 586);

  rig.sender->on_checkpoint_departed(rig.pushed[585]);
  rig.loop.run_until(3099);
  CHECK(rig.pushed.size() == 586);
  rig.loop.run_until(3100);
  REQUIRE(rig.pushed.size() == 587);
  const Segment& resent = rig.pushed.back();
  CHECK(resent.block_id == 0);
  CHECK(resent.index == 585);
  CHECK(resent.checkpoint);
  CHECK(resent.retransmission);
  CHECK(resent.block_segment_count == 586);
  CHECK(rig.sender->cp_resend_total() == 1);

  // the resent checkpoint re-arms on departure; a report stops the cycle
  rig.sender->on_checkpoint_departed(resent);
  rig.sender->on_report(full_claims(0, 0, 586));
  CHECK(rig.loop.pending_count() == 0);
  rig.loop.run_to_completion();
  CHECK(rig.sender->cp_resend_total() == 1);
  CHECK(rig.completions == 1);
}

TEST_CASE("a report with gaps triggers one ordered retransmission round") {
  LtpConfig cfg;
  cfg.max_sessions = 1;
  SenderRig rig(600000, cfg);
  rig.sender->start();
  rig.sender->on_checkpoint_departed(rig.pushed[585]);
  CHECK(rig.loop.pending_count() == 1);

  ReportSegment r;
  r.block_id = 0;
  r.serial = 0;
  r.segment_count = 586;
  r.claims = {{0, 3}, {5, 585}};  // missing 3, 4, 585
  rig.sender->on_report(r);
  REQUIRE(rig.pushed.size() == 589);
  CHECK(rig.pushed[586].index == 3);
  CHECK_FALSE(rig.pushed[586].checkpoint);
  CHECK(rig.pushed[586].retransmission);
  CHECK(rig.pushed[587].index == 4);
  CHECK(rig.pushed[588].index == 585);
  CHECK(rig.pushed[588].checkpoint);
  CHECK(rig.pushed[588].block_segment_count == 586);
  CHECK(rig.sender->retx_round_total() == 1);
  // pending checkpoint timer was canceled; the new checkpoint re-arms later
  CHECK(rig.loop.pending_count() == 0);

  // duplicate serial is ignored
  rig.sender->on_report(r);
  CHECK(rig.pushed.size() == 589);
  CHECK(rig.sender->retx_round_total() == 1);

  // reports about a closed block are ignored
  rig.sender->on_report(full_claims(0, 1, 586));
  CHECK(rig.sender->finished());
  ReportSegment stale = r;
  stale.serial = 2;
  rig.sender->on_report(stale);
  CHECK(rig.pushed.size() == 589);
}

TEST_CASE("the retransmission round cap aborts a stuck block") {
  LtpConfig cfg;
  cfg.max_sessions = 1;
  cfg.max_retx_rounds = 2;
  SenderRig rig(600000, cfg);
  rig.sender->start();
  ReportSegment r;
  r.block_id = 0;
  r.segment_count = 586;
  r.claims = {{0, 585}};
  r.serial = 0;
  rig.sender->on_report(r);
  r.serial = 1;
  rig.sender->on_report(r);
  r.serial = 2;
  CHECK_THROWS(rig.sender->on_report(r));
}

TEST_CASE("receiver completes a block and answers checkpoints") {
  EventLoop loop;
  std::vector<ReportSegment> reports;
  LtpReceiver recv(loop, [&](const ReportSegment& r) { reports.push_back(r); });

  const auto sizes = segment_sizes(600000, 1024);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    Segment s;
    s.block_id = 0;
    s.index = static_cast<std::int64_t>(i);
    s.size = sizes[i];
    if (i + 1 == sizes.size()) {
      s.checkpoint = true;
      s.block_segment_count = 586;
    }
    recv.on_segment(s);
  }
  CHECK(recv.blocks_completed() == 1);
  CHECK(recv.bytes_received() == 600000);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].block_id == 0);
  CHECK(reports[0].serial == 0);
  CHECK(reports[0].segment_count == 586);
  CHECK(reports[0].claims == std::vector<ClaimRange>{{0, 586}});
}

TEST_CASE("receiver reports gaps and absorbs duplicates") {
  EventLoop loop;
  std::vector<ReportSegment> reports;
  LtpReceiver recv(loop, [&](const ReportSegment& r) { reports.push_back(r); });

  auto seg = [](std::int64_t idx, bool cp = false) {
    Segment s;
    s.block_id = 4;
    s.index = idx;
    s.size = 1024;
    if (cp) {
      s.checkpoint = true;
      s.block_segment_count = 10;
    }
    return s;
  };

  for (std::int64_t i = 0; i < 5; ++i) recv.on_segment(seg(i));
  CHECK(reports.empty());  // no checkpoint yet, no report
  recv.on_segment(seg(9, true));
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].segment_count == 10);
  CHECK(reports[0].claims == std::vector<ClaimRange>{{0, 5}, {9, 10}});
  CHECK(recv.blocks_completed() == 0);

  for (std::int64_t i = 5; i < 9; ++i) recv.on_segment(seg(i));
  CHECK(recv.blocks_completed() == 1);
  CHECK(recv.bytes_received() == 10 * 1024);
  CHECK(reports.size() == 1);  // completion itself does not emit a report

  // a duplicate checkpoint after completion still gets a (full) answer
  recv.on_segment(seg(9, true));
  REQUIRE(reports.size() == 2);
  CHECK(reports[1].serial == 1);
  CHECK(reports[1].claims == std::vector<ClaimRange>{{0, 10}});
  CHECK(recv.bytes_received() == 10 * 1024);
}

namespace {

// Sender, coding stack, lossy link, and receiver wired end to end.
struct Stack {
  EventLoop loop;
  Rng evolution;
  Rng drops;
  std::unique_ptr<LossProcess> loss;
  std::unique_ptr<Link> link;
  std::unique_ptr<FecDecoder> decoder;
  std::unique_ptr<FecEncoder> encoder;
  std::unique_ptr<LtpReceiver> receiver;
  std::unique_ptr<LtpSender> sender;
  MatrixInfoBuffer buffer;
  std::vector<ResolvedFeedback> resolved;
  bool complete = false;
  SimTime complete_at = 0;

  Stack(std::uint64_t seed, double pe, std::size_t total, const LtpConfig& ltp,
        double rc)
      : evolution(derive_seed(seed, "loss-model")),
        drops(derive_seed(seed, "loss-model/drops")) {
    LossConfig lc;
    lc.kind = LossKind::kFixed;
    lc.fixed_pe = pe;
    loss = std::make_unique<LossProcess>(loop, lc, evolution);
    loss->start({});
    LinkConfig link_cfg;
    link_cfg.owd_ms = 1000;
    link = std::make_unique<Link>(loop, link_cfg, loss.get(), &drops);
    FecConfig fec;
    decoder = std::make_unique<FecDecoder>(
        loop, fec,
        FecDecoder::Callbacks{
            [this](const Segment& s) { receiver->on_segment(s); },
            [this](const MatrixFeedback& f) {
              link->transmit(Direction::kUp, kFeedbackPacketBytes, [this, f] {
                if (auto r = buffer.complete(f)) resolved.push_back(*r);
              });
            }});
    encoder = std::make_unique<FecEncoder>(
        loop, *link, fec,
        FecEncoder::Callbacks{
            [this](const MatrixInfoRecord& r) { buffer.insert(r); },
            [this](const FecSymbol& s) { decoder->on_symbol(s); },
            [this](const Segment& s) { sender->on_checkpoint_departed(s); }});
    encoder->set_decision({rc, 0, 0});
    receiver = std::make_unique<LtpReceiver>(loop, [this](const ReportSegment& r) {
      link->transmit(Direction::kUp, report_wire_size(r.claims.size()),
                     [this, r] { sender->on_report(r); });
    });
    sender = std::make_unique<LtpSender>(
        loop, ltp, total, [this](const Segment& s) { encoder->push(s); },
        [this] {
          complete = true;
          complete_at = loop.now();
          loss->stop();
        });
  }

  void run() {
    sender->start();
    loop.run_to_completion();
  }
};

}  // namespace

TEST_CASE("lossless transfer completes with no retransmissions") {
  LtpConfig ltp;
  ltp.max_sessions = 2;
  Stack stack(9, 0.0, 1800000, ltp, 0.77);
  stack.run();
  CHECK(stack.complete);
  CHECK(stack.receiver->blocks_completed() == 3);
  CHECK(stack.receiver->bytes_received() == 1800000);
  CHECK(stack.sender->retx_round_total() == 0);
  CHECK(stack.sender->cp_resend_total() == 0);
  CHECK(stack.receiver->last_completion_ms() <= stack.complete_at);
  CHECK(stack.decoder->failure_count() == 0);
  CHECK(stack.decoder->concluded_count() == stack.encoder->sealed_count());
  CHECK(static_cast<std::int64_t>(stack.resolved.size()) ==
        stack.encoder->sealed_count());
  CHECK(stack.buffer.size() == 0);
  CHECK(stack.encoder->backlog() == 0);
}

TEST_CASE("heavy loss forces retransmission rounds yet integrity holds") {
  LtpConfig ltp;
  ltp.max_sessions = 2;
  Stack stack(10, 0.35, 1200000, ltp, 0.77);
  stack.run();
  CHECK(stack.complete);
  CHECK(stack.receiver->blocks_completed() == 2);
  CHECK(stack.receiver->bytes_received() == 1200000);
  CHECK(stack.sender->retx_round_total() > 0);
  CHECK(stack.decoder->failure_count() > 0);
  CHECK(static_cast<std::int64_t>(stack.resolved.size()) ==
        stack.encoder->sealed_count());
  std::int64_t failed = 0;
  for (const auto& r : stack.resolved) {
    CHECK(r.feedback.total >= 1);
    if (r.feedback.status == CodecStatus::kFailed) ++failed;
  }
  CHECK(failed == stack.decoder->failure_count());
  CHECK(stack.decoder->late_symbol_count() == 0);
  CHECK(stack.buffer.size() == 0);
}

TEST_CASE("transfers are bit-deterministic for a given seed") {
  LtpConfig ltp;
  ltp.max_sessions = 2;
  auto run = [&](std::uint64_t seed) {
    Stack stack(seed, 0.2, 1200000, ltp, 0.8);
    stack.run();
    return std::tuple{stack.complete_at, stack.sender->retx_round_total(),
                      stack.encoder->sealed_count(),
                      stack.link->drop_count()};
  };
  CHECK(run(77) == run(77));
  CHECK(run(77) != run(78));
}
