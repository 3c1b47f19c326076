#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/rng.hpp"

using namespace dsfec;

TEST_CASE("events fire in time order, ties broken by insertion") {
  EventLoop loop;
  std::vector<std::string> fired;
  loop.schedule(20, "c", [&] { fired.push_back("c"); });
  loop.schedule(10, "a", [&] { fired.push_back("a"); });
  loop.schedule(10, "b", [&] { fired.push_back("b"); });
  loop.run_to_completion();
  CHECK(fired == std::vector<std::string>{"a", "b", "c"});
  CHECK(loop.now() == 20);
}

TEST_CASE("handlers can schedule follow-up events") {
  EventLoop loop;
  std::vector<SimTime> at;
  loop.schedule(5, "first", [&] {
    at.push_back(loop.now());
    loop.schedule(7, "second", [&] { at.push_back(loop.now()); });
  });
  loop.run_to_completion();
  CHECK(at == std::vector<SimTime>{5, 12});
}

TEST_CASE("scheduling in the past or with negative delay throws") {
  EventLoop loop;
  loop.schedule(10, "x", [] {});
  loop.run_until(10);
  CHECK_THROWS(loop.schedule_at(5, "late", [] {}));
  CHECK_THROWS(loop.schedule(-1, "neg", [] {}));
}

TEST_CASE("cancelled events do not fire and do not advance the clock") {
  EventLoop loop;
  std::vector<std::string> fired;
  EventId a = loop.schedule(10, "a", [&] { fired.push_back("a"); });
  loop.schedule(20, "b", [&] { fired.push_back("b"); });
  CHECK(loop.cancel(a));
  CHECK_FALSE(loop.cancel(a));
  CHECK_FALSE(loop.pending(a));

  loop.run_until(15);
  CHECK(fired.empty());
  CHECK(loop.now() == 15);  // horizon, not the tombstone's 10

  loop.run_to_completion();
  CHECK(fired == std::vector<std::string>{"b"});
  CHECK(loop.pending_count() == 0);
}

TEST_CASE("run_until executes events at the horizon and stops") {
  EventLoop loop;
  int count = 0;
  loop.schedule(10, "a", [&] { ++count; });
  loop.schedule(10, "b", [&] { ++count; });
  loop.schedule(11, "c", [&] { ++count; });
  loop.run_until(10);
  CHECK(count == 2);
  CHECK(loop.now() == 10);
  CHECK(loop.pending_count() == 1);
}

TEST_CASE("exceptions from handlers carry label and fire time") {
  EventLoop loop;
  loop.schedule(42, "boom", [] { throw std::runtime_error("inner"); });
  try {
    loop.run_to_completion();
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("boom") != std::string::npos);
    CHECK(msg.find("42") != std::string::npos);
    CHECK(msg.find("inner") != std::string::npos);
  }
}

TEST_CASE("seed derivation is stable and label-sensitive") {
  const std::uint64_t a1 = derive_seed(123, "loss-model");
  const std::uint64_t a2 = derive_seed(123, "loss-model");
  const std::uint64_t b = derive_seed(123, "loss-model/drops");
  const std::uint64_t c = derive_seed(124, "loss-model");
  CHECK(a1 == a2);
  CHECK(a1 != b);
  CHECK(a1 != c);

  const std::uint64_t r0 = derive_seed(123, "round", 0);
  const std::uint64_t r1 = derive_seed(123, "round", 1);
  CHECK(r0 != r1);
  CHECK(r0 == derive_seed(123, "round", 0));
}

TEST_CASE("identical seeds give identical draw sequences") {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(99), d(100);
  bool differ = false;
  for (int i = 0; i < 10; ++i) {
    differ = differ || (c.next_u64() != d.next_u64());
  }
  CHECK(differ);
}

TEST_CASE("uniform01 stays in [0,1) and fills the unit interval") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("exponential sample mean matches within one percent at 1e5 draws") {
  Rng rng(2024);
  const double mean = 1000.0;
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += rng.exponential(mean);
  const double sample_mean = sum / n;
  CHECK(std::abs(sample_mean - mean) / mean < 0.01);
}

TEST_CASE("uniform_index covers all buckets evenly") {
  Rng rng(5);
  std::vector<int> counts(8, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_index(8)];
  for (int c : counts) {
    CHECK(std::abs(c - n / 8) < 500);
  }
  CHECK_THROWS(rng.uniform_index(0));
}

TEST_CASE("bernoulli frequency tracks p") {
  Rng rng(31);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.2) ? 1 : 0;
  CHECK(std::abs(hits - 20000) < 400);
}
