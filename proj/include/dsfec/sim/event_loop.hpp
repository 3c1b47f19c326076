#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsfec/sim/time.hpp"

namespace dsfec {

using EventId = std::uint64_t;
using Action = std::function<void()>;

// Deterministic discrete-event loop. Events fire ordered by (time, insertion
// sequence). cancel() detaches the action; the heap entry stays behind as a
// tombstone and is skipped without touching the clock.
class EventLoop {
 public:
  EventLoop() = default;
  EventLoop(const EventLoop&) = delete;
  EventLoop& operator=(const EventLoop&) = delete;

  SimTime now() const { return now_; }

  EventId schedule(SimTime delay, std::string label, Action action);
  EventId schedule_at(SimTime when, std::string label, Action action);

  // True if the event existed and was still pending.
  bool cancel(EventId id);

  bool pending(EventId id) const { return actions_.contains(id); }
  std::size_t pending_count() const { return actions_.size(); }

  // Executes every event with fire time <= horizon, then advances the clock
  // to the horizon itself.
  void run_until(SimTime horizon);

  // Drains the queue.
  void run_to_completion();

 private:
  struct Entry {
    SimTime when;
    EventId id;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.when != b.when ? a.when > b.when : a.id > b.id;
    }
  };
  struct Handler {
    std::string label;
    Action action;
  };

  void drop_tombstones();
  void execute_top();

  SimTime now_ = 0;
  EventId next_id_ = 1;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_map<EventId, Handler> actions_;
};

}  // namespace dsfec
