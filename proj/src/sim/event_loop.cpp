#include "dsfec/sim/event_loop.hpp"

#include <stdexcept>
#include <utility>

namespace dsfec {

EventId EventLoop::schedule(SimTime delay, std::string label, Action action) {
  if (delay < 0) {
    throw std::invalid_argument("EventLoop: negative delay for '" + label + "'");
  }
  return schedule_at(now_ + delay, std::move(label), std::move(action));
}

EventId EventLoop::schedule_at(SimTime when, std::string label, Action action) {
  if (when < now_) {
    throw std::invalid_argument("EventLoop: event '" + label + "' in the past");
  }
  EventId id = next_id_++;
  queue_.push({when, id});
  actions_.emplace(id, Handler{std::move(label), std::move(action)});
  return id;
}

bool EventLoop::cancel(EventId id) { return actions_.erase(id) > 0; }

void EventLoop::drop_tombstones() {
  while (!queue_.empty() && !actions_.contains(queue_.top().id)) {
    queue_.pop();
  }
}

void EventLoop::execute_top() {
  Entry top = queue_.top();
  queue_.pop();
  auto it = actions_.find(top.id);
  now_ = top.when;
  Handler handler = std::move(it->second);
  actions_.erase(it);
  try {
    handler.action();
  } catch (const std::exception& e) {
    throw std::runtime_error("event '" + handler.label + "' at t=" +
                             std::to_string(top.when) + "ms: " + e.what());
  }
}

void EventLoop::run_until(SimTime horizon) {
  while (true) {
    drop_tombstones();
    if (queue_.empty() || queue_.top().when > horizon) break;
    execute_top();
  }
  if (horizon > now_) now_ = horizon;
}

void EventLoop::run_to_completion() {
  while (true) {
    drop_tombstones();
    if (queue_.empty()) break;
    execute_top();
  }
}

}  // namespace dsfec
