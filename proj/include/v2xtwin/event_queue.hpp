#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_set>
#include <vector>

namespace v2xtwin {

/// Time-ordered callbacks. Ties break on priority, then on insertion order.
class EventQueue {
 public:
  using Handle = std::uint64_t;

  Handle schedule(double t, int priority, std::function<void()> fn) {
    const Handle h = next_++;
    heap_.push({t, priority, h, std::move(fn)});
    return h;
  }

  void cancel(Handle h) { cancelled_.insert(h); }

  /// Runs events with time <= until. Returns the number executed.
  std::size_t run_until(double until) {
    std::size_t n = 0;
    while (!heap_.empty() && heap_.top().t <= until) {
      Event e = heap_.top();
      heap_.pop();
      if (cancelled_.erase(e.handle) > 0) continue;
      now_ = e.t;
      e.fn();
      ++n;
    }
    return n;
  }

  [[nodiscard]] double now() const { return now_; }
  [[nodiscard]] bool empty() const { return heap_.empty(); }

 private:
  struct Event {
    double t;
    int priority;
    Handle handle;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.handle > b.handle;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::unordered_set<Handle> cancelled_;
  Handle next_ = 1;
  double now_ = 0.0;
};

}  // namespace v2xtwin
