#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qss/polytraj.hpp"

namespace qss {

enum class EventKind : std::uint8_t { Internal = 0, ZeroCrossing = 1, Timed = 2 };

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::Internal;
  std::size_t index = 0;
};

// Indexed binary min-heap over a fixed set of event slots.  Every slot is
// always present; disabled slots carry an infinite time.  Ordering is by
// time, then kind, then index.
class EventQueue {
 public:
  EventQueue() = default;
  EventQueue(std::size_t n_internal, std::size_t n_zero_crossing, std::size_t n_timed);

  void set(EventKind kind, std::size_t index, double time);
  double time_of(EventKind kind, std::size_t index) const { return times_[slot(kind, index)]; }
  EventRecord top() const;
  bool empty() const { return heap_.empty(); }

 private:
  std::size_t slot(EventKind kind, std::size_t index) const;
  EventRecord record(std::size_t slot) const;
  bool less(std::size_t a, std::size_t b) const;
  void sift_up(std::size_t pos);
  void sift_down(std::size_t pos);

  std::size_t n_internal_ = 0;
  std::size_t n_zc_ = 0;
  std::vector<double> times_;
  std::vector<std::size_t> heap_;  // heap of slots
  std::vector<std::size_t> pos_;   // slot -> heap position
};

}  // namespace qss
