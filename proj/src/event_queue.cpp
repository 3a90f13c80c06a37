#include "qss/event_queue.hpp"

#include <utility>

namespace qss {

EventQueue::EventQueue(std::size_t n_internal, std::size_t n_zero_crossing, std::size_t n_timed)
    : n_internal_(n_internal), n_zc_(n_zero_crossing) {
  const std::size_t n = n_internal + n_zero_crossing + n_timed;
  times_.assign(n, kInf);
  heap_.resize(n);
  pos_.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    heap_[s] = s;
    pos_[s] = s;
  }
}

std::size_t EventQueue::slot(EventKind kind, std::size_t index) const {
  switch (kind) {
    case EventKind::Internal: return index;
    case EventKind::ZeroCrossing: return n_internal_ + index;
    case EventKind::Timed: return n_internal_ + n_zc_ + index;
  }
  return index;
}

EventRecord EventQueue::record(std::size_t s) const {
  if (s < n_internal_) return {times_[s], EventKind::Internal, s};
  if (s < n_internal_ + n_zc_) return {times_[s], EventKind::ZeroCrossing, s - n_internal_};
  return {times_[s], EventKind::Timed, s - n_internal_ - n_zc_};
}

bool EventQueue::less(std::size_t a, std::size_t b) const {
  // Slot numbering already orders kinds, then indices.
  if (times_[a] != times_[b]) return times_[a] < times_[b];
  return a < b;
}

void EventQueue::sift_up(std::size_t p) {
  const std::size_t s = heap_[p];
  while (p > 0) {
    const std::size_t parent = (p - 1) / 2;
    if (!less(s, heap_[parent])) break;
    heap_[p] = heap_[parent];
    pos_[heap_[p]] = p;
    p = parent;
  }
  heap_[p] = s;
  pos_[s] = p;
}

void EventQueue::sift_down(std::size_t p) {
  const std::size_t n = heap_.size();
  const std::size_t s = heap_[p];
  for (;;) {
    std::size_t child = 2 * p + 1;
    if (child >= n) break;
    if (child + 1 < n && less(heap_[child + 1], heap_[child])) ++child;
    if (!less(heap_[child], s)) break;
    heap_[p] = heap_[child];
    pos_[heap_[p]] = p;
    p = child;
  }
  heap_[p] = s;
  pos_[s] = p;
}

void EventQueue::set(EventKind kind, std::size_t index, double time) {
  const std::size_t s = slot(kind, index);
  const double old = times_[s];
  if (old == time) return;
  times_[s] = time;
  if (time < old)
    sift_up(pos_[s]);
  else
    sift_down(pos_[s]);
}

EventRecord EventQueue::top() const { return record(heap_.front()); }

}  // namespace qss
