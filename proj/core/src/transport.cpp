#include "pmcmc/transport.hpp"

#include <algorithm>

#include "pmcmc/errors.hpp"

namespace pmcmc {

InProcessTransport::InProcessTransport(std::size_t endpoints,
                                       std::chrono::microseconds transfer_delay)
    : transfer_delay_(transfer_delay) {
  if (endpoints == 0) throw PreconditionError("transport needs at least one endpoint");
  boxes_.reserve(endpoints);
  for (std::size_t i = 0; i < endpoints; ++i) boxes_.push_back(std::make_unique<Mailbox>());
}

InProcessTransport::Mailbox& InProcessTransport::box(int endpoint) {
  if (endpoint < 0 || static_cast<std::size_t>(endpoint) >= boxes_.size()) {
    throw PreconditionError("transport: endpoint " + std::to_string(endpoint) + " out of range");
  }
  return *boxes_[static_cast<std::size_t>(endpoint)];
}

void InProcessTransport::send(int from, int to, MessageTag tag, Bytes payload) {
  auto& target = box(to);
  auto visible_at = Clock::now();
  if (tag == MessageTag::kTransfer) visible_at += transfer_delay_;
  {
    std::lock_guard lock(target.mutex);
    target.queue.push_back({Envelope{from, tag, std::move(payload)}, visible_at});
  }
  target.ready.notify_all();
}

std::optional<Envelope> InProcessTransport::take(Mailbox& box,
                                                 std::initializer_list<MessageTag> tags,
                                                 Clock::time_point now,
                                                 std::optional<Clock::time_point>& next_visible) {
  next_visible.reset();
  for (auto it = box.queue.begin(); it != box.queue.end(); ++it) {
    if (std::find(tags.begin(), tags.end(), it->envelope.tag) == tags.end()) continue;
    if (it->visible_at <= now) {
      Envelope out = std::move(it->envelope);
      box.queue.erase(it);
      return out;
    }
    if (!next_visible || it->visible_at < *next_visible) next_visible = it->visible_at;
  }
  return std::nullopt;
}

std::optional<Envelope> InProcessTransport::try_receive(int self,
                                                        std::initializer_list<MessageTag> tags) {
  auto& mine = box(self);
  std::lock_guard lock(mine.mutex);
  std::optional<Clock::time_point> next_visible;
  return take(mine, tags, Clock::now(), next_visible);
}

std::optional<Envelope> InProcessTransport::receive(int self, std::initializer_list<MessageTag> tags,
                                                    Clock::time_point deadline) {
  auto& mine = box(self);
  std::unique_lock lock(mine.mutex);
  for (;;) {
    const auto now = Clock::now();
    std::optional<Clock::time_point> next_visible;
    if (auto found = take(mine, tags, now, next_visible)) return found;
    if (now >= deadline) return std::nullopt;
    const auto wake = next_visible ? std::min(*next_visible, deadline) : deadline;
    mine.ready.wait_until(lock, wake);
  }
}

}  // namespace pmcmc
