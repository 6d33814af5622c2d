#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "pmcmc/bytes.hpp"
#include "pmcmc/messages.hpp"

namespace pmcmc {

struct Envelope {
  int source = 0;
  MessageTag tag = MessageTag::kError;
  Bytes payload;
};

/// Ordered, reliable, tagged point-to-point messaging between endpoints
/// 0..endpoints()-1. Per (sender, receiver) pair, messages are delivered in
/// send order. Sends are buffered and complete immediately; receives select
/// the oldest deliverable message whose tag is in the requested set.
class Transport {
 public:
  using Clock = std::chrono::steady_clock;

  virtual ~Transport() = default;

  [[nodiscard]] virtual std::size_t endpoints() const noexcept = 0;
  virtual void send(int from, int to, MessageTag tag, Bytes payload) = 0;
  /// Non-blocking completion test.
  [[nodiscard]] virtual std::optional<Envelope> try_receive(int self,
                                                            std::initializer_list<MessageTag> tags) = 0;
  /// Blocks until a matching message is deliverable or `deadline` passes.
  [[nodiscard]] virtual std::optional<Envelope> receive(int self,
                                                        std::initializer_list<MessageTag> tags,
                                                        Clock::time_point deadline) = 0;
};

/// Thread-safe mailboxes in one process. Particle transfers can be held
/// back for a fixed latency to emulate a slow interconnect.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(std::size_t endpoints,
                              std::chrono::microseconds transfer_delay = std::chrono::microseconds{0});

  [[nodiscard]] std::size_t endpoints() const noexcept override { return boxes_.size(); }
  void send(int from, int to, MessageTag tag, Bytes payload) override;
  [[nodiscard]] std::optional<Envelope> try_receive(int self,
                                                    std::initializer_list<MessageTag> tags) override;
  [[nodiscard]] std::optional<Envelope> receive(int self, std::initializer_list<MessageTag> tags,
                                                Clock::time_point deadline) override;

 private:
  struct Pending {
    Envelope envelope;
    Clock::time_point visible_at;
  };
  struct Mailbox {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Pending> queue;
  };

  Mailbox& box(int endpoint);
  static std::optional<Envelope> take(Mailbox& box, std::initializer_list<MessageTag> tags,
                                      Clock::time_point now,
                                      std::optional<Clock::time_point>& next_visible);

  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::chrono::microseconds transfer_delay_;
};

}  // namespace pmcmc
