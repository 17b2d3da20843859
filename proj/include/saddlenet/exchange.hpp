#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saddlenet/common.hpp"
#include "saddlenet/graph.hpp"

namespace saddlenet {

/// One bulk-synchronous communication round.
///
/// Every agent publishes exactly one message; once all have published
/// (the barrier), each agent reads its neighbors' messages through an Inbox.
/// An Inbox only exposes the agent's own neighbors, in the order of
/// graph.neighbors(i), so an update cannot address non-neighbors.
template <class Message>
class Exchange {
 public:
  explicit Exchange(const NetworkGraph& graph) : graph_(graph), outbox_(graph.size()) {}

  void publish(int agent, Message m) { outbox_.at(static_cast<std::size_t>(agent)) = std::move(m); }

  class Inbox {
   public:
    std::size_t size() const { return neighbors_->size(); }
    const Message& operator[](std::size_t slot) const { return *(*outbox_)[(*neighbors_)[slot]]; }
    int sender(std::size_t slot) const { return (*neighbors_)[slot]; }

   private:
    friend class Exchange;
    Inbox(const std::vector<int>& neighbors, const std::vector<std::optional<Message>>& outbox)
        : neighbors_(&neighbors), outbox_(&outbox) {}
    const std::vector<int>* neighbors_;
    const std::vector<std::optional<Message>>* outbox_;
  };

  /// Throws ContractError if some neighbor has not published this round.
  Inbox inbox(int agent) const {
    const auto& nb = graph_.neighbors(agent);
    for (int j : nb) {
      if (!outbox_[static_cast<std::size_t>(j)]) {
        throw ContractError("exchange: agent " + std::to_string(j) + " has not published this round");
      }
    }
    return Inbox(nb, outbox_);
  }

 private:
  const NetworkGraph& graph_;
  std::vector<std::optional<Message>> outbox_;
};

/// Agent visiting order for a round; empty means 0..n-1. Updates are
/// double-buffered, so the result does not depend on the order.
using Schedule = std::vector<int>;

inline std::vector<int> resolve_schedule(const Schedule& schedule, int n) {
  if (schedule.empty()) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    return order;
  }
  require(static_cast<int>(schedule.size()) == n, "schedule must list every agent once");
  std::vector<char> seen(n, 0);
  for (int i : schedule) {
    require(i >= 0 && i < n && !seen[i], "schedule must be a permutation of the agents");
    seen[i] = 1;
  }
  return schedule;
}

}  // namespace saddlenet
