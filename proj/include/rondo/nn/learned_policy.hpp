#pragma once

#include <string>
#include <vector>

#include "rondo/nn/network.hpp"
#include "rondo/policy.hpp"

namespace rondo::nn {

/// Runs the network on the rasterized, jitter-compensated history.
class LearnedPolicy : public Policy {
 public:
  LearnedPolicy(Network<float> net, int pool, std::string label = "learned");

  WaypointPlan act(const Observation& obs) override;
  void reset() override;
  std::string name() const override { return label_; }

 private:
  Network<float> net_;
  int pool_;
  std::string label_;
  HistoryQueue queue_;
  double last_pushed_ = -1e18;
  std::vector<float> input_;
};

/// History slots for the first ticks of an episode, before the queue spans
/// 0.4 s: older slots are extrapolated back at constant velocity.
std::array<TickRecord, kHistorySlots> extrapolated_history(const TickRecord& now);

}  // namespace rondo::nn
