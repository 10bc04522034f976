#pragma once

#include <cstdint>
#include <vector>

#include "uavnes/rng.hpp"

namespace uavnes::replay {

/// One joint environment transition; all agents share the buffer so the
/// centralized critics always sample synchronized data.
struct Transition {
  std::vector<double> obs;       // concatenated per-agent observations
  std::vector<double> actions;   // N x 3 raw actions
  std::vector<double> rewards;   // per agent
  std::vector<double> next_obs;
  std::vector<double> global_state;
  std::vector<double> next_global_state;
  bool done = false;
};

/// Binary indexed sum structure over leaf priorities. Internal nodes are
/// always recomputed as left+right, so they match an O(N) rebuild exactly.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);  // capacity must be a power of two

  void set(std::size_t index, double priority);
  double leaf(std::size_t index) const { return nodes_[capacity_ + index]; }
  double total() const { return nodes_[1]; }
  std::size_t capacity() const { return capacity_; }

  /// Index of the leaf owning the prefix mass (0 <= mass < total()).
  std::size_t find_prefix(double mass) const;

  std::uint64_t touches() const { return touches_; }
  void reset_touches() { touches_ = 0; }
  const std::vector<double>& raw_nodes() const { return nodes_; }

 private:
  std::size_t capacity_;
  std::vector<double> nodes_;  // 1-based heap layout, size 2*capacity
  mutable std::uint64_t touches_ = 0;
};

struct SampleBatch {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // normalized IS weights in (0,1]
  std::vector<const Transition*> items;
};

/// Proportional prioritized replay: leaves hold (|td| + eps)^alpha, new
/// samples enter at the running max priority, sampling is stratified.
class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity, double alpha, double priority_eps,
                    std::uint64_t seed);

  void push(Transition t);
  SampleBatch sample(std::size_t batch_size, double beta);
  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& td_errors);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  double alpha() const { return alpha_; }
  SumTree& tree() { return tree_; }
  const SumTree& tree() const { return tree_; }

 private:
  std::size_t capacity_;
  double alpha_;
  double priority_eps_;
  SumTree tree_;
  std::vector<Transition> slots_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  double max_priority_ = 1.0;  // raw (pre-alpha) priority
  RngStream rng_;
};

}  // namespace uavnes::replay
