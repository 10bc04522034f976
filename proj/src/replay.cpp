#include "uavnes/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace uavnes::replay {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
  if (!is_power_of_two(capacity)) throw std::invalid_argument("capacity must be a power of two");
  nodes_.assign(2 * capacity_, 0.0);
}

void SumTree::set(std::size_t index, double priority) {
  if (index >= capacity_) throw std::out_of_range("leaf index out of range");
  if (!(priority >= 0.0)) throw std::invalid_argument("priority must be >= 0");
  std::size_t node = capacity_ + index;
  nodes_[node] = priority;
  ++touches_;
  while (node > 1) {
    node >>= 1;
    nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
    ++touches_;
  }
}

std::size_t SumTree::find_prefix(double mass) const {
  std::size_t node = 1;
  while (node < capacity_) {
    ++touches_;
    const std::size_t left = 2 * node;
    if (mass < nodes_[left]) {
      node = left;
    } else {
      mass -= nodes_[left];
      node = left + 1;
    }
  }
  return node - capacity_;
}

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double alpha, double priority_eps,
                                     std::uint64_t seed)
    : capacity_(next_power_of_two(capacity)),
      alpha_(alpha),
      priority_eps_(priority_eps),
      tree_(capacity_),
      rng_(seed) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  if (priority_eps <= 0.0) throw std::invalid_argument("priority_eps must be > 0");
  slots_.resize(capacity_);
}

void PrioritizedReplay::push(Transition t) {
  slots_[cursor_] = std::move(t);
  tree_.set(cursor_, std::pow(max_priority_, alpha_));
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

SampleBatch PrioritizedReplay::sample(std::size_t batch_size, double beta) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
  if (size_ < batch_size) throw std::runtime_error("buffer smaller than batch");
  const double total = tree_.total();
  if (!(total > 0.0)) throw std::runtime_error("total priority mass is zero");

  SampleBatch batch;
  batch.indices.reserve(batch_size);
  batch.weights.reserve(batch_size);
  batch.items.reserve(batch_size);
  const double segment = total / static_cast<double>(batch_size);
  double max_weight = 0.0;
  for (std::size_t k = 0; k < batch_size; ++k) {
    double mass = (static_cast<double>(k) + rng_.uniform()) * segment;
    if (mass >= total) mass = std::nextafter(total, 0.0);
    std::size_t idx = tree_.find_prefix(mass);
    if (idx >= size_) idx = size_ - 1;  // guard against landing on an empty slot
    const double prob = tree_.leaf(idx) / total;
    const double weight = std::pow(static_cast<double>(size_) * prob, -beta);
    batch.indices.push_back(idx);
    batch.weights.push_back(weight);
    batch.items.push_back(&slots_[idx]);
    max_weight = std::max(max_weight, weight);
  }
  for (double& w : batch.weights) w /= max_weight;
  return batch;
}

void PrioritizedReplay::update_priorities(const std::vector<std::size_t>& indices,
                                          const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size()) {
    throw std::invalid_argument("indices and td_errors must align");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size_) throw std::out_of_range("priority index out of range");
    const double raw = std::abs(td_errors[k]) + priority_eps_;
    tree_.set(indices[k], std::pow(raw, alpha_));
    max_priority_ = std::max(max_priority_, raw);
  }
}

}  // namespace uavnes::replay
