#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavnes/rng.hpp"

namespace uavnes::nn {

enum class OutputActivation : std::uint8_t { kNone = 0, kSquash = 1 };

struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output
  OutputActivation output_activation = OutputActivation::kNone;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  void validate() const;
};

/// Dense weights/biases in double precision; weights[l] is row-major
/// (out x in) for layer l.
struct MlpParams {
  MlpSpec spec;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t param_count() const;
};

/// Hidden layers use fan-in scaled uniform init; pass output_scale > 0 to
/// shrink the final layer (near-zero initial actor actions).
MlpParams init_mlp(const MlpSpec& spec, RngStream& rng, double output_scale = 0.0);

struct ForwardCache {
  std::vector<std::vector<double>> activations;  // per layer, incl. input
  std::vector<std::vector<double>> pre_acts;     // per layer
};

std::vector<double> forward(const MlpParams& params, const std::vector<double>& input,
                            ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  std::vector<double> input;  // dL/dinput

  static Gradients zeros_like(const MlpParams& params);
  void accumulate(const Gradients& other);
  void scale(double s);
  void zero();
  double global_norm() const;  // over parameter gradients only
};

/// Exact reverse-mode gradients of sum(output . output_grad).
Gradients backward(const MlpParams& params, const ForwardCache& cache,
                   const std::vector<double>& output_grad);

/// Allocation-free variant: adds the gradients into an existing accumulator
/// (the hot path for batched updates).
void backward_into(const MlpParams& params, const ForwardCache& cache,
                   const std::vector<double>& output_grad, Gradients& accum);

struct AdamState {
  double lr = 1.0e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1.0e-8;
  double clip_norm = 1.0;  // global-norm clip; <= 0 disables
  std::int64_t step = 0;
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;

  static AdamState init(const MlpParams& params, double lr, double clip_norm);
};

void adam_step(AdamState& state, MlpParams& params, const Gradients& grads);

void polyak_update(MlpParams& target, const MlpParams& source, double tau);

/// Versioned binary checkpoint; round-trips bit-exactly.
struct Checkpoint {
  MlpParams params;
  AdamState adam;
  std::string rng_state;
  std::int64_t train_step = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace uavnes::nn
