#include "uavnes/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uavnes::nn {

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }
double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }  // subgradient 0 at 0

/// Four-lane unrolled dot product; fixed summation order keeps results
/// bit-reproducible while letting the compiler vectorize.
double dot(const double* w, const double* x, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int c = 0;
  for (; c + 4 <= n; c += 4) {
    s0 += w[c] * x[c];
    s1 += w[c + 1] * x[c + 1];
    s2 += w[c + 2] * x[c + 2];
    s3 += w[c + 3] * x[c + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; c < n; ++c) s += w[c] * x[c];
  return s;
}

void check_shapes(const MlpParams& params) {
  const int layers = params.spec.num_layers();
  if (static_cast<int>(params.weights.size()) != layers ||
      static_cast<int>(params.biases.size()) != layers) {
    throw std::invalid_argument("parameter container does not match spec");
  }
}

}  // namespace

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("need at least input and output layers");
  for (int w : layer_sizes) {
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  }
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

MlpParams init_mlp(const MlpSpec& spec, RngStream& rng, double output_scale) {
  spec.validate();
  MlpParams p;
  p.spec = spec;
  const int layers = spec.num_layers();
  for (int l = 0; l < layers; ++l) {
    const int in = spec.layer_sizes[static_cast<std::size_t>(l)];
    const int out = spec.layer_sizes[static_cast<std::size_t>(l) + 1];
    const bool last = l == layers - 1;
    const double bound = (last && output_scale > 0.0)
                             ? output_scale
                             : 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    std::vector<double> b(static_cast<std::size_t>(out));
    for (double& v : w) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

std::vector<double> forward(const MlpParams& params, const std::vector<double>& input,
                            ForwardCache* cache) {
  check_shapes(params);
  const MlpSpec& spec = params.spec;
  if (static_cast<int>(input.size()) != spec.input_dim()) {
    throw std::invalid_argument("input width does not match spec");
  }
  const int layers = spec.num_layers();
  if (cache) {
    // Reuse the cache storage across calls; assign() keeps capacity.
    cache->activations.resize(static_cast<std::size_t>(layers) + 1);
    cache->pre_acts.resize(static_cast<std::size_t>(layers));
    cache->activations[0] = input;
  }
  std::vector<double> x = input;
  std::vector<double> z;
  for (int l = 0; l < layers; ++l) {
    const int in = spec.layer_sizes[static_cast<std::size_t>(l)];
    const int out = spec.layer_sizes[static_cast<std::size_t>(l) + 1];
    const std::vector<double>& w = params.weights[static_cast<std::size_t>(l)];
    const std::vector<double>& b = params.biases[static_cast<std::size_t>(l)];
    z.resize(static_cast<std::size_t>(out));
    for (int r = 0; r < out; ++r) {
      z[static_cast<std::size_t>(r)] =
          b[static_cast<std::size_t>(r)] + dot(&w[static_cast<std::size_t>(r) * in], x.data(), in);
    }
    if (cache) cache->pre_acts[static_cast<std::size_t>(l)] = z;
    const bool last = l == layers - 1;
    if (!last) {
      for (double& v : z) v = relu(v);
    } else if (spec.output_activation == OutputActivation::kSquash) {
      for (double& v : z) v = std::tanh(v);
    }
    if (cache) cache->activations[static_cast<std::size_t>(l) + 1] = z;
    std::swap(x, z);
  }
  return x;
}

Gradients Gradients::zeros_like(const MlpParams& params) {
  Gradients g;
  for (const auto& w : params.weights) g.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
  g.input.assign(static_cast<std::size_t>(params.spec.input_dim()), 0.0);
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
  for (std::size_t i = 0; i < input.size(); ++i) input[i] += other.input[i];
}

void Gradients::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
  std::fill(input.begin(), input.end(), 0.0);
}

void Gradients::scale(double s) {
  for (auto& w : weights) {
    for (double& v : w) v *= s;
  }
  for (auto& b : biases) {
    for (double& v : b) v *= s;
  }
  for (double& v : input) v *= s;
}

double Gradients::global_norm() const {
  double sq = 0.0;
  for (const auto& w : weights) {
    for (double v : w) sq += v * v;
  }
  for (const auto& b : biases) {
    for (double v : b) sq += v * v;
  }
  return std::sqrt(sq);
}

void backward_into(const MlpParams& params, const ForwardCache& cache,
                   const std::vector<double>& output_grad, Gradients& accum) {
  check_shapes(params);
  const MlpSpec& spec = params.spec;
  const int layers = spec.num_layers();
  if (static_cast<int>(cache.pre_acts.size()) != layers ||
      static_cast<int>(cache.activations.size()) != layers + 1) {
    throw std::invalid_argument("cache does not match a forward pass of this net");
  }
  if (static_cast<int>(output_grad.size()) != spec.output_dim()) {
    throw std::invalid_argument("output gradient width mismatch");
  }

  std::vector<double> delta = output_grad;
  std::vector<double> prev;
  if (spec.output_activation == OutputActivation::kSquash) {
    const std::vector<double>& y = cache.activations.back();
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= 1.0 - y[i] * y[i];
  }
  for (int l = layers - 1; l >= 0; --l) {
    const int in = spec.layer_sizes[static_cast<std::size_t>(l)];
    const int out = spec.layer_sizes[static_cast<std::size_t>(l) + 1];
    const std::vector<double>& x = cache.activations[static_cast<std::size_t>(l)];
    const std::vector<double>& w = params.weights[static_cast<std::size_t>(l)];
    std::vector<double>& gw = accum.weights[static_cast<std::size_t>(l)];
    std::vector<double>& gb = accum.biases[static_cast<std::size_t>(l)];
    prev.assign(static_cast<std::size_t>(in), 0.0);
    for (int r = 0; r < out; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      gb[static_cast<std::size_t>(r)] += d;
      double* gwrow = &gw[static_cast<std::size_t>(r) * in];
      const double* wrow = &w[static_cast<std::size_t>(r) * in];
      const double* xp = x.data();
      double* pp = prev.data();
      for (int c = 0; c < in; ++c) {
        gwrow[c] += d * xp[c];
        pp[c] += d * wrow[c];
      }
    }
    if (l > 0) {
      const std::vector<double>& z = cache.pre_acts[static_cast<std::size_t>(l) - 1];
      for (int c = 0; c < in; ++c) prev[static_cast<std::size_t>(c)] *= relu_grad(z[static_cast<std::size_t>(c)]);
    }
    std::swap(delta, prev);
  }
  for (std::size_t i = 0; i < accum.input.size(); ++i) accum.input[i] += delta[i];
}

Gradients backward(const MlpParams& params, const ForwardCache& cache,
                   const std::vector<double>& output_grad) {
  Gradients g = Gradients::zeros_like(params);
  backward_into(params, cache, output_grad, g);
  return g;
}

AdamState AdamState::init(const MlpParams& params, double lr_in, double clip) {
  AdamState s;
  s.lr = lr_in;
  s.clip_norm = clip;
  for (const auto& w : params.weights) {
    s.m_weights.emplace_back(w.size(), 0.0);
    s.v_weights.emplace_back(w.size(), 0.0);
  }
  for (const auto& b : params.biases) {
    s.m_biases.emplace_back(b.size(), 0.0);
    s.v_biases.emplace_back(b.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, MlpParams& params, const Gradients& grads) {
  double scale = 1.0;
  if (state.clip_norm > 0.0) {
    const double norm = grads.global_norm();
    if (norm > state.clip_norm) scale = state.clip_norm / norm;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& theta, const std::vector<double>& grad,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = grad[i] * scale;
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    update(params.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l]);
  }
}

void polyak_update(MlpParams& target, const MlpParams& source, double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in [0,1]");
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    for (std::size_t i = 0; i < target.weights[l].size(); ++i) {
      target.weights[l][i] = (1.0 - tau) * target.weights[l][i] + tau * source.weights[l][i];
    }
    for (std::size_t i = 0; i < target.biases[l].size(); ++i) {
      target.biases[l][i] = (1.0 - tau) * target.biases[l][i] + tau * source.biases[l][i];
    }
  }
}

namespace {

constexpr char kMagic[8] = {'M', 'L', 'P', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
}

void write_vec(std::ostream& out, const std::vector<double>& v) {
  write_pod(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec(std::istream& in) {
  std::uint64_t n = 0;
  read_pod(in, n);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const auto& spec = ckpt.params.spec;
  write_pod(out, static_cast<std::uint32_t>(spec.layer_sizes.size()));
  for (int s : spec.layer_sizes) write_pod(out, static_cast<std::int32_t>(s));
  write_pod(out, static_cast<std::uint8_t>(spec.output_activation));
  for (std::size_t l = 0; l < ckpt.params.weights.size(); ++l) {
    write_vec(out, ckpt.params.weights[l]);
    write_vec(out, ckpt.params.biases[l]);
  }
  write_pod(out, ckpt.adam.lr);
  write_pod(out, ckpt.adam.beta1);
  write_pod(out, ckpt.adam.beta2);
  write_pod(out, ckpt.adam.eps);
  write_pod(out, ckpt.adam.clip_norm);
  write_pod(out, ckpt.adam.step);
  for (std::size_t l = 0; l < ckpt.adam.m_weights.size(); ++l) {
    write_vec(out, ckpt.adam.m_weights[l]);
    write_vec(out, ckpt.adam.v_weights[l]);
    write_vec(out, ckpt.adam.m_biases[l]);
    write_vec(out, ckpt.adam.v_biases[l]);
  }
  write_pod(out, static_cast<std::uint64_t>(ckpt.rng_state.size()));
  out.write(ckpt.rng_state.data(), static_cast<std::streamsize>(ckpt.rng_state.size()));
  write_pod(out, ckpt.train_step);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  Checkpoint ckpt;
  std::uint32_t n_sizes = 0;
  read_pod(in, n_sizes);
  ckpt.params.spec.layer_sizes.resize(n_sizes);
  for (auto& s : ckpt.params.spec.layer_sizes) {
    std::int32_t v = 0;
    read_pod(in, v);
    s = v;
  }
  std::uint8_t act = 0;
  read_pod(in, act);
  ckpt.params.spec.output_activation = static_cast<OutputActivation>(act);
  const int layers = ckpt.params.spec.num_layers();
  for (int l = 0; l < layers; ++l) {
    ckpt.params.weights.push_back(read_vec(in));
    ckpt.params.biases.push_back(read_vec(in));
  }
  read_pod(in, ckpt.adam.lr);
  read_pod(in, ckpt.adam.beta1);
  read_pod(in, ckpt.adam.beta2);
  read_pod(in, ckpt.adam.eps);
  read_pod(in, ckpt.adam.clip_norm);
  read_pod(in, ckpt.adam.step);
  for (int l = 0; l < layers; ++l) {
    ckpt.adam.m_weights.push_back(read_vec(in));
    ckpt.adam.v_weights.push_back(read_vec(in));
    ckpt.adam.m_biases.push_back(read_vec(in));
    ckpt.adam.v_biases.push_back(read_vec(in));
  }
  std::uint64_t rng_len = 0;
  read_pod(in, rng_len);
  ckpt.rng_state.resize(rng_len);
  in.read(ckpt.rng_state.data(), static_cast<std::streamsize>(rng_len));
  read_pod(in, ckpt.train_step);
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return ckpt;
}

}  // namespace uavnes::nn
