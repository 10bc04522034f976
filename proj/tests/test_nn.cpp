#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "uavnes/nn.hpp"

using namespace uavnes;
using namespace uavnes::nn;

namespace {

/// Straightforward re-evaluation used as the forward oracle: same math,
/// written with inner_product over explicit row slices.
std::vector<double> oracle_forward(const MlpParams& p, std::vector<double> x) {
  const int layers = p.spec.num_layers();
  for (int l = 0; l < layers; ++l) {
    const int in = p.spec.layer_sizes[l];
    const int out = p.spec.layer_sizes[l + 1];
    std::vector<double> y(out);
    for (int r = 0; r < out; ++r) {
      y[r] = std::inner_product(x.begin(), x.end(), p.weights[l].begin() + r * in,
                                p.biases[l][r]);
    }
    for (int r = 0; r < out; ++r) {
      if (l + 1 < layers) {
        y[r] = std::max(0.0, y[r]);
      } else if (p.spec.output_activation == OutputActivation::kSquash) {
        y[r] = std::tanh(y[r]);
      }
    }
    x = std::move(y);
  }
  return x;
}

double loss_of(const MlpParams& p, const std::vector<double>& input,
               const std::vector<double>& grad_dir) {
  const std::vector<double> y = forward(p, input);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * grad_dir[i];
  return s;
}

}  // namespace

TEST_CASE("forward basics") {
  MlpSpec spec{{1, 1}, OutputActivation::kNone};
  RngStream rng(1);
  MlpParams p = init_mlp(spec, rng);
  p.weights[0] = {2.0};
  p.biases[0] = {1.0};
  CHECK(forward(p, {3.0})[0] == doctest::Approx(7.0).epsilon(1e-15));

  // Zero parameters give zero output through any depth.
  MlpSpec deep{{4, 8, 3}, OutputActivation::kNone};
  MlpParams zero = init_mlp(deep, rng);
  for (auto& w : zero.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : zero.biases) std::fill(b.begin(), b.end(), 0.0);
  for (double v : forward(zero, {1.0, -2.0, 3.0, 0.5})) CHECK(v == 0.0);

  CHECK_THROWS_AS(forward(p, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("forward matches an independent re-evaluation") {
  RngStream rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    MlpSpec spec{{5, 16, 8, 3},
                 trial % 2 ? OutputActivation::kSquash : OutputActivation::kNone};
    const MlpParams p = init_mlp(spec, rng);
    std::vector<double> x(5);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const std::vector<double> got = forward(p, x);
    const std::vector<double> want = oracle_forward(p, x);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("squashed output stays bounded") {
  RngStream rng(3);
  MlpSpec spec{{2, 8, 2}, OutputActivation::kSquash};
  MlpParams p = init_mlp(spec, rng);
  for (auto& w : p.weights) {
    for (double& v : w) v *= 3.0;
  }
  for (double v : forward(p, {5.0, -7.0})) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
  // Extreme pre-activations saturate to the closed interval, never beyond.
  for (auto& w : p.weights) {
    for (double& v : w) v *= 1e6;
  }
  for (double v : forward(p, {5.0, -7.0})) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("backward: linear case and zero gradient") {
  MlpSpec spec{{2, 1}, OutputActivation::kNone};
  RngStream rng(1);
  MlpParams p = init_mlp(spec, rng);
  p.weights[0] = {0.5, -1.5};
  p.biases[0] = {0.25};
  ForwardCache cache;
  forward(p, {2.0, 3.0}, &cache);
  const Gradients g = backward(p, cache, {1.0});
  CHECK(g.biases[0][0] == 1.0);
  CHECK(g.weights[0][0] == 2.0);
  CHECK(g.weights[0][1] == 3.0);
  CHECK(g.input[0] == 0.5);
  CHECK(g.input[1] == -1.5);

  const Gradients z = backward(p, cache, {0.0});
  CHECK(z.biases[0][0] == 0.0);
  CHECK(z.weights[0][0] == 0.0);
  CHECK(z.input[0] == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  RngStream rng(123);
  const double h = 1e-6;
  double max_rel = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    const int depth = 1 + static_cast<int>(rng.uniform_index(3));
    std::vector<int> sizes{3 + static_cast<int>(rng.uniform_index(4))};
    for (int d = 0; d < depth; ++d) sizes.push_back(4 + static_cast<int>(rng.uniform_index(12)));
    sizes.push_back(1 + static_cast<int>(rng.uniform_index(3)));
    MlpSpec spec{sizes, trial % 2 ? OutputActivation::kSquash : OutputActivation::kNone};
    MlpParams p = init_mlp(spec, rng);
    std::vector<double> x(sizes.front());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<double> dir(sizes.back());
    for (double& v : dir) v = rng.uniform(-1.0, 1.0);

    ForwardCache cache;
    forward(p, x, &cache);
    const Gradients g = backward(p, cache, dir);

    auto check_param = [&](std::vector<double>& theta, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < theta.size(); i += 1 + theta.size() / 25) {
        const double keep = theta[i];
        theta[i] = keep + h;
        const double up = loss_of(p, x, dir);
        theta[i] = keep - h;
        const double down = loss_of(p, x, dir);
        theta[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - grad[i]) / denom);
      }
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      check_param(p.weights[l], g.weights[l]);
      check_param(p.biases[l], g.biases[l]);
    }
    // Input gradient against finite differences too.
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = x[i];
      x[i] = keep + h;
      const double up = loss_of(p, x, dir);
      x[i] = keep - h;
      const double down = loss_of(p, x, dir);
      x[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(g.input[i]), 1e-6});
      max_rel = std::max(max_rel, std::abs(fd - g.input[i]) / denom);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  RngStream rng(5);
  MlpSpec spec{{2, 4, 1}, OutputActivation::kNone};
  MlpParams p = init_mlp(spec, rng);
  const MlpParams before = p;
  AdamState opt = AdamState::init(p, 0.01, 1.0);
  adam_step(opt, p, Gradients::zeros_like(p));
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK(p.weights[l] == before.weights[l]);
    CHECK(p.biases[l] == before.biases[l]);
  }
}

TEST_CASE("adam single scalar step matches the hand-computed update") {
  MlpSpec spec{{1, 1}, OutputActivation::kNone};
  RngStream rng(5);
  MlpParams p = init_mlp(spec, rng);
  p.weights[0] = {1.0};
  p.biases[0] = {0.0};
  AdamState opt = AdamState::init(p, 0.1, 0.0);  // no clipping
  Gradients g = Gradients::zeros_like(p);
  g.weights[0][0] = 1.0;

  // Independent scalar Adam oracle for one step with g = 1:
  // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1, delta = -lr / (1 + eps).
  const double expected = 1.0 - 0.1 * 1.0 / (std::sqrt(1.0) + 1e-8);
  adam_step(opt, p, g);
  CHECK(p.weights[0][0] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(opt.step == 1);
}

TEST_CASE("gradient clipping preserves direction at norm = clip") {
  MlpSpec spec{{1, 2}, OutputActivation::kNone};
  RngStream rng(5);
  MlpParams p = init_mlp(spec, rng);
  AdamState opt = AdamState::init(p, 1e-3, 1.0);
  Gradients g = Gradients::zeros_like(p);
  g.weights[0] = {6.0, 8.0};  // norm 10 -> scaled to 1
  const MlpParams before = p;
  adam_step(opt, p, g);
  // After clipping, both first moments keep the 6:8 ratio.
  CHECK(opt.m_weights[0][0] / opt.m_weights[0][1] == doctest::Approx(0.75).epsilon(1e-12));
  const double applied_norm = std::hypot(opt.m_weights[0][0], opt.m_weights[0][1]) / (1.0 - 0.9);
  CHECK(applied_norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.weights[0][0] != before.weights[0][0]);
}

TEST_CASE("polyak update") {
  MlpSpec spec{{1, 1}, OutputActivation::kNone};
  RngStream rng(5);
  MlpParams target = init_mlp(spec, rng);
  MlpParams source = init_mlp(spec, rng);
  target.weights[0] = {0.0};
  source.weights[0] = {1.0};
  MlpParams t1 = target;
  polyak_update(t1, source, 1.0);
  CHECK(t1.weights[0][0] == 1.0);
  MlpParams t0 = target;
  polyak_update(t0, source, 0.0);
  CHECK(t0.weights[0][0] == 0.0);
  MlpParams ts = target;
  polyak_update(ts, source, 0.005);
  CHECK(ts.weights[0][0] == doctest::Approx(0.005).epsilon(1e-15));
  CHECK_THROWS_AS(polyak_update(ts, source, 1.5), std::invalid_argument);
}

TEST_CASE("deterministic init") {
  MlpSpec spec{{3, 8, 2}, OutputActivation::kSquash};
  RngStream a(99), b(99);
  const MlpParams pa = init_mlp(spec, a);
  const MlpParams pb = init_mlp(spec, b);
  CHECK(pa.weights == pb.weights);
  CHECK(pa.biases == pb.biases);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  RngStream rng(2025);
  MlpSpec spec{{4, 6, 2}, OutputActivation::kSquash};
  Checkpoint ckpt;
  ckpt.params = init_mlp(spec, rng, 1e-3);
  ckpt.adam = AdamState::init(ckpt.params, 3.14e-4, 0.5);
  Gradients g = Gradients::zeros_like(ckpt.params);
  for (auto& w : g.weights) {
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
  }
  adam_step(ckpt.adam, ckpt.params, g);
  ckpt.rng_state = rng.state_string();
  ckpt.train_step = 42;

  const std::string path = "nn_ckpt_test.bin";
  save_checkpoint(path, ckpt);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.params.spec.layer_sizes == ckpt.params.spec.layer_sizes);
  CHECK(back.params.spec.output_activation == ckpt.params.spec.output_activation);
  CHECK(back.params.weights == ckpt.params.weights);
  CHECK(back.params.biases == ckpt.params.biases);
  CHECK(back.adam.m_weights == ckpt.adam.m_weights);
  CHECK(back.adam.v_weights == ckpt.adam.v_weights);
  CHECK(back.adam.lr == ckpt.adam.lr);
  CHECK(back.adam.step == ckpt.adam.step);
  CHECK(back.rng_state == ckpt.rng_state);
  CHECK(back.train_step == 42);
  std::remove(path.c_str());

  CHECK_THROWS(load_checkpoint("does_not_exist.bin"));
}
