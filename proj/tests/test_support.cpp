#include "test_support.hpp"

#include <algorithm>
#include <stdexcept>

namespace advrl::testsupport {

namespace {

// Independent conv evaluation: iterates input-major rather than output-major
// and keeps its own index arithmetic.
std::vector<double> ref_conv(const std::vector<double>& in, int h, int w, int cin,
                             const Tensor& weight, const Tensor& bias, int filters, int kernel,
                             int stride, int& oh, int& ow) {
  oh = (h - kernel) / stride + 1;
  ow = (w - kernel) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(oh) * ow * filters, 0.0);
  for (int f = 0; f < filters; ++f)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        out[(static_cast<std::size_t>(y) * ow + x) * filters + f] = bias.data[f];
  for (int ci = 0; ci < cin; ++ci) {
    for (int yi = 0; yi < h; ++yi) {
      for (int xi = 0; xi < w; ++xi) {
        const double v = in[(static_cast<std::size_t>(yi) * w + xi) * cin + ci];
        for (int f = 0; f < filters; ++f) {
          for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
              const int yo_num = yi - ky;
              const int xo_num = xi - kx;
              if (yo_num < 0 || xo_num < 0) continue;
              if (yo_num % stride != 0 || xo_num % stride != 0) continue;
              const int yo = yo_num / stride;
              const int xo = xo_num / stride;
              if (yo >= oh || xo >= ow) continue;
              const double wv =
                  weight.data[((static_cast<std::size_t>(f) * cin + ci) * kernel + ky) * kernel +
                              kx];
              out[(static_cast<std::size_t>(yo) * ow + xo) * filters + f] += v * wv;
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> reference_forward(const LayerStack& net, const Tensor& input) {
  std::vector<double> act = input.data;
  std::vector<int> shape = net.input_shape;
  std::size_t pi = 0;
  for (const auto& layer : net.layers) {
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      int oh = 0, ow = 0;
      act = ref_conv(act, shape[0], shape[1], shape[2], net.params[pi], net.params[pi + 1],
                     c->filters, c->kernel, c->stride, oh, ow);
      shape = {oh, ow, c->filters};
      pi += 2;
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      std::vector<double> out(static_cast<std::size_t>(d->out), 0.0);
      for (int o = 0; o < d->out; ++o) {
        double acc = net.params[pi + 1].data[o];
        for (int i = 0; i < d->in; ++i)
          acc += net.params[pi].data[static_cast<std::size_t>(o) * d->in + i] * act[i];
        out[o] = acc;
      }
      act = std::move(out);
      shape = {d->out};
      pi += 2;
    } else {
      for (double& v : act) v = std::max(0.0, v);
    }
  }
  return act;
}

RandomNetCase random_conv_dense_case(std::uint64_t seed, double kink_margin) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Rng rng(derive_seed(seed, "gradcase-" + std::to_string(attempt)));
    const int h = 7 + rng.uniform_int(4);        // 7..10
    const int c = 1 + rng.uniform_int(2);        // 1..2 channels
    const int filters = 2 + rng.uniform_int(3);  // 2..4
    const int actions = 2 + rng.uniform_int(3);  // 2..4

    std::vector<LayerSpec> layers;
    std::vector<int> shape = {h, h, c};
    layers.push_back(Conv2D{filters, 3, 2});
    shape = layer_output_shape(layers.back(), shape);
    layers.push_back(Relu{});
    layers.push_back(Dense{numel_of(shape), 8});
    layers.push_back(Relu{});
    layers.push_back(Dense{8, actions});

    RandomNetCase cs{LayerStack::make({h, h, c}, layers, rng), Tensor::zeros({h, h, c})};
    for (double& v : cs.input.data) v = rng.uniform();
    // Nonzero biases so bias gradients are exercised away from zero.
    for (std::size_t p = 1; p < cs.net.params.size(); p += 2)
      for (double& v : cs.net.params[p].data) v = rng.uniform(-0.1, 0.1);

    // Keep every ReLU pre-activation away from its kink so a +-1e-3 probe
    // cannot cross it.
    GradientTape tape;
    forward(cs.net, cs.input, &tape);
    bool ok = true;
    for (std::size_t li = 0; li < cs.net.layers.size() && ok; ++li) {
      if (!std::holds_alternative<Relu>(cs.net.layers[li])) continue;
      for (double v : tape.activations[li].data)
        if (std::fabs(v) < kink_margin) {
          ok = false;
          break;
        }
    }
    if (ok) return cs;
  }
  throw std::runtime_error("could not build a kink-free random net case");
}

std::vector<double> value_iteration_q(const TabularMdp::Tables& tables, double gamma, double tol,
                                      int max_sweeps) {
  const int n = tables.state_count;
  const int a = tables.action_count;
  std::vector<double> q(static_cast<std::size_t>(n) * a, 0.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    std::vector<double> next_q = q;
    for (int s = 0; s < n; ++s) {
      if (tables.terminal[s]) continue;
      for (int act = 0; act < a; ++act) {
        const int idx = s * a + act;
        const int sp = tables.next[idx];
        double best_next = 0.0;
        if (!tables.terminal[sp]) {
          best_next = q[static_cast<std::size_t>(sp) * a];
          for (int ap = 1; ap < a; ++ap)
            best_next = std::max(best_next, q[static_cast<std::size_t>(sp) * a + ap]);
        }
        next_q[idx] = tables.reward[idx] + gamma * best_next;
        delta = std::max(delta, std::fabs(next_q[idx] - q[idx]));
      }
    }
    q = std::move(next_q);
    if (delta < tol) return q;
  }
  return q;
}

}  // namespace advrl::testsupport
