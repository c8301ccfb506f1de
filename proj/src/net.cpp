#include "advrl/net.hpp"

#include <cmath>
#include <stdexcept>

namespace advrl {

namespace {

int conv_extent(int in, int kernel, int stride) {
  if (in < kernel) throw std::invalid_argument("conv input smaller than kernel");
  return (in - kernel) / stride + 1;
}

}  // namespace

std::vector<int> layer_output_shape(const LayerSpec& layer, const std::vector<int>& in_shape) {
  if (std::holds_alternative<Conv2D>(layer)) {
    const auto& c = std::get<Conv2D>(layer);
    if (in_shape.size() != 3) throw std::invalid_argument("Conv2D expects an {H,W,C} input");
    if (c.filters <= 0 || c.kernel <= 0 || c.stride <= 0)
      throw std::invalid_argument("Conv2D spec fields must be positive");
    return {conv_extent(in_shape[0], c.kernel, c.stride),
            conv_extent(in_shape[1], c.kernel, c.stride), c.filters};
  }
  if (std::holds_alternative<Dense>(layer)) {
    const auto& d = std::get<Dense>(layer);
    if (d.in <= 0 || d.out <= 0) throw std::invalid_argument("Dense extents must be positive");
    if (numel_of(in_shape) != d.in)
      throw std::invalid_argument("Dense input size does not compose with previous layer");
    return {d.out};
  }
  return in_shape;  // Relu
}

LayerStack LayerStack::make(std::vector<int> input_shape, std::vector<LayerSpec> layers, Rng& rng) {
  LayerStack net;
  net.input_shape = std::move(input_shape);
  net.layers = std::move(layers);

  std::vector<int> shape = net.input_shape;
  for (const auto& layer : net.layers) {
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      const int cin = shape[2];
      const int fan_in = cin * c->kernel * c->kernel;
      const double limit = std::sqrt(6.0 / fan_in);
      Tensor w = Tensor::zeros({c->filters, cin, c->kernel, c->kernel});
      for (double& v : w.data) v = rng.uniform(-limit, limit);
      net.params.push_back(std::move(w));
      net.params.push_back(Tensor::zeros({c->filters}));
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      const double limit = std::sqrt(6.0 / d->in);
      Tensor w = Tensor::zeros({d->out, d->in});
      for (double& v : w.data) v = rng.uniform(-limit, limit);
      net.params.push_back(std::move(w));
      net.params.push_back(Tensor::zeros({d->out}));
    }
    shape = layer_output_shape(layer, shape);
  }
  if (shape.size() != 1)
    throw std::invalid_argument("network must end in a Dense layer producing a Q-vector");
  return net;
}

std::vector<int> LayerStack::output_shape() const {
  std::vector<int> shape = input_shape;
  for (const auto& layer : layers) shape = layer_output_shape(layer, shape);
  return shape;
}

int LayerStack::output_size() const { return numel_of(output_shape()); }

int LayerStack::param_count() const {
  int n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

std::vector<std::string> LayerStack::param_names() const {
  std::vector<std::string> names;
  int li = 0;
  for (const auto& layer : layers) {
    const std::string base = std::holds_alternative<Conv2D>(layer) ? "conv" :
                             std::holds_alternative<Dense>(layer)  ? "dense" : "";
    if (!base.empty()) {
      names.push_back(base + std::to_string(li) + ".weight");
      names.push_back(base + std::to_string(li) + ".bias");
    }
    ++li;
  }
  return names;
}

std::uint64_t LayerStack::param_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : params) h = splitmix64(h ^ tensor_hash(p));
  return h;
}

bool LayerStack::same_architecture(const LayerStack& other) const {
  if (input_shape != other.input_shape) return false;
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].index() != other.layers[i].index()) return false;
    if (const auto* c = std::get_if<Conv2D>(&layers[i])) {
      const auto& o = std::get<Conv2D>(other.layers[i]);
      if (c->filters != o.filters || c->kernel != o.kernel || c->stride != o.stride) return false;
    } else if (const auto* d = std::get_if<Dense>(&layers[i])) {
      const auto& o = std::get<Dense>(other.layers[i]);
      if (d->in != o.in || d->out != o.out) return false;
    }
  }
  return true;
}

namespace {

Tensor conv_forward(const Conv2D& c, const Tensor& in, const Tensor& w, const Tensor& b) {
  const int h = in.shape[0], wd = in.shape[1], cin = in.shape[2];
  const int ho = conv_extent(h, c.kernel, c.stride);
  const int wo = conv_extent(wd, c.kernel, c.stride);
  Tensor out = Tensor::zeros({ho, wo, c.filters});
  for (int yo = 0; yo < ho; ++yo) {
    for (int xo = 0; xo < wo; ++xo) {
      for (int f = 0; f < c.filters; ++f) {
        double acc = b.data[f];
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < c.kernel; ++ky) {
            const int yi = yo * c.stride + ky;
            for (int kx = 0; kx < c.kernel; ++kx) {
              const int xi = xo * c.stride + kx;
              acc += in.data[(yi * wd + xi) * cin + ci] *
                     w.data[((f * cin + ci) * c.kernel + ky) * c.kernel + kx];
            }
          }
        }
        out.data[(yo * wo + xo) * c.filters + f] = acc;
      }
    }
  }
  return out;
}

void conv_backward(const Conv2D& c, const Tensor& in, const Tensor& w, const Tensor& g,
                   Tensor& dw, Tensor& db, Tensor& dx) {
  const int h = in.shape[0], wd = in.shape[1], cin = in.shape[2];
  const int ho = g.shape[0], wo = g.shape[1];
  for (int yo = 0; yo < ho; ++yo) {
    for (int xo = 0; xo < wo; ++xo) {
      for (int f = 0; f < c.filters; ++f) {
        const double gv = g.data[(yo * wo + xo) * c.filters + f];
        if (gv == 0.0) continue;
        db.data[f] += gv;
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < c.kernel; ++ky) {
            const int yi = yo * c.stride + ky;
            for (int kx = 0; kx < c.kernel; ++kx) {
              const int xi = xo * c.stride + kx;
              const std::size_t wi = ((f * cin + ci) * c.kernel + ky) * c.kernel + kx;
              dw.data[wi] += gv * in.data[(yi * wd + xi) * cin + ci];
              dx.data[(yi * wd + xi) * cin + ci] += gv * w.data[wi];
            }
          }
        }
      }
    }
  }
  (void)h;
}

Tensor dense_forward(const Dense& d, const Tensor& in, const Tensor& w, const Tensor& b) {
  Tensor out = Tensor::zeros({d.out});
  for (int o = 0; o < d.out; ++o) {
    double acc = b.data[o];
    const double* row = &w.data[static_cast<std::size_t>(o) * d.in];
    for (int i = 0; i < d.in; ++i) acc += row[i] * in.data[i];
    out.data[o] = acc;
  }
  return out;
}

void dense_backward(const Dense& d, const Tensor& in, const Tensor& w, const Tensor& g,
                    Tensor& dw, Tensor& db, Tensor& dx) {
  for (int o = 0; o < d.out; ++o) {
    const double gv = g.data[o];
    db.data[o] += gv;
    const double* row = &w.data[static_cast<std::size_t>(o) * d.in];
    double* drow = &dw.data[static_cast<std::size_t>(o) * d.in];
    for (int i = 0; i < d.in; ++i) {
      drow[i] += gv * in.data[i];
      dx.data[i] += gv * row[i];
    }
  }
}

}  // namespace

Tensor forward(const LayerStack& net, const Tensor& input, GradientTape* tape) {
  if (input.shape != net.input_shape)
    throw std::invalid_argument("forward: input shape does not match network input shape");
  if (tape) {
    tape->activations.clear();
    tape->consumed = false;
    tape->activations.push_back(input);
  }
  Tensor x = input;
  std::size_t pi = 0;
  for (const auto& layer : net.layers) {
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      x = conv_forward(*c, x, net.params[pi], net.params[pi + 1]);
      pi += 2;
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      Tensor flat = x;
      flat.shape = {x.numel()};
      x = dense_forward(*d, flat, net.params[pi], net.params[pi + 1]);
      pi += 2;
    } else {
      for (double& v : x.data) v = v > 0.0 ? v : 0.0;
    }
    if (tape) tape->activations.push_back(x);
  }
  check_finite(x, "forward output");
  return x;
}

Gradients backward(const LayerStack& net, GradientTape& tape, const Tensor& loss_grad) {
  if (tape.consumed) throw std::logic_error("backward: tape already consumed");
  if (tape.activations.size() != net.layers.size() + 1)
    throw std::logic_error("backward: tape does not match this network's forward pass");
  if (loss_grad.shape != tape.activations.back().shape)
    throw std::invalid_argument("backward: loss gradient shape mismatch");
  tape.consumed = true;

  Gradients grads;
  grads.params.reserve(net.params.size());
  for (const auto& p : net.params) grads.params.push_back(Tensor::zeros(p.shape));

  Tensor g = loss_grad;
  std::size_t pi = net.params.size();
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const Tensor& in = tape.activations[li];
    const auto& layer = net.layers[li];
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      pi -= 2;
      Tensor dx = Tensor::zeros(in.shape);
      conv_backward(*c, in, net.params[pi], g, grads.params[pi], grads.params[pi + 1], dx);
      g = std::move(dx);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      pi -= 2;
      Tensor flat_in = in;
      flat_in.shape = {in.numel()};
      Tensor dx = Tensor::zeros(flat_in.shape);
      dense_backward(*d, flat_in, net.params[pi], g, grads.params[pi], grads.params[pi + 1], dx);
      dx.shape = in.shape;  // undo the implicit flatten
      g = std::move(dx);
    } else {
      Tensor dx = g;
      for (int i = 0; i < in.numel(); ++i)
        if (in.data[i] <= 0.0) dx.data[i] = 0.0;
      g = std::move(dx);
    }
  }
  grads.input = std::move(g);
  return grads;
}

std::vector<Tensor> backward_params(const LayerStack& net, GradientTape& tape, const Tensor& loss_grad) {
  return backward(net, tape, loss_grad).params;
}

Tensor backward_input(const LayerStack& net, GradientTape& tape, const Tensor& loss_grad) {
  return backward(net, tape, loss_grad).input;
}

}  // namespace advrl
