#include "advrl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "advrl/rng.hpp"

namespace advrl {

int numel_of(const std::vector<int>& shape) {
  int n = 1;
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor extent must be positive");
    n *= e;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (numel_of(shape) != static_cast<int>(data.size()))
    throw std::invalid_argument("tensor shape does not match data length");
}

Tensor Tensor::zeros(std::vector<int> shape) {
  const int n = numel_of(shape);
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(static_cast<std::size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.data.begin(), t.data.end(), value);
  return t;
}

int Tensor::numel() const { return static_cast<int>(data.size()); }

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) throw std::invalid_argument("tensor shape mismatch in +=");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data) v *= s;
  return *this;
}

int argmax(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int argmax(const Tensor& t) { return argmax(t.data); }

double linf_dist(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("linf_dist shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

double l2_dist(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("l2_dist shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

std::uint64_t tensor_hash(const Tensor& t) {
  std::uint64_t h = fnv1a64(t.shape.data(), t.shape.size() * sizeof(int));
  h ^= fnv1a64(t.data.data(), t.data.size() * sizeof(double));
  return h;
}

void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw std::runtime_error(std::string("non-finite values in ") + what);
}

}  // namespace advrl
