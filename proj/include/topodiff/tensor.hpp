#pragma once

#include <string>
#include <vector>

#include "topodiff/common.hpp"

namespace topodiff {

// Dense float32 tensor, row-major. Batched images use (N, C, H, W).
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, float value);

  int64_t numel() const;
  int dim(int i) const { return shape[size_t(i)]; }
  int ndim() const { return int(shape.size()); }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  // NCHW accessor (only valid for 4-d tensors)
  float& at(int n, int c, int h, int w) {
    return data[((size_t(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  float at(int n, int c, int h, int w) const {
    return data[((size_t(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  void fill_normal(Rng& rng, float scale = 1.0f);
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor& operator+=(Tensor& a, const Tensor& b);
Tensor operator*(float s, const Tensor& a);

// 2-D convolution layer. Weights (Cout, Cin, k, k), odd k, zero padding.
struct ConvLayer {
  Tensor w;
  Tensor b;  // empty when has_bias == false
  int stride = 1;
  int pad = 0;
  bool has_bias = true;

  int cout() const { return w.dim(0); }
  int cin() const { return w.dim(1); }
  int ksize() const { return w.dim(2); }

  static ConvLayer zero_init(int cout, int cin, int k, int stride, int pad, bool bias = true);
  static ConvLayer he_init(int cout, int cin, int k, int stride, int pad, Rng& rng,
                           bool bias = true);
  bool is_zero() const;
};

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer);

struct ConvGrads {
  Tensor input;
  Tensor w;
  Tensor b;
};

// grad_out must have the forward output's shape; cached_input is the tensor
// the forward pass consumed.
ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const ConvLayer& layer);

Tensor silu(const Tensor& x);
// grad through y = silu(x); pre_act is the cached x.
Tensor silu_backward(const Tensor& grad_out, const Tensor& pre_act);

// Fully connected layer, weights (out, in).
struct Linear {
  Tensor w;
  Tensor b;
  static Linear init(int out, int in, Rng& rng);
};

std::vector<float> linear_forward(const Linear& l, const std::vector<float>& x);

// Named views over a network's parameter tensors, in a fixed order.
struct ParamRefs {
  std::vector<std::pair<std::string, Tensor*>> items;
  void add(const std::string& name, Tensor* t) { items.emplace_back(name, t); }
  size_t size() const { return items.size(); }
};

struct AdamState {
  double lr = 2.5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  void init(const ParamRefs& params);
};

// Bias-corrected Adam. grads must align with params (same order and shapes).
// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(ParamRefs& params, const std::vector<Tensor>& grads, AdamState& state);

// Checksum over the raw bytes of all parameters, order-sensitive.
uint64_t params_checksum(const ParamRefs& params);

}  // namespace topodiff
