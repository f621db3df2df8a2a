#include "topodiff/tensor.hpp"

#include <cmath>
#include <cstring>

namespace topodiff {

std::string hex_u64(uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[size_t(i)] = digits[x & 0xf];
    x >>= 4;
  }
  return s;
}

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(size_t(t.numel()), 0.0f);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t = zeros(std::move(shape));
  for (auto& x : t.data) x = value;
  return t;
}

int64_t Tensor::numel() const {
  int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

bool Tensor::all_finite() const {
  for (float x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::fill_normal(Rng& rng, float scale) {
  for (auto& x : data) x = scale * rng.normalf();
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
  return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= b.data[i];
  return r;
}

Tensor& operator+=(Tensor& a, const Tensor& b) {
  for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

Tensor operator*(float s, const Tensor& a) {
  Tensor r = a;
  for (auto& x : r.data) x *= s;
  return r;
}

ConvLayer ConvLayer::zero_init(int cout, int cin, int k, int stride, int pad, bool bias) {
  if (k % 2 == 0) throw ConfigError("conv kernel size must be odd, got " + std::to_string(k));
  ConvLayer l;
  l.w = Tensor::zeros({cout, cin, k, k});
  l.has_bias = bias;
  if (bias) l.b = Tensor::zeros({cout});
  l.stride = stride;
  l.pad = pad;
  return l;
}

ConvLayer ConvLayer::he_init(int cout, int cin, int k, int stride, int pad, Rng& rng, bool bias) {
  ConvLayer l = zero_init(cout, cin, k, stride, pad, bias);
  float scale = std::sqrt(2.0f / float(cin * k * k));
  l.w.fill_normal(rng, scale);
  return l;
}

bool ConvLayer::is_zero() const {
  for (float x : w.data)
    if (x != 0.0f) return false;
  for (float x : b.data)
    if (x != 0.0f) return false;
  return true;
}

static void check_conv_input(const Tensor& input, const ConvLayer& layer) {
  if (input.ndim() != 4)
    throw DataError("conv2d expects a 4-d (N,C,H,W) tensor");
  if (input.dim(1) != layer.cin())
    throw DataError("conv2d channel mismatch: input has " + std::to_string(input.dim(1)) +
                    ", layer expects " + std::to_string(layer.cin()));
  if (input.dim(2) < layer.ksize() || input.dim(3) < layer.ksize())
    throw DataError("conv2d input smaller than kernel");
}

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer) {
  check_conv_input(input, layer);
  const int N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int Cout = layer.cout(), k = layer.ksize(), s = layer.stride, p = layer.pad;
  const int Ho = (H + 2 * p - k) / s + 1;
  const int Wo = (W + 2 * p - k) / s + 1;
  Tensor out = Tensor::zeros({N, Cout, Ho, Wo});

  const size_t in_hw = size_t(H) * W, out_hw = size_t(Ho) * Wo;
  for (int n = 0; n < N; ++n) {
    const float* in_n = input.ptr() + size_t(n) * Cin * in_hw;
    float* out_n = out.ptr() + size_t(n) * Cout * out_hw;
    for (int co = 0; co < Cout; ++co) {
      float* o = out_n + size_t(co) * out_hw;
      if (layer.has_bias) {
        const float bv = layer.b.data[size_t(co)];
        for (size_t i = 0; i < out_hw; ++i) o[i] = bv;
      }
      for (int ci = 0; ci < Cin; ++ci) {
        const float* x = in_n + size_t(ci) * in_hw;
        const float* wk = layer.w.ptr() + (size_t(co) * Cin + ci) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float wv = wk[ky * k + kx];
            if (wv == 0.0f) continue;
            // out[y,x] += wv * in[y*s+ky-p, x*s+kx-p]
            for (int y = 0; y < Ho; ++y) {
              const int iy = y * s + ky - p;
              if (iy < 0 || iy >= H) continue;
              const float* xr = x + size_t(iy) * W;
              float* orow = o + size_t(y) * Wo;
              // valid xo range: 0 <= xo*s + kx - p < W
              int x0 = 0;
              while (x0 * s + kx - p < 0) ++x0;
              int x1 = Wo;
              while (x1 > x0 && (x1 - 1) * s + kx - p >= W) --x1;
              const int off = kx - p;
              if (s == 1) {
                for (int xo = x0; xo < x1; ++xo) orow[xo] += wv * xr[xo + off];
              } else {
                for (int xo = x0; xo < x1; ++xo) orow[xo] += wv * xr[xo * s + off];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const ConvLayer& layer) {
  check_conv_input(cached_input, layer);
  const int N = cached_input.dim(0), Cin = cached_input.dim(1);
  const int H = cached_input.dim(2), W = cached_input.dim(3);
  const int Cout = layer.cout(), k = layer.ksize(), s = layer.stride, p = layer.pad;
  const int Ho = (H + 2 * p - k) / s + 1;
  const int Wo = (W + 2 * p - k) / s + 1;
  if (grad_out.ndim() != 4 || grad_out.dim(0) != N || grad_out.dim(1) != Cout ||
      grad_out.dim(2) != Ho || grad_out.dim(3) != Wo)
    throw UsageError("conv2d_backward: grad_out shape does not match the forward output");

  ConvGrads g;
  g.input = Tensor::zeros(cached_input.shape);
  g.w = Tensor::zeros(layer.w.shape);
  if (layer.has_bias) g.b = Tensor::zeros({Cout});

  const size_t in_hw = size_t(H) * W, out_hw = size_t(Ho) * Wo;
  for (int n = 0; n < N; ++n) {
    const float* in_n = cached_input.ptr() + size_t(n) * Cin * in_hw;
    const float* go_n = grad_out.ptr() + size_t(n) * Cout * out_hw;
    float* gi_n = g.input.ptr() + size_t(n) * Cin * in_hw;
    for (int co = 0; co < Cout; ++co) {
      const float* go = go_n + size_t(co) * out_hw;
      if (layer.has_bias) {
        double acc = 0.0;
        for (size_t i = 0; i < out_hw; ++i) acc += go[i];
        g.b.data[size_t(co)] += float(acc);
      }
      for (int ci = 0; ci < Cin; ++ci) {
        const float* x = in_n + size_t(ci) * in_hw;
        float* gx = gi_n + size_t(ci) * in_hw;
        const float* wk = layer.w.ptr() + (size_t(co) * Cin + ci) * k * k;
        float* gwk = g.w.ptr() + (size_t(co) * Cin + ci) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float wv = wk[ky * k + kx];
            double wacc = 0.0;
            for (int y = 0; y < Ho; ++y) {
              const int iy = y * s + ky - p;
              if (iy < 0 || iy >= H) continue;
              const float* xr = x + size_t(iy) * W;
              float* gxr = gx + size_t(iy) * W;
              const float* gor = go + size_t(y) * Wo;
              int x0 = 0;
              while (x0 * s + kx - p < 0) ++x0;
              int x1 = Wo;
              while (x1 > x0 && (x1 - 1) * s + kx - p >= W) --x1;
              const int off = kx - p;
              if (s == 1) {
                for (int xo = x0; xo < x1; ++xo) {
                  wacc += double(gor[xo]) * xr[xo + off];
                  gxr[xo + off] += wv * gor[xo];
                }
              } else {
                for (int xo = x0; xo < x1; ++xo) {
                  wacc += double(gor[xo]) * xr[xo * s + off];
                  gxr[xo * s + off] += wv * gor[xo];
                }
              }
            }
            gwk[ky * k + kx] += float(wacc);
          }
        }
      }
    }
  }
  return g;
}

Tensor silu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) {
    float sg = 1.0f / (1.0f + std::exp(-v));
    v = v * sg;
  }
  return y;
}

Tensor silu_backward(const Tensor& grad_out, const Tensor& pre_act) {
  Tensor g = grad_out;
  for (size_t i = 0; i < g.data.size(); ++i) {
    const float x = pre_act.data[i];
    const float sg = 1.0f / (1.0f + std::exp(-x));
    g.data[i] *= sg * (1.0f + x * (1.0f - sg));
  }
  return g;
}

Linear Linear::init(int out, int in, Rng& rng) {
  Linear l;
  l.w = Tensor::zeros({out, in});
  l.b = Tensor::zeros({out});
  float scale = std::sqrt(1.0f / float(in));
  l.w.fill_normal(rng, scale);
  return l;
}

std::vector<float> linear_forward(const Linear& l, const std::vector<float>& x) {
  const int out = l.w.dim(0), in = l.w.dim(1);
  if (int(x.size()) != in) throw DataError("linear_forward: input length mismatch");
  std::vector<float> y(size_t(out));
  for (int o = 0; o < out; ++o) {
    double acc = l.b.data[size_t(o)];
    const float* wr = l.w.ptr() + size_t(o) * in;
    for (int i = 0; i < in; ++i) acc += double(wr[i]) * x[size_t(i)];
    y[size_t(o)] = float(acc);
  }
  return y;
}

void AdamState::init(const ParamRefs& params) {
  m.clear();
  v.clear();
  for (const auto& [name, t] : params.items) {
    (void)name;
    m.push_back(Tensor::zeros(t->shape));
    v.push_back(Tensor::zeros(t->shape));
  }
  step = 0;
}

void adam_step(ParamRefs& params, const std::vector<Tensor>& grads, AdamState& st) {
  if (grads.size() != params.size())
    throw UsageError("adam_step: gradient list does not match parameter list");
  if (st.m.size() != params.size()) st.init(params);
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params.items[pi].second;
    const Tensor& g = grads[pi];
    if (!g.same_shape(p))
      throw UsageError("adam_step: shape mismatch for " + params.items[pi].first);
    if (!g.all_finite())
      throw NumericError("non-finite gradient for parameter " + params.items[pi].first);
    Tensor& m = st.m[pi];
    Tensor& v = st.v[pi];
    for (size_t i = 0; i < p.data.size(); ++i) {
      const double gi = g.data[i];
      const double mi = st.beta1 * m.data[i] + (1.0 - st.beta1) * gi;
      const double vi = st.beta2 * v.data[i] + (1.0 - st.beta2) * gi * gi;
      m.data[i] = float(mi);
      v.data[i] = float(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p.data[i] = float(double(p.data[i]) - st.lr * mhat / (std::sqrt(vhat) + st.eps));
    }
  }
}

uint64_t params_checksum(const ParamRefs& params) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& [name, t] : params.items) {
    h = fnv1a(name, h);
    h = fnv1a(t->data.data(), t->data.size() * sizeof(float), h);
  }
  return h;
}

}  // namespace topodiff
