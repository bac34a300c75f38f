#pragma once

// Differentiable ops over BasicTape. Shapes must match exactly; the only
// broadcast is the per-channel/per-row bias add.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uec/error.hpp"
#include "uec/tape.hpp"

namespace uec::ops {

inline constexpr double kStdEpsilon = 1e-8;

namespace detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::kShape, field, msg);
}

inline std::string dims(std::size_t expected, std::size_t got) {
  return "expected " + std::to_string(expected) + ", got " + std::to_string(got);
}

template <typename T>
void require_same_shape(const BasicTape<T>& tape, Var a, Var b,
                        const std::string& what) {
  if (tape.shape(a) != tape.shape(b)) {
    fail(what, "shape mismatch " + to_string(tape.shape(a)) + " vs " +
              to_string(tape.shape(b)));
  }
}

}  // namespace detail

struct Conv2dGeometry {
  std::size_t in_channels, out_channels, kernel, in_h, in_w, out_h, out_w;
  int stride, padding;
};

template <typename T>
Conv2dGeometry conv2d_geometry(const BasicTensor<T>& input,
                               const BasicTensor<T>& kernel,
                               const BasicTensor<T>& bias, int stride,
                               int padding) {
  using detail::dims;
  using detail::fail;
  if (input.rank() != 3) fail("input.rank", dims(3, input.rank()));
  if (kernel.rank() != 4) fail("kernel.rank", dims(4, kernel.rank()));
  if (kernel.dim(1) != input.dim(0)) {
    fail("kernel.dim1 (C_in)", dims(input.dim(0), kernel.dim(1)));
  }
  if (kernel.dim(2) != kernel.dim(3)) {
    fail("kernel.dim3",
         "kernel must be square, got " + to_string(kernel.shape));
  }
  const std::size_t k = kernel.dim(2);
  if (k != 1 && k != 3) {
    fail("kernel.dim2 (k)", "k must be 1 or 3, got " + std::to_string(k));
  }
  if (!(stride == 1 || stride == 2)) {
    fail("stride", "must be 1 or 2, got " + std::to_string(stride));
  }
  if (!(padding == 0 || padding == static_cast<int>(k / 2))) {
    fail("padding", "must be 0 or " + std::to_string(k / 2) + ", got " +
                        std::to_string(padding));
  }
  if (!(bias.rank() == 1 && bias.dim(0) == kernel.dim(0))) {
    fail("bias.dim0 (C_out)",
         "expected shape [" + std::to_string(kernel.dim(0)) + "], got " +
             to_string(bias.shape));
  }
  const long h = static_cast<long>(input.dim(1));
  const long w = static_cast<long>(input.dim(2));
  const long span_h = h + 2 * padding - static_cast<long>(k);
  const long span_w = w + 2 * padding - static_cast<long>(k);
  if (span_h < 0) fail("input.dim1 (H)", "too small for kernel");
  if (span_w < 0) fail("input.dim2 (W)", "too small for kernel");
  return Conv2dGeometry{input.dim(0),
                        kernel.dim(0),
                        k,
                        input.dim(1),
                        input.dim(2),
                        static_cast<std::size_t>(span_h / stride + 1),
                        static_cast<std::size_t>(span_w / stride + 1),
                        stride,
                        padding};
}

// Output columns [lo, hi) for which ox*stride - padding + kx lands inside
// [0, in_w).
inline void valid_range(long in_extent, long out_extent, long stride,
                        long offset, long& lo, long& hi) {
  // need 0 <= o*stride + offset < in_extent
  lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  const long last = in_extent - 1 - offset;
  hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
  if (hi < lo) hi = lo;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& kernel,
                              const BasicTensor<T>& bias,
                              const Conv2dGeometry& g) {
  const std::size_t p = static_cast<std::size_t>(g.padding);
  const std::size_t ph = g.in_h + 2 * p;
  const std::size_t pw = g.in_w + 2 * p;
  std::vector<T> padded;
  const T* src = input.data.data();
  if (p > 0) {
    padded.assign(g.in_channels * ph * pw, T{0});
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      for (std::size_t y = 0; y < g.in_h; ++y) {
        const T* row = src + (c * g.in_h + y) * g.in_w;
        std::copy(row, row + g.in_w,
                  padded.begin() + static_cast<long>((c * ph + y + p) * pw + p));
      }
    }
    src = padded.data();
  }
  // Kernel as [C_in][k][k][C_out] so the innermost loop runs over output
  // channels; each output still sums bias, then channel by channel.
  const std::size_t k = g.kernel;
  const std::size_t co = g.out_channels;
  const std::size_t taps = g.in_channels * k * k;
  std::vector<T> kt(taps * co);
  for (std::size_t o = 0; o < co; ++o) {
    for (std::size_t j = 0; j < taps; ++j) kt[j * co + o] = kernel[o * taps + j];
  }
  BasicTensor<T> out({co, g.out_h, g.out_w});
  const std::size_t s = static_cast<std::size_t>(g.stride);
  const std::size_t plane_out = g.out_h * g.out_w;
  std::vector<T> acc(co), part(co);
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      for (std::size_t o = 0; o < co; ++o) acc[o] = bias[o];
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const T* patch = src + c * ph * pw + oy * s * pw + ox * s;
        const T* kc = kt.data() + c * k * k * co;
        const T x0 = patch[0];
        for (std::size_t o = 0; o < co; ++o) part[o] = kc[o] * x0;
        for (std::size_t j = 1; j < k * k; ++j) {
          const T x = patch[(j / k) * pw + j % k];
          const T* kj = kc + j * co;
          for (std::size_t o = 0; o < co; ++o) part[o] += kj[o] * x;
        }
        for (std::size_t o = 0; o < co; ++o) acc[o] += part[o];
      }
      const std::size_t idx = oy * g.out_w + ox;
      for (std::size_t o = 0; o < co; ++o) out.data[o * plane_out + idx] = acc[o];
    }
  }
  return out;
}

// Cross-correlation with optional zero padding. input [C_in,H,W],
// kernel [C_out,C_in,k,k], bias [C_out] -> [C_out,H',W'].
template <typename T>
Var conv2d(BasicTape<T>& tape, Var input, Var kernel, Var bias, int stride,
           int padding) {
  const auto g = conv2d_geometry(tape.value(input), tape.value(kernel),
                                 tape.value(bias), stride, padding);
  auto out = conv2d_forward(tape.value(input), tape.value(kernel),
                            tape.value(bias), g);
  return tape.record(
      std::move(out), {input, kernel, bias},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        const auto& x = t.value(input).data;
        const auto& k = t.value(kernel).data;
        const bool want_x = t.requires_grad(input);
        const bool want_k = t.requires_grad(kernel);
        const long s = g.stride;
        const std::size_t plane = g.out_h * g.out_w;
        std::span<T> gx = want_x ? t.grad_mut(input) : std::span<T>{};
        std::span<T> gk = want_k ? t.grad_mut(kernel) : std::span<T>{};
        for (std::size_t o = 0; o < g.out_channels; ++o) {
          const T* go = grad.data() + o * plane;
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            const std::size_t in_off = c * g.in_h * g.in_w;
            for (std::size_t ky = 0; ky < g.kernel; ++ky) {
              const long off_y = static_cast<long>(ky) - g.padding;
              long y0, y1;
              valid_range(static_cast<long>(g.in_h), static_cast<long>(g.out_h),
                          s, off_y, y0, y1);
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const long off_x = static_cast<long>(kx) - g.padding;
                long x0, x1;
                valid_range(static_cast<long>(g.in_w),
                            static_cast<long>(g.out_w), s, off_x, x0, x1);
                const std::size_t ki =
                    ((o * g.in_channels + c) * g.kernel + ky) * g.kernel + kx;
                const T w = k[ki];
                double acc = 0.0;
                for (long oy = y0; oy < y1; ++oy) {
                  const std::size_t row =
                      in_off + (oy * s + off_y) * static_cast<long>(g.in_w);
                  const T* grow = go + oy * static_cast<long>(g.out_w);
                  for (long ox = x0; ox < x1; ++ox) {
                    const std::size_t xi = row + ox * s + off_x;
                    if (want_k) acc += static_cast<double>(grow[ox]) * x[xi];
                    if (want_x) gx[xi] += w * grow[ox];
                  }
                }
                if (want_k) gk[ki] += static_cast<T>(acc);
              }
            }
          }
        }
        if (t.requires_grad(bias)) {
          auto gb = t.grad_mut(bias);
          for (std::size_t o = 0; o < g.out_channels; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += grad[o * plane + i];
            gb[o] += static_cast<T>(acc);
          }
        }
      });
}

template <typename T>
Var relu(BasicTape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  BasicTensor<T> out(in.shape);
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const bool on = in[i] > T{0};
    out[i] = on ? in[i] : T{0};
    if (tape.track_kinks()) code = code * 31 + (on ? i + 1 : 0);
  }
  if (tape.track_kinks()) tape.note_kink(code);
  return tape.record(std::move(out), {x},
                     [=](BasicTape<T>& t, std::span<const T> grad) {
                       const auto& v = t.value(x);
                       auto gx = t.grad_mut(x);
                       for (std::size_t i = 0; i < grad.size(); ++i) {
                         if (v[i] > T{0}) gx[i] += grad[i];
                       }
                     });
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
Var sigmoid(BasicTape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  BasicTensor<T> out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid_scalar(in[i]);
  const Var y{tape.size()};
  return tape.record(std::move(out), {x},
                     [=](BasicTape<T>& t, std::span<const T> grad) {
                       const auto& v = t.value(y);
                       auto gx = t.grad_mut(x);
                       for (std::size_t i = 0; i < grad.size(); ++i) {
                         gx[i] += grad[i] * v[i] * (T{1} - v[i]);
                       }
                     });
}

// weight [M,N] · x [N] + bias [M].
template <typename T>
Var affine(BasicTape<T>& tape, Var x, Var weight, Var bias) {
  using detail::dims;
  using detail::fail;
  const auto& xv = tape.value(x);
  const auto& wv = tape.value(weight);
  const auto& bv = tape.value(bias);
  if (xv.rank() != 1) fail("x.rank", dims(1, xv.rank()));
  if (wv.rank() != 2) fail("weight.rank", dims(2, wv.rank()));
  if (wv.dim(1) != xv.dim(0)) {
    fail("weight.dim1 (N)", dims(xv.dim(0), wv.dim(1)));
  }
  if (!(bv.rank() == 1 && bv.dim(0) == wv.dim(0))) {
    fail("bias.dim0 (M)",
         "expected shape [" + std::to_string(wv.dim(0)) + "], got " +
              to_string(bv.shape));
  }
  const std::size_t m = wv.dim(0), n = wv.dim(1);
  BasicTensor<T> out({m});
  for (std::size_t r = 0; r < m; ++r) {
    double acc = bv[r];
    for (std::size_t c = 0; c < n; ++c) {
      acc += static_cast<double>(wv[r * n + c]) * xv[c];
    }
    out[r] = static_cast<T>(acc);
  }
  return tape.record(
      std::move(out), {x, weight, bias},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        const auto& xs = t.value(x);
        const auto& ws = t.value(weight);
        if (t.requires_grad(x)) {
          auto gx = t.grad_mut(x);
          for (std::size_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
              acc += static_cast<double>(ws[r * n + c]) * grad[r];
            }
            gx[c] += static_cast<T>(acc);
          }
        }
        if (t.requires_grad(weight)) {
          auto gw = t.grad_mut(weight);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < n; ++c) gw[r * n + c] += grad[r] * xs[c];
          }
        }
        if (t.requires_grad(bias)) {
          auto gb = t.grad_mut(bias);
          for (std::size_t r = 0; r < m; ++r) gb[r] += grad[r];
        }
      });
}

// [C,H,W] -> [3C] laid out as [max..., mean..., std...]. std is the
// population deviation sqrt(E[x^2] - E[x]^2 + eps).
template <typename T>
Var global_stat_pool(BasicTape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  if (in.rank() != 3) detail::fail("input.rank", detail::dims(3, in.rank()));
  const std::size_t c_count = in.dim(0);
  const std::size_t n = in.dim(1) * in.dim(2);
  if (n < 1) detail::fail("input.dim1*dim2", "need at least one pixel");
  BasicTensor<T> out({3 * c_count});
  std::vector<std::size_t> argmax(c_count);
  std::vector<double> means(c_count), stds(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    const T* p = in.data.data() + c * n;
    std::size_t best = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] > p[best]) best = i;
      sum += p[i];
      sum_sq += static_cast<double>(p[i]) * p[i];
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    argmax[c] = best;
    means[c] = mean;
    stds[c] = std::sqrt(var + kStdEpsilon);
    out[c] = p[best];
    out[c_count + c] = static_cast<T>(mean);
    out[2 * c_count + c] = static_cast<T>(stds[c]);
    if (tape.track_kinks()) tape.note_kink(best * 131 + c);
  }
  return tape.record(
      std::move(out), {x},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        const auto& v = t.value(x);
        auto gx = t.grad_mut(x);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < c_count; ++c) {
          const T* p = v.data.data() + c * n;
          T* g = gx.data() + c * n;
          g[argmax[c]] += grad[c];
          const double g_mean = grad[c_count + c] * inv_n;
          const double g_std = grad[2 * c_count + c] * inv_n / stds[c];
          for (std::size_t i = 0; i < n; ++i) {
            g[i] += static_cast<T>(g_mean + g_std * (p[i] - means[c]));
          }
        }
      });
}

template <typename T>
Var sub(BasicTape<T>& tape, Var a, Var b) {
  detail::require_same_shape(tape, a, b, "sub");
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  BasicTensor<T> out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return tape.record(std::move(out), {a, b},
                     [=](BasicTape<T>& t, std::span<const T> grad) {
                       if (t.requires_grad(a)) {
                         auto ga = t.grad_mut(a);
                         for (std::size_t i = 0; i < grad.size(); ++i) ga[i] += grad[i];
                       }
                       if (t.requires_grad(b)) {
                         auto gb = t.grad_mut(b);
                         for (std::size_t i = 0; i < grad.size(); ++i) gb[i] -= grad[i];
                       }
                     });
}

// scale * x + shift, elementwise.
template <typename T>
Var scale_shift(BasicTape<T>& tape, Var x, T scale, T shift) {
  const auto& in = tape.value(x);
  BasicTensor<T> out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = scale * in[i] + shift;
  return tape.record(std::move(out), {x},
                     [=](BasicTape<T>& t, std::span<const T> grad) {
                       auto gx = t.grad_mut(x);
                       for (std::size_t i = 0; i < grad.size(); ++i) gx[i] += scale * grad[i];
                     });
}

// lambdas[index] * x + (1 - lambdas[index]) * hx.
template <typename T>
Var blend(BasicTape<T>& tape, Var lambdas, std::size_t index, Var x, Var hx) {
  detail::require_same_shape(tape, x, hx, "blend");
  if (index >= tape.value(lambdas).size()) {
    detail::fail("lambdas.index",
                 "index " + std::to_string(index) + " out of range");
  }
  const T lam = tape.value(lambdas)[index];
  const auto& xv = tape.value(x);
  const auto& hv = tape.value(hx);
  BasicTensor<T> out(xv.shape);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = lam * xv[i] + (T{1} - lam) * hv[i];
  }
  return tape.record(
      std::move(out), {lambdas, x, hx},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        if (t.requires_grad(x)) {
          auto gx = t.grad_mut(x);
          for (std::size_t i = 0; i < grad.size(); ++i) gx[i] += lam * grad[i];
        }
        if (t.requires_grad(hx)) {
          auto gh = t.grad_mut(hx);
          for (std::size_t i = 0; i < grad.size(); ++i) gh[i] += (T{1} - lam) * grad[i];
        }
        if (t.requires_grad(lambdas)) {
          const auto& xs = t.value(x);
          const auto& hs = t.value(hx);
          double acc = 0.0;
          for (std::size_t i = 0; i < grad.size(); ++i) {
            acc += static_cast<double>(grad[i]) * (xs[i] - hs[i]);
          }
          t.grad_mut(lambdas)[index] += static_cast<T>(acc);
        }
      });
}

// Clamp to [0,1]; gradient passes only strictly inside the interval.
template <typename T>
Var clip01(BasicTape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  BasicTensor<T> out(in.shape);
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::clamp(in[i], T{0}, T{1});
    if (tape.track_kinks()) {
      const unsigned region = in[i] <= T{0} ? 1u : (in[i] >= T{1} ? 2u : 0u);
      code = code * 7 + region * (i + 1);
    }
  }
  if (tape.track_kinks()) tape.note_kink(code);
  return tape.record(std::move(out), {x},
                     [=](BasicTape<T>& t, std::span<const T> grad) {
                       const auto& v = t.value(x);
                       auto gx = t.grad_mut(x);
                       for (std::size_t i = 0; i < grad.size(); ++i) {
                         if (v[i] > T{0} && v[i] < T{1}) gx[i] += grad[i];
                       }
                     });
}

template <typename T>
Var sum(BasicTape<T>& tape, Var x) {
  double acc = 0.0;
  for (T v : tape.value(x).data) acc += v;
  return tape.record(BasicTensor<T>({1}, std::vector<T>{static_cast<T>(acc)}), {x},
                     [=](BasicTape<T>& t, std::span<const T> grad) {
                       auto gx = t.grad_mut(x);
                       for (auto& g : gx) g += grad[0];
                     });
}

// sum_i weights[i] * x[i] -> scalar. Used to project non-scalar outputs.
template <typename T>
Var dot_const(BasicTape<T>& tape, Var x, std::vector<T> weights) {
  const auto& xv = tape.value(x);
  if (weights.size() != xv.size()) {
    detail::fail("weights", detail::dims(xv.size(), weights.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    acc += static_cast<double>(weights[i]) * xv[i];
  }
  return tape.record(BasicTensor<T>({1}, std::vector<T>{static_cast<T>(acc)}), {x},
                     [=, w = std::move(weights)](BasicTape<T>& t,
                                                 std::span<const T> grad) {
                       auto gx = t.grad_mut(x);
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += w[i] * grad[0];
                     });
}

// sum_i weights[i] * scalars[i] for scalar vars.
template <typename T>
Var linear_combination(BasicTape<T>& tape, std::vector<Var> scalars,
                       std::vector<double> weights) {
  if (scalars.size() != weights.size()) {
    detail::fail("weights", detail::dims(scalars.size(), weights.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (tape.value(scalars[i]).size() != 1) {
      detail::fail("scalars", "every term must be a scalar");
    }
    acc += weights[i] * tape.value(scalars[i])[0];
  }
  std::span<const Var> inputs(scalars);
  return tape.record(BasicTensor<T>({1}, std::vector<T>{static_cast<T>(acc)}),
                     inputs,
                     [s = scalars, w = weights](BasicTape<T>& t,
                                                std::span<const T> grad) {
                       for (std::size_t i = 0; i < s.size(); ++i) {
                         if (t.requires_grad(s[i])) {
                           t.grad_mut(s[i])[0] += static_cast<T>(w[i] * grad[0]);
                         }
                       }
                     });
}

template <typename T>
Var mean(BasicTape<T>& tape, std::vector<Var> scalars) {
  if (scalars.empty()) detail::fail("scalars", "mean of zero terms");
  std::vector<double> w(scalars.size(), 1.0 / static_cast<double>(scalars.size()));
  return linear_combination(tape, std::move(scalars), std::move(w));
}

}  // namespace uec::ops
