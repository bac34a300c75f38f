#pragma once

#include <algorithm>
#include <string>

#include "uec/image.hpp"
#include "uec/ops.hpp"

namespace uec {

// mean((out - ref)^2) over C*H*W.
template <typename T>
Var loss_restoration(BasicTape<T>& tape, Var out, Var ref) {
  ops::detail::require_same_shape(tape, out, ref, "loss_restoration");
  const auto& o = tape.value(out);
  const auto& r = tape.value(ref);
  const double inv_n = 1.0 / static_cast<double>(o.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double d = static_cast<double>(o[i]) - r[i];
    acc += d * d;
  }
  return tape.record(
      BasicTensor<T>({1}, std::vector<T>{static_cast<T>(acc * inv_n)}), {out, ref},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        const auto& ov = t.value(out);
        const auto& rv = t.value(ref);
        const double scale = 2.0 * grad[0] * inv_n;
        std::span<T> go = t.requires_grad(out) ? t.grad_mut(out) : std::span<T>{};
        std::span<T> gr = t.requires_grad(ref) ? t.grad_mut(ref) : std::span<T>{};
        for (std::size_t i = 0; i < ov.size(); ++i) {
          const auto g = static_cast<T>(scale * (static_cast<double>(ov[i]) - rv[i]));
          if (!go.empty()) go[i] += g;
          if (!gr.empty()) gr[i] -= g;
        }
      });
}

// mean(relu(out_lo - out_hi)); out_hi belongs to the higher-EV reference.
template <typename T>
Var loss_monopoly(BasicTape<T>& tape, Var out_hi, Var out_lo) {
  ops::detail::require_same_shape(tape, out_hi, out_lo, "loss_monopoly");
  const auto& hi = tape.value(out_hi);
  const auto& lo = tape.value(out_lo);
  const double inv_n = 1.0 / static_cast<double>(hi.size());
  double acc = 0.0;
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < hi.size(); ++i) {
    const double d = static_cast<double>(lo[i]) - hi[i];
    if (d > 0.0) acc += d;
    if (tape.track_kinks()) code = code * 31 + (d > 0.0 ? i + 1 : 0);
  }
  if (tape.track_kinks()) tape.note_kink(code);
  return tape.record(
      BasicTensor<T>({1}, std::vector<T>{static_cast<T>(acc * inv_n)}), {out_hi, out_lo},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        const auto& h = t.value(out_hi);
        const auto& l = t.value(out_lo);
        const auto g = static_cast<T>(grad[0] * inv_n);
        std::span<T> gh = t.requires_grad(out_hi) ? t.grad_mut(out_hi) : std::span<T>{};
        std::span<T> gl = t.requires_grad(out_lo) ? t.grad_mut(out_lo) : std::span<T>{};
        for (std::size_t i = 0; i < h.size(); ++i) {
          if (l[i] > h[i]) {
            if (!gh.empty()) gh[i] -= g;
            if (!gl.empty()) gl[i] += g;
          }
        }
      });
}

// mean(dx^2 + dy^2) over C*H*W with forward differences; the difference past
// the last column/row is zero. Input [C,H,W] with H,W >= 2.
template <typename T>
Var loss_semantic(BasicTape<T>& tape, Var out) {
  const auto& v = tape.value(out);
  if (v.rank() != 3) {
    ops::detail::fail("out.rank", ops::detail::dims(3, v.rank()));
  }
  const std::size_t c_count = v.dim(0), h = v.dim(1), w = v.dim(2);
  if (h < 2 || w < 2) {
    throw Error(ErrorKind::kShape, "out", "semantic loss needs at least 2x2, got " +
                                              std::to_string(h) + "x" + std::to_string(w));
  }
  const double inv_n = 1.0 / static_cast<double>(v.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    const T* p = v.data.data() + c * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const T cur = p[y * w + x];
        if (x + 1 < w) {
          const double dx = static_cast<double>(p[y * w + x + 1]) - cur;
          acc += dx * dx;
        }
        if (y + 1 < h) {
          const double dy = static_cast<double>(p[(y + 1) * w + x]) - cur;
          acc += dy * dy;
        }
      }
    }
  }
  return tape.record(
      BasicTensor<T>({1}, std::vector<T>{static_cast<T>(acc * inv_n)}), {out},
      [=](BasicTape<T>& t, std::span<const T> grad) {
        const auto& vals = t.value(out);
        auto g = t.grad_mut(out);
        const double scale = 2.0 * grad[0] * inv_n;
        for (std::size_t c = 0; c < c_count; ++c) {
          const std::size_t base = c * h * w;
          const T* p = vals.data.data() + base;
          for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
              const std::size_t i = y * w + x;
              if (x + 1 < w) {
                const double d = scale * (static_cast<double>(p[i + 1]) - p[i]);
                g[base + i + 1] += static_cast<T>(d);
                g[base + i] -= static_cast<T>(d);
              }
              if (y + 1 < h) {
                const double d = scale * (static_cast<double>(p[i + w]) - p[i]);
                g[base + i + w] += static_cast<T>(d);
                g[base + i] -= static_cast<T>(d);
              }
            }
          }
        }
      });
}

// Image-level evaluations of the same losses.
double loss_restoration(const ImageF32& out, const ImageF32& ref);
double loss_monopoly(const ImageF32& out_hi, const ImageF32& out_lo);
double loss_semantic(const ImageF32& out);

struct LossWeights {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 0.1;
};

struct LossParts {
  double restoration = 0.0;
  double monopoly = 0.0;
  double semantic = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace uec
