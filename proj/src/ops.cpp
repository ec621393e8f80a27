#include "hyperrestore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace hyperrestore {

namespace {

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t && t->defined() && t->requires_grad(); });
}

/// Marks `out` as differentiable and records it if a tape is active and any
/// input needs a gradient. Returns false when nothing must be recorded.
bool should_record(Tensor& out, std::initializer_list<const Tensor*> inputs) {
  if (!any_requires_grad(inputs)) return false;
  out.node()->requires_grad = true;
  return GradientTape::active() != nullptr;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ContractViolation(std::string(what) + " must have rank " + std::to_string(rank) +
                            ", got " + shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                            " vs " + shape_to_string(b.shape()));
  }
}

struct ConvGeometry {
  std::size_t cin, h, w, cout, k, stride, pad, oh, ow;

  // Range of output columns whose tap kx lands inside the input row.
  std::pair<std::ptrdiff_t, std::ptrdiff_t> columns(std::size_t kx) const {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto p = static_cast<std::ptrdiff_t>(pad);
    const auto off = static_cast<std::ptrdiff_t>(kx) - p;  // ix = ox*s + off
    std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
    std::ptrdiff_t hi = (static_cast<std::ptrdiff_t>(w) - 1 - off);
    hi = hi < 0 ? -1 : hi / s;
    hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(ow) - 1);
    return {lo, hi};
  }

  std::ptrdiff_t input_row(std::size_t oy, std::size_t ky) const {
    return static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
  }
};

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const std::optional<Tensor>& bias,
              std::size_t stride, std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (input.dim(0) != kernel.dim(1)) {
    throw ContractViolation("conv2d: input " + shape_to_string(input.shape()) +
                            " has a different channel count than kernel " +
                            shape_to_string(kernel.shape()));
  }
  const std::size_t k = kernel.dim(2);
  if (kernel.dim(3) != k || k % 2 == 0) {
    throw ContractViolation("conv2d: kernel must be square with odd size, got " +
                            shape_to_string(kernel.shape()));
  }
  if (stride == 0) throw ContractViolation("conv2d: stride must be positive");
  if (input.dim(1) + 2 * padding < k || input.dim(2) + 2 * padding < k) {
    throw ContractViolation("conv2d: input " + shape_to_string(input.shape()) +
                            " smaller than kernel " + shape_to_string(kernel.shape()));
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != kernel.dim(0))) {
    throw ContractViolation("conv2d: bias " + shape_to_string(bias->shape()) +
                            " does not match kernel " + shape_to_string(kernel.shape()));
  }

  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), kernel.dim(0), k, stride, padding, 0, 0};
  g.oh = (g.h + 2 * padding - k) / stride + 1;
  g.ow = (g.w + 2 * padding - k) / stride + 1;

  Tensor out = Tensor::zeros({g.cout, g.oh, g.ow});
  auto in = input.data();
  auto ker = kernel.data();
  auto dst = out.mutable_data();
  std::vector<double> acc(g.oh * g.ow);

  for (std::size_t co = 0; co < g.cout; ++co) {
    std::fill(acc.begin(), acc.end(), bias ? static_cast<double>(bias->data()[co]) : 0.0);
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const float* plane = in.data() + ci * g.h * g.w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = ker[((co * g.cin + ci) * k + ky) * k + kx];
          const auto [lo, hi] = g.columns(kx);
          if (lo > hi) continue;
          const auto off = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(padding);
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            const auto iy = g.input_row(oy, ky);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
            const float* row = plane + iy * g.w;
            double* arow = acc.data() + oy * g.ow;
            if (stride == 1) {
              for (auto ox = lo; ox <= hi; ++ox) arow[ox] += wv * row[ox + off];
            } else {
              for (auto ox = lo; ox <= hi; ++ox) arow[ox] += wv * row[ox * static_cast<std::ptrdiff_t>(stride) + off];
            }
          }
        }
      }
    }
    std::transform(acc.begin(), acc.end(), dst.begin() + co * g.oh * g.ow,
                   [](double v) { return static_cast<float>(v); });
  }

  if (should_record(out, {&input, &kernel, bias ? &*bias : nullptr})) {
    auto in_node = input.node();
    auto k_node = kernel.node();
    auto b_node = bias ? bias->node() : nullptr;
    GradientTape::active()->record(out, [g, in_node, k_node, b_node](const detail::TensorNode& o) {
      const auto& gout = o.grad;
      const auto& in = in_node->value;
      const auto& ker = k_node->value;
      const auto s = static_cast<std::ptrdiff_t>(g.stride);
      if (b_node && b_node->requires_grad) {
        auto gb = b_node->ensure_grad();
        for (std::size_t co = 0; co < g.cout; ++co) {
          double total = 0.0;
          for (std::size_t i = 0; i < g.oh * g.ow; ++i) total += gout[co * g.oh * g.ow + i];
          gb[co] += static_cast<float>(total);
        }
      }
      if (k_node->requires_grad) {
        auto gk = k_node->ensure_grad();
        for (std::size_t co = 0; co < g.cout; ++co) {
          const float* go = gout.data() + co * g.oh * g.ow;
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            const float* plane = in.data() + ci * g.h * g.w;
            for (std::size_t ky = 0; ky < g.k; ++ky) {
              for (std::size_t kx = 0; kx < g.k; ++kx) {
                const auto [lo, hi] = g.columns(kx);
                const auto off = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
                double total = 0.0;
                if (lo <= hi) {
                  for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto iy = g.input_row(oy, ky);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    const float* row = plane + iy * g.w;
                    const float* grow = go + oy * g.ow;
                    for (auto ox = lo; ox <= hi; ++ox) {
                      total += static_cast<double>(grow[ox]) * row[ox * s + off];
                    }
                  }
                }
                gk[((co * g.cin + ci) * g.k + ky) * g.k + kx] += static_cast<float>(total);
              }
            }
          }
        }
      }
      if (in_node->requires_grad) {
        std::vector<double> acc(g.cin * g.h * g.w, 0.0);
        for (std::size_t co = 0; co < g.cout; ++co) {
          const float* go = gout.data() + co * g.oh * g.ow;
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            double* plane = acc.data() + ci * g.h * g.w;
            for (std::size_t ky = 0; ky < g.k; ++ky) {
              for (std::size_t kx = 0; kx < g.k; ++kx) {
                const double wv = ker[((co * g.cin + ci) * g.k + ky) * g.k + kx];
                const auto [lo, hi] = g.columns(kx);
                if (lo > hi) continue;
                const auto off = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                  const auto iy = g.input_row(oy, ky);
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                  double* row = plane + iy * g.w;
                  const float* grow = go + oy * g.ow;
                  for (auto ox = lo; ox <= hi; ++ox) row[ox * s + off] += wv * grow[ox];
                }
              }
            }
          }
        }
        auto gi = in_node->ensure_grad();
        for (std::size_t i = 0; i < acc.size(); ++i) gi[i] += static_cast<float>(acc[i]);
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& input) {
  std::vector<float> values(input.data().begin(), input.data().end());
  for (auto& v : values) v = v < 0.0f ? 0.0f : v;  // NaN passes through
  Tensor out = Tensor::from(input.shape(), std::move(values));
  if (should_record(out, {&input})) {
    auto in_node = input.node();
    GradientTape::active()->record(out, [in_node](const detail::TensorNode& o) {
      auto gi = in_node->ensure_grad();
      for (std::size_t i = 0; i < gi.size(); ++i) {
        if (in_node->value[i] > 0.0f) gi[i] += o.grad[i];
      }
    });
  }
  return out;
}

namespace {

// Index of the pixelshuffle output element fed by input element (ci, h, w).
struct ShuffleMap {
  std::size_t c_out, h_in, w_in, r;

  std::size_t output_index(std::size_t ci, std::size_t h, std::size_t w) const {
    const std::size_t c = ci / (r * r);
    const std::size_t dy = (ci % (r * r)) / r;
    const std::size_t dx = ci % r;
    return (c * h_in * r + (h * r + dy)) * (w_in * r) + (w * r + dx);
  }
};

}  // namespace

Tensor pixelshuffle(const Tensor& input, std::size_t r) {
  require_rank(input, 3, "pixelshuffle input");
  if (r == 0 || input.dim(0) % (r * r) != 0) {
    throw ContractViolation("pixelshuffle: channels of " + shape_to_string(input.shape()) +
                            " not divisible by r^2 = " + std::to_string(r * r));
  }
  const ShuffleMap map{input.dim(0) / (r * r), input.dim(1), input.dim(2), r};
  Tensor out = Tensor::zeros({map.c_out, map.h_in * r, map.w_in * r});
  auto src = input.data();
  auto dst = out.mutable_data();
  std::size_t i = 0;
  for (std::size_t ci = 0; ci < input.dim(0); ++ci)
    for (std::size_t h = 0; h < map.h_in; ++h)
      for (std::size_t w = 0; w < map.w_in; ++w) dst[map.output_index(ci, h, w)] = src[i++];

  if (should_record(out, {&input})) {
    auto in_node = input.node();
    const std::size_t cin = input.dim(0);
    GradientTape::active()->record(out, [in_node, map, cin](const detail::TensorNode& o) {
      auto gi = in_node->ensure_grad();
      std::size_t i = 0;
      for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t h = 0; h < map.h_in; ++h)
          for (std::size_t w = 0; w < map.w_in; ++w) gi[i++] += o.grad[map.output_index(ci, h, w)];
    });
  }
  return out;
}

Tensor pixel_unshuffle(const Tensor& input, std::size_t r) {
  require_rank(input, 3, "pixel_unshuffle input");
  if (r == 0 || input.dim(1) % r != 0 || input.dim(2) % r != 0) {
    throw ContractViolation("pixel_unshuffle: spatial size of " + shape_to_string(input.shape()) +
                            " not divisible by " + std::to_string(r));
  }
  const ShuffleMap map{input.dim(0), input.dim(1) / r, input.dim(2) / r, r};
  const std::size_t cin = input.dim(0) * r * r;
  Tensor out = Tensor::zeros({cin, map.h_in, map.w_in});
  auto src = input.data();
  auto dst = out.mutable_data();
  std::size_t i = 0;
  for (std::size_t ci = 0; ci < cin; ++ci)
    for (std::size_t h = 0; h < map.h_in; ++h)
      for (std::size_t w = 0; w < map.w_in; ++w) dst[i++] = src[map.output_index(ci, h, w)];

  if (should_record(out, {&input})) {
    auto in_node = input.node();
    GradientTape::active()->record(out, [in_node, map, cin](const detail::TensorNode& o) {
      auto gi = in_node->ensure_grad();
      std::size_t i = 0;
      for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t h = 0; h < map.h_in; ++h)
          for (std::size_t w = 0; w < map.w_in; ++w) gi[map.output_index(ci, h, w)] += o.grad[i++];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> values(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] + y[i];
  Tensor out = Tensor::from(a.shape(), std::move(values));
  if (should_record(out, {&a, &b})) {
    auto a_node = a.node();
    auto b_node = b.node();
    GradientTape::active()->record(out, [a_node, b_node](const detail::TensorNode& o) {
      for (auto* node : {a_node.get(), b_node.get()}) {
        if (!node->requires_grad) continue;
        auto g = node->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
    });
  }
  return out;
}

Tensor add_n(std::span<const Tensor> terms) {
  if (terms.empty()) throw ContractViolation("add_n: no terms");
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return total;
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<float> values(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(factor * x[i]);
  Tensor out = Tensor::from(a.shape(), std::move(values));
  if (should_record(out, {&a})) {
    auto a_node = a.node();
    GradientTape::active()->record(out, [a_node, factor](const detail::TensorNode& o) {
      auto g = a_node->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<float>(factor * o.grad[i]);
    });
  }
  return out;
}

Tensor affine_combine(const Tensor& w, const Tensor& b, double c) {
  require_same_shape(w, b, "affine_combine");
  if (!std::isfinite(c)) throw ContractViolation("affine_combine: conditioning scalar is not finite");
  std::vector<float> values(w.numel());
  auto wv = w.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<float>(c * wv[i] + bv[i]);
  }
  Tensor out = Tensor::from(w.shape(), std::move(values));
  if (should_record(out, {&w, &b})) {
    auto w_node = w.node();
    auto b_node = b.node();
    GradientTape::active()->record(out, [w_node, b_node, c](const detail::TensorNode& o) {
      if (w_node->requires_grad) {
        auto g = w_node->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<float>(c * o.grad[i]);
      }
      if (b_node->requires_grad) {
        auto g = b_node->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& input, Shape shape) {
  if (shape_numel(shape) != input.numel()) {
    throw ContractViolation("reshape: cannot view " + shape_to_string(input.shape()) + " as " +
                            shape_to_string(shape));
  }
  Tensor out = Tensor::from(std::move(shape), std::vector<float>(input.data().begin(), input.data().end()));
  if (should_record(out, {&input})) {
    auto in_node = input.node();
    GradientTape::active()->record(out, [in_node](const detail::TensorNode& o) {
      auto g = in_node->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear weight");
  const std::size_t m = weight.dim(0);
  const std::size_t n = weight.dim(1);
  if (input.numel() != n || bias.numel() != m) {
    throw ContractViolation("linear: input " + shape_to_string(input.shape()) + ", weight " +
                            shape_to_string(weight.shape()) + ", bias " +
                            shape_to_string(bias.shape()) + " are inconsistent");
  }
  std::vector<float> values(m);
  auto x = input.data();
  auto wv = weight.data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = bias.data()[i];
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(wv[i * n + j]) * x[j];
    values[i] = static_cast<float>(acc);
  }
  Tensor out = Tensor::from({m}, std::move(values));
  if (should_record(out, {&input, &weight, &bias})) {
    auto x_node = input.node();
    auto w_node = weight.node();
    auto b_node = bias.node();
    GradientTape::active()->record(out, [x_node, w_node, b_node, m, n](const detail::TensorNode& o) {
      if (b_node->requires_grad) {
        auto g = b_node->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) g[i] += o.grad[i];
      }
      if (w_node->requires_grad) {
        auto g = w_node->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[i] * x_node->value[j];
      }
      if (x_node->requires_grad) {
        auto g = x_node->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i) acc += static_cast<double>(o.grad[i]) * w_node->value[i * n + j];
          g[j] += static_cast<float>(acc);
        }
      }
    });
  }
  return out;
}

Tensor l1_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "l1_loss");
  auto p = prediction.data();
  auto t = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(static_cast<double>(p[i]) - t[i]);
  const double n = static_cast<double>(p.size());
  Tensor out = Tensor::from({1}, {static_cast<float>(total / n)});
  if (should_record(out, {&prediction, &target})) {
    auto p_node = prediction.node();
    auto t_node = target.node();
    GradientTape::active()->record(out, [p_node, t_node, n](const detail::TensorNode& o) {
      const double g = o.grad[0] / n;
      const auto& pv = p_node->value;
      const auto& tv = t_node->value;
      auto sign = [](float d) { return d > 0.0f ? 1.0 : (d < 0.0f ? -1.0 : 0.0); };
      if (p_node->requires_grad) {
        auto gp = p_node->ensure_grad();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += static_cast<float>(g * sign(pv[i] - tv[i]));
      }
      if (t_node->requires_grad) {
        auto gt = t_node->ensure_grad();
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= static_cast<float>(g * sign(pv[i] - tv[i]));
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& input) {
  double total = 0.0;
  for (float v : input.data()) total += v;
  Tensor out = Tensor::from({1}, {static_cast<float>(total)});
  if (should_record(out, {&input})) {
    auto in_node = input.node();
    GradientTape::active()->record(out, [in_node](const detail::TensorNode& o) {
      auto g = in_node->ensure_grad();
      for (auto& v : g) v += o.grad[0];
    });
  }
  return out;
}

Tensor clamp01(const Tensor& input) {
  std::vector<float> values(input.data().begin(), input.data().end());
  for (auto& v : values) v = std::clamp(v, 0.0f, 1.0f);
  return Tensor::from(input.shape(), std::move(values));
}

Tensor crop(const Tensor& input, std::size_t top, std::size_t left, std::size_t height,
            std::size_t width) {
  require_rank(input, 3, "crop input");
  if (top + height > input.dim(1) || left + width > input.dim(2)) {
    throw ContractViolation("crop window exceeds " + shape_to_string(input.shape()));
  }
  const std::size_t c = input.dim(0);
  const std::size_t w = input.dim(2);
  Tensor out = Tensor::zeros({c, height, width});
  auto src = input.data();
  auto dst = out.mutable_data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < height; ++y) {
      const float* row = src.data() + (ch * input.dim(1) + top + y) * w + left;
      std::copy(row, row + width, dst.begin() + (ch * height + y) * width);
    }
  return out;
}

}  // namespace hyperrestore
