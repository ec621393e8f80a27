#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

/// Sliding-window cross-correlation (no kernel flip) with zero padding.
///
/// input is Cin x H x W, kernel Cout x Cin x K x K, bias (optional) Cout.
/// Output extent per axis is floor((H + 2*padding - K) / stride) + 1.
/// Accumulation runs in double precision.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const std::optional<Tensor>& bias,
              std::size_t stride, std::size_t padding);

Tensor relu(const Tensor& input);

/// Depth-to-space: out(c, r*h + dy, r*w + dx) = in(c*r*r + dy*r + dx, h, w).
Tensor pixelshuffle(const Tensor& input, std::size_t r);
/// Exact inverse of pixelshuffle.
Tensor pixel_unshuffle(const Tensor& input, std::size_t r);

Tensor add(const Tensor& a, const Tensor& b);
/// Sum of equally shaped tensors, accumulated left to right.
Tensor add_n(std::span<const Tensor> terms);
Tensor scale(const Tensor& a, double factor);

/// c * w + b, elementwise. The hypernetwork's kernel generator.
Tensor affine_combine(const Tensor& w, const Tensor& b, double c);

Tensor reshape(const Tensor& input, Shape shape);

/// Fully connected layer: weight is M x N, input has N elements, output M.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Mean absolute error; subgradient 0 where prediction == target.
Tensor l1_loss(const Tensor& prediction, const Tensor& target);

Tensor sum(const Tensor& input);

/// Clamp to [0, 1]. Not differentiable; meant for image outputs only.
Tensor clamp01(const Tensor& input);

/// Crop a C x H x W tensor to the window starting at (top, left).
Tensor crop(const Tensor& input, std::size_t top, std::size_t left, std::size_t height,
            std::size_t width);

}  // namespace hyperrestore
