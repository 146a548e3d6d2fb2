#pragma once

// Differentiable tensor ops. Shapes are checked on every call and mismatches
// raise ShapeError naming both operands.

#include <cstddef>
#include <vector>

#include "avsc/tensor.hpp"

namespace avsc::num {

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Same-shape elementwise arithmetic.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

/// x [m x n] + row [1 x n], the row added to every row of x.
Tensor add_row(const Tensor& x, const Tensor& row);

Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);

Tensor relu(const Tensor& x);
/// tanh approximation of GELU.
Tensor gelu(const Tensor& x);
/// Two-branch stable logistic sigmoid.
Tensor sigmoid(const Tensor& x);
/// Natural log; DomainError for any x <= 0.
Tensor log(const Tensor& x);
/// Gradient passes through where lo <= x <= hi, zero outside.
Tensor clamp(const Tensor& x, double lo, double hi);

/// Row-wise softmax of a 2-D tensor with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);

/// Reductions to a one-element tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Column means of [m x n] -> [1 x n].
Tensor mean_rows(const Tensor& x);

/// Each row divided by its L2 norm (plus 1e-12 inside the root).
Tensor l2_normalize_rows(const Tensor& x);

Tensor transpose(const Tensor& x);
/// Concatenates 2-D tensors along axis 0 (stack rows) or 1 (append columns).
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Rows of x at `indices`; gradients scatter back into exactly those rows.
Tensor row_select(const Tensor& x, const std::vector<std::size_t>& indices);
/// Same data, new shape with equal element count.
Tensor reshape(const Tensor& x, Shape shape);

/// Splits an image stored as [(H*W) x C] (pixel-major) into non-overlapping
/// ph x pw patches -> [(H/ph * W/pw) x (ph*pw*C)], patch vector ordered
/// (row offset, column offset, channel). A patchify followed by a matmul is a
/// stride-ph convolution.
Tensor patchify(const Tensor& x, std::size_t height, std::size_t width, std::size_t patch_h,
                std::size_t patch_w);

/// Depthwise k x k convolution with zero "same" padding on an image stored as
/// [(H*W) x C]; kernel is [(k*k) x C], one filter per channel.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernel, std::size_t height,
                        std::size_t width, std::size_t k);

}  // namespace avsc::num
