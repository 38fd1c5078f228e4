#pragma once

// Differentiable operations. Matrices are row-major 2-D tensors; elementwise
// ops accept any shape but both operands must match exactly (no broadcasting
// except the explicit row-vector forms).

#include <span>
#include <vector>

#include "dualtune/numerics/tensor.hpp"

namespace dualtune::num {

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T : [m x k] * [n x k]^T -> [m x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// x * W^T + bias, with W stored [out x in] and optional bias [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = {});

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// Adds a length-n vector to every row of an [m x n] matrix.
Tensor add_row(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& x);
/// GELU, tanh approximation.
Tensor gelu(const Tensor& x);
/// |x|, with derivative 0 at x == 0.
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Softmax along the last axis, max-subtracted.
Tensor softmax(const Tensor& x);

/// Mean over non-ignored rows of -log softmax(logits)[target]. Returns a
/// zero scalar (with zero gradient) when every position is ignored.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_index);

/// Row-wise layer normalization with learnable gain and bias of length n.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// Gathers rows of `table` [V x H] -> [L x H].
Tensor embedding(const Tensor& table, std::span<const int> ids);

/// Concatenates 2-D tensors along axis 0 (rows) or 1 (columns).
Tensor concat(std::span<const Tensor> parts, std::size_t axis);

/// Rows [begin, end) of a 2-D tensor.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

/// Multi-head scaled dot-product attention on already-projected inputs.
/// q: [Tq x H], k, v: [Tk x H]. `causal` masks keys j > i. `key_mask`, when
/// non-empty, marks valid keys (length Tk). A query with no valid key
/// produces a zero row.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 bool causal, const std::vector<bool>& key_mask = {});

}  // namespace dualtune::num
