#pragma once

#include <cstdint>
#include <vector>

#include "ladder/tensor.hpp"

namespace ladder {

// Dense numeric kernels for a Llama-style forward pass. All kernels are
// pure, allocate their outputs, and reduce in ascending index order so
// repeat runs are bit-identical.

// a [m x k] * b [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise RMS norm over the trailing dimension:
// row -> row / sqrt(mean(row^2) + eps) * gain.
Tensor rmsnorm(const Tensor& x, const Tensor& gain, float eps);

// Grouped-query causal attention.
// q: [batch*s, n_heads*head_dim], k/v: [batch*t, n_kv_heads*head_dim], t >= s.
// Query position i (absolute t-s+i within its batch element) attends to key
// positions <= its own. KV heads broadcast over query-head groups.
// If weights_out is non-null it receives the post-softmax weights
// [batch*n_heads*s, t] (rows for masked-out columns are zero).
Tensor causal_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        int n_heads, int n_kv_heads, float scale,
                        int64_t batch = 1, Tensor* weights_out = nullptr);

// Rotary position embedding over consecutive pairs within each head:
// pair j rotated by pos * base^(-2j/head_dim).
// x: [batch*s, n*head_dim] with s = positions.size().
Tensor rope_apply(const Tensor& x, const std::vector<int64_t>& positions,
                  int head_dim, float base, int64_t batch = 1);

Tensor silu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// table: [vocab x d], ids -> [ids.size() x d].
Tensor embed_lookup(const Tensor& table, const std::vector<int32_t>& ids);

// Argmax over the trailing dimension of the last row; ties -> lowest index.
int32_t argmax_last(const Tensor& x);
// Per-row argmax over the trailing dimension.
std::vector<int32_t> argmax_rows(const Tensor& x);

}  // namespace ladder
