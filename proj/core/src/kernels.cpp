#include "ladder/kernels.hpp"

#include <cmath>
#include <string>

#include "ladder/errors.hpp"

namespace ladder {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul shape mismatch: " + a.shape_str() + " x " + b.shape_str());
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const float* pa = a.data();
  const float* pb = b.data();
  float* pc = out.data();
  // i-k-j order: for each output element the k-sum accumulates in
  // ascending index order, and rows of b stream contiguously.
  for (int64_t i = 0; i < m; ++i) {
    const float* arow = pa + i * k;
    float* crow = pc + i * n;
    for (int64_t kk = 0; kk < k; ++kk) {
      const float av = arow[kk];
      const float* brow = pb + kk * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor rmsnorm(const Tensor& x, const Tensor& gain, float eps) {
  if (gain.ndim() != 1 || x.cols() != gain.dim(0)) {
    throw ShapeError("rmsnorm gain " + gain.shape_str() + " does not match trailing dim of " +
                     x.shape_str());
  }
  if (!(eps >= 0.0f)) throw ConfigError("rmsnorm eps must be non-negative");
  const int64_t rows = x.rows(), d = x.cols();
  Tensor out = Tensor::zeros(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const float* in = x.row(r);
    float* o = out.data() + r * d;
    double ms = 0.0;
    for (int64_t i = 0; i < d; ++i) ms += static_cast<double>(in[i]) * in[i];
    ms /= static_cast<double>(d);
    const float inv = static_cast<float>(1.0 / std::sqrt(ms + static_cast<double>(eps)));
    for (int64_t i = 0; i < d; ++i) o[i] = in[i] * inv * gain.data()[i];
  }
  return out;
}

Tensor causal_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        int n_heads, int n_kv_heads, float scale,
                        int64_t batch, Tensor* weights_out) {
  if (n_heads <= 0 || n_kv_heads <= 0 || n_heads % n_kv_heads != 0) {
    throw ConfigError("attention head geometry: n_heads=" + std::to_string(n_heads) +
                      " must be a positive multiple of n_kv_heads=" + std::to_string(n_kv_heads));
  }
  if (q.cols() % n_heads != 0) {
    throw ConfigError("attention: q width " + std::to_string(q.cols()) +
                      " not divisible by n_heads=" + std::to_string(n_heads));
  }
  const int64_t head_dim = q.cols() / n_heads;
  if (k.cols() != n_kv_heads * head_dim || !k.same_shape(v)) {
    throw ConfigError("attention: k/v shape " + k.shape_str() + "/" + v.shape_str() +
                      " incompatible with " + std::to_string(n_kv_heads) + " kv heads of dim " +
                      std::to_string(head_dim));
  }
  if (batch <= 0 || q.rows() % batch != 0 || k.rows() % batch != 0) {
    throw ShapeError("attention: rows not divisible by batch");
  }
  const int64_t s = q.rows() / batch;
  const int64_t t = k.rows() / batch;
  if (t < s) {
    throw ConfigError("attention: kv length " + std::to_string(t) + " shorter than query length " +
                      std::to_string(s));
  }
  const int64_t offset = t - s;  // absolute position of q row 0
  const int group = n_heads / n_kv_heads;

  Tensor out = Tensor::zeros(q.shape());
  if (weights_out) *weights_out = Tensor::zeros({batch * n_heads * s, t});

  std::vector<float> logits(static_cast<size_t>(t));
  for (int64_t b = 0; b < batch; ++b) {
    for (int h = 0; h < n_heads; ++h) {
      const int hk = h / group;
      for (int64_t i = 0; i < s; ++i) {
        const float* qv = q.row(b * s + i) + h * head_dim;
        const int64_t visible = offset + i + 1;  // causal: positions <= own
        float maxv = -INFINITY;
        for (int64_t j = 0; j < visible; ++j) {
          const float* kv = k.row(b * t + j) + hk * head_dim;
          float dot = 0.0f;
          for (int64_t e = 0; e < head_dim; ++e) dot += qv[e] * kv[e];
          logits[static_cast<size_t>(j)] = dot * scale;
          if (logits[static_cast<size_t>(j)] > maxv) maxv = logits[static_cast<size_t>(j)];
        }
        float denom = 0.0f;
        for (int64_t j = 0; j < visible; ++j) {
          logits[static_cast<size_t>(j)] = std::exp(logits[static_cast<size_t>(j)] - maxv);
          denom += logits[static_cast<size_t>(j)];
        }
        float* orow = out.row(b * s + i) + h * head_dim;
        for (int64_t j = 0; j < visible; ++j) {
          const float w = logits[static_cast<size_t>(j)] / denom;
          if (weights_out) weights_out->at((b * n_heads + h) * s + i, j) = w;
          const float* vv = v.row(b * t + j) + hk * head_dim;
          for (int64_t e = 0; e < head_dim; ++e) orow[e] += w * vv[e];
        }
      }
    }
  }
  return out;
}

Tensor rope_apply(const Tensor& x, const std::vector<int64_t>& positions,
                  int head_dim, float base, int64_t batch) {
  if (head_dim <= 0 || head_dim % 2 != 0) {
    throw ConfigError("rope: head_dim must be positive and even, got " + std::to_string(head_dim));
  }
  if (x.cols() % head_dim != 0) {
    throw ShapeError("rope: width " + std::to_string(x.cols()) + " not divisible by head_dim " +
                     std::to_string(head_dim));
  }
  const int64_t s = static_cast<int64_t>(positions.size());
  if (x.rows() != batch * s) {
    throw ShapeError("rope: " + std::to_string(x.rows()) + " rows, expected batch*positions = " +
                     std::to_string(batch * s));
  }
  const int64_t n_heads = x.cols() / head_dim;
  const int64_t half = head_dim / 2;
  Tensor out = x;
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t i = 0; i < s; ++i) {
      const double pos = static_cast<double>(positions[static_cast<size_t>(i)]);
      float* r = out.row(b * s + i);
      for (int64_t h = 0; h < n_heads; ++h) {
        float* head = r + h * head_dim;
        for (int64_t j = 0; j < half; ++j) {
          const double theta =
              pos * std::pow(static_cast<double>(base), -2.0 * static_cast<double>(j) /
                                                            static_cast<double>(head_dim));
          const float c = static_cast<float>(std::cos(theta));
          const float sn = static_cast<float>(std::sin(theta));
          const float x0 = head[2 * j];
          const float x1 = head[2 * j + 1];
          head[2 * j] = x0 * c - x1 * sn;
          head[2 * j + 1] = x0 * sn + x1 * c;
        }
      }
    }
  }
  return out;
}

Tensor silu(const Tensor& x) {
  Tensor out = x;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const float v = out.data()[i];
    // numerically stable logistic on both tails
    if (v >= 0.0f) {
      out.data()[i] = v / (1.0f + std::exp(-v));
    } else {
      const float e = std::exp(v);
      out.data()[i] = v * e / (1.0f + e);
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = a;
  for (int64_t i = 0; i < out.numel(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("mul shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = a;
  for (int64_t i = 0; i < out.numel(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

Tensor embed_lookup(const Tensor& table, const std::vector<int32_t>& ids) {
  if (table.ndim() != 2) throw ShapeError("embed_lookup: table must be 2-D");
  const int64_t vocab = table.dim(0), d = table.dim(1);
  Tensor out = Tensor::zeros({static_cast<int64_t>(ids.size()), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    const int32_t id = ids[i];
    if (id < 0 || id >= vocab) {
      throw ConfigError("token id " + std::to_string(id) + " out of range [0, " +
                        std::to_string(vocab) + ")");
    }
    const float* src = table.row(id);
    float* dst = out.row(static_cast<int64_t>(i));
    for (int64_t e = 0; e < d; ++e) dst[e] = src[e];
  }
  return out;
}

int32_t argmax_last(const Tensor& x) {
  if (x.rows() == 0) throw ShapeError("argmax_last on empty tensor");
  const float* r = x.row(x.rows() - 1);
  int64_t best = 0;
  for (int64_t j = 1; j < x.cols(); ++j) {
    if (r[j] > r[best]) best = j;  // ties keep the lowest index
  }
  return static_cast<int32_t>(best);
}

std::vector<int32_t> argmax_rows(const Tensor& x) {
  std::vector<int32_t> out(static_cast<size_t>(x.rows()));
  for (int64_t i = 0; i < x.rows(); ++i) {
    const float* r = x.row(i);
    int64_t best = 0;
    for (int64_t j = 1; j < x.cols(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[static_cast<size_t>(i)] = static_cast<int32_t>(best);
  }
  return out;
}

}  // namespace ladder
