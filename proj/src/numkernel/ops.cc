#include "decsde/numkernel/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace decsde::numkernel {
namespace {

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void require_rank2(const Shape& s, const char* op) {
  if (s.size() != 2) throw DimensionError(std::string(op) + " needs a rank-2 tensor, got " + shape_string(s));
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b, bool trans_b) {
  Tensor<T> out = matmul(tape.value(a), tape.value(b), false, trans_b);
  return tape.record("matmul", std::move(out), {a, b}, [a, b, trans_b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) {
      // dA = G * B^T  (or G * B when b was transposed)
      matmul_accumulate(g, t.value(b), t.grad(a), false, !trans_b);
    }
    if (t.requires_grad(b)) {
      if (trans_b) {
        matmul_accumulate(g, t.value(a), t.grad(b), true, false);  // dB = G^T A
      } else {
        matmul_accumulate(t.value(a), g, t.grad(b), true, false);  // dB = A^T G
      }
    }
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const auto& va = tape.value(a);
  const auto& vb = tape.value(b);
  require_same_shape(va.shape(), vb.shape(), "add");
  Tensor<T> out = va;
  add_into(out, vb);
  return tape.record("add", std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) add_into(t.grad(a), g);
    if (t.requires_grad(b)) add_into(t.grad(b), g);
  });
}

template <typename T>
Var add_bias(Tape<T>& tape, Var x, Var bias) {
  const auto& vx = tape.value(x);
  const auto& vb = tape.value(bias);
  require_rank2(vx.shape(), "add_bias");
  const int64_t m = vx.rows(), n = vx.cols();
  if (static_cast<int64_t>(vb.size()) != n) {
    throw DimensionError("add_bias: bias " + shape_string(vb.shape()) + " vs input " + shape_string(vx.shape()));
  }
  Tensor<T> out = vx;
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out(i, j) += vb[static_cast<size_t>(j)];
  return tape.record("add_bias", std::move(out), {x, bias}, [x, bias, m, n](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(x)) add_into(t.grad(x), g);
    if (t.requires_grad(bias)) {
      auto& gb = t.grad(bias);
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) gb[static_cast<size_t>(j)] += g(i, j);
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.values()) v *= factor;
  return tape.record("scale", std::move(out), {x}, [x, factor](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    auto& gx = t.grad(x);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
  });
}

template <typename T>
Var tanh(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.values()) v = std::tanh(v);
  return tape.record("tanh", std::move(out), {x}, [x](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto& gx = t.grad(x);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);
  return tape.record("relu", std::move(out), {x}, [x](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto& gx = t.grad(x);
    for (size_t i = 0; i < g.size(); ++i)
      if (y[i] > T(0)) gx[i] += g[i];
  });
}

template <typename T>
Var dropout(Tape<T>& tape, Var x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ContractError("dropout probability must be < 1");
  const auto& vx = tape.value(x);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(vx.size());
  for (auto& m : mask) m = rng.bernoulli(p) ? T(0) : keep_scale;
  Tensor<T> out = vx;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return tape.record("dropout", std::move(out), {x}, [x, mask = std::move(mask)](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    auto& gx = t.grad(x);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

template <typename T>
Var softmax_rows(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  require_rank2(out.shape(), "softmax_rows");
  softmax_rows_inplace(out);
  return tape.record("softmax_rows", std::move(out), {x}, [x](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto& gx = t.grad(x);
    const int64_t r = y.rows(), c = y.cols();
    for (int64_t i = 0; i < r; ++i) {
      T dot = 0;
      for (int64_t j = 0; j < c; ++j) dot += g(i, j) * y(i, j);
      for (int64_t j = 0; j < c; ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

template <typename T>
Var softmax_cols(Tape<T>& tape, Var x) {
  const auto& vx = tape.value(x);
  require_rank2(vx.shape(), "softmax_cols");
  Tensor<T> out = transpose(vx);
  softmax_rows_inplace(out);
  out = transpose(out);
  return tape.record("softmax_cols", std::move(out), {x}, [x](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto& gx = t.grad(x);
    const int64_t r = y.rows(), c = y.cols();
    for (int64_t j = 0; j < c; ++j) {
      T dot = 0;
      for (int64_t i = 0; i < r; ++i) dot += g(i, j) * y(i, j);
      for (int64_t i = 0; i < r; ++i) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

template <typename T>
Var layer_norm(Tape<T>& tape, Var x, Var gamma, Var beta, T eps) {
  const auto& vx = tape.value(x);
  require_rank2(vx.shape(), "layer_norm");
  const int64_t m = vx.rows(), n = vx.cols();
  const auto& vg = tape.value(gamma);
  const auto& vb = tape.value(beta);
  if (static_cast<int64_t>(vg.size()) != n || static_cast<int64_t>(vb.size()) != n) {
    throw DimensionError("layer_norm: gain/bias size does not match " + shape_string(vx.shape()));
  }
  Tensor<T> xhat({m, n});
  std::vector<T> inv_std(static_cast<size_t>(m));
  Tensor<T> out({m, n});
  for (int64_t i = 0; i < m; ++i) {
    T mean = 0;
    for (int64_t j = 0; j < n; ++j) mean += vx(i, j);
    mean /= static_cast<T>(n);
    T var = 0;
    for (int64_t j = 0; j < n; ++j) {
      const T c = vx(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<T>(n);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(i)] = is;
    for (int64_t j = 0; j < n; ++j) {
      xhat(i, j) = (vx(i, j) - mean) * is;
      out(i, j) = xhat(i, j) * vg[static_cast<size_t>(j)] + vb[static_cast<size_t>(j)];
    }
  }
  return tape.record(
      "layer_norm", std::move(out), {x, gamma, beta},
      [x, gamma, beta, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        const auto& vg = t.value(gamma);
        if (t.requires_grad(gamma)) {
          auto& gg = t.grad(gamma);
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) gg[static_cast<size_t>(j)] += g(i, j) * xhat(i, j);
        }
        if (t.requires_grad(beta)) {
          auto& gb = t.grad(beta);
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) gb[static_cast<size_t>(j)] += g(i, j);
        }
        if (t.requires_grad(x)) {
          auto& gx = t.grad(x);
          std::vector<T> dxhat(static_cast<size_t>(n));
          for (int64_t i = 0; i < m; ++i) {
            T mean_d = 0, mean_dx = 0;
            for (int64_t j = 0; j < n; ++j) {
              dxhat[static_cast<size_t>(j)] = g(i, j) * vg[static_cast<size_t>(j)];
              mean_d += dxhat[static_cast<size_t>(j)];
              mean_dx += dxhat[static_cast<size_t>(j)] * xhat(i, j);
            }
            mean_d /= static_cast<T>(n);
            mean_dx /= static_cast<T>(n);
            const T is = inv_std[static_cast<size_t>(i)];
            for (int64_t j = 0; j < n; ++j) {
              gx(i, j) += is * (dxhat[static_cast<size_t>(j)] - mean_d - xhat(i, j) * mean_dx);
            }
          }
        }
      });
}

template <typename T>
Var gather_rows(Tape<T>& tape, Var table, std::span<const int64_t> ids) {
  const auto& vt = tape.value(table);
  require_rank2(vt.shape(), "gather_rows");
  const int64_t rows = vt.rows(), d = vt.cols();
  Tensor<T> out({static_cast<int64_t>(ids.size()), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows) {
      throw IndexError("gather_rows: id " + std::to_string(ids[i]) + " outside [0," + std::to_string(rows) + ")");
    }
    std::copy_n(vt.data() + ids[i] * d, d, out.data() + static_cast<int64_t>(i) * d);
  }
  return tape.record("gather_rows", std::move(out), {table},
                     [table, d, idv = std::vector<int64_t>(ids.begin(), ids.end())](Tape<T>& t, Var self) {
                       const Tensor<T>& g = t.grad(self);
                       auto& gt = t.grad(table);
                       for (size_t i = 0; i < idv.size(); ++i) {
                         T* dst = gt.data() + idv[i] * d;
                         const T* src = g.data() + static_cast<int64_t>(i) * d;
                         for (int64_t k = 0; k < d; ++k) dst[k] += src[k];
                       }
                     });
}

template <typename T>
Var concat_rows(Tape<T>& tape, Var a, Var b) {
  const auto& va = tape.value(a);
  const auto& vb = tape.value(b);
  require_rank2(va.shape(), "concat_rows");
  require_rank2(vb.shape(), "concat_rows");
  if (va.cols() != vb.cols()) {
    throw DimensionError("concat_rows: " + shape_string(va.shape()) + " vs " + shape_string(vb.shape()));
  }
  Tensor<T> out({va.rows() + vb.rows(), va.cols()});
  std::copy(va.storage().begin(), va.storage().end(), out.data());
  std::copy(vb.storage().begin(), vb.storage().end(), out.data() + va.size());
  const size_t split = va.size();
  return tape.record("concat_rows", std::move(out), {a, b}, [a, b, split](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) {
      auto& ga = t.grad(a);
      for (size_t i = 0; i < split; ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      auto& gb = t.grad(b);
      for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
    }
  });
}

template <typename T>
Var bag_sum(Tape<T>& tape, const SparseMatrix& bon, Var table) {
  Tensor<T> out = bag_sum(bon, tape.value(table));
  return tape.record("bag_sum", std::move(out), {table}, [&bon, table](Tape<T>& t, Var self) {
    bag_sum_backward(bon, t.grad(self), t.grad(table));
  });
}

template <typename T>
Var bag_sum(Tape<T>& tape, std::shared_ptr<const SparseMatrix> bon, Var table) {
  Tensor<T> out = bag_sum(*bon, tape.value(table));
  return tape.record("bag_sum", std::move(out), {table}, [bon = std::move(bon), table](Tape<T>& t, Var self) {
    bag_sum_backward(*bon, t.grad(self), t.grad(table));
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  T s = 0;
  for (T v : tape.value(x).values()) s += v;
  return tape.record("sum", Tensor<T>::scalar(s), {x}, [x](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0];
    for (auto& v : t.grad(x).values()) v += g;
  });
}

template <typename T>
Var attention(Tape<T>& tape, Var q, Var k, Var v, const AttentionSpec& spec, Tensor<T>* probs_out) {
  const auto& vq = tape.value(q);
  const auto& vk = tape.value(k);
  const auto& vv = tape.value(v);
  const int64_t B = spec.batch, Lq = spec.q_len, Lk = spec.k_len, H = spec.heads;
  const int64_t d = vq.cols();
  if (vq.shape() != Shape{B * Lq, d} || vk.shape() != Shape{B * Lk, d} || vv.shape() != Shape{B * Lk, d}) {
    throw DimensionError("attention: q " + shape_string(vq.shape()) + ", k " + shape_string(vk.shape()) + ", v " +
                         shape_string(vv.shape()) + " inconsistent with batch " + std::to_string(B));
  }
  if (H <= 0 || d % H != 0) throw DimensionError("attention: model dim not divisible by heads");
  if (!spec.key_valid.empty() && static_cast<int64_t>(spec.key_valid.size()) != B * Lk) {
    throw DimensionError("attention: key mask size mismatch");
  }
  const int64_t dh = d / H;
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(dh));
  Tensor<T> probs({B * H * Lq, Lk});
  Tensor<T> out({B * Lq, d});
  std::vector<T> scores(static_cast<size_t>(Lk));
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t h = 0; h < H; ++h) {
      for (int64_t i = 0; i < Lq; ++i) {
        const T* qi = vq.data() + (b * Lq + i) * d + h * dh;
        T* p = probs.data() + ((b * H + h) * Lq + i) * Lk;
        T mx = -std::numeric_limits<T>::infinity();
        for (int64_t j = 0; j < Lk; ++j) {
          const bool ok = (spec.key_valid.empty() || spec.key_valid[static_cast<size_t>(b * Lk + j)]) &&
                          (!spec.causal || j <= i);
          if (!ok) {
            scores[static_cast<size_t>(j)] = -std::numeric_limits<T>::infinity();
            continue;
          }
          const T* kj = vk.data() + (b * Lk + j) * d + h * dh;
          T s = 0;
          for (int64_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          s *= scale_factor;
          scores[static_cast<size_t>(j)] = s;
          mx = std::max(mx, s);
        }
        if (mx == -std::numeric_limits<T>::infinity()) continue;  // nothing to attend: zero output
        T total = 0;
        for (int64_t j = 0; j < Lk; ++j) {
          const T s = scores[static_cast<size_t>(j)];
          p[j] = s == -std::numeric_limits<T>::infinity() ? T(0) : std::exp(s - mx);
          total += p[j];
        }
        const T inv = T(1) / total;
        T* oi = out.data() + (b * Lq + i) * d + h * dh;
        for (int64_t j = 0; j < Lk; ++j) {
          p[j] *= inv;
          if (p[j] == T(0)) continue;
          const T* vj = vv.data() + (b * Lk + j) * d + h * dh;
          for (int64_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
        }
      }
    }
  }
  if (probs_out != nullptr) *probs_out = probs;
  return tape.record(
      "attention", std::move(out), {q, k, v},
      [q, k, v, B, Lq, Lk, H, d, dh, scale_factor, probs = std::move(probs)](Tape<T>& t, Var self) {
        const Tensor<T>& g = t.grad(self);
        const auto& vq = t.value(q);
        const auto& vk = t.value(k);
        const auto& vv = t.value(v);
        Tensor<T>* gq = t.requires_grad(q) ? &t.grad(q) : nullptr;
        Tensor<T>* gk = t.requires_grad(k) ? &t.grad(k) : nullptr;
        Tensor<T>* gv = t.requires_grad(v) ? &t.grad(v) : nullptr;
        std::vector<T> dp(static_cast<size_t>(Lk));
        for (int64_t b = 0; b < B; ++b) {
          for (int64_t h = 0; h < H; ++h) {
            for (int64_t i = 0; i < Lq; ++i) {
              const T* p = probs.data() + ((b * H + h) * Lq + i) * Lk;
              const T* gi = g.data() + (b * Lq + i) * d + h * dh;
              T dot = 0;
              for (int64_t j = 0; j < Lk; ++j) {
                if (p[j] == T(0)) {
                  dp[static_cast<size_t>(j)] = 0;
                  continue;
                }
                const T* vj = vv.data() + (b * Lk + j) * d + h * dh;
                T s = 0;
                for (int64_t c = 0; c < dh; ++c) s += gi[c] * vj[c];
                dp[static_cast<size_t>(j)] = s;
                dot += s * p[j];
                if (gv != nullptr) {
                  T* gvj = gv->data() + (b * Lk + j) * d + h * dh;
                  for (int64_t c = 0; c < dh; ++c) gvj[c] += p[j] * gi[c];
                }
              }
              const T* qi = vq.data() + (b * Lq + i) * d + h * dh;
              T* gqi = gq != nullptr ? gq->data() + (b * Lq + i) * d + h * dh : nullptr;
              for (int64_t j = 0; j < Lk; ++j) {
                if (p[j] == T(0)) continue;
                const T ds = p[j] * (dp[static_cast<size_t>(j)] - dot) * scale_factor;
                const T* kj = vk.data() + (b * Lk + j) * d + h * dh;
                if (gqi != nullptr)
                  for (int64_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                if (gk != nullptr) {
                  T* gkj = gk->data() + (b * Lk + j) * d + h * dh;
                  for (int64_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const int64_t> targets, T smoothing, int64_t ignore_index) {
  const auto& vl = tape.value(logits);
  require_rank2(vl.shape(), "cross_entropy");
  const int64_t n = vl.rows(), V = vl.cols();
  if (static_cast<int64_t>(targets.size()) != n) throw DimensionError("cross_entropy: targets/logits row mismatch");
  // Keep the softmax for backward; rows that are ignored stay zero.
  Tensor<T> probs({n, V});
  std::vector<int64_t> tgt(targets.begin(), targets.end());
  int64_t count = 0;
  double total = 0;
  for (int64_t i = 0; i < n; ++i) {
    const int64_t y = tgt[static_cast<size_t>(i)];
    if (y == ignore_index) continue;
    if (y < 0 || y >= V) throw IndexError("cross_entropy: target " + std::to_string(y));
    const T* z = vl.data() + i * V;
    T* p = probs.data() + i * V;
    const T mx = *std::max_element(z, z + V);
    T denom = 0, zsum = 0;
    for (int64_t j = 0; j < V; ++j) {
      p[j] = std::exp(z[j] - mx);
      denom += p[j];
      zsum += z[j];
    }
    const T lse = mx + std::log(denom);
    const T inv = T(1) / denom;
    for (int64_t j = 0; j < V; ++j) p[j] *= inv;
    const T mean_logp = zsum / static_cast<T>(V) - lse;
    total += -(T(1) - smoothing) * (z[y] - lse) - smoothing * mean_logp;
    ++count;
  }
  const T loss = count > 0 ? static_cast<T>(total / static_cast<double>(count)) : T(0);
  return tape.record(
      "cross_entropy", Tensor<T>::scalar(loss), {logits},
      [logits, n, V, count, smoothing, ignore_index, tgt = std::move(tgt), probs = std::move(probs)](Tape<T>& t,
                                                                                                      Var self) {
        if (count == 0) return;
        const T g = t.grad(self)[0] / static_cast<T>(count);
        auto& gl = t.grad(logits);
        const T uniform = smoothing / static_cast<T>(V);
        for (int64_t i = 0; i < n; ++i) {
          const int64_t y = tgt[static_cast<size_t>(i)];
          if (y == ignore_index) continue;
          // d/dz of -(1-e) log p_y - (e/V) sum_j log p_j  =  p - (1-e) onehot - e/V
          for (int64_t j = 0; j < V; ++j) gl(i, j) += g * (probs(i, j) - uniform);
          gl(i, y) -= g * (T(1) - smoothing);
        }
      });
}

#define DECSDE_INSTANTIATE(T)                                                                                \
  template Var matmul(Tape<T>&, Var, Var, bool);                                                             \
  template Var add(Tape<T>&, Var, Var);                                                                      \
  template Var add_bias(Tape<T>&, Var, Var);                                                                 \
  template Var scale(Tape<T>&, Var, T);                                                                      \
  template Var tanh(Tape<T>&, Var);                                                                          \
  template Var relu(Tape<T>&, Var);                                                                          \
  template Var dropout(Tape<T>&, Var, double, Rng&);                                                         \
  template Var softmax_rows(Tape<T>&, Var);                                                                  \
  template Var softmax_cols(Tape<T>&, Var);                                                                  \
  template Var layer_norm(Tape<T>&, Var, Var, Var, T);                                                       \
  template Var gather_rows(Tape<T>&, Var, std::span<const int64_t>);                                         \
  template Var concat_rows(Tape<T>&, Var, Var);                                                              \
  template Var bag_sum(Tape<T>&, const SparseMatrix&, Var);                                                  \
  template Var bag_sum(Tape<T>&, std::shared_ptr<const SparseMatrix>, Var);                                  \
  template Var sum(Tape<T>&, Var);                                                                           \
  template Var attention(Tape<T>&, Var, Var, Var, const AttentionSpec&, Tensor<T>*);                         \
  template Var cross_entropy(Tape<T>&, Var, std::span<const int64_t>, T, int64_t);

DECSDE_INSTANTIATE(float)
DECSDE_INSTANTIATE(double)
#undef DECSDE_INSTANTIATE

}  // namespace decsde::numkernel
