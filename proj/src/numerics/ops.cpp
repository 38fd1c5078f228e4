#include "dualtune/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace dualtune::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

ConstMatMap cmap(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return ConstMatMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MatMap mmap(std::vector<double>& v, std::size_t r, std::size_t c) {
  return MatMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void require_matrix(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined operand");
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

detail::Node* grad_target(detail::Node& self, std::size_t i) {
  auto* p = self.parents[i].get();
  return p->requires_grad ? p : nullptr;
}

// Elementwise unary op with derivative computed from input and output.
template <typename Fwd, typename Deriv>
Tensor unary(const char* name, const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result(name, x.shape(), std::move(out), {x}, [deriv](detail::Node& self) {
    auto* p = grad_target(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      p->grad[i] += self.grad[i] * deriv(p->value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  std::vector<double> out(m * n);
  mmap(out, m, n).noalias() = cmap(a.node()->value, m, k) * cmap(b.node()->value, k, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto dc = cmap(self.grad, m, n);
    if (auto* pa = grad_target(self, 0)) {
      mmap(pa->grad, m, k).noalias() += dc * cmap(self.parents[1]->value, k, n).transpose();
    }
    if (auto* pb = grad_target(self, 1)) {
      mmap(pb->grad, k, n).noalias() += cmap(self.parents[0]->value, m, k).transpose() * dc;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const auto m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions disagree for " +
                         shape_string(a.shape()) + " x " + shape_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * n);
  mmap(out, m, n).noalias() =
      cmap(a.node()->value, m, k) * cmap(b.node()->value, n, k).transpose();
  return make_result("matmul_nt", {m, n}, std::move(out), {a, b},
                     [m, k, n](detail::Node& self) {
                       auto dc = cmap(self.grad, m, n);
                       if (auto* pa = grad_target(self, 0)) {
                         mmap(pa->grad, m, k).noalias() +=
                             dc * cmap(self.parents[1]->value, n, k);
                       }
                       if (auto* pb = grad_target(self, 1)) {
                         mmap(pb->grad, n, k).noalias() +=
                             dc.transpose() * cmap(self.parents[0]->value, m, k);
                       }
                     });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  auto y = matmul_nt(x, weight);
  return bias.defined() ? add_row(y, bias) : y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (auto* p = grad_target(self, j)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
    if (auto* p = grad_target(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& va = self.parents[0]->value;
    const auto& vb = self.parents[1]->value;
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * vb[i];
    }
    if (auto* p = grad_target(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * va[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return make_result("scale", a.shape(), std::move(out), {a}, [factor](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * factor;
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_matrix(a, "add_row");
  const auto m = a.rows(), n = a.cols();
  if (row.size() != n) {
    throw DimensionError("add_row: row of shape " + shape_string(row.shape()) +
                         " does not match " + shape_string(a.shape()));
  }
  const auto av = a.values(), rv = row.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + rv[j];
  }
  return make_result("add_row", a.shape(), std::move(out), {a, row},
                     [m, n](detail::Node& self) {
                       if (auto* p = grad_target(self, 0)) {
                         for (std::size_t i = 0; i < m * n; ++i) p->grad[i] += self.grad[i];
                       }
                       if (auto* p = grad_target(self, 1)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t j = 0; j < n; ++j) p->grad[j] += self.grad[i * n + j];
                         }
                       }
                     });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  static constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  static constexpr double kA = 0.044715;
  return unary(
      "gelu", x,
      [](double v) { return 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v))); },
      [](double v, double) {
        const double u = kC * (v + kA * v * v * v);
        const double t = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * kA * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double in, double) { return in > 0.0 ? 1.0 : (in < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result("sum", {}, {total}, {x}, [](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (auto& g : p->grad) g += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  const auto n = x.size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result("mean", {}, {total / static_cast<double>(n)}, {x},
                     [n](detail::Node& self) {
                       if (auto* p = grad_target(self, 0)) {
                         const double g = self.grad[0] / static_cast<double>(n);
                         for (auto& pg : p->grad) pg += g;
                       }
                     });
}

Tensor softmax(const Tensor& x) {
  if (!x.defined() || x.rank() == 0) throw DimensionError("softmax needs at least one axis");
  const auto cols = x.shape().back();
  if (cols == 0) throw DimensionError("softmax over an empty axis");
  const auto rows = x.size() / cols;
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.data() + r * cols;
    double* dst = out.data() + r * cols;
    const double mx = *std::max_element(src, src + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (dst[c] = std::exp(src[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= z;
  }
  return make_result("softmax", x.shape(), std::move(out), {x}, [rows, cols](detail::Node& self) {
    auto* p = grad_target(self, 0);
    if (!p) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* gy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * gy[c];
      for (std::size_t c = 0; c < cols; ++c) p->grad[r * cols + c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_index) {
  require_matrix(logits, "cross_entropy");
  const auto t_len = logits.rows(), vocab = logits.cols();
  if (targets.size() != t_len) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_string(logits.shape()));
  }
  const auto in = logits.values();
  std::vector<double> probs(in.size(), 0.0);
  std::vector<int> tgt(targets.begin(), targets.end());
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    if (tgt[t] == ignore_index) continue;
    if (tgt[t] < 0 || static_cast<std::size_t>(tgt[t]) >= vocab) {
      throw IndexError("cross_entropy: target " + std::to_string(tgt[t]) + " at position " +
                       std::to_string(t) + " outside [0, " + std::to_string(vocab) + ")");
    }
    const double* row = in.data() + t * vocab;
    double* pr = probs.data() + t * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) z += (pr[c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < vocab; ++c) pr[c] /= z;
    total += -(row[tgt[t]] - mx - std::log(z));
    ++count;
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  return make_result(
      "cross_entropy", {}, {loss}, {logits},
      [probs = std::move(probs), tgt = std::move(tgt), count, vocab,
       ignore_index](detail::Node& self) {
        auto* p = grad_target(self, 0);
        if (!p || count == 0) return;
        const double g = self.grad[0] / static_cast<double>(count);
        for (std::size_t t = 0; t < tgt.size(); ++t) {
          if (tgt[t] == ignore_index) continue;
          for (std::size_t c = 0; c < vocab; ++c) p->grad[t * vocab + c] += g * probs[t * vocab + c];
          p->grad[t * vocab + static_cast<std::size_t>(tgt[t])] -= g;
        }
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm");
  const auto m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) + "/" +
                         shape_string(bias.shape()) + " do not match " +
                         shape_string(x.shape()));
  }
  const auto in = x.values(), g = gain.values(), b = bias.values();
  std::vector<double> out(m * n), xhat(m * n), inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * g[j] + b[j];
    }
  }
  return make_result(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
        const auto& gv = self.parents[1]->value;
        if (auto* pg = grad_target(self, 1)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) pg->grad[j] += self.grad[i * n + j] * xhat[i * n + j];
        }
        if (auto* pb = grad_target(self, 2)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) pb->grad[j] += self.grad[i * n + j];
        }
        if (auto* px = grad_target(self, 0)) {
          const double nn = static_cast<double>(n);
          for (std::size_t i = 0; i < m; ++i) {
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = self.grad[i * n + j] * gv[j];
              sum_d += d;
              sum_dx += d * xhat[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const double d = self.grad[i * n + j] * gv[j];
              px->grad[i * n + j] += inv_std[i] / nn * (nn * d - sum_d - xhat[i * n + j] * sum_dx);
            }
          }
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_matrix(table, "embedding");
  const auto vocab = table.rows(), h = table.cols();
  std::vector<int> idx(ids.begin(), ids.end());
  const auto tv = table.values();
  std::vector<double> out(idx.size() * h);
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || static_cast<std::size_t>(idx[t]) >= vocab) {
      throw IndexError("embedding: id " + std::to_string(idx[t]) + " at position " +
                       std::to_string(t) + " outside [0, " + std::to_string(vocab) + ")");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(idx[t]) * h, h, out.data() + t * h);
  }
  const auto len = idx.size();
  return make_result("embedding", {len, h}, std::move(out), {table},
                     [idx = std::move(idx), h](detail::Node& self) {
                       auto* p = grad_target(self, 0);
                       if (!p) return;
                       for (std::size_t t = 0; t < idx.size(); ++t) {
                         double* dst = p->grad.data() + static_cast<std::size_t>(idx[t]) * h;
                         const double* src = self.grad.data() + t * h;
                         for (std::size_t j = 0; j < h; ++j) dst[j] += src[j];
                       }
                     });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_matrix(p, "concat");
  const std::size_t fixed = axis == 0 ? parts[0].cols() : parts[0].rows();
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const std::size_t other = axis == 0 ? p.cols() : p.rows();
    if (other != fixed) {
      throw DimensionError("concat: incompatible shapes " + shape_string(parts[0].shape()) +
                           " and " + shape_string(p.shape()));
    }
    extents.push_back(axis == 0 ? p.rows() : p.cols());
    total += extents.back();
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].values();
    if (axis == 0) {
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(offset * cols));
    } else {
      for (std::size_t i = 0; i < rows; ++i)
        std::copy_n(src.data() + i * extents[k], extents[k], out.data() + i * cols + offset);
    }
    offset += extents[k];
  }
  return make_result("concat", {rows, cols}, std::move(out),
                     std::vector<Tensor>(parts.begin(), parts.end()),
                     [axis, rows, cols, extents = std::move(extents)](detail::Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < extents.size(); ++k) {
                         if (auto* p = grad_target(self, k)) {
                           if (axis == 0) {
                             for (std::size_t i = 0; i < extents[k] * cols; ++i)
                               p->grad[i] += self.grad[off * cols + i];
                           } else {
                             for (std::size_t i = 0; i < rows; ++i)
                               for (std::size_t j = 0; j < extents[k]; ++j)
                                 p->grad[i * extents[k] + j] += self.grad[i * cols + off + j];
                           }
                         }
                         off += extents[k];
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  if (begin > end || end > x.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_string(x.shape()));
  }
  const auto n = x.cols();
  const auto src = x.values();
  std::vector<double> out(src.begin() + static_cast<std::ptrdiff_t>(begin * n),
                          src.begin() + static_cast<std::ptrdiff_t>(end * n));
  return make_result("slice_rows", {end - begin, n}, std::move(out), {x},
                     [begin, n](detail::Node& self) {
                       if (auto* p = grad_target(self, 0)) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i)
                           p->grad[begin * n + i] += self.grad[i];
                       }
                     });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 bool causal, const std::vector<bool>& key_mask) {
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_matrix(v, "attention");
  const auto tq = q.rows(), tk = k.rows(), hidden = q.cols();
  if (k.cols() != hidden || v.cols() != hidden || v.rows() != tk) {
    throw DimensionError("attention: q " + shape_string(q.shape()) + ", k " +
                         shape_string(k.shape()) + ", v " + shape_string(v.shape()));
  }
  if (heads == 0 || hidden % heads != 0) {
    throw DimensionError("attention: hidden size " + std::to_string(hidden) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
  if (!key_mask.empty() && key_mask.size() != tk) {
    throw DimensionError("attention: key mask length " + std::to_string(key_mask.size()) +
                         " for " + std::to_string(tk) + " keys");
  }
  const auto dh = hidden / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto ei = [](std::size_t x) { return static_cast<Eigen::Index>(x); };

  // probs holds one [tq x tk] block per head.
  std::vector<double> probs(heads * tq * tk, 0.0);
  std::vector<double> out(tq * hidden, 0.0);
  auto qm = cmap(q.node()->value, tq, hidden);
  auto km = cmap(k.node()->value, tk, hidden);
  auto vm = cmap(v.node()->value, tk, hidden);
  auto om = mmap(out, tq, hidden);
  RowMat scores(ei(tq), ei(tk));
  for (std::size_t h = 0; h < heads; ++h) {
    const auto c0 = ei(h * dh);
    scores.noalias() = qm.middleCols(c0, ei(dh)) * km.middleCols(c0, ei(dh)).transpose();
    auto pm = MatMap(probs.data() + h * tq * tk, ei(tq), ei(tk));
    for (std::size_t i = 0; i < tq; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < tk; ++j) {
        const bool ok = (!causal || j <= i) && (key_mask.empty() || key_mask[j]);
        if (ok) mx = std::max(mx, scores(ei(i), ei(j)) * inv_sqrt);
      }
      if (mx == -std::numeric_limits<double>::infinity()) continue;
      double z = 0.0;
      for (std::size_t j = 0; j < tk; ++j) {
        const bool ok = (!causal || j <= i) && (key_mask.empty() || key_mask[j]);
        const double e = ok ? std::exp(scores(ei(i), ei(j)) * inv_sqrt - mx) : 0.0;
        pm(ei(i), ei(j)) = e;
        z += e;
      }
      pm.row(ei(i)) /= z;
    }
    om.middleCols(c0, ei(dh)).noalias() = pm * vm.middleCols(c0, ei(dh));
  }

  return make_result(
      "attention", {tq, hidden}, std::move(out), {q, k, v},
      [probs = std::move(probs), heads, tq, tk, hidden, dh, inv_sqrt,
       ei](detail::Node& self) {
        auto* pq = grad_target(self, 0);
        auto* pk = grad_target(self, 1);
        auto* pv = grad_target(self, 2);
        auto qm = cmap(self.parents[0]->value, tq, hidden);
        auto km = cmap(self.parents[1]->value, tk, hidden);
        auto vm = cmap(self.parents[2]->value, tk, hidden);
        auto dout = cmap(self.grad, tq, hidden);
        RowMat dp(ei(tq), ei(tk));
        for (std::size_t h = 0; h < heads; ++h) {
          const auto c0 = ei(h * dh);
          auto pm = ConstMatMap(probs.data() + h * tq * tk, ei(tq), ei(tk));
          auto dO = dout.middleCols(c0, ei(dh));
          if (pv) {
            mmap(pv->grad, tk, hidden).middleCols(c0, ei(dh)).noalias() += pm.transpose() * dO;
          }
          if (!pq && !pk) continue;
          dp.noalias() = dO * vm.middleCols(c0, ei(dh)).transpose();
          // dS = P .* (dP - rowsum(dP .* P)), then fold in the 1/sqrt(dh) scale.
          for (Eigen::Index i = 0; i < ei(tq); ++i) {
            const double dot = dp.row(i).dot(pm.row(i));
            dp.row(i) = (pm.row(i).array() * (dp.row(i).array() - dot) * inv_sqrt).matrix();
          }
          if (pq) {
            mmap(pq->grad, tq, hidden).middleCols(c0, ei(dh)).noalias() +=
                dp * km.middleCols(c0, ei(dh));
          }
          if (pk) {
            mmap(pk->grad, tk, hidden).middleCols(c0, ei(dh)).noalias() +=
                dp.transpose() * qm.middleCols(c0, ei(dh));
          }
        }
      });
}

}  // namespace dualtune::num
