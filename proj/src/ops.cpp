#include "hpgan/ops.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "hpgan/error.hpp"
#include "hpgan/kernels.hpp"

namespace hpgan::ops {

namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

Tensor record(const char* op, Shape shape, std::vector<double> value,
              std::vector<Tensor> operands, Backward bw) {
  for (double v : value) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (grad_enabled()) {
    bool any = false;
    for (const Tensor& t : operands) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(operands.size());
      for (const Tensor& t : operands) node->parents.push_back(t.node());
      node->backward_fn = std::move(bw);
    }
  }
  return Tensor(std::move(node));
}

// Gradient buffer of operand i, or nullptr when it does not need one.
double* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? p.ensure_grad().data() : nullptr;
}

const std::vector<double>& value_of(const Node& self, std::size_t i) {
  return self.parents[i]->value;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

template <class F, class DF>
Tensor unary(const char* op, const Tensor& x, F f, DF df) {
  const auto in = x.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return record(op, x.shape(), std::move(out), {x}, [df](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& xv = value_of(self, 0);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

// Splits a [.., C, T] signal into (batch, channels, time) with batch 1 for rank 2.
struct SignalDims {
  std::size_t batch, channels, time;
};

SignalDims signal_dims(const Tensor& x, const char* op) {
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
  throw ShapeError(std::string(op) + ": expected [C,T] or [B,C,T], got " + shape_str(x.shape()));
}

Shape signal_shape(const Tensor& like, std::size_t b, std::size_t c, std::size_t t) {
  return like.rank() == 2 ? Shape{c, t} : Shape{b, c, t};
}

}  // namespace

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  const auto [nb, ci, nt] = signal_dims(input, "conv1d");
  require(kernel.rank() == 3, "conv1d: kernel must be [C_out,C_in,K], got " + shape_str(kernel.shape()));
  const std::size_t co = kernel.dim(0);
  const std::size_t k = kernel.dim(2);
  require(kernel.dim(1) == ci, "conv1d: kernel expects " + std::to_string(kernel.dim(1)) +
                                   " input channels, input has " + std::to_string(ci));
  require(k % 2 == 1, "conv1d: kernel width must be odd, got " + std::to_string(k));
  require(nt >= 1, "conv1d: empty time axis");
  require(bias.rank() == 1 && bias.dim(0) == co, "conv1d: bias must be [C_out]");

  const std::size_t pad = (k - 1) / 2;
  const std::size_t row = ci * k;
  // im2col: cols[(b*T + t)*row + i*K + j] = input[b, i, t + j - pad] (zero outside).
  auto cols = std::make_shared<std::vector<double>>(nb * nt * row, 0.0);
  const auto x = input.data();
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t t = 0; t < nt; ++t) {
      double* c = cols->data() + (b * nt + t) * row;
      for (std::size_t i = 0; i < ci; ++i) {
        const double* xi = x.data() + (b * ci + i) * nt;
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(pad);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(nt)) c[i * k + j] = xi[src];
        }
      }
    }
  }

  const auto w = kernel.data();
  const auto bv = bias.data();
  std::vector<double> out(nb * co * nt);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t o = 0; o < co; ++o) {
      const double* wo = w.data() + o * row;
      double* yo = out.data() + (b * co + o) * nt;
      for (std::size_t t = 0; t < nt; ++t) {
        yo[t] = bv[o] + kernels::dot(wo, cols->data() + (b * nt + t) * row, row);
      }
    }
  }

  return record("conv1d", signal_shape(input, nb, co, nt), std::move(out), {input, kernel, bias},
                [=](Node& self) {
                  const double* g = self.grad.data();
                  const auto& wv = value_of(self, 1);
                  if (double* gb = grad_of(self, 2)) {
                    for (std::size_t b = 0; b < nb; ++b)
                      for (std::size_t o = 0; o < co; ++o)
                        for (std::size_t t = 0; t < nt; ++t) gb[o] += g[(b * co + o) * nt + t];
                  }
                  if (double* gw = grad_of(self, 1)) {
                    for (std::size_t b = 0; b < nb; ++b)
                      for (std::size_t o = 0; o < co; ++o)
                        for (std::size_t t = 0; t < nt; ++t) {
                          const double go = g[(b * co + o) * nt + t];
                          if (go != 0.0) kernels::axpy(go, cols->data() + (b * nt + t) * row, gw + o * row, row);
                        }
                  }
                  if (double* gx = grad_of(self, 0)) {
                    std::vector<double> gcol(row);
                    for (std::size_t b = 0; b < nb; ++b) {
                      for (std::size_t t = 0; t < nt; ++t) {
                        std::fill(gcol.begin(), gcol.end(), 0.0);
                        for (std::size_t o = 0; o < co; ++o) {
                          const double go = g[(b * co + o) * nt + t];
                          if (go != 0.0) kernels::axpy(go, wv.data() + o * row, gcol.data(), row);
                        }
                        for (std::size_t i = 0; i < ci; ++i) {
                          double* gxi = gx + (b * ci + i) * nt;
                          for (std::size_t j = 0; j < k; ++j) {
                            const std::ptrdiff_t src =
                                static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(pad);
                            if (src >= 0 && src < static_cast<std::ptrdiff_t>(nt)) gxi[src] += gcol[i * k + j];
                          }
                        }
                      }
                    }
                  }
                });
}

Tensor maxpool1d(const Tensor& input, std::size_t window) {
  const auto [nb, nc, nt] = signal_dims(input, "maxpool1d");
  require(window >= 1, "maxpool1d: window must be positive");
  require(nt >= 1, "maxpool1d: empty time axis");
  const std::size_t ot = (nt + window - 1) / window;
  const auto x = input.data();
  std::vector<double> out(nb * nc * ot);
  auto arg = std::make_shared<std::vector<std::size_t>>(out.size());
  for (std::size_t r = 0; r < nb * nc; ++r) {
    for (std::size_t t = 0; t < ot; ++t) {
      const std::size_t begin = r * nt + t * window;
      const std::size_t end = r * nt + std::min(nt, (t + 1) * window);
      std::size_t best = begin;
      for (std::size_t i = begin + 1; i < end; ++i)
        if (x[i] > x[best]) best = i;
      out[r * ot + t] = x[best];
      (*arg)[r * ot + t] = best;
    }
  }
  return record("maxpool1d", signal_shape(input, nb, nc, ot), std::move(out), {input},
                [arg](Node& self) {
                  double* gx = grad_of(self, 0);
                  if (!gx) return;
                  for (std::size_t i = 0; i < arg->size(); ++i) gx[(*arg)[i]] += self.grad[i];
                });
}

Tensor upsample1d(const Tensor& input, std::size_t factor) {
  const auto [nb, nc, nt] = signal_dims(input, "upsample1d");
  require(factor >= 1, "upsample1d: factor must be positive");
  const std::size_t ot = nt * factor;
  const auto x = input.data();
  std::vector<double> out(nb * nc * ot);
  for (std::size_t r = 0; r < nb * nc; ++r)
    for (std::size_t t = 0; t < ot; ++t) out[r * ot + t] = x[r * nt + t / factor];
  return record("upsample1d", signal_shape(input, nb, nc, ot), std::move(out), {input},
                [=](Node& self) {
                  double* gx = grad_of(self, 0);
                  if (!gx) return;
                  for (std::size_t r = 0; r < nb * nc; ++r)
                    for (std::size_t t = 0; t < ot; ++t) gx[r * nt + t / factor] += self.grad[r * ot + t];
                });
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require(input.rank() == 1 || input.rank() == 2,
          "dense: input must be [N] or [B,N], got " + shape_str(input.shape()));
  require(weight.rank() == 2, "dense: weight must be [M,N], got " + shape_str(weight.shape()));
  const std::size_t nb = input.rank() == 1 ? 1 : input.dim(0);
  const std::size_t n = input.shape().back();
  const std::size_t m = weight.dim(0);
  require(weight.dim(1) == n, "dense: weight " + shape_str(weight.shape()) + " does not accept " +
                                  std::to_string(n) + " features");
  require(bias.rank() == 1 && bias.dim(0) == m, "dense: bias must be [M]");
  const auto x = input.data();
  const auto w = weight.data();
  const auto bv = bias.data();
  std::vector<double> out(nb * m);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < m; ++r) out[b * m + r] = bv[r] + kernels::dot(w.data() + r * n, x.data() + b * n, n);
  Shape shape = input.rank() == 1 ? Shape{m} : Shape{nb, m};
  return record("dense", std::move(shape), std::move(out), {input, weight, bias}, [=](Node& self) {
    const double* g = self.grad.data();
    const auto& xv = value_of(self, 0);
    const auto& wv = value_of(self, 1);
    if (double* gb = grad_of(self, 2))
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t r = 0; r < m; ++r) gb[r] += g[b * m + r];
    if (double* gw = grad_of(self, 1))
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t r = 0; r < m; ++r)
          if (g[b * m + r] != 0.0) kernels::axpy(g[b * m + r], xv.data() + b * n, gw + r * n, n);
    if (double* gx = grad_of(self, 0))
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t r = 0; r < m; ++r)
          if (g[b * m + r] != 0.0) kernels::axpy(g[b * m + r], wv.data() + r * n, gx + b * n, n);
  });
}

Tensor elu(const Tensor& x) {
  return unary(
      "elu", x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0.0 ? 1.0 : y + 1.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log of a non-positive value");
  }
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      "clamp", x, [=](double v) { return std::min(hi, std::max(lo, v)); },
      [=](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

namespace {

template <class F, class DA, class DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  require_same_shape(a, b, op);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  return record(op, a.shape(), std::move(out), {a, b}, [da, db](Node& self) {
    const auto& x = value_of(self, 0);
    const auto& y = value_of(self, 1);
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < x.size(); ++i) ga[i] += self.grad[i] * da(x[i], y[i]);
    if (double* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < x.size(); ++i) gb[i] += self.grad[i] * db(x[i], y[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [=](double v) { return v * factor; }, [=](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
  return unary(
      "add_scalar", x, [=](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return record("sum", Shape{}, {s}, {x}, [](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const double g = self.grad[0];
    for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) gx[i] += g;
  });
}

Tensor mean(const Tensor& x) {
  const std::size_t n = x.numel();
  require(n > 0, "mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Tensor sq_l2_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sq_l2_distance");
  const double s = kernels::sq_diff_sum(a.data().data(), b.data().data(), a.numel());
  return record("sq_l2_distance", Shape{}, {s}, {a, b}, [](Node& self) {
    const auto& x = value_of(self, 0);
    const auto& y = value_of(self, 1);
    const double g2 = 2.0 * self.grad[0];
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g2 * (x[i] - y[i]);
    if (double* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < x.size(); ++i) gb[i] -= g2 * (x[i] - y[i]);
  });
}

namespace {
double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

Tensor l1_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l1_distance");
  const auto av = a.data();
  const auto bv = b.data();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  return record("l1_distance", Shape{}, {s}, {a, b}, [](Node& self) {
    const auto& x = value_of(self, 0);
    const auto& y = value_of(self, 1);
    const double g = self.grad[0];
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g * sign(x[i] - y[i]);
    if (double* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < x.size(); ++i) gb[i] -= g * sign(x[i] - y[i]);
  });
}

namespace {

std::pair<std::size_t, std::size_t> rows_and_width(const Tensor& x, const char* op) {
  require(x.rank() >= 1, std::string(op) + ": needs a leading batch axis");
  const std::size_t rows = x.dim(0);
  return {rows, rows == 0 ? 0 : x.numel() / rows};
}

}  // namespace

Tensor row_sum(const Tensor& x) {
  const auto [rows, width] = rows_and_width(x, "row_sum");
  const auto v = x.data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < width; ++i) out[r] += v[r * width + i];
  return record("row_sum", Shape{rows}, std::move(out), {x}, [rows, width](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < width; ++i) gx[r * width + i] += self.grad[r];
  });
}

Tensor row_sq_l2_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "row_sq_l2_distance");
  const auto [rows, width] = rows_and_width(a, "row_sq_l2_distance");
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r)
    out[r] = kernels::sq_diff_sum(a.data().data() + r * width, b.data().data() + r * width, width);
  return record("row_sq_l2_distance", Shape{rows}, std::move(out), {a, b}, [rows, width](Node& self) {
    const auto& x = value_of(self, 0);
    const auto& y = value_of(self, 1);
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      const double g2 = 2.0 * self.grad[r];
      for (std::size_t i = r * width; i < (r + 1) * width; ++i) {
        const double d = g2 * (x[i] - y[i]);
        if (ga) ga[i] += d;
        if (gb) gb[i] -= d;
      }
    }
  });
}

Tensor row_l1_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "row_l1_distance");
  const auto [rows, width] = rows_and_width(a, "row_l1_distance");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = r * width; i < (r + 1) * width; ++i) out[r] += std::abs(av[i] - bv[i]);
  return record("row_l1_distance", Shape{rows}, std::move(out), {a, b}, [rows, width](Node& self) {
    const auto& x = value_of(self, 0);
    const auto& y = value_of(self, 1);
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      const double g = self.grad[r];
      for (std::size_t i = r * width; i < (r + 1) * width; ++i) {
        const double d = g * sign(x[i] - y[i]);
        if (ga) ga[i] += d;
        if (gb) gb[i] -= d;
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  const auto v = x.data();
  return record("reshape", std::move(shape), std::vector<double>(v.begin(), v.end()), {x},
                [](Node& self) {
                  double* gx = grad_of(self, 0);
                  if (!gx) return;
                  for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
                });
}

Tensor slice_last(const Tensor& x, std::size_t start, std::size_t length) {
  require(x.rank() >= 1, "slice_last: scalar input");
  const std::size_t last = x.shape().back();
  require(start + length <= last, "slice_last: window [" + std::to_string(start) + "," +
                                      std::to_string(start + length) + ") exceeds extent " +
                                      std::to_string(last));
  const std::size_t rows = x.numel() / last;
  const auto v = x.data();
  std::vector<double> out(rows * length);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < length; ++i) out[r * length + i] = v[r * last + start + i];
  Shape shape = x.shape();
  shape.back() = length;
  return record("slice_last", std::move(shape), std::move(out), {x}, [=](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < length; ++i) gx[r * last + start + i] += self.grad[r * length + i];
  });
}

Tensor select_rows(std::span<const Tensor> candidates, std::span<const std::size_t> choice) {
  require(!candidates.empty(), "select_rows: no candidates");
  const Shape& shape = candidates.front().shape();
  for (const Tensor& c : candidates) require_same_shape(c, candidates.front(), "select_rows");
  require(!shape.empty() && shape[0] == choice.size(), "select_rows: leading axis " +
                                                           shape_str(shape) + " vs " +
                                                           std::to_string(choice.size()) + " choices");
  const std::size_t rows = shape[0];
  const std::size_t width = rows == 0 ? 0 : shape_numel(shape) / rows;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    require(choice[r] < candidates.size(), "select_rows: choice out of range");
    const auto src = candidates[choice[r]].data();
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * width), width, out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  std::vector<std::size_t> picks(choice.begin(), choice.end());
  return record("select_rows", shape, std::move(out), {candidates.begin(), candidates.end()},
                [picks = std::move(picks), width](Node& self) {
                  for (std::size_t r = 0; r < picks.size(); ++r) {
                    double* g = grad_of(self, picks[r]);
                    if (!g) continue;
                    for (std::size_t i = 0; i < width; ++i) g[r * width + i] += self.grad[r * width + i];
                  }
                });
}

}  // namespace hpgan::ops
