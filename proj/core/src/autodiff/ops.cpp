#include "dair/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "dair/errors.hpp"

namespace dair::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapRow = Eigen::Map<Eigen::RowVectorXd>;
using ConstMapRow = Eigen::Map<const Eigen::RowVectorXd>;

template <class... V>
std::array<Var, sizeof...(V)> vars(V... v) {
  return {v...};
}

std::string describe(const char* op, const std::string& detail) { return std::string(op) + ": " + detail; }

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(describe(op, "operand shapes differ, " + shape_to_string(a.shape()) + " vs " +
                                      shape_to_string(b.shape())));
  }
}

// Elementwise map with derivative df(x, y) expressed in terms of input and output.
template <class F, class DF>
Var unary(const char* op, Var x, F f, DF df) {
  const Tensor& xv = x.value();
  Tensor y = Tensor::zeros(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  return record_op(op, std::move(y), vars(x), [df](const BackwardArgs& a) {
    Tensor* dx = a.in_grads[0];
    if (dx == nullptr) return;
    const Tensor& xin = *a.inputs[0];
    for (std::size_t i = 0; i < xin.size(); ++i) (*dx)[i] += a.out_grad[i] * df(xin[i], a.output[i]);
  });
}

void require_rank(const char* op, const char* what, const Var& v, std::size_t rank) {
  if (v.shape().size() != rank) {
    throw ShapeError(describe(op, std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                                      shape_to_string(v.shape())));
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w, o, kh, kw, ho, wo;
  std::size_t patch() const { return c * kh * kw; }
  std::size_t plane() const { return ho * wo; }
};

// cols is [C*KH*KW, N*Ho*Wo], row index (c, ki, kj), column index (n, oy, ox).
void im2col(const ConvGeometry& g, const double* x, double* cols) {
  const std::size_t width = g.n * g.plane();
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* dst = cols + ((c * g.kh + ki) * g.kw + kj) * width;
        for (std::size_t n = 0; n < g.n; ++n) {
          const double* src = x + ((n * g.c + c) * g.h + ki) * g.w + kj;
          double* row = dst + n * g.plane();
          for (std::size_t oy = 0; oy < g.ho; ++oy) {
            std::copy_n(src + oy * g.w, g.wo, row + oy * g.wo);
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* dx) {
  const std::size_t width = g.n * g.plane();
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* src = cols + ((c * g.kh + ki) * g.kw + kj) * width;
        for (std::size_t n = 0; n < g.n; ++n) {
          double* dst = dx + ((n * g.c + c) * g.h + ki) * g.w + kj;
          const double* row = src + n * g.plane();
          for (std::size_t oy = 0; oy < g.ho; ++oy) {
            for (std::size_t ox = 0; ox < g.wo; ++ox) dst[oy * g.w + ox] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var dense(Var x, Var w, Var b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const Shape& bs = b.shape();
  if (xs.size() != 2 || ws.size() != 2 || bs.size() != 1 || xs[1] != ws[1] || bs[0] != ws[0]) {
    throw ShapeError(describe("dense", "expected x[N,in], w[out,in], b[out]; got x" + shape_to_string(xs) +
                                           " w" + shape_to_string(ws) + " b" + shape_to_string(bs)));
  }
  const std::size_t n = xs[0], in = xs[1], out = ws[0];
  Tensor y = Tensor::zeros({n, out});
  {
    MapMat ym(y.data(), n, out);
    ym.noalias() = ConstMapMat(x.value().data(), n, in) * ConstMapMat(w.value().data(), out, in).transpose();
    ym.rowwise() += ConstMapRow(b.value().data(), out);
  }
  return record_op("dense", std::move(y), vars(x, w, b), [n, in, out](const BackwardArgs& a) {
    ConstMapMat g(a.out_grad.data(), n, out);
    if (a.in_grads[0] != nullptr) {
      MapMat(a.in_grads[0]->data(), n, in).noalias() += g * ConstMapMat(a.inputs[1]->data(), out, in);
    }
    if (a.in_grads[1] != nullptr) {
      MapMat(a.in_grads[1]->data(), out, in).noalias() += g.transpose() * ConstMapMat(a.inputs[0]->data(), n, in);
    }
    if (a.in_grads[2] != nullptr) MapRow(a.in_grads[2]->data(), out) += g.colwise().sum();
  });
}

Var conv2d(Var x, Var k, Var b) {
  require_rank("conv2d", "input", x, 4);
  require_rank("conv2d", "kernel", k, 4);
  require_rank("conv2d", "bias", b, 1);
  const Shape& xs = x.shape();
  const Shape& ks = k.shape();
  if (ks[1] != xs[1] || b.shape()[0] != ks[0] || ks[2] > xs[2] || ks[3] > xs[3]) {
    throw ShapeError(describe("conv2d", "input " + shape_to_string(xs) + " incompatible with kernel " +
                                            shape_to_string(ks) + " and bias " + shape_to_string(b.shape())));
  }
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3], xs[2] - ks[2] + 1, xs[3] - ks[3] + 1};

  std::vector<double> cols(g.patch() * g.n * g.plane());
  im2col(g, x.value().data(), cols.data());
  RowMat out2 = ConstMapMat(k.value().data(), g.o, g.patch()) *
                ConstMapMat(cols.data(), g.patch(), g.n * g.plane());

  Tensor y = Tensor::zeros({g.n, g.o, g.ho, g.wo});
  const double* bias = b.value().data();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.o; ++o) {
      const double* src = out2.data() + o * g.n * g.plane() + n * g.plane();
      double* dst = y.data() + (n * g.o + o) * g.plane();
      for (std::size_t p = 0; p < g.plane(); ++p) dst[p] = src[p] + bias[o];
    }
  }

  return record_op("conv2d", std::move(y), vars(x, k, b), [g](const BackwardArgs& a) {
    const std::size_t width = g.n * g.plane();
    RowMat g2(g.o, width);
    for (std::size_t n = 0; n < g.n; ++n) {
      for (std::size_t o = 0; o < g.o; ++o) {
        const double* src = a.out_grad.data() + (n * g.o + o) * g.plane();
        std::copy_n(src, g.plane(), g2.data() + o * width + n * g.plane());
      }
    }
    if (a.in_grads[2] != nullptr) {
      Eigen::Map<Eigen::VectorXd>(a.in_grads[2]->data(), g.o) += g2.rowwise().sum();
    }
    if (a.in_grads[1] != nullptr) {
      std::vector<double> cols(g.patch() * width);
      im2col(g, a.inputs[0]->data(), cols.data());
      MapMat(a.in_grads[1]->data(), g.o, g.patch()).noalias() +=
          g2 * ConstMapMat(cols.data(), g.patch(), width).transpose();
    }
    if (a.in_grads[0] != nullptr) {
      RowMat dcols = ConstMapMat(a.inputs[1]->data(), g.o, g.patch()).transpose() * g2;
      col2im_add(g, dcols.data(), a.in_grads[0]->data());
    }
  });
}

Var max_pool2(Var x) {
  require_rank("max_pool2", "input", x, 4);
  const Shape& xs = x.shape();
  if (xs[2] < 2 || xs[3] < 2) {
    throw ShapeError(describe("max_pool2", "spatial extent below 2 in " + shape_to_string(xs)));
  }
  const std::size_t planes = xs[0] * xs[1], h = xs[2], w = xs[3], ho = h / 2, wo = w / 2;
  Tensor y = Tensor::zeros({xs[0], xs[1], ho, wo});
  const double* in = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        const double* base = in + p * h * w + 2 * i * w + 2 * j;
        y[(p * ho + i) * wo + j] = std::max(std::max(base[0], base[1]), std::max(base[w], base[w + 1]));
      }
    }
  }
  return record_op("max_pool2", std::move(y), vars(x), [planes, h, w, ho, wo](const BackwardArgs& a) {
    Tensor* dx = a.in_grads[0];
    if (dx == nullptr) return;
    const double* in = a.inputs[0]->data();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t i = 0; i < ho; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
          const std::size_t base = p * h * w + 2 * i * w + 2 * j;
          const std::array<std::size_t, 4> cand{base, base + 1, base + w, base + w + 1};
          std::size_t best = cand[0];
          for (std::size_t c : cand) {
            if (in[c] > in[best]) best = c;
          }
          (*dx)[best] += a.out_grad[(p * ho + i) * wo + j];
        }
      }
    }
  });
}

Var relu(Var x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().values()) {
    if (v < 0.0) throw DomainError("log: negative input");
  }
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(Var x) {
  for (double v : x.value().values()) {
    if (v < 0.0) throw DomainError("sqrt: negative input");
  }
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double v, double y) { return v > 0.0 ? 0.5 / y : 0.0; });
}

Var abs(Var x) {
  return unary(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var softplus(Var x) {
  return unary(
      "softplus", x,
      [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

Var clamp_min(Var x, double floor) {
  return unary(
      "clamp_min", x, [floor](double v) { return v > floor ? v : floor; },
      [floor](double v, double) { return v > floor ? 1.0 : 0.0; });
}

Var huber(Var x, double delta) {
  if (!(delta > 0.0)) throw DomainError("huber: delta must be positive");
  return unary(
      "huber", x,
      [delta](double v) {
        const double r = std::fabs(v);
        return r <= delta ? 0.5 * v * v : delta * (r - 0.5 * delta);
      },
      [delta](double v, double) {
        if (std::fabs(v) <= delta) return v;
        return v > 0.0 ? delta : -delta;
      });
}

Var log_softmax(Var x) {
  require_rank("log_softmax", "input", x, 2);
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  const Tensor& xv = x.value();
  Tensor y = Tensor::zeros({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * k;
    const double m = *std::max_element(row, row + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(row[j] - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < k; ++j) y[i * k + j] = row[j] - lse;
  }
  return record_op("log_softmax", std::move(y), vars(x), [n, k](const BackwardArgs& a) {
    Tensor* dx = a.in_grads[0];
    if (dx == nullptr) return;
    for (std::size_t i = 0; i < n; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < k; ++j) gsum += a.out_grad[i * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        (*dx)[i * k + j] += a.out_grad[i * k + j] - std::exp(a.output[i * k + j]) * gsum;
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return record_op("add", std::move(y), vars(a, b), [](const BackwardArgs& args) {
    for (Tensor* d : args.in_grads) {
      if (d == nullptr) continue;
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += args.out_grad[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return record_op("sub", std::move(y), vars(a, b), [](const BackwardArgs& args) {
    if (Tensor* d = args.in_grads[0]) {
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += args.out_grad[i];
    }
    if (Tensor* d = args.in_grads[1]) {
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] -= args.out_grad[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return record_op("mul", std::move(y), vars(a, b), [](const BackwardArgs& args) {
    const Tensor& av = *args.inputs[0];
    const Tensor& bv = *args.inputs[1];
    if (Tensor* d = args.in_grads[0]) {
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += args.out_grad[i] * bv[i];
    }
    if (Tensor* d = args.in_grads[1]) {
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += args.out_grad[i] * av[i];
    }
  });
}

Var scale(Var x, double c) {
  return unary(
      "scale", x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(Var x, double c) {
  return unary(
      "add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  Tensor y = Tensor::zeros({1});
  y[0] = s;
  return record_op("sum", std::move(y), vars(x), [](const BackwardArgs& a) {
    if (Tensor* d = a.in_grads[0]) {
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += a.out_grad[0];
    }
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  Tensor y = Tensor::zeros({1});
  y[0] = s / n;
  return record_op("mean", std::move(y), vars(x), [n](const BackwardArgs& a) {
    if (Tensor* d = a.in_grads[0]) {
      for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += a.out_grad[0] / n;
    }
  });
}

Var log_mean_exp(Var x) {
  const Tensor& xv = x.value();
  const double n = static_cast<double>(xv.size());
  const double m = *std::max_element(xv.values().begin(), xv.values().end());
  double s = 0.0;
  for (double v : xv.values()) s += std::exp(v - m);
  Tensor y = Tensor::zeros({1});
  y[0] = m + std::log(s / n);
  return record_op("log_mean_exp", std::move(y), vars(x), [n](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    const double out = a.output[0];
    for (std::size_t i = 0; i < d->size(); ++i) {
      (*d)[i] += a.out_grad[0] * std::exp((*a.inputs[0])[i] - out) / n;
    }
  });
}

Var sum_rows(Var x) {
  require_rank("sum_rows", "input", x, 2);
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  Tensor y = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) y[i] += x.value()[i * k + j];
  }
  return record_op("sum_rows", std::move(y), vars(x), [n, k](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) (*d)[i * k + j] += a.out_grad[i];
    }
  });
}

Var pick(Var x, std::span<const std::size_t> labels) {
  require_rank("pick", "input", x, 2);
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  if (labels.size() != n) {
    throw ShapeError(describe("pick", std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows"));
  }
  std::vector<std::size_t> idx(labels.begin(), labels.end());
  Tensor y = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) {
    if (idx[i] >= k) {
      throw DomainError(describe("pick", "class index " + std::to_string(idx[i]) + " out of range for " +
                                             std::to_string(k) + " classes"));
    }
    y[i] = x.value()[i * k + idx[i]];
  }
  return record_op("pick", std::move(y), vars(x), [k, idx = std::move(idx)](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    for (std::size_t i = 0; i < idx.size(); ++i) (*d)[i * k + idx[i]] += a.out_grad[i];
  });
}

Var gather(Var x, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError(describe("gather", "empty index list"));
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor y = Tensor::zeros({idx.size()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= x.value().size()) {
      throw ShapeError(describe("gather", "index " + std::to_string(idx[i]) + " out of range for " +
                                              shape_to_string(x.shape())));
    }
    y[i] = x.value()[idx[i]];
  }
  return record_op("gather", std::move(y), vars(x), [idx = std::move(idx)](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    for (std::size_t i = 0; i < idx.size(); ++i) (*d)[idx[i]] += a.out_grad[i];
  });
}

Var concat(Var a, Var b) {
  const std::size_t na = a.value().size(), nb = b.value().size();
  Tensor y = Tensor::zeros({na + nb});
  std::copy_n(a.value().data(), na, y.data());
  std::copy_n(b.value().data(), nb, y.data() + na);
  return record_op("concat", std::move(y), vars(a, b), [na, nb](const BackwardArgs& args) {
    if (Tensor* d = args.in_grads[0]) {
      for (std::size_t i = 0; i < na; ++i) (*d)[i] += args.out_grad[i];
    }
    if (Tensor* d = args.in_grads[1]) {
      for (std::size_t i = 0; i < nb; ++i) (*d)[i] += args.out_grad[na + i];
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return record_op("reshape", std::move(y), vars(x), [](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += a.out_grad[i];
  });
}

Var flatten(Var x) {
  const Shape& s = x.shape();
  std::size_t rest = 1;
  for (std::size_t i = 1; i < s.size(); ++i) rest *= s[i];
  return reshape(x, Shape{s[0], rest});
}

}  // namespace dair::ad
