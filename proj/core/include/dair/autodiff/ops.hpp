#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dair/autodiff/tape.hpp"

// Differentiable primitives. Each one records a node on the tape owning its
// inputs; shape mismatches throw ShapeError naming the primitive.
namespace dair::ad {

// x:[N,in], w:[out,in], b:[out] -> [N,out]
Var dense(Var x, Var w, Var b);
// x:[N,C,H,W], k:[O,C,KH,KW], b:[O] -> [N,O,H-KH+1,W-KW+1]; stride 1, no padding.
Var conv2d(Var x, Var k, Var b);
// x:[N,C,H,W] -> [N,C,H/2,W/2]; window 2x2, stride 2, trailing odd row/col dropped.
Var max_pool2(Var x);

Var relu(Var x);
Var exp(Var x);
Var log(Var x);
// d/dx sqrt(x) is taken as 0 at x == 0.
Var sqrt(Var x);
// Subgradient 0 at x == 0.
Var abs(Var x);
// log(1 + e^x), evaluated without overflow.
Var softplus(Var x);
// max(x, floor); gradient passes only where x > floor.
Var clamp_min(Var x, double floor);
// Huber function with transition point delta > 0.
Var huber(Var x, double delta);

// Row-wise log-softmax of x:[N,K].
Var log_softmax(Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double c);
Var add_scalar(Var x, double c);

// Reductions over every element -> [1].
Var sum(Var x);
Var mean(Var x);
// log(mean(exp(x))) over every element -> [1], max-shifted.
Var log_mean_exp(Var x);
// x:[N,K] -> [N]
Var sum_rows(Var x);

// x:[N,K], labels in [0,K) -> [N] holding x[i, labels[i]].
Var pick(Var x, std::span<const std::size_t> labels);
// Elements of a flat tensor at the given positions -> [indices.size()].
Var gather(Var x, std::span<const std::size_t> indices);
// Flat concatenation of two tensors -> [a.size() + b.size()].
Var concat(Var a, Var b);
// x:[N,...] -> [N, prod(rest)]
Var flatten(Var x);
Var reshape(Var x, Shape shape);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator*(Var x, double c) { return scale(x, c); }

}  // namespace dair::ad
