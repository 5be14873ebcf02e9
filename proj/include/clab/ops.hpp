#pragma once

#include "clab/tensor.hpp"

#include <cstddef>
#include <vector>

namespace clab {

// Differentiable ops. Every op allocates its output, computes the forward
// result, and (when `tape` is non-null and some input requires grad) records
// a closure that scatters the output gradient back to its inputs. Passing a
// null tape runs pure inference.

// [M,K] x [K,N] -> [M,N]
TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b);

// x [N,I], w [I,O], b [O] -> [N,O]
TensorPtr linear(Tape* tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

// x [N,Cin,H,W], k [Cout,Cin,3,3], stride 1, zero padding 1 -> [N,Cout,H,W].
// Cross-correlation, no kernel flip.
TensorPtr conv2d_3x3(Tape* tape, const TensorPtr& x, const TensorPtr& k);

// x [N,C,H,W], b [C] -> adds b[c] to every spatial position of channel c.
TensorPtr bias_nchw(Tape* tape, const TensorPtr& x, const TensorPtr& b);

TensorPtr relu(Tape* tape, const TensorPtr& x);

// 2x2 window, stride 2. H and W must be even. Ties resolve to the first
// maximal element in row-major window order.
TensorPtr maxpool2(Tape* tape, const TensorPtr& x);

// [N,C,H,W] -> [N, C*H*W]
TensorPtr flatten2(Tape* tape, const TensorPtr& x);

// Gathers along dimension 0: out[i] = x[idx[i]]. Works for any rank >= 1;
// backward scatter-adds, so repeated indices accumulate.
TensorPtr gather_rows(Tape* tape, const TensorPtr& x, const std::vector<std::size_t>& idx);

// lambda * a + (1 - lambda) * b, elementwise over same-shape tensors.
TensorPtr mix(Tape* tape, const TensorPtr& a, const TensorPtr& b, double lambda);

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);

TensorPtr scale(Tape* tape, const TensorPtr& a, double s);

// sum_i weights[i] * x[i] over the flattened tensor -> scalar [1].
// Used to scalarize arbitrary outputs for gradient checks.
TensorPtr weighted_sum(Tape* tape, const TensorPtr& x, const std::vector<double>& weights);

// Mean over rows of (logsumexp(logits_r) - sum_c targets[r][c] * logits[r][c]).
// logits [N,C], targets [N,C]; each target row must sum to 1 within 1e-9.
// Rejects non-finite logits. Backward: (softmax - targets) / N.
TensorPtr softmax_xent(Tape* tape, const TensorPtr& logits, const TensorPtr& targets);

// Row-wise softmax of [N,C], inference only.
std::vector<double> softmax_rows(const TensorPtr& logits);

// Index of the max entry per row of [N,C]; ties -> lowest index.
std::vector<std::size_t> argmax_rows(const TensorPtr& logits);

// One-hot [N,C] target tensor from integer labels.
TensorPtr one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes);

} // namespace clab
