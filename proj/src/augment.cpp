#include "clab/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace clab {

void validate_pairing(const std::vector<std::size_t>& idx, std::size_t n) {
    if (idx.size() != n) {
        throw std::invalid_argument("pairing: size must match batch size");
    }
    std::vector<bool> seen(n, false);
    for (std::size_t j : idx) {
        if (j >= n || seen[j]) {
            throw std::invalid_argument("pairing: not a permutation of batch indices");
        }
        seen[j] = true;
    }
}

TensorPtr mix_rows(const TensorPtr& t, double lambda, const std::vector<std::size_t>& pairing) {
    if (t->shape.empty() || t->shape[0] != pairing.size()) {
        throw std::invalid_argument("mix_rows: leading dim must match pairing size");
    }
    const std::size_t n = t->shape[0];
    const std::size_t d = n == 0 ? 0 : t->numel() / n;
    auto out = make_tensor(t->shape);
    const double lb = 1.0 - lambda;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = pairing[i];
        for (std::size_t c = 0; c < d; ++c) {
            out->values[i * d + c] = lambda * t->values[i * d + c] + lb * t->values[j * d + c];
        }
    }
    return out;
}

MixedBatch mixup_batch(const TensorPtr& x, const TensorPtr& y_onehot, double lambda,
                       const std::vector<std::size_t>& pairing) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw std::invalid_argument("mixup_batch: lambda must lie in [0, 1]");
    }
    if (x->shape.empty() || y_onehot->shape.size() != 2 ||
        y_onehot->shape[0] != x->shape[0]) {
        throw std::invalid_argument("mixup_batch: x and y must share the batch dim");
    }
    validate_pairing(pairing, x->shape[0]);
    MixedBatch out;
    out.inputs = mix_rows(x, lambda, pairing);
    out.target = mix_rows(y_onehot, lambda, pairing);
    out.lambda_used = lambda;
    out.pairing = pairing;
    return out;
}

std::size_t manifold_mix_layer(Rng& rng, const std::vector<std::size_t>& eligible) {
    if (eligible.empty()) {
        throw std::invalid_argument("manifold_mix_layer: eligible set is empty");
    }
    return eligible[rng.below(eligible.size())];
}

double am_lambda(double v_acc, double beta) {
    if (v_acc < 0.0 || v_acc > 1.0) {
        throw std::invalid_argument("am_lambda: v_acc must lie in [0, 1]");
    }
    if (beta < 0.0) {
        throw std::invalid_argument("am_lambda: beta must be >= 0");
    }
    return std::exp(-beta * v_acc);
}

TensorPtr am_targets(const std::vector<std::size_t>& labels, std::size_t num_classes,
                     double lambda_am, const std::vector<std::size_t>& pairing,
                     bool one_sided) {
    validate_pairing(pairing, labels.size());
    auto target = make_tensor({labels.size(), num_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t ci = labels[i];
        const std::size_t cj = labels[pairing[i]];
        if (ci >= num_classes || cj >= num_classes) {
            throw std::invalid_argument("am_targets: label out of range");
        }
        if (one_sided) {
            target->values[i * num_classes + (lambda_am >= 0.5 ? ci : cj)] = 1.0;
        } else {
            target->values[i * num_classes + ci] += lambda_am;
            target->values[i * num_classes + cj] += 1.0 - lambda_am;
        }
    }
    return target;
}

MixedBatch am_mix_features(Tape* tape, const TensorPtr& z,
                           const std::vector<std::size_t>& labels, std::size_t num_classes,
                           double lambda_am, const std::vector<std::size_t>& pairing,
                           bool one_sided) {
    if (lambda_am <= 0.0 || lambda_am > 1.0) {
        throw std::invalid_argument("am_mix_features: lambda must lie in (0, 1]");
    }
    if (z->shape.size() != 2 || z->shape[0] != labels.size()) {
        throw std::invalid_argument("am_mix_features: z rows must match label count");
    }
    validate_pairing(pairing, z->shape[0]);

    MixedBatch out;
    out.inputs = mix(tape, z, gather_rows(tape, z, pairing), lambda_am);
    out.lambda_used = lambda_am;
    out.pairing = pairing;
    out.target = am_targets(labels, num_classes, lambda_am, pairing, one_sided);
    return out;
}

TensorPtr mixup_loss(Tape* tape, const TensorPtr& logits, const TensorPtr& y_i,
                     const TensorPtr& y_j, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw std::invalid_argument("mixup_loss: lambda must lie in [0, 1]");
    }
    auto ce_i = softmax_xent(tape, logits, y_i);
    auto ce_j = softmax_xent(tape, logits, y_j);
    return add(tape, scale(tape, ce_i, lambda), scale(tape, ce_j, 1.0 - lambda));
}

TensorPtr am_loss(Tape* tape, const TensorPtr& logits, const TensorPtr& one_sided_target) {
    if (one_sided_target->shape.size() != 2) {
        throw std::invalid_argument("am_loss: target must be [N, C]");
    }
    const std::size_t n = one_sided_target->shape[0], c = one_sided_target->shape[1];
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < c; ++j) {
            const double v = one_sided_target->values[r * c + j];
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                throw std::invalid_argument("am_loss: target is not one-hot");
            }
        }
        if (ones != 1) {
            throw std::invalid_argument("am_loss: target is not one-hot");
        }
    }
    return softmax_xent(tape, logits, one_sided_target);
}

} // namespace clab
