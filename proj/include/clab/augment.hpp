#pragma once

#include "clab/ops.hpp"
#include "clab/rng.hpp"

#include <cstddef>
#include <variant>
#include <vector>

namespace clab {

struct NoAugment {
    bool operator==(const NoAugment&) const = default;
};

// Input-space pair interpolation with lambda ~ Beta(alpha, alpha).
struct Mixup {
    double alpha = 1.0;

    bool operator==(const Mixup&) const = default;
};

// Mixup applied at a uniformly drawn eligible layer (0 = input). An empty
// eligible set means every mix point of the model.
struct ManifoldMixup {
    double alpha = 1.0;
    std::vector<std::size_t> eligible;

    bool operator==(const ManifoldMixup&) const = default;
};

enum class RateMode { Scheduled, FixedBeta, Fixed };

// Feature-space interpolation whose rate approaches the midpoint as training
// accuracy rises: lambda = exp(-beta * v_acc) under the Scheduled mode.
struct AmMixup {
    double beta = 0.34;
    RateMode rate_mode = RateMode::Scheduled;
    double fixed_alpha = 1.0;  // FixedBeta: lambda ~ Beta(alpha, alpha)
    double fixed_value = 0.51; // Fixed: constant lambda
    bool one_sided = true;
    bool last_layer_only = true;

    bool operator==(const AmMixup&) const = default;
};

using AugmentStrategy = std::variant<NoAugment, Mixup, ManifoldMixup, AmMixup>;

struct MixedBatch {
    TensorPtr inputs;  // mixed inputs or features
    TensorPtr target;  // [N, C]; rows sum to 1
    double lambda_used = 1.0;
    std::vector<std::size_t> pairing;
};

// Throws when idx is not a permutation of 0..n-1.
void validate_pairing(const std::vector<std::size_t>& idx, std::size_t n);

// lambda * t[i] + (1 - lambda) * t[pairing[i]] over rows, as a plain value
// computation (no tape).
TensorPtr mix_rows(const TensorPtr& t, double lambda, const std::vector<std::size_t>& pairing);

// x' = lambda * x_i + (1 - lambda) * x_j, y' likewise, j = pairing(i).
MixedBatch mixup_batch(const TensorPtr& x, const TensorPtr& y_onehot, double lambda,
                       const std::vector<std::size_t>& pairing);

std::size_t manifold_mix_layer(Rng& rng, const std::vector<std::size_t>& eligible);

// exp(-beta * v_acc); strictly decreasing in v_acc for beta > 0.
double am_lambda(double v_acc, double beta);

// Target rows for an interpolated pair batch: hard labels (c_i when
// lambda >= 0.5, else c_j) when one_sided, soft rows (lambda, 1 - lambda)
// otherwise.
TensorPtr am_targets(const std::vector<std::size_t>& labels, std::size_t num_classes,
                     double lambda_am, const std::vector<std::size_t>& pairing,
                     bool one_sided);

// z' = lambda * z_i + (1 - lambda) * z_j, built through the tape so gradients
// flow into both constituents. one_sided targets are hard labels: c_i when
// lambda >= 0.5, else c_j; otherwise soft rows (lambda, 1 - lambda).
MixedBatch am_mix_features(Tape* tape, const TensorPtr& z,
                           const std::vector<std::size_t>& labels, std::size_t num_classes,
                           double lambda_am, const std::vector<std::size_t>& pairing,
                           bool one_sided);

// lambda * CE(logits, y_i) + (1 - lambda) * CE(logits, y_j).
TensorPtr mixup_loss(Tape* tape, const TensorPtr& logits, const TensorPtr& y_i,
                     const TensorPtr& y_j, double lambda);

// Plain cross entropy against a strictly one-hot target matrix.
TensorPtr am_loss(Tape* tape, const TensorPtr& logits, const TensorPtr& one_sided_target);

} // namespace clab
