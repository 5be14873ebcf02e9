#pragma once

#include "clab/tensor.hpp"

#include <cstddef>
#include <variant>
#include <vector>

namespace clab {

// Classic momentum SGD with L2-coupled weight decay:
//   v <- mu * v + (g + wd * theta);  theta <- theta - lr * v
class SgdOptimizer {
  public:
    SgdOptimizer(std::vector<TensorPtr> params, double momentum, double weight_decay);

    // Applies one update to every trainable parameter. Throws NumericError on
    // a non-finite gradient, identifying the parameter index.
    void step(double lr);

    void zero_grad();

  private:
    std::vector<TensorPtr> params_;
    std::vector<std::vector<double>> velocity_;
    double momentum_;
    double weight_decay_;
};

struct StepDecay {
    double initial = 0.1;
    std::vector<std::size_t> milestones;
    double factor = 0.2;

    bool operator==(const StepDecay&) const = default;
};

struct LinearWarmupThenStep {
    double warmup_start = 0.02;
    std::size_t warmup_epochs = 5;
    double initial = 0.1;
    std::vector<std::size_t> milestones;
    double factor = 0.2;

    bool operator==(const LinearWarmupThenStep&) const = default;
};

struct CosineAnnealing {
    double initial = 0.1;
    std::size_t t_max = 100;

    bool operator==(const CosineAnnealing&) const = default;
};

using LrSchedule = std::variant<StepDecay, LinearWarmupThenStep, CosineAnnealing>;

void validate_schedule(const LrSchedule& schedule);

// Learning rate for a zero-based epoch index. StepDecay multiplies by factor
// once per milestone <= epoch; warmup interpolates linearly from warmup_start
// to initial over warmup_epochs, then follows the step rule; cosine returns
// exactly 0.0 for epoch >= t_max.
double lr_at(const LrSchedule& schedule, std::size_t epoch);

} // namespace clab
