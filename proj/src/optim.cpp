#include "clab/optim.hpp"

#include "clab/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace clab {

SgdOptimizer::SgdOptimizer(std::vector<TensorPtr> params, double momentum,
                           double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
    velocity_.reserve(params_.size());
    for (const auto& p : params_) {
        velocity_.emplace_back(p->values.size(), 0.0);
    }
}

void SgdOptimizer::step(double lr) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        if (!p.requires_grad) {
            continue;
        }
        p.ensure_grad();
        auto& v = velocity_[i];
        for (std::size_t j = 0; j < p.values.size(); ++j) {
            const double g = p.grad[j];
            if (!std::isfinite(g)) {
                throw NumericError("sgd: non-finite gradient in parameter " +
                                   std::to_string(i));
            }
            v[j] = momentum_ * v[j] + (g + weight_decay_ * p.values[j]);
            p.values[j] -= lr * v[j];
        }
    }
}

void SgdOptimizer::zero_grad() {
    for (const auto& p : params_) {
        p->zero_grad();
    }
}

void validate_schedule(const LrSchedule& schedule) {
    const auto check_steps = [](double initial, const std::vector<std::size_t>& ms,
                                double factor) {
        if (initial <= 0.0) {
            throw ConfigError("optim: initial learning rate must be > 0");
        }
        if (factor <= 0.0 || factor >= 1.0) {
            throw ConfigError("optim: decay factor must lie in (0, 1)");
        }
        for (std::size_t i = 1; i < ms.size(); ++i) {
            if (ms[i] <= ms[i - 1]) {
                throw ConfigError("optim: milestones must be strictly increasing");
            }
        }
    };
    if (const auto* s = std::get_if<StepDecay>(&schedule)) {
        check_steps(s->initial, s->milestones, s->factor);
    } else if (const auto* w = std::get_if<LinearWarmupThenStep>(&schedule)) {
        check_steps(w->initial, w->milestones, w->factor);
        if (w->warmup_start <= 0.0) {
            throw ConfigError("optim: warmup start must be > 0");
        }
        if (w->warmup_epochs == 0) {
            throw ConfigError("optim: warmup length must be >= 1 epoch");
        }
    } else {
        const auto& c = std::get<CosineAnnealing>(schedule);
        if (c.initial <= 0.0) {
            throw ConfigError("optim: initial learning rate must be > 0");
        }
        if (c.t_max == 0) {
            throw ConfigError("optim: cosine t_max must be >= 1");
        }
    }
}

namespace {

double step_value(double initial, const std::vector<std::size_t>& milestones,
                  double factor, std::size_t epoch) {
    double lr = initial;
    for (std::size_t m : milestones) {
        if (m <= epoch) {
            lr *= factor;
        }
    }
    return lr;
}

} // namespace

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
    if (const auto* s = std::get_if<StepDecay>(&schedule)) {
        return step_value(s->initial, s->milestones, s->factor, epoch);
    }
    if (const auto* w = std::get_if<LinearWarmupThenStep>(&schedule)) {
        if (epoch < w->warmup_epochs) {
            const double t =
                static_cast<double>(epoch) / static_cast<double>(w->warmup_epochs);
            return w->warmup_start + (w->initial - w->warmup_start) * t;
        }
        return step_value(w->initial, w->milestones, w->factor, epoch);
    }
    const auto& c = std::get<CosineAnnealing>(schedule);
    if (epoch >= c.t_max) {
        return 0.0;
    }
    const double t = static_cast<double>(epoch) / static_cast<double>(c.t_max);
    return c.initial * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

} // namespace clab
