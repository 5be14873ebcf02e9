#include "doctest.h"

#include "clab/errors.hpp"
#include "clab/optim.hpp"

#include <cmath>

using namespace clab;

namespace {

TensorPtr scalar_param(double v) {
    auto t = make_tensor({1}, true);
    t->values[0] = v;
    return t;
}

void set_grad(const TensorPtr& t, double g) {
    t->ensure_grad();
    t->grad[0] = g;
}

} // namespace

TEST_CASE("zero gradient, zero decay, zero momentum leaves parameters alone") {
    auto p = scalar_param(1.5);
    SgdOptimizer opt({p}, 0.0, 0.0);
    set_grad(p, 0.0);
    opt.step(0.1);
    CHECK(p->values[0] == 1.5);
}

TEST_CASE("plain step: theta=1, g=1, lr=0.1 -> 0.9") {
    auto p = scalar_param(1.0);
    SgdOptimizer opt({p}, 0.0, 0.0);
    set_grad(p, 1.0);
    opt.step(0.1);
    CHECK(p->values[0] == doctest::Approx(0.9));
}

TEST_CASE("two momentum steps on constant gradient reach -0.29") {
    // v1 = 1, theta1 = -0.1; v2 = 0.9 + 1 = 1.9, theta2 = -0.1 - 0.19 = -0.29
    auto p = scalar_param(0.0);
    SgdOptimizer opt({p}, 0.9, 0.0);
    set_grad(p, 1.0);
    opt.step(0.1);
    set_grad(p, 1.0);
    opt.step(0.1);
    CHECK(p->values[0] == doctest::Approx(-0.29));
}

TEST_CASE("weight decay couples into the gradient") {
    // v = g + wd * theta = 1 + 0.5 * 2 = 2; theta = 2 - 0.1 * 2 = 1.8
    auto p = scalar_param(2.0);
    SgdOptimizer opt({p}, 0.0, 0.5);
    set_grad(p, 1.0);
    opt.step(0.1);
    CHECK(p->values[0] == doctest::Approx(1.8));
}

TEST_CASE("frozen parameters are skipped") {
    auto p = scalar_param(3.0);
    p->requires_grad = false;
    SgdOptimizer opt({p}, 0.9, 5e-4);
    opt.step(0.1);
    CHECK(p->values[0] == 3.0);
}

TEST_CASE("non-finite gradient aborts the step with diagnostics") {
    auto p = scalar_param(1.0);
    SgdOptimizer opt({p}, 0.0, 0.0);
    set_grad(p, std::nan(""));
    CHECK_THROWS_AS(opt.step(0.1), NumericError);
}

TEST_CASE("zero_grad clears accumulated gradients") {
    auto p = scalar_param(1.0);
    SgdOptimizer opt({p}, 0.0, 0.0);
    set_grad(p, 2.0);
    opt.zero_grad();
    CHECK(p->grad[0] == 0.0);
}

TEST_CASE("step decay divides at each milestone") {
    const StepDecay sched{0.1, {30, 60, 80}, 0.2};
    const LrSchedule s = sched;
    CHECK(lr_at(s, 0) == doctest::Approx(0.1));
    CHECK(lr_at(s, 29) == doctest::Approx(0.1));
    CHECK(lr_at(s, 30) == doctest::Approx(0.02));
    CHECK(lr_at(s, 59) == doctest::Approx(0.02));
    CHECK(lr_at(s, 60) == doctest::Approx(0.004));
    CHECK(lr_at(s, 80) == doctest::Approx(0.0008));
    CHECK(lr_at(s, 99) == doctest::Approx(0.0008));
}

TEST_CASE("warmup starts at warmup_start and ramps to the initial lr") {
    const LrSchedule s = LinearWarmupThenStep{0.02, 5, 0.1, {30}, 0.2};
    CHECK(lr_at(s, 0) == doctest::Approx(0.02));
    CHECK(lr_at(s, 1) == doctest::Approx(0.02 + (0.1 - 0.02) / 5.0));
    CHECK(lr_at(s, 5) == doctest::Approx(0.1));
    CHECK(lr_at(s, 29) == doctest::Approx(0.1));
    CHECK(lr_at(s, 30) == doctest::Approx(0.02));
}

TEST_CASE("cosine annealing hits exactly zero at T_max") {
    const LrSchedule s = CosineAnnealing{0.1, 100};
    CHECK(lr_at(s, 0) == doctest::Approx(0.1));
    CHECK(lr_at(s, 50) == doctest::Approx(0.05));
    CHECK(lr_at(s, 100) == 0.0);
    CHECK(lr_at(s, 150) == 0.0);
}

TEST_CASE("step and cosine schedules never increase") {
    const LrSchedule step = StepDecay{0.1, {10, 20}, 0.5};
    const LrSchedule cos = CosineAnnealing{0.1, 60};
    double prev_s = 1e9, prev_c = 1e9;
    for (std::size_t e = 0; e < 70; ++e) {
        CHECK(lr_at(step, e) <= prev_s);
        CHECK(lr_at(cos, e) <= prev_c);
        prev_s = lr_at(step, e);
        prev_c = lr_at(cos, e);
    }
}

TEST_CASE("schedule validation rejects bad settings") {
    CHECK_THROWS_AS(validate_schedule(StepDecay{0.0, {10}, 0.2}), ConfigError);
    CHECK_THROWS_AS(validate_schedule(StepDecay{0.1, {10}, 1.0}), ConfigError);
    CHECK_THROWS_AS(validate_schedule(StepDecay{0.1, {10, 10}, 0.2}), ConfigError);
    CHECK_THROWS_AS(validate_schedule(LinearWarmupThenStep{0.0, 5, 0.1, {30}, 0.2}),
                    ConfigError);
    CHECK_THROWS_AS(validate_schedule(CosineAnnealing{0.1, 0}), ConfigError);
    CHECK_NOTHROW(validate_schedule(StepDecay{0.1, {}, 0.2}));
}
