#include "doctest.h"

#include "clab/augment.hpp"
#include "clab/errors.hpp"
#include "clab/ops.hpp"
#include "clab/rng.hpp"

#include <cmath>
#include <vector>

using namespace clab;

namespace {

TensorPtr filled(std::vector<std::size_t> shape, std::vector<double> vals) {
    auto t = make_tensor(std::move(shape));
    REQUIRE(t->numel() == vals.size());
    t->values = std::move(vals);
    return t;
}

} // namespace

TEST_CASE("pairing validation") {
    CHECK_NOTHROW(validate_pairing({2, 0, 1}, 3));
    CHECK_THROWS(validate_pairing({0, 0, 1}, 3)); // not a bijection
    CHECK_THROWS(validate_pairing({0, 1}, 3));    // wrong length
    CHECK_THROWS(validate_pairing({0, 3, 1}, 3)); // out of range
}

TEST_CASE("mixup_batch identity at lambda 1") {
    auto x = filled({2, 2}, {1, 2, 3, 4});
    auto y = one_hot({0, 1}, 2);
    auto mb = mixup_batch(x, y, 1.0, {1, 0});
    CHECK(mb.inputs->values == x->values);
    CHECK(mb.target->values == y->values);
    CHECK(mb.lambda_used == 1.0);
}

TEST_CASE("mixup_batch midpoint symmetry") {
    auto x = filled({2, 2}, {1, 0, 0, 1});
    auto y = one_hot({0, 1}, 2);
    auto mb = mixup_batch(x, y, 0.5, {1, 0});
    CHECK(mb.inputs->values == std::vector<double>{0.5, 0.5, 0.5, 0.5});
    CHECK(mb.target->values == std::vector<double>{0.5, 0.5, 0.5, 0.5});
}

TEST_CASE("mixup_batch soft labels follow lambda") {
    auto x = filled({2, 1}, {1, 0});
    auto y = one_hot({0, 1}, 2);
    auto mb = mixup_batch(x, y, 0.3, {1, 0});
    CHECK(mb.target->values[0] == doctest::Approx(0.3));
    CHECK(mb.target->values[1] == doctest::Approx(0.7));
}

TEST_CASE("mixup_batch rejects lambda outside [0,1]") {
    auto x = filled({1, 1}, {1});
    auto y = one_hot({0}, 2);
    CHECK_THROWS(mixup_batch(x, y, 1.5, {0}));
    CHECK_THROWS(mixup_batch(x, y, -0.1, {0}));
}

TEST_CASE("manifold layer draw degenerates on a singleton") {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        CHECK(manifold_mix_layer(rng, {0}) == 0);
    }
    CHECK_THROWS(manifold_mix_layer(rng, {}));
}

TEST_CASE("manifold layer draw is uniform over the eligible set") {
    Rng rng(2);
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        ++counts[manifold_mix_layer(rng, {0, 1, 2, 3})];
    }
    for (int c : counts) {
        CHECK(std::abs(c / static_cast<double>(n) - 0.25) < 0.01);
    }
}

TEST_CASE("manifold layer draw replays under a fixed seed") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(manifold_mix_layer(a, {0, 1, 2}) == manifold_mix_layer(b, {0, 1, 2}));
    }
}

TEST_CASE("am_lambda values from the rate formula") {
    CHECK(am_lambda(0.0, 0.67) == 1.0);
    CHECK(am_lambda(1.0, 0.67) == doctest::Approx(0.51171).epsilon(1e-5));
    CHECK(am_lambda(0.5, 0.34) == doctest::Approx(0.84366).epsilon(1e-5));
}

TEST_CASE("am_lambda decreases strictly in v_acc") {
    double prev = 2.0;
    for (int i = 0; i <= 100; ++i) {
        const double v = i / 100.0;
        const double lam = am_lambda(v, 0.34);
        CHECK(lam < prev);
        prev = lam;
    }
}

TEST_CASE("am_lambda image stays in [0.5117, 1] for beta up to 0.67") {
    for (double beta : {0.0, 0.17, 0.34, 0.67}) {
        for (int i = 0; i <= 20; ++i) {
            const double lam = am_lambda(i / 20.0, beta);
            CHECK(lam >= 0.5117);
            CHECK(lam <= 1.0);
        }
    }
}

TEST_CASE("am_lambda validates its domain") {
    CHECK_THROWS(am_lambda(-0.1, 0.34));
    CHECK_THROWS(am_lambda(1.1, 0.34));
    CHECK_THROWS(am_lambda(0.5, -1.0));
}

TEST_CASE("am_mix_features no-op at lambda 1") {
    auto z = filled({2, 2}, {1, 2, 3, 4});
    auto mb = am_mix_features(nullptr, z, {0, 1}, 2, 1.0, {1, 0}, true);
    CHECK(mb.inputs->values == z->values);
    CHECK(mb.target->values == one_hot({0, 1}, 2)->values);
}

TEST_CASE("am_mix_features boundary lambda 0.5 keeps c_i") {
    auto z = filled({2, 2}, {1, 0, 0, 1});
    auto mb = am_mix_features(nullptr, z, {0, 1}, 2, 0.5, {1, 0}, true);
    CHECK(mb.inputs->values == std::vector<double>{0.5, 0.5, 0.5, 0.5});
    // the >= 0.5 branch keeps each row's own label
    CHECK(mb.target->values == one_hot({0, 1}, 2)->values);
}

TEST_CASE("am_mix_features below one half takes c_j") {
    auto z = filled({2, 2}, {1, 0, 0, 1});
    auto mb = am_mix_features(nullptr, z, {0, 1}, 2, 0.3, {1, 0}, true);
    CHECK(mb.inputs->values[0] == doctest::Approx(0.3));
    CHECK(mb.inputs->values[1] == doctest::Approx(0.7));
    CHECK(mb.target->values == one_hot({1, 0}, 2)->values);
}

TEST_CASE("am_mix_features soft mode mirrors mixup targets") {
    auto z = filled({2, 2}, {1, 0, 0, 1});
    auto mb = am_mix_features(nullptr, z, {0, 1}, 2, 0.3, {1, 0}, false);
    CHECK(mb.target->values[0] == doctest::Approx(0.3));
    CHECK(mb.target->values[1] == doctest::Approx(0.7));
}

TEST_CASE("am_mix_features same-class pair folds the soft target") {
    auto z = filled({2, 2}, {1, 0, 2, 0});
    auto mb = am_mix_features(nullptr, z, {0, 0}, 2, 0.3, {1, 0}, false);
    CHECK(mb.target->values[0] == doctest::Approx(1.0));
    CHECK(mb.target->values[1] == doctest::Approx(0.0));
}

TEST_CASE("am_mix_features rejects lambda outside (0,1]") {
    auto z = filled({1, 2}, {1, 2});
    CHECK_THROWS(am_mix_features(nullptr, z, {0}, 2, 0.0, {0}, true));
    CHECK_THROWS(am_mix_features(nullptr, z, {0}, 2, 1.5, {0}, true));
}

TEST_CASE("am_mix_features routes gradients through both sides of the pair") {
    auto z = filled({2, 2}, {1, 0, 0, 1});
    z->requires_grad = true;
    Tape tape;
    auto mb = am_mix_features(&tape, z, {0, 1}, 2, 0.3, {1, 0}, true);
    auto loss = weighted_sum(&tape, mb.inputs, {1, 1, 1, 1});
    tape.backward(loss);
    // each input row feeds its own row (weight 0.3) and its partner (0.7)
    for (double g : z->grad) {
        CHECK(g == doctest::Approx(1.0));
    }
}

TEST_CASE("mixup_loss at lambda 1 is the plain CE of the first labels") {
    Rng rng(31);
    auto logits = make_tensor({3, 4});
    for (double& v : logits->values) {
        v = rng.normal();
    }
    auto yi = one_hot({0, 1, 2}, 4);
    auto yj = one_hot({3, 3, 3}, 4);
    const double lhs = mixup_loss(nullptr, logits, yi, yj, 1.0)->values[0];
    const double rhs = softmax_xent(nullptr, logits, yi)->values[0];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("mixup_loss on uniform two-class logits is ln 2 for any lambda") {
    auto logits = filled({2, 2}, {0, 0, 0, 0});
    auto yi = one_hot({0, 1}, 2);
    auto yj = one_hot({1, 0}, 2);
    for (double lam : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        CHECK(mixup_loss(nullptr, logits, yi, yj, lam)->values[0] ==
              doctest::Approx(std::log(2.0)));
    }
}

TEST_CASE("mixup_loss equals soft-target cross entropy to 1e-12") {
    Rng rng(33);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + rng.below(6);
        const std::size_t c = 2 + rng.below(5);
        auto logits = make_tensor({n, c});
        for (double& v : logits->values) {
            v = rng.normal() * 3.0;
        }
        std::vector<std::size_t> li(n), lj(n);
        for (std::size_t i = 0; i < n; ++i) {
            li[i] = rng.below(c);
            lj[i] = rng.below(c);
        }
        const double lam = rng.next_double();
        auto yi = one_hot(li, c);
        auto yj = one_hot(lj, c);
        auto soft = make_tensor({n, c});
        for (std::size_t i = 0; i < n * c; ++i) {
            soft->values[i] = lam * yi->values[i] + (1.0 - lam) * yj->values[i];
        }
        const double a = mixup_loss(nullptr, logits, yi, yj, lam)->values[0];
        const double b = softmax_xent(nullptr, logits, soft)->values[0];
        CHECK(std::abs(a - b) < 1e-12);
    }
}

TEST_CASE("am_loss is plain CE against one-hot targets") {
    auto logits = filled({1, 4}, {0, 0, 0, 0});
    CHECK(am_loss(nullptr, logits, one_hot({2}, 4))->values[0] ==
          doctest::Approx(std::log(4.0)));
}

TEST_CASE("am_loss rejects soft targets") {
    auto logits = filled({1, 2}, {0, 0});
    auto soft = filled({1, 2}, {0.5, 0.5});
    CHECK_THROWS(am_loss(nullptr, logits, soft));
}

TEST_CASE("lambda-1 augmentation duplicates the clean CE term") {
    Rng rng(35);
    auto z = make_tensor({4, 3});
    for (double& v : z->values) {
        v = rng.normal();
    }
    const std::vector<std::size_t> labels = {0, 1, 2, 0};
    auto mb = am_mix_features(nullptr, z, labels, 3, 1.0, rng.permutation(4), true);
    const double aug = am_loss(nullptr, mb.inputs, mb.target)->values[0];
    const double clean = softmax_xent(nullptr, z, one_hot(labels, 3))->values[0];
    CHECK(aug == doctest::Approx(clean).epsilon(1e-12));
}
