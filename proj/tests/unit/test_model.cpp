#include "doctest.h"

#include "clab/errors.hpp"
#include "clab/model.hpp"
#include "clab/ops.hpp"
#include "clab/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

using namespace clab;

namespace {

Model mlp_model(std::vector<std::size_t> widths, std::size_t classes) {
    ModelSpec spec;
    spec.encoder = MlpSpec{std::move(widths)};
    spec.num_classes = classes;
    return Model(spec);
}

TensorPtr batch(std::vector<std::size_t> shape, std::vector<double> vals) {
    auto t = make_tensor(std::move(shape));
    REQUIRE(t->numel() == vals.size());
    t->values = std::move(vals);
    return t;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("spec validation rejects degenerate shapes") {
    ModelSpec s;
    s.encoder = MlpSpec{{4, 8, 2}};
    s.num_classes = 1;
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s.num_classes = 3;
    CHECK_NOTHROW(validate_spec(s));
    s.encoder = MlpSpec{{4, 8, 1}};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s.encoder = MlpSpec{{}};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    CnnVis2DSpec cnn;
    cnn.in_h = 30; // not divisible by 8
    s.encoder = cnn;
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
}

TEST_CASE("zero-weight MLP maps everything to zero features") {
    auto model = mlp_model({3, 4, 2}, 2);
    auto z = model.features(nullptr, batch({2, 3}, {1, 2, 3, -1, -2, -3}));
    CHECK(z->shape == std::vector<std::size_t>{2, 2});
    for (double v : z->values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("identity 2->2 linear encoder passes features through") {
    auto model = mlp_model({2, 2}, 2);
    auto params = model.parameters();
    // encoder is a single linear layer: params[0] is its weight, params[1] bias
    params[0]->values = {1, 0, 0, 1};
    auto z = model.features(nullptr, batch({1, 2}, {3, 4}));
    CHECK(z->values == std::vector<double>{3, 4});
}

TEST_CASE("single-width MLP spec is an identity encoder") {
    auto model = mlp_model({5}, 3);
    CHECK(model.encoder_parameters().empty());
    auto x = batch({2, 5}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    auto z = model.features(nullptr, x);
    CHECK(z->values == x->values);
    CHECK(model.feature_dim() == 5);
}

TEST_CASE("cnn_vis2d emits feature_dim-wide rows") {
    ModelSpec spec;
    CnnVis2DSpec cnn;
    cnn.in_channels = 3;
    cnn.in_h = 32;
    cnn.in_w = 32;
    cnn.feature_dim = 2;
    spec.encoder = cnn;
    spec.num_classes = 4;
    Model model(spec);
    Rng rng(1);
    model.init(rng);
    auto x = make_tensor({4, 3, 32, 32});
    Rng data(2);
    for (double& v : x->values) {
        v = data.normal();
    }
    auto z = model.features(nullptr, x);
    CHECK(z->shape == std::vector<std::size_t>{4, 2});
    auto o = model.logits(nullptr, x);
    CHECK(o->shape == std::vector<std::size_t>{4, 4});
}

TEST_CASE("zero classifier gives uniform confidence") {
    auto model = mlp_model({2, 2}, 4);
    auto o = model.logits_from_features(nullptr, batch({1, 2}, {5, -3}));
    const auto p = softmax_rows(o);
    for (double v : p) {
        CHECK(v == doctest::Approx(0.25));
    }
}

TEST_CASE("identity classifier argmax picks the larger feature") {
    auto model = mlp_model({2}, 2);
    auto params = model.classifier_parameters();
    params[0]->values = {1, 0, 0, 1};
    auto o = model.logits_from_features(nullptr, batch({1, 2}, {10, 0}));
    CHECK(argmax_rows(o) == std::vector<std::size_t>{0});
}

TEST_CASE("init draws Kaiming-uniform weights and zero biases") {
    auto model = mlp_model({4, 8, 2}, 3);
    Rng rng(7);
    model.init(rng);
    const auto params = model.parameters();
    // layer 1 weight in [-sqrt(6/4), sqrt(6/4)], bias zero
    const double bound = std::sqrt(6.0 / 4.0);
    double spread = 0.0;
    for (double v : params[0]->values) {
        CHECK(std::abs(v) <= bound);
        spread = std::max(spread, std::abs(v));
    }
    CHECK(spread > 0.1 * bound);
    for (double v : params[1]->values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("init is seed-deterministic") {
    auto a = mlp_model({3, 5, 2}, 2);
    auto b = mlp_model({3, 5, 2}, 2);
    Rng r1(11), r2(11);
    a.init(r1);
    b.init(r2);
    const auto pa = a.parameters(), pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->values == pb[i]->values);
    }
}

TEST_CASE("layer mix hook at the input equals mixing the inputs directly") {
    auto model = mlp_model({2, 4, 2}, 2);
    Rng rng(3);
    model.init(rng);
    auto x = batch({3, 2}, {1, 0, 0, 1, 2, 2});
    const std::vector<std::size_t> pairing = {2, 0, 1};
    const double lam = 0.3;

    LayerMixHook hook{0, lam, pairing};
    auto hooked = model.features(nullptr, x, &hook);

    auto mixed = mix(nullptr, x, gather_rows(nullptr, x, pairing), lam);
    auto direct = model.features(nullptr, mixed);
    CHECK(hooked->values == direct->values);
}

TEST_CASE("layer mix hook at a hidden layer changes the output") {
    auto model = mlp_model({2, 4, 2}, 2);
    Rng rng(3);
    model.init(rng);
    auto x = batch({2, 2}, {1, 0, 0, 1});
    LayerMixHook hook{1, 0.5, {1, 0}};
    auto hooked = model.features(nullptr, x, &hook);
    auto plain = model.features(nullptr, x);
    CHECK(hooked->values != plain->values);

    LayerMixHook bad{5, 0.5, {1, 0}};
    CHECK_THROWS(model.features(nullptr, x, &bad));
}

TEST_CASE("mix point count differs per encoder") {
    CHECK(mlp_model({2, 64, 32, 2}, 4).num_mix_points() == 3);
    ModelSpec spec;
    spec.encoder = CnnVis2DSpec{};
    spec.num_classes = 2;
    CHECK(Model(spec).num_mix_points() == 4);
}

TEST_CASE("checkpoint round-trip restores spec and every parameter bit") {
    auto model = mlp_model({3, 6, 2}, 4);
    Rng rng(5);
    model.init(rng);
    const auto path = temp_path("clab_test_ckpt.bin");
    model.save(path);
    auto back = Model::load(path);
    CHECK(back.spec() == model.spec());
    const auto pa = model.parameters(), pb = back.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->values == pb[i]->values);
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint load rejects corruption") {
    auto model = mlp_model({2, 2}, 2);
    Rng rng(5);
    model.init(rng);
    const auto path = temp_path("clab_test_ckpt_bad.bin");
    model.save(path);

    SUBCASE("magic") {
        auto f = std::fopen(path.c_str(), "r+b");
        std::fputc('X', f);
        std::fclose(f);
        CHECK_THROWS_AS(Model::load(path), IoError);
    }
    SUBCASE("truncated") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
        CHECK_THROWS_AS(Model::load(path), IoError);
    }
    SUBCASE("trailing bytes") {
        auto f = std::fopen(path.c_str(), "ab");
        std::fputc(0, f);
        std::fclose(f);
        CHECK_THROWS_AS(Model::load(path), IoError);
    }
    std::remove(path.c_str());
}

TEST_CASE("encoder digest tracks encoder parameters only") {
    auto model = mlp_model({3, 4, 2}, 3);
    Rng rng(9);
    model.init(rng);
    const auto digest = model.encoder_digest();
    model.reset_classifier(rng);
    CHECK(model.encoder_digest() == digest);
    model.encoder_parameters()[0]->values[0] += 1.0;
    CHECK(model.encoder_digest() != digest);
}

TEST_CASE("set_trainable freezes parameter groups") {
    auto model = mlp_model({2, 3, 2}, 2);
    Rng rng(13);
    model.init(rng);
    model.set_trainable(false, true);
    for (const auto& p : model.encoder_parameters()) {
        CHECK(!p->requires_grad);
    }
    for (const auto& p : model.classifier_parameters()) {
        CHECK(p->requires_grad);
    }

    Tape tape;
    auto x = batch({2, 2}, {1, 0, 0, 1});
    auto loss = softmax_xent(&tape, model.logits(&tape, x), one_hot({0, 1}, 2));
    tape.backward(loss);
    for (const auto& p : model.encoder_parameters()) {
        CHECK(p->grad.empty()); // nothing recorded upstream of the classifier
    }
    for (const auto& p : model.classifier_parameters()) {
        REQUIRE(!p->grad.empty());
    }
}

TEST_CASE("adopt_encoder and adopt_classifier compose models") {
    auto donor = mlp_model({3, 4, 2}, 4);
    Rng rng(21);
    donor.init(rng);

    auto target = mlp_model({3, 4, 2}, 6);
    Rng rng2(22);
    target.init(rng2);
    target.adopt_encoder(donor);
    CHECK(target.encoder_digest() == donor.encoder_digest());

    auto probe = mlp_model({2}, 6);
    probe.init(rng2);
    target.adopt_classifier(probe);
    CHECK(target.classifier_parameters()[0]->values ==
          probe.classifier_parameters()[0]->values);

    auto wrong = mlp_model({3, 5, 2}, 6);
    wrong.init(rng2);
    CHECK_THROWS(target.adopt_encoder(wrong));
}
