#include "doctest.h"

#include "clab/errors.hpp"
#include "clab/metrics.hpp"
#include "clab/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

using namespace clab;

namespace {

// Brute-force oracles. Deliberately separate code paths from the library:
// raw index loops with no member-list precomputation, and a full k-subset
// enumeration for the neighborhood metric. They follow the same canonical
// summation order (classes ascending, indices ascending), so agreement is
// checked bit for bit.

double oracle_dist(const std::vector<double>& data, std::size_t dim, std::size_t a,
                   std::size_t b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = data[a * dim + d] - data[b * dim + d];
        s += diff * diff;
    }
    return std::sqrt(s);
}

double oracle_alignment(const FeatureTable& ft) {
    double total = 0.0;
    for (std::size_t c = 0; c < ft.num_classes; ++c) {
        std::size_t count = 0;
        double acc = 0.0;
        for (std::size_t a = 0; a < ft.labels.size(); ++a) {
            if (ft.labels[a] != c) {
                continue;
            }
            ++count;
            for (std::size_t b = 0; b < ft.labels.size(); ++b) {
                if (ft.labels[b] != c) {
                    continue;
                }
                acc += oracle_dist(ft.features, ft.dim, a, b);
            }
        }
        total += acc / (static_cast<double>(count) * static_cast<double>(count));
    }
    return total / static_cast<double>(ft.num_classes);
}

std::vector<double> oracle_centroids(const FeatureTable& ft) {
    std::vector<double> cent(ft.num_classes * ft.dim, 0.0);
    for (std::size_t c = 0; c < ft.num_classes; ++c) {
        for (std::size_t i = 0; i < ft.labels.size(); ++i) {
            if (ft.labels[i] != c) {
                continue;
            }
            for (std::size_t d = 0; d < ft.dim; ++d) {
                cent[c * ft.dim + d] += ft.features[i * ft.dim + d];
            }
        }
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < ft.dim; ++d) {
            norm_sq += cent[c * ft.dim + d] * cent[c * ft.dim + d];
        }
        const double norm = std::sqrt(norm_sq);
        for (std::size_t d = 0; d < ft.dim; ++d) {
            cent[c * ft.dim + d] /= norm;
        }
    }
    return cent;
}

double oracle_uniformity(const std::vector<double>& cent, std::size_t c, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            if (j != i) {
                acc += oracle_dist(cent, dim, i, j);
            }
        }
    }
    return acc / (static_cast<double>(c) * static_cast<double>(c - 1));
}

// Minimum over all k-subsets of the other centroids, each subset summed in
// ascending class order.
double oracle_uk(const std::vector<double>& cent, std::size_t c, std::size_t dim,
                 std::size_t k) {
    double total = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < c; ++j) {
            if (j != i) {
                others.push_back(j);
            }
        }
        std::vector<std::size_t> pick(k);
        std::iota(pick.begin(), pick.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        while (true) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) {
                s += oracle_dist(cent, dim, i, others[pick[t]]);
            }
            best = std::min(best, s);
            std::size_t t = k;
            while (t > 0 && pick[t - 1] == others.size() - k + (t - 1)) {
                --t;
            }
            if (t == 0) {
                break;
            }
            ++pick[t - 1];
            for (std::size_t u = t; u < k; ++u) {
                pick[u] = pick[u - 1] + 1;
            }
        }
        total += best;
    }
    return total / static_cast<double>(c);
}

FeatureTable random_table(Rng& rng) {
    FeatureTable ft;
    ft.num_classes = 2 + rng.below(9); // up to 10
    ft.dim = 1 + rng.below(8);         // up to 8
    const std::size_t m = ft.num_classes + rng.below(201 - ft.num_classes); // up to 200
    ft.labels.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        // first C samples pin one member per class, the rest are free
        ft.labels[i] = i < ft.num_classes ? i : rng.below(ft.num_classes);
    }
    ft.features.resize(m * ft.dim);
    for (double& v : ft.features) {
        v = rng.normal();
    }
    return ft;
}

FeatureTable table(std::vector<double> features, std::size_t dim,
                   std::vector<std::size_t> labels, std::size_t c) {
    FeatureTable ft;
    ft.features = std::move(features);
    ft.dim = dim;
    ft.labels = std::move(labels);
    ft.num_classes = c;
    return ft;
}

} // namespace

TEST_CASE("alignment hand cases") {
    // one class, features (0,0) and (2,0): ordered pairs 0,2,2,0 -> mean 1.0
    auto two = table({0, 0, 2, 0}, 2, {0, 0}, 1);
    CHECK(alignment(two) == doctest::Approx(1.0).epsilon(1e-12));

    // identical features per class collapse to zero
    auto flat = table({1, 1, 1, 1, 5, 5}, 2, {0, 0, 1}, 2);
    CHECK(alignment(flat) == 0.0);

    // singleton classes only contribute self-pairs
    auto singles = table({1, 0, 0, 1}, 2, {0, 1}, 2);
    CHECK(alignment(singles) == 0.0);
}

TEST_CASE("alignment rejects an empty class") {
    auto ft = table({1, 0}, 2, {0}, 2);
    CHECK_THROWS(alignment(ft));
}

TEST_CASE("sphere centroid hand cases") {
    auto one = table({3, 4}, 2, {0}, 1);
    const auto c1 = sphere_centroids(one);
    CHECK(c1[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(c1[1] == doctest::Approx(0.8).epsilon(1e-12));

    auto two = table({1, 0, 0, 1}, 2, {0, 0}, 1);
    const auto c2 = sphere_centroids(two);
    CHECK(c2[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(c2[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    auto degenerate = table({1, 0, -1, 0}, 2, {0, 0}, 1);
    CHECK_THROWS_AS(sphere_centroids(degenerate), NumericError);
}

TEST_CASE("uniformity hand cases") {
    const std::vector<double> antipodal = {1, 0, -1, 0};
    CHECK(std::abs(uniformity(antipodal, 2, 2) - 2.0) < 1e-12);

    const std::vector<double> same = {1, 0, 1, 0};
    CHECK(uniformity(same, 2, 2) == 0.0);

    const double s3 = std::sqrt(3.0) / 2.0;
    const std::vector<double> triplet = {1, 0, -0.5, s3, -0.5, -s3};
    CHECK(std::abs(uniformity(triplet, 3, 2) - std::sqrt(3.0)) < 1e-12);

    CHECK_THROWS(uniformity(antipodal, 1, 4));
}

TEST_CASE("neighborhood uniformity hand cases") {
    // centroids e1, -e1, e2: nearest-neighbor distances are sqrt2, sqrt2, sqrt2
    const std::vector<double> cent = {1, 0, -1, 0, 0, 1};
    CHECK(std::abs(neighborhood_uniformity(cent, 3, 2, 1) - std::sqrt(2.0)) < 1e-12);

    // two classes: U_1 equals U
    const std::vector<double> pair = {1, 0, 0, 1};
    CHECK(neighborhood_uniformity(pair, 2, 2, 1) ==
          doctest::Approx(uniformity(pair, 2, 2)).epsilon(1e-12));

    CHECK_THROWS(neighborhood_uniformity(cent, 3, 2, 0));
    CHECK_THROWS(neighborhood_uniformity(cent, 3, 2, 3));
}

TEST_CASE("k = C-1 recovers (C-1) times the uniformity") {
    Rng rng(41);
    FeatureTable ft = random_table(rng);
    const auto cent = sphere_centroids(ft);
    const double u = uniformity(cent, ft.num_classes, ft.dim);
    const double uk =
        neighborhood_uniformity(cent, ft.num_classes, ft.dim, ft.num_classes - 1);
    CHECK(uk == doctest::Approx((ft.num_classes - 1) * u).epsilon(1e-12));
}

TEST_CASE("metrics match the brute-force oracles bit for bit on 100 tables") {
    Rng rng(4242);
    for (int rep = 0; rep < 100; ++rep) {
        const FeatureTable ft = random_table(rng);

        const double a_lib = alignment(ft);
        const double a_orc = oracle_alignment(ft);
        CHECK(a_lib == a_orc);

        const auto c_lib = sphere_centroids(ft);
        const auto c_orc = oracle_centroids(ft);
        CHECK(c_lib == c_orc);

        const double u_lib = uniformity(c_lib, ft.num_classes, ft.dim);
        const double u_orc = oracle_uniformity(c_orc, ft.num_classes, ft.dim);
        CHECK(u_lib == u_orc);

        const std::size_t k = 1 + rng.below(ft.num_classes - 1);
        const double uk_lib = neighborhood_uniformity(c_lib, ft.num_classes, ft.dim, k);
        const double uk_orc = oracle_uk(c_orc, ft.num_classes, ft.dim, k);
        CHECK(uk_lib == uk_orc);
    }
}

TEST_CASE("uniformities respect the chord bounds on random tables") {
    Rng rng(43);
    for (int rep = 0; rep < 20; ++rep) {
        const FeatureTable ft = random_table(rng);
        const auto cent = sphere_centroids(ft);
        const double u = uniformity(cent, ft.num_classes, ft.dim);
        const double u1 = neighborhood_uniformity(cent, ft.num_classes, ft.dim, 1);
        CHECK(u >= 0.0);
        CHECK(u <= 2.0);
        CHECK(u1 >= 0.0);
        CHECK(u1 <= 2.0);
        CHECK(u1 <= (ft.num_classes - 1) * u + 1e-12);
    }
}

TEST_CASE("metrics are sample-order invariant and relabeling equivariant") {
    Rng rng(44);
    FeatureTable ft = random_table(rng);

    FeatureTable shuffled = ft;
    auto perm = rng.permutation(ft.labels.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled.labels[i] = ft.labels[perm[i]];
        for (std::size_t d = 0; d < ft.dim; ++d) {
            shuffled.features[i * ft.dim + d] = ft.features[perm[i] * ft.dim + d];
        }
    }
    CHECK(alignment(shuffled) == doctest::Approx(alignment(ft)).epsilon(1e-10));

    FeatureTable relabeled = ft;
    for (auto& l : relabeled.labels) {
        l = (l + 1) % ft.num_classes; // cyclic class rename
    }
    CHECK(alignment(relabeled) == doctest::Approx(alignment(ft)).epsilon(1e-10));
    const auto cu = sphere_centroids(ft);
    const auto cr = sphere_centroids(relabeled);
    CHECK(uniformity(cr, ft.num_classes, ft.dim) ==
          doctest::Approx(uniformity(cu, ft.num_classes, ft.dim)).epsilon(1e-10));
}

TEST_CASE("alignment is translation invariant, uniformity is not") {
    Rng rng(45);
    FeatureTable ft = random_table(rng);
    FeatureTable shifted = ft;
    for (std::size_t i = 0; i < ft.labels.size(); ++i) {
        shifted.features[i * ft.dim] += 100.0;
    }
    CHECK(alignment(shifted) == doctest::Approx(alignment(ft)).epsilon(1e-9));

    const auto cu = sphere_centroids(ft);
    const auto cs = sphere_centroids(shifted);
    const double u0 = uniformity(cu, ft.num_classes, ft.dim);
    const double u1 = uniformity(cs, ft.num_classes, ft.dim);
    CHECK(std::abs(u0 - u1) > 1e-6); // normalization precedes distances
}

TEST_CASE("split accuracy partitions by training counts") {
    // long-tail counts with thresholds (1000, 200): class 0 Many, 1 Median, 2+3 Few
    const std::vector<std::size_t> counts = {5000, 854, 146, 25};
    const std::vector<std::size_t> labels = {0, 0, 1, 1, 2, 2, 3, 3};
    const std::vector<std::size_t> preds = {0, 0, 1, 0, 2, 2, 3, 0};
    const auto sa = split_accuracy(preds, labels, counts, 1000, 200);
    CHECK(sa.all == doctest::Approx(6.0 / 8.0));
    REQUIRE(sa.many.has_value());
    CHECK(*sa.many == doctest::Approx(1.0));
    REQUIRE(sa.median.has_value());
    CHECK(*sa.median == doctest::Approx(0.5));
    REQUIRE(sa.few.has_value());
    CHECK(*sa.few == doctest::Approx(0.75));
}

TEST_CASE("all-correct predictions give unit accuracy in every split") {
    const std::vector<std::size_t> labels = {0, 1, 2, 3};
    const auto sa = split_accuracy(labels, labels, {5000, 854, 146, 25}, 1000, 200);
    CHECK(sa.all == 1.0);
    CHECK(*sa.many == 1.0);
    CHECK(*sa.median == 1.0);
    CHECK(*sa.few == 1.0);
}

TEST_CASE("empty splits are absent rather than zero") {
    const std::vector<std::size_t> labels = {0, 1};
    const auto sa = split_accuracy({0, 1}, labels, {50, 60}, 1000, 200);
    CHECK(!sa.many.has_value());
    CHECK(!sa.median.has_value());
    REQUIRE(sa.few.has_value());
    CHECK(*sa.few == 1.0);
}

TEST_CASE("alternate thresholds repartition the classes") {
    // thresholds (100, 20): 150 -> Many, 100 -> Median, 19 -> Few
    const auto sa = split_accuracy({0, 1, 2}, {0, 1, 2}, {150, 100, 19}, 100, 20);
    CHECK(sa.many.has_value());
    CHECK(sa.median.has_value());
    CHECK(sa.few.has_value());
    CHECK_THROWS(split_accuracy({0}, {0}, {10}, 20, 100)); // t_many <= t_few
}

TEST_CASE("metrics report serializes with fixed keys, absent splits omitted") {
    MetricsReport r;
    r.alignment = 1.5;
    r.uniformity = 1.25;
    r.neighborhood_uniformity_k1 = 0.75;
    r.acc_all = 0.5;
    r.acc_few = 0.25;
    const auto text = to_json(r);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("alignment") == 1.5);
    CHECK(j.at("uniformity") == 1.25);
    CHECK(j.at("neighborhood_uniformity_k1") == 0.75);
    CHECK(j.at("acc_all") == 0.5);
    CHECK(j.at("acc_few") == 0.25);
    CHECK(!j.contains("acc_many"));
    CHECK(!j.contains("acc_median"));
    CHECK(text.back() == '\n');
}
