#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace clab {

// M feature rows of width dim with integer class labels. num_classes fixes
// the class index set; every class must be populated for centroid metrics.
struct FeatureTable {
    std::vector<double> features; // row-major [M x dim]
    std::size_t dim = 0;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
};

void validate_table(const FeatureTable& ft);

// Mean over classes of the average L2 distance across all ordered same-class
// pairs, self-pairs included; the 1/|F_i|^2 normalizer fixes that convention.
// Summation order: classes ascending, then both pair indices ascending by
// global sample position (keeps results bit-comparable with a plain loop).
double alignment(const FeatureTable& ft);

// Per-class sum of feature vectors projected onto the unit sphere. Throws on
// a zero-norm sum instead of producing NaN.
std::vector<double> sphere_centroids(const FeatureTable& ft);

// Mean L2 distance over ordered distinct centroid pairs; [0, 2] on the sphere.
double uniformity(const std::vector<double>& centroids, std::size_t num_classes,
                  std::size_t dim);

// Mean over classes of the sum of distances to the k nearest other centroids.
double neighborhood_uniformity(const std::vector<double>& centroids,
                               std::size_t num_classes, std::size_t dim, std::size_t k);

// Accuracy over all samples and per class-frequency split. A class is Many
// when its training count exceeds t_many, Few when below t_few, else Median.
// Splits with no classes are absent rather than zero.
struct SplitAccuracy {
    double all = 0.0;
    std::optional<double> many;
    std::optional<double> median;
    std::optional<double> few;
};

SplitAccuracy split_accuracy(const std::vector<std::size_t>& preds,
                             const std::vector<std::size_t>& labels,
                             const std::vector<std::size_t>& train_counts,
                             std::size_t t_many, std::size_t t_few);

struct MetricsReport {
    double alignment = 0.0;
    double uniformity = 0.0;
    double neighborhood_uniformity_k1 = 0.0;
    double acc_all = 0.0;
    std::optional<double> acc_many;
    std::optional<double> acc_median;
    std::optional<double> acc_few;
};

// Fixed-key JSON document; absent splits are omitted.
std::string to_json(const MetricsReport& report);

} // namespace clab
