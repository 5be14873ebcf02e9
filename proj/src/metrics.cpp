#include "clab/metrics.hpp"

#include "clab/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clab {

namespace {

double row_distance(const std::vector<double>& data, std::size_t dim, std::size_t a,
                    std::size_t b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const double diff = data[a * dim + c] - data[b * dim + c];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

std::vector<std::vector<std::size_t>> members_by_class(const FeatureTable& ft) {
    std::vector<std::vector<std::size_t>> members(ft.num_classes);
    for (std::size_t i = 0; i < ft.labels.size(); ++i) {
        members[ft.labels[i]].push_back(i);
    }
    return members;
}

} // namespace

void validate_table(const FeatureTable& ft) {
    if (ft.dim == 0 || ft.num_classes == 0) {
        throw std::invalid_argument("feature table: dim and num_classes must be positive");
    }
    if (ft.features.size() != ft.labels.size() * ft.dim) {
        throw std::invalid_argument("feature table: feature buffer size mismatch");
    }
    for (std::size_t l : ft.labels) {
        if (l >= ft.num_classes) {
            throw std::invalid_argument("feature table: label out of range");
        }
    }
}

double alignment(const FeatureTable& ft) {
    validate_table(ft);
    const auto members = members_by_class(ft);
    double total = 0.0;
    for (std::size_t c = 0; c < ft.num_classes; ++c) {
        const auto& m = members[c];
        if (m.empty()) {
            throw std::invalid_argument("alignment: empty class");
        }
        double acc = 0.0;
        for (std::size_t a : m) {
            for (std::size_t b : m) {
                acc += row_distance(ft.features, ft.dim, a, b);
            }
        }
        total += acc / (static_cast<double>(m.size()) * static_cast<double>(m.size()));
    }
    return total / static_cast<double>(ft.num_classes);
}

std::vector<double> sphere_centroids(const FeatureTable& ft) {
    validate_table(ft);
    const auto members = members_by_class(ft);
    std::vector<double> centroids(ft.num_classes * ft.dim, 0.0);
    for (std::size_t c = 0; c < ft.num_classes; ++c) {
        const auto& m = members[c];
        if (m.empty()) {
            throw std::invalid_argument("sphere_centroids: empty class");
        }
        for (std::size_t i : m) {
            for (std::size_t d = 0; d < ft.dim; ++d) {
                centroids[c * ft.dim + d] += ft.features[i * ft.dim + d];
            }
        }
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < ft.dim; ++d) {
            norm_sq += centroids[c * ft.dim + d] * centroids[c * ft.dim + d];
        }
        const double norm = std::sqrt(norm_sq);
        if (norm == 0.0) {
            throw NumericError("sphere_centroids: zero-norm feature sum for class " +
                               std::to_string(c));
        }
        for (std::size_t d = 0; d < ft.dim; ++d) {
            centroids[c * ft.dim + d] /= norm;
        }
    }
    return centroids;
}

double uniformity(const std::vector<double>& centroids, std::size_t num_classes,
                  std::size_t dim) {
    if (num_classes < 2) {
        throw std::invalid_argument("uniformity: at least two classes required");
    }
    if (centroids.size() != num_classes * dim) {
        throw std::invalid_argument("uniformity: centroid buffer size mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < num_classes; ++i) {
        for (std::size_t j = 0; j < num_classes; ++j) {
            if (j == i) {
                continue;
            }
            acc += row_distance(centroids, dim, i, j);
        }
    }
    return acc / (static_cast<double>(num_classes) * static_cast<double>(num_classes - 1));
}

double neighborhood_uniformity(const std::vector<double>& centroids,
                               std::size_t num_classes, std::size_t dim, std::size_t k) {
    if (num_classes < 2) {
        throw std::invalid_argument("neighborhood_uniformity: at least two classes required");
    }
    if (k < 1 || k > num_classes - 1) {
        throw std::invalid_argument("neighborhood_uniformity: k must lie in [1, C-1]");
    }
    if (centroids.size() != num_classes * dim) {
        throw std::invalid_argument("neighborhood_uniformity: centroid buffer size mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < num_classes; ++i) {
        std::vector<std::pair<double, std::size_t>> dists;
        dists.reserve(num_classes - 1);
        for (std::size_t j = 0; j < num_classes; ++j) {
            if (j == i) {
                continue;
            }
            dists.emplace_back(row_distance(centroids, dim, i, j), j);
        }
        std::sort(dists.begin(), dists.end());
        // Sum the k nearest in ascending class order so the result matches a
        // subset-enumeration oracle bit for bit.
        std::vector<std::size_t> chosen;
        for (std::size_t t = 0; t < k; ++t) {
            chosen.push_back(dists[t].second);
        }
        std::sort(chosen.begin(), chosen.end());
        double acc = 0.0;
        for (std::size_t j : chosen) {
            acc += row_distance(centroids, dim, i, j);
        }
        total += acc;
    }
    return total / static_cast<double>(num_classes);
}

SplitAccuracy split_accuracy(const std::vector<std::size_t>& preds,
                             const std::vector<std::size_t>& labels,
                             const std::vector<std::size_t>& train_counts,
                             std::size_t t_many, std::size_t t_few) {
    if (preds.size() != labels.size()) {
        throw std::invalid_argument("split_accuracy: preds and labels differ in length");
    }
    if (labels.empty()) {
        throw std::invalid_argument("split_accuracy: empty evaluation set");
    }
    if (t_many <= t_few) {
        throw std::invalid_argument("split_accuracy: thresholds must satisfy t_many > t_few");
    }
    enum { kMany = 0, kMedian = 1, kFew = 2 };
    std::vector<int> split_of(train_counts.size());
    for (std::size_t c = 0; c < train_counts.size(); ++c) {
        if (train_counts[c] > t_many) {
            split_of[c] = kMany;
        } else if (train_counts[c] < t_few) {
            split_of[c] = kFew;
        } else {
            split_of[c] = kMedian;
        }
    }

    std::size_t correct[3] = {0, 0, 0};
    std::size_t total[3] = {0, 0, 0};
    std::size_t correct_all = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= train_counts.size()) {
            throw std::invalid_argument("split_accuracy: label outside train_counts range");
        }
        const int s = split_of[labels[i]];
        ++total[s];
        if (preds[i] == labels[i]) {
            ++correct[s];
            ++correct_all;
        }
    }

    SplitAccuracy out;
    out.all = static_cast<double>(correct_all) / static_cast<double>(labels.size());
    const auto ratio = [&](int s) -> std::optional<double> {
        if (total[s] == 0) {
            return std::nullopt;
        }
        return static_cast<double>(correct[s]) / static_cast<double>(total[s]);
    };
    out.many = ratio(kMany);
    out.median = ratio(kMedian);
    out.few = ratio(kFew);
    return out;
}

std::string to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["alignment"] = report.alignment;
    j["uniformity"] = report.uniformity;
    j["neighborhood_uniformity_k1"] = report.neighborhood_uniformity_k1;
    j["acc_all"] = report.acc_all;
    if (report.acc_many) {
        j["acc_many"] = *report.acc_many;
    }
    if (report.acc_median) {
        j["acc_median"] = *report.acc_median;
    }
    if (report.acc_few) {
        j["acc_few"] = *report.acc_few;
    }
    return j.dump(2) + "\n";
}

} // namespace clab
