#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace clab {

// Immutable sample store. `ids` are stable per-sample identifiers assigned at
// generation time so that subsampled views keep their provenance; they are an
// in-memory aid and are not serialized.
struct Dataset {
    std::string name;
    std::vector<std::size_t> sample_shape; // per-sample dims, e.g. {2} or {3,32,32}
    std::vector<double> samples;           // [M * prod(sample_shape)]
    std::vector<std::size_t> labels;       // size M
    std::vector<std::size_t> fine_labels;  // empty, or size M after a coarse remap
    std::vector<std::size_t> ids;          // size M
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }

    std::size_t sample_dim() const {
        std::size_t d = 1;
        for (std::size_t s : sample_shape) {
            d *= s;
        }
        return d;
    }

    std::vector<std::size_t> class_counts() const;
};

struct TrainTest {
    Dataset train;
    Dataset test;
};

// C isotropic Gaussian clusters with equally spaced unit mean directions
// (angles 2*pi*c/C in the first two coordinates, zero elsewhere) and
// per-coordinate standard deviation `spread`. Stratified 80/20 split: the
// first 80% of each class's draws form the train split.
TrainTest gaussian_toy(std::size_t num_classes, std::size_t per_class_n, std::size_t dim,
                       double spread, std::uint64_t seed);

// floor(n_max * imb^(-c/(C-1))) per class, head first.
std::vector<std::size_t> longtail_counts(std::size_t num_classes, std::size_t n_max,
                                         double imb_factor);

// Keeps the first n_c samples of each class under a seeded shuffle; the input
// must be balanced. Kept samples stay in their original relative order.
Dataset longtail_subsample(const Dataset& ds, double imb_factor, std::uint64_t seed);

// Relabels through a surjective fine->coarse map, retaining the fine labels.
Dataset apply_coarse(const Dataset& ds, const std::vector<std::size_t>& fine_to_coarse);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Header `f0,...,f{d-1},label`; one numeric row per sample.
Dataset import_csv(const std::string& path);

} // namespace clab
