#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace clab {

// Flat `key = value` experiment description with dotted sections. Unknown
// keys are configuration errors carrying the offending key path. Serialization
// round-trips losslessly (shortest round-trip float formatting).

struct ModelConfig {
    std::string kind = "mlp"; // mlp | cnn_vis2d
    std::vector<std::size_t> hidden = {64, 32};
    std::size_t feature_dim = 2;
    std::size_t in_channels = 3; // cnn_vis2d only
    std::size_t in_h = 32;
    std::size_t in_w = 32;

    bool operator==(const ModelConfig&) const = default;
};

struct OptimConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::string schedule = "step"; // step | warmup_step | cosine
    std::vector<std::size_t> milestones = {30, 60, 80};
    double factor = 0.2;
    std::size_t warmup_epochs = 5;
    double warmup_start = 0.02;
    std::size_t t_max = 100;

    bool operator==(const OptimConfig&) const = default;
};

struct DataConfig {
    std::string generator = "gaussian_toy"; // gaussian_toy | file
    std::string path;                       // file generator: CLAB binary or CSV
    std::size_t classes = 4;
    std::size_t per_class = 2500;
    std::size_t dim = 2;
    double spread = 0.3;
    double imb_factor = 1.0;
    std::vector<std::size_t> coarse_map; // empty = no coarse remap
    std::uint64_t seed = 0;              // meaningful only when seed_set
    bool seed_set = false;               // absent key defers to run.seed

    bool operator==(const DataConfig&) const = default;
};

struct StrategyConfig {
    std::string kind = "none"; // none | mixup | manifold_mixup | am_mixup
    double alpha = 1.0;
    double beta = 0.34;
    std::string rate_mode = "scheduled"; // scheduled | fixed_beta | fixed
    double fixed_value = 0.51;
    bool one_sided = true;
    bool last_layer_only = true;
    std::vector<std::size_t> eligible; // manifold layers; empty = all

    bool operator==(const StrategyConfig&) const = default;
};

struct RunSection {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    bool dump_features = false;
    std::size_t grid_resolution = 0; // 0 = no grid dump

    bool operator==(const RunSection&) const = default;
};

struct RunConfig {
    ModelConfig model;
    OptimConfig optim;
    DataConfig data;
    StrategyConfig strategy;
    RunSection run;

    bool operator==(const RunConfig&) const = default;

    std::uint64_t data_seed() const { return data.seed_set ? data.seed : run.seed; }
};

RunConfig parse_config_text(const std::string& text, const std::string& source_name);
RunConfig parse_config_file(const std::string& path);

std::string serialize_config(const RunConfig& cfg);

// Cross-field validation beyond per-key parsing; throws ConfigError with the
// key path of the offending setting.
void validate_config(const RunConfig& cfg);

} // namespace clab
