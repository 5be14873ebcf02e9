#pragma once

#include "clab/augment.hpp"
#include "clab/config.hpp"
#include "clab/dataset.hpp"
#include "clab/metrics.hpp"
#include "clab/model.hpp"
#include "clab/optim.hpp"

#include <string>
#include <vector>

namespace clab {

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0; // becomes the next epoch's v_acc
    double lambda_used = 1.0;
    double lr = 0.0;
    double test_acc = 0.0;
};

// Class-frequency split thresholds of the desk protocol.
inline constexpr std::size_t kManyThreshold = 1000;
inline constexpr std::size_t kFewThreshold = 200;

struct PreparedData {
    Dataset train;
    Dataset test;
};

// Generates or loads the dataset, then applies the coarse map and long-tail
// subsampling as configured. The test split stays balanced.
PreparedData prepare_data(const RunConfig& cfg);

ModelSpec model_spec_from(const RunConfig& cfg, const Dataset& train);
AugmentStrategy strategy_from(const RunConfig& cfg);
LrSchedule schedule_from(const RunConfig& cfg);

struct TrainResult {
    Model model;
    std::vector<EpochRecord> history;
};

// Seeded training loop: one Rng drives init, shuffles, rate draws, and
// pairings, so identical configs replay identical runs byte for byte.
TrainResult train(const RunConfig& cfg, const Dataset& train_ds, const Dataset& test_ds);

// Same loop with an explicit model spec (the transfer probe uses this).
TrainResult train_with_spec(const RunConfig& cfg, const ModelSpec& spec,
                            const Dataset& train_ds, const Dataset& test_ds);

std::vector<std::size_t> predict(const Model& model, const Dataset& ds);
double accuracy(const Model& model, const Dataset& ds);
FeatureTable feature_table(const Model& model, const Dataset& ds);

MetricsReport evaluate_metrics(const Model& model, const Dataset& test_ds,
                               const std::vector<std::size_t>& train_counts);

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);
void write_metrics_json(const std::string& path, const MetricsReport& report);
void write_features_csv(const Model& model, const Dataset& ds, const std::string& path);
void write_grid_csv(const Model& model, const Dataset& ds, std::size_t resolution,
                    const std::string& path);

struct RunOutcome {
    Model model;
    std::vector<EpochRecord> history;
    MetricsReport report;
};

// Full pipeline for `train` / `imbalanced`: prepare, train, measure, persist
// history.csv, metrics.json, checkpoint.bin (and optional feature dumps)
// under cfg.run.out_dir.
RunOutcome run_single(const RunConfig& cfg, bool quiet);

// Coarse pretraining, frozen-encoder fine probe, composed checkpoint. The
// geometry metrics come from the coarse stage, accuracies from the fine one.
RunOutcome run_transfer(const RunConfig& pre_cfg, const RunConfig& fine_cfg, bool quiet);

struct AblationCell {
    std::string name;
    StrategyConfig strategy;
};

// Rate-mode / one-sided / last-layer switch grid, default cell last.
std::vector<AblationCell> ablation_grid(const RunConfig& base);

void run_ablation(const RunConfig& base, bool quiet);

void dump_features_command(const std::string& checkpoint_path, const std::string& data_path,
                           const std::string& out_csv, std::size_t grid_resolution);

} // namespace clab
