#include "CLI11.hpp"

#include "clab/config.hpp"
#include "clab/errors.hpp"
#include "clab/trainer.hpp"

#include <cstdint>
#include <cstdio>
#include <string>

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
    bool out_dir_given = false;
    bool quiet = false;
};

void apply_overrides(clab::RunConfig& cfg, const GlobalOpts& g) {
    if (g.seed_given) {
        cfg.run.seed = g.seed;
    }
    if (g.out_dir_given) {
        cfg.run.out_dir = g.out_dir;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"collapse-lab: a training laboratory for feature collapse under mixup "
                 "variants"};
    app.require_subcommand(1);

    GlobalOpts global;
    auto* seed_opt = app.add_option("--seed", global.seed, "override run.seed");
    auto* dir_opt = app.add_option("--out-dir", global.out_dir, "override run.out_dir");
    app.add_flag("--quiet", global.quiet, "suppress progress output");

    std::string config_path, pretrain_path, finetune_path;
    std::string checkpoint_path, data_path, out_csv;
    std::size_t grid_resolution = 0;

    auto* train_cmd = app.add_subcommand("train", "train one model from a config");
    train_cmd->add_option("--config", config_path, "run config file")->required();
    train_cmd->fallthrough();

    auto* imb_cmd =
        app.add_subcommand("imbalanced", "long-tailed training with split metrics");
    imb_cmd->add_option("--config", config_path, "run config file")->required();
    imb_cmd->fallthrough();

    auto* transfer_cmd =
        app.add_subcommand("transfer", "coarse pretraining then a frozen-encoder probe");
    transfer_cmd->add_option("--pretrain", pretrain_path, "pretraining config file")
        ->required();
    transfer_cmd->add_option("--finetune", finetune_path, "fine-stage config file")
        ->required();
    transfer_cmd->fallthrough();

    auto* ablation_cmd =
        app.add_subcommand("ablation", "rate-mode / labeling / layer switch grid");
    ablation_cmd->add_option("--config", config_path, "base am_mixup config file")
        ->required();
    ablation_cmd->fallthrough();

    auto* dump_cmd =
        app.add_subcommand("dump-features", "emit feature rows for a saved checkpoint");
    dump_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint.bin path")
        ->required();
    dump_cmd->add_option("--data", data_path, "dataset file (CLAB binary or CSV)")
        ->required();
    dump_cmd->add_option("--out", out_csv, "output CSV path")->required();
    dump_cmd->add_option("--grid", grid_resolution,
                         "confidence grid resolution (0 = none, else >= 2)");
    dump_cmd->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    global.seed_given = seed_opt->count() > 0;
    global.out_dir_given = dir_opt->count() > 0;

    try {
        if (train_cmd->parsed() || imb_cmd->parsed()) {
            auto cfg = clab::parse_config_file(config_path);
            apply_overrides(cfg, global);
            clab::run_single(cfg, global.quiet);
        } else if (transfer_cmd->parsed()) {
            auto pre = clab::parse_config_file(pretrain_path);
            auto fine = clab::parse_config_file(finetune_path);
            apply_overrides(pre, global);
            apply_overrides(fine, global);
            clab::run_transfer(pre, fine, global.quiet);
        } else if (ablation_cmd->parsed()) {
            auto cfg = clab::parse_config_file(config_path);
            apply_overrides(cfg, global);
            clab::run_ablation(cfg, global.quiet);
        } else if (dump_cmd->parsed()) {
            clab::dump_features_command(checkpoint_path, data_path, out_csv,
                                        grid_resolution);
        }
    } catch (const clab::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const clab::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const clab::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
