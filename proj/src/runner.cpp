#include "clab/trainer.hpp"

#include "clab/errors.hpp"
#include "clab/textio.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

namespace clab {

namespace {

namespace fs = std::filesystem;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    return out;
}

Dataset load_any(const std::string& path) {
    return ends_with(path, ".csv") ? import_csv(path) : load_dataset(path);
}

std::string opt_field(const std::optional<double>& v) {
    return v ? io::format_double(*v) : std::string();
}

// Per-chunk encoder features, predictions, and max-softmax confidence.
struct InferenceRows {
    std::vector<double> features;
    std::vector<std::size_t> preds;
    std::vector<double> confidence;
};

InferenceRows infer_rows(const Model& model, const Dataset& ds) {
    const bool flat = std::holds_alternative<MlpSpec>(model.spec().encoder);
    const std::size_t d = ds.sample_dim();
    const std::size_t c = model.num_classes();
    InferenceRows rows;
    rows.features.reserve(ds.size() * model.feature_dim());
    rows.preds.reserve(ds.size());
    rows.confidence.reserve(ds.size());

    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < ds.size(); start += kChunk) {
        const std::size_t bn = std::min(kChunk, ds.size() - start);
        std::vector<std::size_t> shape;
        if (flat) {
            shape = {bn, d};
        } else {
            shape.push_back(bn);
            shape.insert(shape.end(), ds.sample_shape.begin(), ds.sample_shape.end());
        }
        auto x = make_tensor(shape);
        std::copy_n(ds.samples.begin() + static_cast<std::ptrdiff_t>(start * d), bn * d,
                    x->values.begin());
        auto z = model.features(nullptr, x);
        auto logits = model.logits_from_features(nullptr, z);
        rows.features.insert(rows.features.end(), z->values.begin(), z->values.end());
        const auto preds = argmax_rows(logits);
        rows.preds.insert(rows.preds.end(), preds.begin(), preds.end());
        const auto probs = softmax_rows(logits);
        for (std::size_t i = 0; i < bn; ++i) {
            double best = probs[i * c];
            for (std::size_t j = 1; j < c; ++j) {
                best = std::max(best, probs[i * c + j]);
            }
            rows.confidence.push_back(best);
        }
    }
    return rows;
}

void print_summary(const char* tag, const std::vector<EpochRecord>& history,
                   const MetricsReport& report) {
    if (!history.empty()) {
        const auto& last = history.back();
        std::printf("%s: %zu epochs, train_acc %.4f, test_acc %.4f\n", tag, history.size(),
                    last.train_acc, last.test_acc);
    }
    std::printf("%s: alignment %.4f, uniformity %.4f, u1 %.4f, acc_all %.4f\n", tag,
                report.alignment, report.uniformity, report.neighborhood_uniformity_k1,
                report.acc_all);
    std::fflush(stdout);
}

} // namespace

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    auto out = open_out(path);
    out << "epoch,train_loss,train_acc,lambda_used,lr,test_acc\n";
    for (const auto& rec : history) {
        out << rec.epoch << ',' << io::format_double(rec.train_loss) << ','
            << io::format_double(rec.train_acc) << ',' << io::format_double(rec.lambda_used)
            << ',' << io::format_double(rec.lr) << ',' << io::format_double(rec.test_acc)
            << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

void write_metrics_json(const std::string& path, const MetricsReport& report) {
    auto out = open_out(path);
    out << to_json(report);
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

void write_features_csv(const Model& model, const Dataset& ds, const std::string& path) {
    const auto rows = infer_rows(model, ds);
    const std::size_t d = model.feature_dim();
    auto out = open_out(path);
    out << "sample_id,class";
    for (std::size_t j = 0; j < d; ++j) {
        out << ",f" << j;
    }
    out << ",predicted_class,confidence\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.ids[i] << ',' << ds.labels[i];
        for (std::size_t j = 0; j < d; ++j) {
            out << ',' << io::format_double(rows.features[i * d + j]);
        }
        out << ',' << rows.preds[i] << ',' << io::format_double(rows.confidence[i]) << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

void write_grid_csv(const Model& model, const Dataset& ds, std::size_t resolution,
                    const std::string& path) {
    if (model.feature_dim() != 2) {
        throw ConfigError("config: run.grid_resolution: the decision grid needs a "
                          "2-dimensional feature space");
    }
    if (resolution < 2) {
        throw ConfigError("config: run.grid_resolution: must be 0 or at least 2");
    }
    const auto ft = feature_table(model, ds);
    double lo[2] = {std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
    double hi[2] = {-std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < ft.size(); ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            lo[j] = std::min(lo[j], ft.features[i * 2 + j]);
            hi[j] = std::max(hi[j], ft.features[i * 2 + j]);
        }
    }
    for (std::size_t j = 0; j < 2; ++j) {
        lo[j] -= 1.0;
        hi[j] += 1.0;
    }

    const std::size_t c = model.num_classes();
    auto out = open_out(path);
    out << "f0,f1,predicted_class,confidence\n";
    const auto coord = [&](std::size_t axis, std::size_t i) {
        return lo[axis] + static_cast<double>(i) * (hi[axis] - lo[axis]) /
                              static_cast<double>(resolution - 1);
    };
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            auto z = make_tensor({1, 2});
            z->values[0] = coord(0, i);
            z->values[1] = coord(1, j);
            auto logits = model.logits_from_features(nullptr, z);
            const std::size_t pred = argmax_rows(logits)[0];
            const auto probs = softmax_rows(logits);
            double best = probs[0];
            for (std::size_t q = 1; q < c; ++q) {
                best = std::max(best, probs[q]);
            }
            out << io::format_double(z->values[0]) << ',' << io::format_double(z->values[1])
                << ',' << pred << ',' << io::format_double(best) << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

RunOutcome run_single(const RunConfig& cfg, bool quiet) {
    validate_config(cfg);
    auto data = prepare_data(cfg);
    if (!quiet) {
        std::printf("data: %s, train %zu, test %zu, classes %zu\n", data.train.name.c_str(),
                    data.train.size(), data.test.size(), data.train.num_classes);
        std::fflush(stdout);
    }
    auto result = train(cfg, data.train, data.test);
    auto report = evaluate_metrics(result.model, data.test, data.train.class_counts());
    if (!quiet) {
        print_summary("run", result.history, report);
    }

    std::error_code ec;
    fs::create_directories(cfg.run.out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + cfg.run.out_dir + ": " + ec.message());
    }
    const std::string dir = cfg.run.out_dir + "/";
    write_history_csv(dir + "history.csv", result.history);
    write_metrics_json(dir + "metrics.json", report);
    result.model.save(dir + "checkpoint.bin");
    if (cfg.run.dump_features) {
        write_features_csv(result.model, data.test, dir + "features.csv");
    }
    if (cfg.run.grid_resolution >= 2) {
        write_grid_csv(result.model, data.test, cfg.run.grid_resolution, dir + "grid.csv");
    }
    return {std::move(result.model), std::move(result.history), report};
}

RunOutcome run_transfer(const RunConfig& pre_cfg, const RunConfig& fine_cfg, bool quiet) {
    validate_config(pre_cfg);
    validate_config(fine_cfg);
    if (pre_cfg.data.coarse_map.empty()) {
        throw ConfigError("config: data.coarse_map: the pretraining stage needs a coarse "
                          "map");
    }
    if (!fine_cfg.data.coarse_map.empty()) {
        throw ConfigError("config: data.coarse_map: the fine stage must keep the fine "
                          "labels");
    }
    if (fine_cfg.strategy.kind != "none") {
        throw ConfigError("config: strategy.kind: the fine probe trains without "
                          "augmentation");
    }
    if (pre_cfg.data.generator != fine_cfg.data.generator ||
        pre_cfg.data.path != fine_cfg.data.path ||
        pre_cfg.data.classes != fine_cfg.data.classes ||
        pre_cfg.data.per_class != fine_cfg.data.per_class ||
        pre_cfg.data.dim != fine_cfg.data.dim ||
        pre_cfg.data.spread != fine_cfg.data.spread ||
        pre_cfg.data_seed() != fine_cfg.data_seed()) {
        throw ConfigError("config: data: both transfer stages must draw the same base "
                          "dataset");
    }

    RunConfig pre = pre_cfg;
    pre.run.out_dir = pre_cfg.run.out_dir + "/pretrain";
    auto pre_out = run_single(pre, quiet);

    auto fine_data = prepare_data(fine_cfg);
    const std::uint64_t frozen = pre_out.model.encoder_digest();
    const std::size_t d = pre_out.model.feature_dim();

    const auto to_features = [&](const Dataset& ds) {
        Dataset out;
        out.name = ds.name + "_feat";
        out.sample_shape = {d};
        out.labels = ds.labels;
        out.fine_labels = ds.fine_labels;
        out.ids = ds.ids;
        out.num_classes = ds.num_classes;
        auto ft = feature_table(pre_out.model, ds);
        out.samples = std::move(ft.features);
        return out;
    };
    const Dataset feat_train = to_features(fine_data.train);
    const Dataset feat_test = to_features(fine_data.test);

    ModelSpec probe_spec;
    probe_spec.encoder = MlpSpec{{d}};
    probe_spec.num_classes = fine_data.train.num_classes;
    auto probe = train_with_spec(fine_cfg, probe_spec, feat_train, feat_test);
    if (pre_out.model.encoder_digest() != frozen) {
        throw NumericError("transfer: the frozen encoder changed during the probe stage");
    }

    ModelSpec composed_spec;
    composed_spec.encoder = pre_out.model.spec().encoder;
    composed_spec.num_classes = fine_data.train.num_classes;
    Model composed(composed_spec);
    composed.adopt_encoder(pre_out.model);
    composed.adopt_classifier(probe.model);

    MetricsReport report;
    report.alignment = pre_out.report.alignment;
    report.uniformity = pre_out.report.uniformity;
    report.neighborhood_uniformity_k1 = pre_out.report.neighborhood_uniformity_k1;
    const auto preds = predict(composed, fine_data.test);
    const auto sa = split_accuracy(preds, fine_data.test.labels,
                                   fine_data.train.class_counts(), kManyThreshold,
                                   kFewThreshold);
    report.acc_all = sa.all;
    report.acc_many = sa.many;
    report.acc_median = sa.median;
    report.acc_few = sa.few;
    if (!quiet) {
        print_summary("transfer", probe.history, report);
    }

    const std::string dir = pre_cfg.run.out_dir + "/";
    write_history_csv(dir + "history.csv", probe.history);
    write_metrics_json(dir + "metrics.json", report);
    composed.save(dir + "checkpoint.bin");
    if (fine_cfg.run.dump_features) {
        write_features_csv(composed, fine_data.test, dir + "features.csv");
    }
    if (fine_cfg.run.grid_resolution >= 2) {
        write_grid_csv(composed, fine_data.test, fine_cfg.run.grid_resolution,
                       dir + "grid.csv");
    }
    return {std::move(composed), std::move(probe.history), report};
}

std::vector<AblationCell> ablation_grid(const RunConfig& base) {
    if (base.strategy.kind != "am_mixup") {
        throw ConfigError("config: strategy.kind: the ablation grid varies am_mixup "
                          "switches");
    }
    const auto cell = [&](const char* name, const char* rate_mode, bool one_sided,
                          bool last_layer_only) {
        StrategyConfig s = base.strategy;
        s.rate_mode = rate_mode;
        s.one_sided = one_sided;
        s.last_layer_only = last_layer_only;
        return AblationCell{name, std::move(s)};
    };
    return {
        cell("lam_am", "scheduled", false, false),
        cell("lam_am_ll", "scheduled", false, true),
        cell("lam_am_ol", "scheduled", true, false),
        cell("beta_ol_ll", "fixed_beta", true, true),
        cell("fixed051_ol_ll", "fixed", true, true),
        cell("lam_am_ol_ll", "scheduled", true, true),
    };
}

void run_ablation(const RunConfig& base, bool quiet) {
    validate_config(base);
    const auto cells = ablation_grid(base);

    struct Row {
        AblationCell cell;
        MetricsReport report;
    };
    std::vector<Row> rows;
    rows.reserve(cells.size());
    for (const auto& cell : cells) {
        RunConfig cfg = base;
        cfg.strategy = cell.strategy;
        cfg.run.out_dir = base.run.out_dir + "/" + cell.name;
        if (!quiet) {
            std::printf("ablation cell %s\n", cell.name.c_str());
            std::fflush(stdout);
        }
        auto out = run_single(cfg, quiet);
        rows.push_back({cell, out.report});
    }

    auto out = open_out(base.run.out_dir + "/ablation_table.csv");
    out << "cell,rate_mode,one_sided,last_layer_only,alignment,uniformity,"
           "neighborhood_uniformity_k1,acc_all,acc_many,acc_median,acc_few\n";
    for (const auto& row : rows) {
        const auto& s = row.cell.strategy;
        const auto& r = row.report;
        out << row.cell.name << ',' << s.rate_mode << ','
            << (s.one_sided ? "true" : "false") << ','
            << (s.last_layer_only ? "true" : "false") << ','
            << io::format_double(r.alignment) << ',' << io::format_double(r.uniformity)
            << ',' << io::format_double(r.neighborhood_uniformity_k1) << ','
            << io::format_double(r.acc_all) << ',' << opt_field(r.acc_many) << ','
            << opt_field(r.acc_median) << ',' << opt_field(r.acc_few) << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + base.run.out_dir + "/ablation_table.csv");
    }
}

void dump_features_command(const std::string& checkpoint_path, const std::string& data_path,
                           const std::string& out_csv, std::size_t grid_resolution) {
    if (grid_resolution == 1) {
        throw ConfigError("config: run.grid_resolution: must be 0 or at least 2");
    }
    Model model = Model::load(checkpoint_path);
    Dataset ds = load_any(data_path);

    if (const auto* mlp = std::get_if<MlpSpec>(&model.spec().encoder)) {
        if (mlp->widths.front() != ds.sample_dim()) {
            throw ConfigError("config: data: sample width " +
                              std::to_string(ds.sample_dim()) +
                              " does not match the checkpoint's input width " +
                              std::to_string(mlp->widths.front()));
        }
    } else {
        const auto& cnn = std::get<CnnVis2DSpec>(model.spec().encoder);
        const std::vector<std::size_t> expect = {cnn.in_channels, cnn.in_h, cnn.in_w};
        if (ds.sample_shape != expect) {
            throw ConfigError("config: data: sample shape does not match the checkpoint's "
                              "input shape");
        }
    }

    write_features_csv(model, ds, out_csv);
    if (grid_resolution >= 2) {
        fs::path grid_path = fs::path(out_csv).parent_path() / "grid.csv";
        write_grid_csv(model, ds, grid_resolution, grid_path.string());
    }
}

} // namespace clab
