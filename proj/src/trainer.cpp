#include "clab/trainer.hpp"

#include "clab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clab {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

TensorPtr batch_tensor(const Dataset& ds, const std::vector<std::size_t>& idx, bool flat) {
    const std::size_t d = ds.sample_dim();
    std::vector<std::size_t> shape;
    if (flat) {
        shape = {idx.size(), d};
    } else {
        shape.push_back(idx.size());
        shape.insert(shape.end(), ds.sample_shape.begin(), ds.sample_shape.end());
    }
    auto x = make_tensor(shape);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy_n(ds.samples.begin() + static_cast<std::ptrdiff_t>(idx[r] * d), d,
                    x->values.begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    return x;
}

std::vector<std::size_t> gather_labels(const Dataset& ds, const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out[r] = ds.labels[idx[r]];
    }
    return out;
}

// Stratified 80/20 split of a loaded dataset, first 80% of each class (in
// file order) to train.
PreparedData stratified_split(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> members(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        members[ds.labels[i]].push_back(i);
    }
    std::vector<std::size_t> train_idx, test_idx;
    for (const auto& m : members) {
        const std::size_t test_n = m.size() / 5;
        const std::size_t train_n = m.size() - test_n;
        for (std::size_t i = 0; i < m.size(); ++i) {
            (i < train_n ? train_idx : test_idx).push_back(m[i]);
        }
    }

    const auto take = [&ds](const std::vector<std::size_t>& idx) {
        Dataset out;
        out.name = ds.name;
        out.sample_shape = ds.sample_shape;
        out.num_classes = ds.num_classes;
        const std::size_t d = ds.sample_dim();
        for (std::size_t i : idx) {
            out.samples.insert(out.samples.end(),
                               ds.samples.begin() + static_cast<std::ptrdiff_t>(i * d),
                               ds.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
            out.labels.push_back(ds.labels[i]);
            out.ids.push_back(ds.ids[i]);
            if (!ds.fine_labels.empty()) {
                out.fine_labels.push_back(ds.fine_labels[i]);
            }
        }
        return out;
    };
    return {take(train_idx), take(test_idx)};
}

struct BatchOutcome {
    TensorPtr loss;
    std::size_t correct = 0;
    double lambda = 1.0;
};

BatchOutcome run_batch(const Model& model, const AugmentStrategy& strategy, Tape& tape,
                       const TensorPtr& x, const std::vector<std::size_t>& labels,
                       Rng& rng, double lambda_epoch,
                       const std::vector<std::size_t>& all_points) {
    const std::size_t c = model.num_classes();
    BatchOutcome out;

    const auto count_correct = [&](const std::vector<std::size_t>& preds,
                                   const std::vector<std::size_t>& truth) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            n += preds[i] == truth[i] ? 1 : 0;
        }
        return n;
    };
    const auto dominant = [&](double lam, const std::vector<std::size_t>& pairing) {
        std::vector<std::size_t> truth(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            truth[i] = lam >= 0.5 ? labels[i] : labels[pairing[i]];
        }
        return truth;
    };

    if (std::holds_alternative<NoAugment>(strategy)) {
        auto logits = model.logits(&tape, x);
        out.loss = softmax_xent(&tape, logits, one_hot(labels, c));
        out.correct = count_correct(argmax_rows(logits), labels);
        return out;
    }

    if (const auto* mu = std::get_if<Mixup>(&strategy)) {
        const double lam = rng.beta(mu->alpha);
        const auto pairing = rng.permutation(labels.size());
        auto mixed = mixup_batch(x, one_hot(labels, c), lam, pairing);
        auto logits = model.logits(&tape, mixed.inputs);
        std::vector<std::size_t> paired_labels(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            paired_labels[i] = labels[pairing[i]];
        }
        out.loss = mixup_loss(&tape, logits, one_hot(labels, c),
                              one_hot(paired_labels, c), lam);
        out.correct = count_correct(argmax_rows(logits), dominant(lam, pairing));
        out.lambda = lam;
        return out;
    }

    if (const auto* mm = std::get_if<ManifoldMixup>(&strategy)) {
        const double lam = rng.beta(mm->alpha);
        const std::size_t layer =
            manifold_mix_layer(rng, mm->eligible.empty() ? all_points : mm->eligible);
        const auto pairing = rng.permutation(labels.size());
        LayerMixHook hook{layer, lam, pairing};
        auto logits = model.logits(&tape, x, &hook);
        std::vector<std::size_t> paired_labels(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            paired_labels[i] = labels[pairing[i]];
        }
        out.loss = mixup_loss(&tape, logits, one_hot(labels, c),
                              one_hot(paired_labels, c), lam);
        out.correct = count_correct(argmax_rows(logits), dominant(lam, pairing));
        out.lambda = lam;
        return out;
    }

    const auto& am = std::get<AmMixup>(strategy);
    double lam = lambda_epoch;
    if (am.rate_mode == RateMode::FixedBeta) {
        lam = rng.beta(am.fixed_alpha);
    } else if (am.rate_mode == RateMode::Fixed) {
        lam = am.fixed_value;
    }
    std::size_t layer = 0;
    if (!am.last_layer_only) {
        layer = manifold_mix_layer(rng, all_points);
    }
    const auto pairing = rng.permutation(labels.size());

    auto z = model.features(&tape, x);
    auto logits_clean = model.logits_from_features(&tape, z);
    auto ce = softmax_xent(&tape, logits_clean, one_hot(labels, c));

    TensorPtr logits_aug, target_aug;
    if (am.last_layer_only) {
        auto mixed = am_mix_features(&tape, z, labels, c, lam, pairing, am.one_sided);
        logits_aug = model.logits_from_features(&tape, mixed.inputs);
        target_aug = mixed.target;
    } else {
        LayerMixHook hook{layer, lam, pairing};
        auto z_aug = model.features(&tape, x, &hook);
        logits_aug = model.logits_from_features(&tape, z_aug);
        target_aug = am_targets(labels, c, lam, pairing, am.one_sided);
    }
    auto aug_loss = am.one_sided ? am_loss(&tape, logits_aug, target_aug)
                                 : softmax_xent(&tape, logits_aug, target_aug);
    out.loss = add(&tape, ce, aug_loss);
    out.correct = count_correct(argmax_rows(logits_clean), labels);
    out.lambda = lam;
    return out;
}

} // namespace

PreparedData prepare_data(const RunConfig& cfg) {
    validate_config(cfg);
    PreparedData out;
    if (cfg.data.generator == "gaussian_toy") {
        auto tt = gaussian_toy(cfg.data.classes, cfg.data.per_class, cfg.data.dim,
                               cfg.data.spread, cfg.data_seed());
        out.train = std::move(tt.train);
        out.test = std::move(tt.test);
    } else {
        Dataset ds = ends_with(cfg.data.path, ".csv") ? import_csv(cfg.data.path)
                                                      : load_dataset(cfg.data.path);
        out = stratified_split(ds);
        if (out.test.size() == 0) {
            throw ConfigError("config: data.path: too few samples per class for a test split");
        }
    }

    if (!cfg.data.coarse_map.empty()) {
        try {
            out.train = apply_coarse(out.train, cfg.data.coarse_map);
            out.test = apply_coarse(out.test, cfg.data.coarse_map);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: data.coarse_map: ") + e.what());
        }
    }
    if (cfg.data.imb_factor > 1.0) {
        try {
            out.train = longtail_subsample(out.train, cfg.data.imb_factor,
                                           derive_seed(cfg.data_seed(), 1));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: data.imb_factor: ") + e.what());
        }
    }
    return out;
}

ModelSpec model_spec_from(const RunConfig& cfg, const Dataset& train) {
    ModelSpec spec;
    spec.num_classes = train.num_classes;
    if (cfg.model.kind == "mlp") {
        MlpSpec mlp;
        mlp.widths.push_back(train.sample_dim());
        mlp.widths.insert(mlp.widths.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
        mlp.widths.push_back(cfg.model.feature_dim);
        spec.encoder = std::move(mlp);
    } else {
        CnnVis2DSpec cnn;
        cnn.in_channels = cfg.model.in_channels;
        cnn.in_h = cfg.model.in_h;
        cnn.in_w = cfg.model.in_w;
        cnn.feature_dim = cfg.model.feature_dim;
        const std::vector<std::size_t> expect = {cnn.in_channels, cnn.in_h, cnn.in_w};
        if (train.sample_shape != expect) {
            throw ConfigError("config: model.in_channels/in_h/in_w do not match the data's "
                              "sample shape");
        }
        spec.encoder = cnn;
    }
    validate_spec(spec);
    return spec;
}

AugmentStrategy strategy_from(const RunConfig& cfg) {
    const auto& s = cfg.strategy;
    if (s.kind == "none") {
        return NoAugment{};
    }
    if (s.kind == "mixup") {
        return Mixup{s.alpha};
    }
    if (s.kind == "manifold_mixup") {
        return ManifoldMixup{s.alpha, s.eligible};
    }
    AmMixup am;
    am.beta = s.beta;
    am.rate_mode = s.rate_mode == "scheduled"    ? RateMode::Scheduled
                   : s.rate_mode == "fixed_beta" ? RateMode::FixedBeta
                                                 : RateMode::Fixed;
    am.fixed_alpha = s.alpha;
    am.fixed_value = s.fixed_value;
    am.one_sided = s.one_sided;
    am.last_layer_only = s.last_layer_only;
    return am;
}

LrSchedule schedule_from(const RunConfig& cfg) {
    const auto& o = cfg.optim;
    if (o.schedule == "step") {
        return StepDecay{o.lr, o.milestones, o.factor};
    }
    if (o.schedule == "warmup_step") {
        return LinearWarmupThenStep{o.warmup_start, o.warmup_epochs, o.lr, o.milestones,
                                    o.factor};
    }
    return CosineAnnealing{o.lr, o.t_max};
}

TrainResult train(const RunConfig& cfg, const Dataset& train_ds, const Dataset& test_ds) {
    return train_with_spec(cfg, model_spec_from(cfg, train_ds), train_ds, test_ds);
}

TrainResult train_with_spec(const RunConfig& cfg, const ModelSpec& spec,
                            const Dataset& train_ds, const Dataset& test_ds) {
    validate_config(cfg);
    validate_spec(spec);
    if (train_ds.num_classes != spec.num_classes) {
        throw std::invalid_argument("train: dataset and model class counts differ");
    }
    if (train_ds.size() == 0) {
        throw std::invalid_argument("train: empty training split");
    }
    const AugmentStrategy strategy = strategy_from(cfg);
    const LrSchedule schedule = schedule_from(cfg);
    validate_schedule(schedule);

    Model model(spec);
    Rng rng(cfg.run.seed);
    model.init(rng);
    SgdOptimizer opt(model.parameters(), cfg.optim.momentum, cfg.optim.weight_decay);

    const bool flat = std::holds_alternative<MlpSpec>(spec.encoder);
    const std::size_t n = train_ds.size();
    std::vector<std::size_t> all_points(model.num_mix_points());
    std::iota(all_points.begin(), all_points.end(), 0);

    const auto* am = std::get_if<AmMixup>(&strategy);
    std::vector<EpochRecord> history;
    history.reserve(cfg.run.epochs);
    double prev_acc = 0.0;

    for (std::size_t e = 0; e < cfg.run.epochs; ++e) {
        const double lr = lr_at(schedule, e);
        double lambda_epoch = 1.0;
        if (am != nullptr && am->rate_mode == RateMode::Scheduled) {
            lambda_epoch = am_lambda(prev_acc, am->beta);
        }

        const auto perm = rng.permutation(n);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        double lambda_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += cfg.run.batch_size) {
            const std::size_t bn = std::min(cfg.run.batch_size, n - start);
            const std::vector<std::size_t> idx(
                perm.begin() + static_cast<std::ptrdiff_t>(start),
                perm.begin() + static_cast<std::ptrdiff_t>(start + bn));
            auto x = batch_tensor(train_ds, idx, flat);
            const auto labels = gather_labels(train_ds, idx);

            Tape tape;
            BatchOutcome outcome;
            try {
                outcome = run_batch(model, strategy, tape, x, labels, rng, lambda_epoch,
                                    all_points);
                if (!std::isfinite(outcome.loss->values[0])) {
                    throw NumericError("non-finite loss");
                }
                tape.backward(outcome.loss);
                opt.step(lr);
            } catch (const NumericError& err) {
                throw NumericError("epoch " + std::to_string(e + 1) + " batch " +
                                   std::to_string(batches) + ": " + err.what());
            }
            opt.zero_grad();

            loss_sum += outcome.loss->values[0] * static_cast<double>(bn);
            correct += outcome.correct;
            lambda_sum += outcome.lambda;
            ++batches;
        }

        const double train_acc = static_cast<double>(correct) / static_cast<double>(n);
        double lambda_used = 1.0;
        if (am != nullptr) {
            lambda_used = am->rate_mode == RateMode::Scheduled
                              ? lambda_epoch
                              : lambda_sum / static_cast<double>(batches);
        } else if (!std::holds_alternative<NoAugment>(strategy)) {
            lambda_used = lambda_sum / static_cast<double>(batches);
        }

        EpochRecord rec;
        rec.epoch = e + 1;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_acc = train_acc;
        rec.lambda_used = lambda_used;
        rec.lr = lr;
        rec.test_acc = accuracy(model, test_ds);
        history.push_back(rec);
        prev_acc = train_acc;
    }
    return {std::move(model), std::move(history)};
}

std::vector<std::size_t> predict(const Model& model, const Dataset& ds) {
    const bool flat = std::holds_alternative<MlpSpec>(model.spec().encoder);
    std::vector<std::size_t> preds;
    preds.reserve(ds.size());
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < ds.size(); start += kChunk) {
        const std::size_t bn = std::min(kChunk, ds.size() - start);
        std::vector<std::size_t> idx(bn);
        std::iota(idx.begin(), idx.end(), start);
        auto logits = model.logits(nullptr, batch_tensor(ds, idx, flat));
        const auto chunk_preds = argmax_rows(logits);
        preds.insert(preds.end(), chunk_preds.begin(), chunk_preds.end());
    }
    return preds;
}

double accuracy(const Model& model, const Dataset& ds) {
    if (ds.size() == 0) {
        throw std::invalid_argument("accuracy: empty dataset");
    }
    const auto preds = predict(model, ds);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        correct += preds[i] == ds.labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

FeatureTable feature_table(const Model& model, const Dataset& ds) {
    const bool flat = std::holds_alternative<MlpSpec>(model.spec().encoder);
    FeatureTable ft;
    ft.dim = model.feature_dim();
    ft.labels = ds.labels;
    ft.num_classes = ds.num_classes;
    ft.features.reserve(ds.size() * ft.dim);
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < ds.size(); start += kChunk) {
        const std::size_t bn = std::min(kChunk, ds.size() - start);
        std::vector<std::size_t> idx(bn);
        std::iota(idx.begin(), idx.end(), start);
        auto z = model.features(nullptr, batch_tensor(ds, idx, flat));
        ft.features.insert(ft.features.end(), z->values.begin(), z->values.end());
    }
    return ft;
}

MetricsReport evaluate_metrics(const Model& model, const Dataset& test_ds,
                               const std::vector<std::size_t>& train_counts) {
    const auto ft = feature_table(model, test_ds);
    MetricsReport report;
    report.alignment = alignment(ft);
    const auto cents = sphere_centroids(ft);
    report.uniformity = uniformity(cents, ft.num_classes, ft.dim);
    report.neighborhood_uniformity_k1 =
        neighborhood_uniformity(cents, ft.num_classes, ft.dim, 1);
    const auto preds = predict(model, test_ds);
    const auto sa =
        split_accuracy(preds, test_ds.labels, train_counts, kManyThreshold, kFewThreshold);
    report.acc_all = sa.all;
    report.acc_many = sa.many;
    report.acc_median = sa.median;
    report.acc_few = sa.few;
    return report;
}

} // namespace clab
