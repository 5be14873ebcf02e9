#include "clab/config.hpp"

#include "clab/errors.hpp"
#include "clab/textio.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace clab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) {
        ++a;
    }
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) {
        --b;
    }
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& key, const std::string& what,
                       const std::string& src, std::size_t line) {
    throw ConfigError("config: " + key + ": " + what + " (" + src + " line " +
                      std::to_string(line) + ")");
}

double to_double(const std::string& key, const std::string& v, const std::string& src,
                 std::size_t line) {
    double out = 0.0;
    const auto* begin = v.data();
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end) {
        fail(key, "expected a number, got '" + v + "'", src, line);
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v, const std::string& src,
                     std::size_t line) {
    std::uint64_t out = 0;
    const auto* begin = v.data();
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end) {
        fail(key, "expected a non-negative integer, got '" + v + "'", src, line);
    }
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v, const std::string& src,
                    std::size_t line) {
    return static_cast<std::size_t>(to_u64(key, v, src, line));
}

bool to_bool(const std::string& key, const std::string& v, const std::string& src,
             std::size_t line) {
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    fail(key, "expected true or false, got '" + v + "'", src, line);
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v,
                                      const std::string& src, std::size_t line) {
    std::vector<std::size_t> out;
    if (trim(v).empty()) {
        return out;
    }
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(to_size(key, trim(item), src, line));
    }
    return out;
}

using io::format_double;

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream stream(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected 'key = value' (" + source_name + " line " +
                              std::to_string(line_no) + ")");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config: empty key (" + source_name + " line " +
                              std::to_string(line_no) + ")");
        }
        if (!seen.insert(key).second) {
            fail(key, "duplicate key", source_name, line_no);
        }

        const auto& src = source_name;
        const std::size_t ln = line_no;
        if (key == "model.kind") {
            cfg.model.kind = value;
        } else if (key == "model.hidden") {
            cfg.model.hidden = to_size_list(key, value, src, ln);
        } else if (key == "model.feature_dim") {
            cfg.model.feature_dim = to_size(key, value, src, ln);
        } else if (key == "model.in_channels") {
            cfg.model.in_channels = to_size(key, value, src, ln);
        } else if (key == "model.in_h") {
            cfg.model.in_h = to_size(key, value, src, ln);
        } else if (key == "model.in_w") {
            cfg.model.in_w = to_size(key, value, src, ln);
        } else if (key == "optim.lr") {
            cfg.optim.lr = to_double(key, value, src, ln);
        } else if (key == "optim.momentum") {
            cfg.optim.momentum = to_double(key, value, src, ln);
        } else if (key == "optim.weight_decay") {
            cfg.optim.weight_decay = to_double(key, value, src, ln);
        } else if (key == "optim.schedule") {
            cfg.optim.schedule = value;
        } else if (key == "optim.milestones") {
            cfg.optim.milestones = to_size_list(key, value, src, ln);
        } else if (key == "optim.factor") {
            cfg.optim.factor = to_double(key, value, src, ln);
        } else if (key == "optim.warmup_epochs") {
            cfg.optim.warmup_epochs = to_size(key, value, src, ln);
        } else if (key == "optim.warmup_start") {
            cfg.optim.warmup_start = to_double(key, value, src, ln);
        } else if (key == "optim.t_max") {
            cfg.optim.t_max = to_size(key, value, src, ln);
        } else if (key == "data.generator") {
            cfg.data.generator = value;
        } else if (key == "data.path") {
            cfg.data.path = value;
        } else if (key == "data.classes") {
            cfg.data.classes = to_size(key, value, src, ln);
        } else if (key == "data.per_class") {
            cfg.data.per_class = to_size(key, value, src, ln);
        } else if (key == "data.dim") {
            cfg.data.dim = to_size(key, value, src, ln);
        } else if (key == "data.spread") {
            cfg.data.spread = to_double(key, value, src, ln);
        } else if (key == "data.imb_factor") {
            cfg.data.imb_factor = to_double(key, value, src, ln);
        } else if (key == "data.coarse_map") {
            cfg.data.coarse_map = to_size_list(key, value, src, ln);
        } else if (key == "data.seed") {
            cfg.data.seed = to_u64(key, value, src, ln);
            cfg.data.seed_set = true;
        } else if (key == "strategy.kind") {
            cfg.strategy.kind = value;
        } else if (key == "strategy.alpha") {
            cfg.strategy.alpha = to_double(key, value, src, ln);
        } else if (key == "strategy.beta") {
            cfg.strategy.beta = to_double(key, value, src, ln);
        } else if (key == "strategy.rate_mode") {
            cfg.strategy.rate_mode = value;
        } else if (key == "strategy.fixed_value") {
            cfg.strategy.fixed_value = to_double(key, value, src, ln);
        } else if (key == "strategy.one_sided") {
            cfg.strategy.one_sided = to_bool(key, value, src, ln);
        } else if (key == "strategy.last_layer_only") {
            cfg.strategy.last_layer_only = to_bool(key, value, src, ln);
        } else if (key == "strategy.eligible") {
            cfg.strategy.eligible = to_size_list(key, value, src, ln);
        } else if (key == "run.epochs") {
            cfg.run.epochs = to_size(key, value, src, ln);
        } else if (key == "run.batch_size") {
            cfg.run.batch_size = to_size(key, value, src, ln);
        } else if (key == "run.seed") {
            cfg.run.seed = to_u64(key, value, src, ln);
        } else if (key == "run.out_dir") {
            cfg.run.out_dir = value;
        } else if (key == "run.dump_features") {
            cfg.run.dump_features = to_bool(key, value, src, ln);
        } else if (key == "run.grid_resolution") {
            cfg.run.grid_resolution = to_size(key, value, src, ln);
        } else {
            throw ConfigError("config: unknown key '" + key + "' (" + source_name +
                              " line " + std::to_string(line_no) + ")");
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("config: cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << is.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    const auto kv = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    kv("model.kind", cfg.model.kind);
    kv("model.hidden", join_sizes(cfg.model.hidden));
    kv("model.feature_dim", std::to_string(cfg.model.feature_dim));
    kv("model.in_channels", std::to_string(cfg.model.in_channels));
    kv("model.in_h", std::to_string(cfg.model.in_h));
    kv("model.in_w", std::to_string(cfg.model.in_w));
    kv("optim.lr", format_double(cfg.optim.lr));
    kv("optim.momentum", format_double(cfg.optim.momentum));
    kv("optim.weight_decay", format_double(cfg.optim.weight_decay));
    kv("optim.schedule", cfg.optim.schedule);
    kv("optim.milestones", join_sizes(cfg.optim.milestones));
    kv("optim.factor", format_double(cfg.optim.factor));
    kv("optim.warmup_epochs", std::to_string(cfg.optim.warmup_epochs));
    kv("optim.warmup_start", format_double(cfg.optim.warmup_start));
    kv("optim.t_max", std::to_string(cfg.optim.t_max));
    kv("data.generator", cfg.data.generator);
    kv("data.path", cfg.data.path);
    kv("data.classes", std::to_string(cfg.data.classes));
    kv("data.per_class", std::to_string(cfg.data.per_class));
    kv("data.dim", std::to_string(cfg.data.dim));
    kv("data.spread", format_double(cfg.data.spread));
    kv("data.imb_factor", format_double(cfg.data.imb_factor));
    kv("data.coarse_map", join_sizes(cfg.data.coarse_map));
    if (cfg.data.seed_set) {
        kv("data.seed", std::to_string(cfg.data.seed));
    }
    kv("strategy.kind", cfg.strategy.kind);
    kv("strategy.alpha", format_double(cfg.strategy.alpha));
    kv("strategy.beta", format_double(cfg.strategy.beta));
    kv("strategy.rate_mode", cfg.strategy.rate_mode);
    kv("strategy.fixed_value", format_double(cfg.strategy.fixed_value));
    kv("strategy.one_sided", cfg.strategy.one_sided ? "true" : "false");
    kv("strategy.last_layer_only", cfg.strategy.last_layer_only ? "true" : "false");
    kv("strategy.eligible", join_sizes(cfg.strategy.eligible));
    kv("run.epochs", std::to_string(cfg.run.epochs));
    kv("run.batch_size", std::to_string(cfg.run.batch_size));
    kv("run.seed", std::to_string(cfg.run.seed));
    kv("run.out_dir", cfg.run.out_dir);
    kv("run.dump_features", cfg.run.dump_features ? "true" : "false");
    kv("run.grid_resolution", std::to_string(cfg.run.grid_resolution));
    return out;
}

void validate_config(const RunConfig& cfg) {
    const auto bad = [](const std::string& key, const std::string& what) {
        throw ConfigError("config: " + key + ": " + what);
    };

    std::size_t mix_points = 0;
    if (cfg.model.kind == "mlp") {
        for (std::size_t h : cfg.model.hidden) {
            if (h == 0) {
                bad("model.hidden", "widths must be positive");
            }
        }
        mix_points = cfg.model.hidden.size() + 1;
    } else if (cfg.model.kind == "cnn_vis2d") {
        if (cfg.model.in_channels == 0) {
            bad("model.in_channels", "must be positive");
        }
        if (cfg.model.in_h % 8 != 0 || cfg.model.in_w % 8 != 0 || cfg.model.in_h < 8 ||
            cfg.model.in_w < 8) {
            bad("model.in_h", "CNN spatial dims must be multiples of 8");
        }
        mix_points = 4;
    } else {
        bad("model.kind", "expected mlp or cnn_vis2d, got '" + cfg.model.kind + "'");
    }
    if (cfg.model.feature_dim < 2) {
        bad("model.feature_dim", "must be >= 2");
    }

    if (cfg.optim.lr <= 0.0) {
        bad("optim.lr", "must be > 0");
    }
    if (cfg.optim.momentum < 0.0 || cfg.optim.momentum >= 1.0) {
        bad("optim.momentum", "must lie in [0, 1)");
    }
    if (cfg.optim.weight_decay < 0.0) {
        bad("optim.weight_decay", "must be >= 0");
    }
    if (cfg.optim.schedule == "step" || cfg.optim.schedule == "warmup_step") {
        if (cfg.optim.factor <= 0.0 || cfg.optim.factor >= 1.0) {
            bad("optim.factor", "must lie in (0, 1)");
        }
        for (std::size_t i = 1; i < cfg.optim.milestones.size(); ++i) {
            if (cfg.optim.milestones[i] <= cfg.optim.milestones[i - 1]) {
                bad("optim.milestones", "must be strictly increasing");
            }
        }
        if (cfg.optim.schedule == "warmup_step") {
            if (cfg.optim.warmup_epochs == 0) {
                bad("optim.warmup_epochs", "must be >= 1");
            }
            if (cfg.optim.warmup_start <= 0.0) {
                bad("optim.warmup_start", "must be > 0");
            }
        }
    } else if (cfg.optim.schedule == "cosine") {
        if (cfg.optim.t_max == 0) {
            bad("optim.t_max", "must be >= 1");
        }
    } else {
        bad("optim.schedule", "expected step, warmup_step, or cosine, got '" +
                                  cfg.optim.schedule + "'");
    }

    if (cfg.data.generator == "gaussian_toy") {
        if (cfg.data.classes < 2) {
            bad("data.classes", "must be >= 2");
        }
        if (cfg.data.dim < 2) {
            bad("data.dim", "must be >= 2");
        }
        if (cfg.data.per_class < 5) {
            bad("data.per_class", "must be >= 5 for the 80/20 split");
        }
        if (cfg.data.spread < 0.0) {
            bad("data.spread", "must be >= 0");
        }
        if (!cfg.data.coarse_map.empty() && cfg.data.coarse_map.size() != cfg.data.classes) {
            bad("data.coarse_map", "must list one coarse class per fine class");
        }
    } else if (cfg.data.generator == "file") {
        if (cfg.data.path.empty()) {
            bad("data.path", "required when data.generator = file");
        }
    } else {
        bad("data.generator", "expected gaussian_toy or file, got '" + cfg.data.generator +
                                  "'");
    }
    if (cfg.data.imb_factor < 1.0) {
        bad("data.imb_factor", "must be >= 1");
    }
    if (!cfg.data.coarse_map.empty()) {
        std::size_t coarse = 0;
        for (std::size_t c : cfg.data.coarse_map) {
            coarse = std::max(coarse, c + 1);
        }
        std::vector<bool> hit(coarse, false);
        for (std::size_t c : cfg.data.coarse_map) {
            hit[c] = true;
        }
        for (bool h : hit) {
            if (!h) {
                bad("data.coarse_map", "coarse classes must be contiguous from 0");
            }
        }
        if (coarse < 2) {
            bad("data.coarse_map", "needs at least two coarse classes");
        }
    }

    if (cfg.strategy.kind == "none") {
        // nothing strategy-specific
    } else if (cfg.strategy.kind == "mixup" || cfg.strategy.kind == "manifold_mixup") {
        if (cfg.strategy.alpha <= 0.0) {
            bad("strategy.alpha", "must be > 0");
        }
    } else if (cfg.strategy.kind == "am_mixup") {
        if (cfg.strategy.beta < 0.0) {
            bad("strategy.beta", "must be >= 0");
        }
        if (cfg.strategy.rate_mode == "fixed_beta") {
            if (cfg.strategy.alpha <= 0.0) {
                bad("strategy.alpha", "must be > 0");
            }
        } else if (cfg.strategy.rate_mode == "fixed") {
            if (cfg.strategy.fixed_value <= 0.0 || cfg.strategy.fixed_value >= 1.0) {
                bad("strategy.fixed_value", "must lie in (0, 1)");
            }
        } else if (cfg.strategy.rate_mode != "scheduled") {
            bad("strategy.rate_mode", "expected scheduled, fixed_beta, or fixed, got '" +
                                          cfg.strategy.rate_mode + "'");
        }
    } else {
        bad("strategy.kind", "expected none, mixup, manifold_mixup, or am_mixup, got '" +
                                 cfg.strategy.kind + "'");
    }
    for (std::size_t l : cfg.strategy.eligible) {
        if (l >= mix_points) {
            bad("strategy.eligible",
                "layer " + std::to_string(l) + " out of range (model has " +
                    std::to_string(mix_points) + " mix points)");
        }
    }

    if (cfg.run.batch_size == 0) {
        bad("run.batch_size", "must be >= 1");
    }
    if (cfg.strategy.kind != "none" && cfg.run.batch_size < 2) {
        bad("run.batch_size", "must be >= 2 when a mixup strategy is active");
    }
    if (cfg.run.out_dir.empty()) {
        bad("run.out_dir", "must not be empty");
    }
    if (cfg.run.grid_resolution == 1) {
        bad("run.grid_resolution", "must be 0 (off) or >= 2");
    }
}

} // namespace clab
