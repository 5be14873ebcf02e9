#include "clab/model.hpp"

#include "clab/binio.hpp"
#include "clab/errors.hpp"

#include <cmath>
#include <fstream>

namespace clab {

namespace {

void push_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) {
        v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xFF));
    }
}

void push_u64(std::vector<unsigned char>& v, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
        v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xFF));
    }
}

std::uint32_t pull_u32(const std::vector<unsigned char>& v, std::size_t& pos) {
    if (pos + 4 > v.size()) {
        throw IoError("model spec block: truncated");
    }
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) {
        x |= static_cast<std::uint32_t>(v[pos + static_cast<std::size_t>(i)]) << (8 * i);
    }
    pos += 4;
    return x;
}

std::uint64_t pull_u64(const std::vector<unsigned char>& v, std::size_t& pos) {
    if (pos + 8 > v.size()) {
        throw IoError("model spec block: truncated");
    }
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) {
        x |= static_cast<std::uint64_t>(v[pos + static_cast<std::size_t>(i)]) << (8 * i);
    }
    pos += 8;
    return x;
}

void fill_uniform(const TensorPtr& t, Rng& rng, double bound) {
    for (double& v : t->values) {
        v = rng.uniform(-bound, bound);
    }
}

void fill_zero(const TensorPtr& t) {
    t->values.assign(t->values.size(), 0.0);
}

constexpr char kMagic[4] = {'C', 'L', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void validate_spec(const ModelSpec& spec) {
    if (spec.num_classes < 2) {
        throw ConfigError("model: num_classes must be >= 2");
    }
    if (const auto* mlp = std::get_if<MlpSpec>(&spec.encoder)) {
        if (mlp->widths.empty()) {
            throw ConfigError("model: MLP needs at least one width");
        }
        for (std::size_t w : mlp->widths) {
            if (w == 0) {
                throw ConfigError("model: MLP widths must be positive");
            }
        }
        if (mlp->widths.back() < 2) {
            throw ConfigError("model: feature dimension must be >= 2");
        }
    } else {
        const auto& cnn = std::get<CnnVis2DSpec>(spec.encoder);
        if (cnn.in_channels == 0) {
            throw ConfigError("model: in_channels must be positive");
        }
        if (cnn.in_h % 8 != 0 || cnn.in_w % 8 != 0 || cnn.in_h < 8 || cnn.in_w < 8) {
            throw ConfigError("model: CNN spatial dims must be multiples of 8");
        }
        if (cnn.feature_dim < 2) {
            throw ConfigError("model: feature dimension must be >= 2");
        }
    }
}

std::size_t spec_feature_dim(const ModelSpec& spec) {
    if (const auto* mlp = std::get_if<MlpSpec>(&spec.encoder)) {
        return mlp->widths.back();
    }
    return std::get<CnnVis2DSpec>(spec.encoder).feature_dim;
}

std::size_t spec_mix_points(const ModelSpec& spec) {
    if (const auto* mlp = std::get_if<MlpSpec>(&spec.encoder)) {
        return mlp->widths.size() - 1;
    }
    return 4;
}

std::vector<unsigned char> encode_spec(const ModelSpec& spec) {
    std::vector<unsigned char> out;
    if (const auto* mlp = std::get_if<MlpSpec>(&spec.encoder)) {
        push_u32(out, 0);
        push_u32(out, static_cast<std::uint32_t>(mlp->widths.size()));
        for (std::size_t w : mlp->widths) {
            push_u64(out, w);
        }
    } else {
        const auto& cnn = std::get<CnnVis2DSpec>(spec.encoder);
        push_u32(out, 1);
        push_u64(out, cnn.in_channels);
        push_u64(out, cnn.in_h);
        push_u64(out, cnn.in_w);
        push_u64(out, cnn.feature_dim);
    }
    push_u64(out, spec.num_classes);
    return out;
}

ModelSpec decode_spec(const std::vector<unsigned char>& bytes) {
    std::size_t pos = 0;
    ModelSpec spec;
    const std::uint32_t kind = pull_u32(bytes, pos);
    if (kind == 0) {
        MlpSpec mlp;
        const std::uint32_t n = pull_u32(bytes, pos);
        if (n == 0 || n > 64) {
            throw IoError("model spec block: implausible MLP width count");
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            mlp.widths.push_back(static_cast<std::size_t>(pull_u64(bytes, pos)));
        }
        spec.encoder = std::move(mlp);
    } else if (kind == 1) {
        CnnVis2DSpec cnn;
        cnn.in_channels = static_cast<std::size_t>(pull_u64(bytes, pos));
        cnn.in_h = static_cast<std::size_t>(pull_u64(bytes, pos));
        cnn.in_w = static_cast<std::size_t>(pull_u64(bytes, pos));
        cnn.feature_dim = static_cast<std::size_t>(pull_u64(bytes, pos));
        spec.encoder = cnn;
    } else {
        throw IoError("model spec block: unknown encoder kind");
    }
    spec.num_classes = static_cast<std::size_t>(pull_u64(bytes, pos));
    if (pos != bytes.size()) {
        throw IoError("model spec block: trailing bytes");
    }
    return spec;
}

std::uint64_t spec_digest(const ModelSpec& spec) {
    const auto bytes = encode_spec(spec);
    return io::fnv1a(bytes.data(), bytes.size());
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
    validate_spec(spec_);
    feature_dim_ = spec_feature_dim(spec_);

    if (const auto* mlp = std::get_if<MlpSpec>(&spec_.encoder)) {
        const auto& w = mlp->widths;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            params_.push_back(make_tensor({w[i], w[i + 1]}, true));
            params_.push_back(make_tensor({w[i + 1]}, true));
        }
    } else {
        const auto& cnn = std::get<CnnVis2DSpec>(spec_.encoder);
        std::size_t prev = cnn.in_channels;
        for (std::size_t ch : CnnVis2DSpec::channels) {
            params_.push_back(make_tensor({ch, prev, 3, 3}, true));
            params_.push_back(make_tensor({ch}, true));
            prev = ch;
        }
        const std::size_t flat =
            CnnVis2DSpec::channels[2] * (cnn.in_h / 8) * (cnn.in_w / 8);
        params_.push_back(make_tensor({flat, cnn.feature_dim}, true));
        params_.push_back(make_tensor({cnn.feature_dim}, true));
    }
    encoder_param_count_ = params_.size();

    params_.push_back(make_tensor({feature_dim_, spec_.num_classes}, true));
    params_.push_back(make_tensor({spec_.num_classes}, true));
}

void Model::init(Rng& rng) {
    std::size_t p = 0;
    if (const auto* mlp = std::get_if<MlpSpec>(&spec_.encoder)) {
        const auto& w = mlp->widths;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            fill_uniform(params_[p++], rng, std::sqrt(6.0 / static_cast<double>(w[i])));
            fill_zero(params_[p++]);
        }
    } else {
        const auto& cnn = std::get<CnnVis2DSpec>(spec_.encoder);
        std::size_t prev = cnn.in_channels;
        for (std::size_t ch : CnnVis2DSpec::channels) {
            (void)ch;
            fill_uniform(params_[p++], rng,
                         std::sqrt(6.0 / static_cast<double>(prev * 9)));
            fill_zero(params_[p++]);
            prev = ch;
        }
        const std::size_t flat =
            CnnVis2DSpec::channels[2] * (cnn.in_h / 8) * (cnn.in_w / 8);
        fill_uniform(params_[p++], rng, std::sqrt(6.0 / static_cast<double>(flat)));
        fill_zero(params_[p++]);
    }
    reset_classifier(rng);
}

void Model::reset_classifier(Rng& rng) {
    fill_uniform(params_[encoder_param_count_], rng,
                 std::sqrt(6.0 / static_cast<double>(feature_dim_)));
    fill_zero(params_[encoder_param_count_ + 1]);
}

TensorPtr Model::features(Tape* tape, const TensorPtr& x, const LayerMixHook* hook) const {
    if (hook != nullptr) {
        if (num_mix_points() == 0 || hook->layer >= num_mix_points()) {
            throw std::invalid_argument("model: mix layer out of range");
        }
        if (hook->pairing.size() != x->shape[0]) {
            throw std::invalid_argument("model: pairing size must match batch size");
        }
    }
    auto maybe_mix = [&](TensorPtr z, std::size_t point) {
        if (hook != nullptr && hook->layer == point) {
            return mix(tape, z, gather_rows(tape, z, hook->pairing), hook->lambda);
        }
        return z;
    };

    if (const auto* mlp = std::get_if<MlpSpec>(&spec_.encoder)) {
        const auto& w = mlp->widths;
        if (x->shape.size() != 2 || x->shape[1] != w.front()) {
            throw std::invalid_argument("model: MLP expects input [N, in_width]");
        }
        TensorPtr z = maybe_mix(x, 0);
        const std::size_t layers = w.size() - 1;
        for (std::size_t i = 0; i < layers; ++i) {
            z = linear(tape, z, params_[2 * i], params_[2 * i + 1]);
            if (i + 1 < layers) {
                z = relu(tape, z);
                z = maybe_mix(z, i + 1);
            }
        }
        return z;
    }

    const auto& cnn = std::get<CnnVis2DSpec>(spec_.encoder);
    if (x->shape.size() != 4 || x->shape[1] != cnn.in_channels || x->shape[2] != cnn.in_h ||
        x->shape[3] != cnn.in_w) {
        throw std::invalid_argument("model: CNN expects input [N, C, H, W]");
    }
    TensorPtr z = maybe_mix(x, 0);
    for (std::size_t b = 0; b < 3; ++b) {
        z = conv2d_3x3(tape, z, params_[2 * b]);
        z = bias_nchw(tape, z, params_[2 * b + 1]);
        z = relu(tape, z);
        z = maxpool2(tape, z);
        z = maybe_mix(z, b + 1);
    }
    z = flatten2(tape, z);
    return linear(tape, z, params_[6], params_[7]);
}

TensorPtr Model::logits_from_features(Tape* tape, const TensorPtr& z) const {
    if (z->shape.size() != 2 || z->shape[1] != feature_dim_) {
        throw std::invalid_argument("model: classifier expects [N, feature_dim]");
    }
    return linear(tape, z, params_[encoder_param_count_], params_[encoder_param_count_ + 1]);
}

TensorPtr Model::logits(Tape* tape, const TensorPtr& x, const LayerMixHook* hook) const {
    return logits_from_features(tape, features(tape, x, hook));
}

std::vector<TensorPtr> Model::encoder_parameters() const {
    return {params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(encoder_param_count_)};
}

std::vector<TensorPtr> Model::classifier_parameters() const {
    return {params_.begin() + static_cast<std::ptrdiff_t>(encoder_param_count_), params_.end()};
}

void Model::set_trainable(bool encoder, bool classifier) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        params_[i]->requires_grad = i < encoder_param_count_ ? encoder : classifier;
    }
}

std::uint64_t Model::encoder_digest() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < encoder_param_count_; ++i) {
        for (double v : params_[i]->values) {
            const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
            unsigned char b[8];
            for (int j = 0; j < 8; ++j) {
                b[j] = static_cast<unsigned char>((u >> (8 * j)) & 0xFF);
            }
            h = io::fnv1a(b, 8, h);
        }
    }
    return h;
}

void Model::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("checkpoint: cannot open '" + path + "' for writing");
    }
    io::write_magic(os, kMagic);
    io::write_u32(os, kVersion);
    const auto spec_bytes = encode_spec(spec_);
    io::write_u64(os, io::fnv1a(spec_bytes.data(), spec_bytes.size()));
    io::write_u32(os, static_cast<std::uint32_t>(spec_bytes.size()));
    os.write(reinterpret_cast<const char*>(spec_bytes.data()),
             static_cast<std::streamsize>(spec_bytes.size()));
    if (!os) {
        throw IoError("checkpoint: write failed");
    }
    for (const auto& p : params_) {
        io::write_u64(os, p->values.size());
        for (double v : p->values) {
            io::write_f64(os, v);
        }
    }
    os.flush();
    if (!os) {
        throw IoError("checkpoint: write failed");
    }
}

Model Model::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("checkpoint: cannot open '" + path + "'");
    }
    io::read_magic(is, kMagic, "checkpoint");
    const std::uint32_t version = io::read_u32(is);
    if (version != kVersion) {
        throw IoError("checkpoint: unsupported version");
    }
    const std::uint64_t digest = io::read_u64(is);
    const std::uint32_t spec_len = io::read_u32(is);
    if (spec_len == 0 || spec_len > 4096) {
        throw IoError("checkpoint: implausible spec block length");
    }
    std::vector<unsigned char> spec_bytes(spec_len);
    is.read(reinterpret_cast<char*>(spec_bytes.data()), spec_len);
    if (!is) {
        throw IoError("checkpoint: truncated spec block");
    }
    if (io::fnv1a(spec_bytes.data(), spec_bytes.size()) != digest) {
        throw IoError("checkpoint: spec digest mismatch");
    }
    Model model(decode_spec(spec_bytes));
    for (const auto& p : model.params_) {
        const std::uint64_t n = io::read_u64(is);
        if (n != p->values.size()) {
            throw IoError("checkpoint: parameter size mismatch");
        }
        for (double& v : p->values) {
            v = io::read_f64(is);
        }
    }
    is.peek();
    if (!is.eof()) {
        throw IoError("checkpoint: trailing bytes");
    }
    return model;
}

void Model::adopt_encoder(const Model& other) {
    if (!(other.spec_.encoder == spec_.encoder)) {
        throw std::invalid_argument("model: encoder specs differ");
    }
    for (std::size_t i = 0; i < encoder_param_count_; ++i) {
        params_[i]->values = other.params_[i]->values;
    }
}

void Model::adopt_classifier(const Model& other) {
    if (other.feature_dim_ != feature_dim_ || other.num_classes() != num_classes()) {
        throw std::invalid_argument("model: classifier shapes differ");
    }
    params_[encoder_param_count_]->values =
        other.params_[other.encoder_param_count_]->values;
    params_[encoder_param_count_ + 1]->values =
        other.params_[other.encoder_param_count_ + 1]->values;
}

} // namespace clab
