#pragma once

#include "clab/ops.hpp"
#include "clab/rng.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace clab {

// Encoder given by dense layer widths, input width first and feature width
// last. ReLU follows every layer except the final one, so the feature layer
// is linear. A single width means an identity encoder (classifier probe).
struct MlpSpec {
    std::vector<std::size_t> widths;

    bool operator==(const MlpSpec&) const = default;
};

// Three conv blocks (3x3 stride 1 pad 1, ReLU, 2x2 maxpool) with channel
// counts 32/64/128, then a dense projection onto feature_dim. Spatial dims
// must be divisible by 8 so the three pools stay even.
struct CnnVis2DSpec {
    std::size_t in_channels = 3;
    std::size_t in_h = 32;
    std::size_t in_w = 32;
    std::size_t feature_dim = 2;

    static constexpr std::size_t channels[3] = {32, 64, 128};

    bool operator==(const CnnVis2DSpec&) const = default;
};

struct ModelSpec {
    std::variant<MlpSpec, CnnVis2DSpec> encoder;
    std::size_t num_classes = 2;

    bool operator==(const ModelSpec&) const = default;
};

// During a hooked forward pass, activations at mix point `layer` become
// lambda * z + (1 - lambda) * z[pairing]. Mix point 0 is the input; higher
// indices follow the hidden blocks in order. The final feature layer is not
// a mix point (feature-level mixing happens outside the encoder).
struct LayerMixHook {
    std::size_t layer = 0;
    double lambda = 1.0;
    std::vector<std::size_t> pairing;
};

void validate_spec(const ModelSpec& spec);
std::size_t spec_feature_dim(const ModelSpec& spec);
std::size_t spec_mix_points(const ModelSpec& spec);

std::vector<unsigned char> encode_spec(const ModelSpec& spec);
ModelSpec decode_spec(const std::vector<unsigned char>& bytes);
std::uint64_t spec_digest(const ModelSpec& spec);

class Model {
  public:
    explicit Model(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    std::size_t feature_dim() const { return feature_dim_; }
    std::size_t num_classes() const { return spec_.num_classes; }
    std::size_t num_mix_points() const { return spec_mix_points(spec_); }

    // Kaiming-uniform fan-in weights, zero biases, drawn in declaration order.
    void init(Rng& rng);
    void reset_classifier(Rng& rng);

    TensorPtr features(Tape* tape, const TensorPtr& x,
                       const LayerMixHook* hook = nullptr) const;
    TensorPtr logits_from_features(Tape* tape, const TensorPtr& z) const;
    TensorPtr logits(Tape* tape, const TensorPtr& x,
                     const LayerMixHook* hook = nullptr) const;

    const std::vector<TensorPtr>& parameters() const { return params_; }
    std::vector<TensorPtr> encoder_parameters() const;
    std::vector<TensorPtr> classifier_parameters() const;

    void set_trainable(bool encoder, bool classifier);

    // FNV-1a over encoder parameter bytes; checks the freeze invariant.
    std::uint64_t encoder_digest() const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);

    // Overwrites this model's classifier with another model's (widths must
    // agree). Used to compose a frozen encoder with a retrained probe.
    void adopt_classifier(const Model& other);

    // Overwrites this model's encoder parameters with another model's; the
    // encoder specs must be identical.
    void adopt_encoder(const Model& other);

  private:
    ModelSpec spec_;
    std::vector<TensorPtr> params_;
    std::size_t encoder_param_count_ = 0;
    std::size_t feature_dim_ = 0;
};

} // namespace clab
