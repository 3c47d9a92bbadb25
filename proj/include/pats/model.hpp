#pragma once

#include "pats/autodiff.hpp"
#include "pats/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pats {

enum class ModelKind { mlp, tiny_transformer };
enum class Activation { tanh, relu };

struct ModelSpec {
    ModelKind kind = ModelKind::mlp;
    Activation activation = Activation::tanh;

    // mlp: input width, hidden widths..., class count.
    std::vector<std::size_t> layer_sizes{8, 32, 4};

    // tiny_transformer
    std::size_t vocab = 32;
    std::size_t seq_len = 8;
    std::size_t embed_dim = 16;
    std::size_t heads = 2;
    std::size_t ffn_dim = 32;
    std::size_t blocks = 1;
    std::size_t num_classes = 2;

    /// Embedding tables join the perturbable set.
    bool perturb_embeddings = false;
    /// 1-D parameters (biases) join the perturbable set. LayerNorm parameters never do.
    bool perturb_vectors = false;

    std::uint64_t init_seed = 0;

    /// Throws SpecError naming the first invalid field.
    void validate() const;
    std::size_t classes() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// One named parameter tensor and its optimizer state.
struct ParamGroup {
    std::string name;
    Tensor weights;
    Tensor m; ///< first-moment EMA
    Tensor u; ///< infinity-norm EMA
    Tensor s; ///< sensitivity EMA
    bool perturbable = false;

    ParamGroup(std::string name, Tensor weights, bool perturbable);
    std::size_t size() const noexcept { return weights.size(); }
    void reset_state();
};

/// A minibatch. MLPs read `features` (size x feature_dim); transformers read
/// `tokens` (size x seq_len).
struct Batch {
    std::size_t size = 0;
    std::size_t feature_dim = 0;
    std::size_t seq_len = 0;
    std::vector<double> features;
    std::vector<int> tokens;
    std::vector<int> labels;
};

class Model {
public:
    Model(ModelSpec spec, std::vector<ParamGroup> groups);

    const ModelSpec& spec() const noexcept { return spec_; }
    std::vector<ParamGroup>& groups() noexcept { return groups_; }
    const std::vector<ParamGroup>& groups() const noexcept { return groups_; }
    ParamGroup& group(std::string_view name);
    const ParamGroup& group(std::string_view name) const;

    /// Records the forward pass with every group bound as a tape parameter,
    /// returning logits [batch x classes].
    Var forward(Tape& tape, const Batch& batch);
    /// Inference-only logits; never touches gradients or optimizer state.
    Tensor logits(const Batch& batch) const;
    double loss(const Batch& batch) const;
    /// Fraction of rows whose arg-max logit equals the label.
    double accuracy(const Batch& batch) const;

    std::size_t parameter_count() const noexcept;
    void zero_grads();
    /// Redraws the classifier head from `seed` and clears its optimizer state.
    void reinit_head(std::uint64_t seed);

private:
    Var forward_impl(Tape& tape, const std::vector<Var>& params, const Batch& batch) const;
    void check_batch(const Batch& batch) const;

    ModelSpec spec_;
    std::vector<ParamGroup> groups_;
};

/// Deterministic initialization: scaled-normal matrices, zero biases, unit LayerNorm
/// gains, zeroed optimizer state.
Model build_model(const ModelSpec& spec, std::uint64_t seed);
inline Model build_model(const ModelSpec& spec) { return build_model(spec, spec.init_seed); }

/// Default perturbable flag for a group name of the given rank.
bool default_perturbable(std::string_view name, std::size_t rank, const ModelSpec& spec);

std::string_view to_string(ModelKind kind);
std::string_view to_string(Activation activation);
ModelKind parse_model_kind(std::string_view text);
Activation parse_activation(std::string_view text);

} // namespace pats
