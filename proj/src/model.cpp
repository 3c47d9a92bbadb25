#include "pats/model.hpp"

#include "pats/errors.hpp"
#include "pats/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pats {

void ModelSpec::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw SpecError("invalid model spec: " + what);
        }
    };
    if (kind == ModelKind::mlp) {
        require(layer_sizes.size() >= 2, "layer_sizes needs an input and an output width");
        for (std::size_t w : layer_sizes) {
            require(w >= 1, "layer_sizes entries must be >= 1");
        }
        return;
    }
    require(vocab >= 1, "vocab must be >= 1");
    require(seq_len >= 1, "seq_len must be >= 1");
    require(embed_dim >= 1, "embed_dim must be >= 1");
    require(heads >= 1, "heads must be >= 1");
    require(ffn_dim >= 1, "ffn_dim must be >= 1");
    require(num_classes >= 1, "num_classes must be >= 1");
    require(blocks >= 1 && blocks <= 2, "tiny_transformer supports 1 or 2 blocks");
    require(embed_dim % heads == 0, "embed_dim must be divisible by heads");
}

std::size_t ModelSpec::classes() const
{
    return kind == ModelKind::mlp ? layer_sizes.back() : num_classes;
}

ParamGroup::ParamGroup(std::string name_, Tensor weights_, bool perturbable_)
    : name(std::move(name_)),
      weights(std::move(weights_)),
      m(weights.shape()),
      u(weights.shape()),
      s(weights.shape()),
      perturbable(perturbable_)
{
}

void ParamGroup::reset_state()
{
    m = Tensor(weights.shape());
    u = Tensor(weights.shape());
    s = Tensor(weights.shape());
    weights.clear_grad();
}

bool default_perturbable(std::string_view name, std::size_t rank, const ModelSpec& spec)
{
    if (name.find(".layernorm.") != std::string_view::npos) {
        return false;
    }
    if (rank < 2) {
        return spec.perturb_vectors;
    }
    if (name.starts_with("embeddings.")) {
        return spec.perturb_embeddings;
    }
    return name.starts_with("encoder.");
}

namespace {

enum class Init { scaled_normal, embedding, zeros, ones };

Tensor init_tensor(const RngStream& rng, const std::string& name, Shape shape, Init init)
{
    Tensor t(std::move(shape));
    switch (init) {
    case Init::zeros:
        break;
    case Init::ones:
        std::fill(t.values().begin(), t.values().end(), 1.0);
        break;
    case Init::scaled_normal:
    case Init::embedding: {
        const Substream stream = rng.substream(name, 0, Purpose::init);
        const double fan = static_cast<double>(init == Init::scaled_normal ? t.shape()[0] : t.shape()[1]);
        const double stddev = 1.0 / std::sqrt(fan);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = stddev * stream.normal(i);
        }
        break;
    }
    }
    return t;
}

struct GroupBuilder {
    const ModelSpec& spec;
    RngStream rng;
    std::vector<ParamGroup> groups;

    void add(const std::string& name, Shape shape, Init init)
    {
        const std::size_t rank = shape.size();
        groups.emplace_back(name, init_tensor(rng, name, std::move(shape), init), default_perturbable(name, rank, spec));
    }
};

void add_classifier(GroupBuilder& b, std::size_t in, std::size_t classes)
{
    b.add("classifier.weight", {in, classes}, Init::scaled_normal);
    b.add("classifier.bias", {classes}, Init::zeros);
}

} // namespace

Model build_model(const ModelSpec& spec, std::uint64_t seed)
{
    spec.validate();
    GroupBuilder b{spec, RngStream(seed), {}};
    if (spec.kind == ModelKind::mlp) {
        const auto& sizes = spec.layer_sizes;
        for (std::size_t i = 0; i + 2 < sizes.size(); ++i) {
            const std::string prefix = "encoder." + std::to_string(i) + ".dense.";
            b.add(prefix + "weight", {sizes[i], sizes[i + 1]}, Init::scaled_normal);
            b.add(prefix + "bias", {sizes[i + 1]}, Init::zeros);
        }
        add_classifier(b, sizes[sizes.size() - 2], sizes.back());
    } else {
        const std::size_t d = spec.embed_dim;
        b.add("embeddings.token", {spec.vocab, d}, Init::embedding);
        b.add("embeddings.position", {spec.seq_len, d}, Init::embedding);
        for (std::size_t i = 0; i < spec.blocks; ++i) {
            const std::string prefix = "encoder." + std::to_string(i) + ".";
            for (const char* proj : {"query", "key", "value", "output"}) {
                b.add(prefix + "attn." + proj, {d, d}, Init::scaled_normal);
            }
            b.add(prefix + "attn.layernorm.gain", {d}, Init::ones);
            b.add(prefix + "attn.layernorm.bias", {d}, Init::zeros);
            b.add(prefix + "ffn.dense_in.weight", {d, spec.ffn_dim}, Init::scaled_normal);
            b.add(prefix + "ffn.dense_in.bias", {spec.ffn_dim}, Init::zeros);
            b.add(prefix + "ffn.dense_out.weight", {spec.ffn_dim, d}, Init::scaled_normal);
            b.add(prefix + "ffn.dense_out.bias", {d}, Init::zeros);
            b.add(prefix + "ffn.layernorm.gain", {d}, Init::ones);
            b.add(prefix + "ffn.layernorm.bias", {d}, Init::zeros);
        }
        add_classifier(b, d, spec.num_classes);
    }
    return Model(spec, std::move(b.groups));
}

Model::Model(ModelSpec spec, std::vector<ParamGroup> groups) : spec_(std::move(spec)), groups_(std::move(groups))
{
    spec_.validate();
}

ParamGroup& Model::group(std::string_view name)
{
    for (auto& g : groups_) {
        if (g.name == name) {
            return g;
        }
    }
    throw InputError("no parameter group named '" + std::string(name) + "'");
}

const ParamGroup& Model::group(std::string_view name) const
{
    return const_cast<Model*>(this)->group(name);
}

std::size_t Model::parameter_count() const noexcept
{
    return std::accumulate(groups_.begin(), groups_.end(), std::size_t{0},
                           [](std::size_t acc, const ParamGroup& g) { return acc + g.size(); });
}

void Model::zero_grads()
{
    for (auto& g : groups_) {
        g.weights.zero_grad();
    }
}

void Model::reinit_head(std::uint64_t seed)
{
    const RngStream rng(seed);
    for (auto& g : groups_) {
        if (!g.name.starts_with("classifier.")) {
            continue;
        }
        g.weights = init_tensor(rng, g.name, g.weights.shape(), g.weights.rank() == 2 ? Init::scaled_normal : Init::zeros);
        g.reset_state();
    }
}

void Model::check_batch(const Batch& batch) const
{
    if (batch.size == 0) {
        throw InputError("empty batch");
    }
    if (batch.labels.size() != batch.size) {
        throw InputError("batch has " + std::to_string(batch.labels.size()) + " labels for " +
                         std::to_string(batch.size) + " rows");
    }
    if (spec_.kind == ModelKind::mlp) {
        if (batch.feature_dim != spec_.layer_sizes.front() ||
            batch.features.size() != batch.size * batch.feature_dim) {
            throw DimensionError("mlp expects " + std::to_string(spec_.layer_sizes.front()) +
                                 " features per row, batch has " + std::to_string(batch.feature_dim));
        }
    } else if (batch.seq_len != spec_.seq_len || batch.tokens.size() != batch.size * batch.seq_len) {
        throw DimensionError("transformer expects sequences of length " + std::to_string(spec_.seq_len) +
                             ", batch has " + std::to_string(batch.seq_len));
    }
}

Var Model::forward(Tape& tape, const Batch& batch)
{
    check_batch(batch);
    std::vector<Var> params;
    params.reserve(groups_.size());
    for (auto& g : groups_) {
        params.push_back(tape.parameter(g.weights));
    }
    return forward_impl(tape, params, batch);
}

Tensor Model::logits(const Batch& batch) const
{
    check_batch(batch);
    Tape tape;
    std::vector<Var> params;
    params.reserve(groups_.size());
    for (const auto& g : groups_) {
        params.push_back(tape.constant(g.weights));
    }
    return forward_impl(tape, params, batch).value();
}

double Model::loss(const Batch& batch) const
{
    Tape tape;
    Var out = tape.constant(logits(batch));
    return softmax_cross_entropy(out, batch.labels).value().item();
}

double Model::accuracy(const Batch& batch) const
{
    const Tensor z = logits(batch);
    const std::size_t c = z.cols();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.size; ++i) {
        const double* row = &z[i * c];
        const auto best = static_cast<int>(std::max_element(row, row + c) - row);
        correct += best == batch.labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size);
}

Var Model::forward_impl(Tape& tape, const std::vector<Var>& params, const Batch& batch) const
{
    auto param = [&](std::string_view name) {
        for (std::size_t i = 0; i < groups_.size(); ++i) {
            if (groups_[i].name == name) {
                return params[i];
            }
        }
        throw InputError("no parameter group named '" + std::string(name) + "'");
    };
    auto activate = [&](Var x) { return spec_.activation == Activation::tanh ? tanh(x) : relu(x); };
    auto dense = [&](Var x, const std::string& prefix) {
        return add_rowwise(matmul(x, param(prefix + "weight")), param(prefix + "bias"));
    };

    if (spec_.kind == ModelKind::mlp) {
        Var h = tape.constant(Tensor({batch.size, batch.feature_dim}, batch.features));
        for (std::size_t i = 0; i + 2 < spec_.layer_sizes.size(); ++i) {
            h = activate(dense(h, "encoder." + std::to_string(i) + ".dense."));
        }
        return dense(h, "classifier.");
    }

    const std::size_t b = batch.size;
    const std::size_t len = spec_.seq_len;
    const std::size_t d = spec_.embed_dim;
    const std::size_t dh = d / spec_.heads;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<int> positions(b * len);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = static_cast<int>(i % len);
    }
    Var x = add(gather_rows(param("embeddings.token"), batch.tokens),
                gather_rows(param("embeddings.position"), positions));

    auto norm = [&](Var v, const std::string& prefix) {
        return add_rowwise(mul_rowwise(layer_norm_rows(v), param(prefix + "gain")), param(prefix + "bias"));
    };

    for (std::size_t blk = 0; blk < spec_.blocks; ++blk) {
        const std::string prefix = "encoder." + std::to_string(blk) + ".";
        Var q = matmul(x, param(prefix + "attn.query"));
        Var k = matmul(x, param(prefix + "attn.key"));
        Var v = matmul(x, param(prefix + "attn.value"));
        std::vector<Var> examples;
        examples.reserve(b);
        for (std::size_t e = 0; e < b; ++e) {
            Var qe = slice_rows(q, e * len, len);
            Var ke = slice_rows(k, e * len, len);
            Var ve = slice_rows(v, e * len, len);
            std::vector<Var> heads;
            heads.reserve(spec_.heads);
            for (std::size_t h = 0; h < spec_.heads; ++h) {
                Var qh = slice_cols(qe, h * dh, dh);
                Var kh = slice_cols(ke, h * dh, dh);
                Var vh = slice_cols(ve, h * dh, dh);
                Var weights = softmax_rows(scale(matmul(qh, transpose(kh)), attn_scale));
                heads.push_back(matmul(weights, vh));
            }
            examples.push_back(concat_cols(heads));
        }
        Var attn = matmul(concat_rows(examples), param(prefix + "attn.output"));
        x = norm(add(x, attn), prefix + "attn.layernorm.");
        Var ffn = dense(activate(dense(x, prefix + "ffn.dense_in.")), prefix + "ffn.dense_out.");
        x = norm(add(x, ffn), prefix + "ffn.layernorm.");
    }

    // Mean-pool each sequence with a constant [b x b*len] averaging matrix.
    Tensor pool({b, b * len});
    for (std::size_t e = 0; e < b; ++e) {
        for (std::size_t t = 0; t < len; ++t) {
            pool[e * b * len + e * len + t] = 1.0 / static_cast<double>(len);
        }
    }
    Var pooled = matmul(tape.constant(std::move(pool)), x);
    return dense(pooled, "classifier.");
}

std::string_view to_string(ModelKind kind)
{
    return kind == ModelKind::mlp ? "mlp" : "tiny_transformer";
}

std::string_view to_string(Activation activation)
{
    return activation == Activation::tanh ? "tanh" : "relu";
}

ModelKind parse_model_kind(std::string_view text)
{
    if (text == "mlp") {
        return ModelKind::mlp;
    }
    if (text == "tiny_transformer") {
        return ModelKind::tiny_transformer;
    }
    throw ConfigError("unknown model kind '" + std::string(text) + "' (expected mlp or tiny_transformer)");
}

Activation parse_activation(std::string_view text)
{
    if (text == "tanh") {
        return Activation::tanh;
    }
    if (text == "relu") {
        return Activation::relu;
    }
    throw ConfigError("unknown activation '" + std::string(text) + "' (expected tanh or relu)");
}

} // namespace pats
