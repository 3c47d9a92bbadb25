#include "pats/task.hpp"

#include "pats/errors.hpp"
#include "pats/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pats {

void TaskSpec::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw SpecError("invalid task spec: " + what);
        }
    };
    require(n_train >= 1, "n_train must be >= 1");
    require(n_dev >= 1, "n_dev must be >= 1");
    require(num_classes >= 2, "num_classes must be >= 2");
    require(shift >= 0.0 && std::isfinite(shift), "shift must be >= 0");
    require(noise >= 0.0 && std::isfinite(noise), "noise must be >= 0");
    switch (generator) {
    case Generator::gaussian_clusters:
        require(input_dim >= 1, "input_dim must be >= 1");
        break;
    case Generator::two_moons:
        require(input_dim >= 2, "two_moons needs input_dim >= 2");
        require(num_classes == 2, "two_moons has exactly 2 classes");
        break;
    case Generator::token_pattern:
        require(seq_len >= 1, "seq_len must be >= 1");
        require(noise <= 1.0, "token_pattern noise is a probability");
        require(vocab >= 2 * num_classes * signal_tokens_per_class() + 1,
                "vocab too small for " + std::to_string(num_classes) + " classes");
        break;
    }
}

std::size_t TaskSpec::signal_tokens_per_class() const
{
    return std::max<std::size_t>(1, vocab / (8 * num_classes));
}

Batch Dataset::batch(std::span<const std::size_t> rows) const
{
    Batch b;
    b.size = rows.size();
    b.feature_dim = feature_dim;
    b.seq_len = seq_len;
    b.labels.reserve(rows.size());
    for (std::size_t r : rows) {
        b.labels.push_back(labels.at(r));
        if (feature_dim > 0) {
            b.features.insert(b.features.end(), features.begin() + static_cast<std::ptrdiff_t>(r * feature_dim),
                              features.begin() + static_cast<std::ptrdiff_t>((r + 1) * feature_dim));
        }
        if (seq_len > 0) {
            b.tokens.insert(b.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(r * seq_len),
                            tokens.begin() + static_cast<std::ptrdiff_t>((r + 1) * seq_len));
        }
    }
    return b;
}

Batch Dataset::all() const
{
    Batch b;
    b.size = n;
    b.feature_dim = feature_dim;
    b.seq_len = seq_len;
    b.features = features;
    b.tokens = tokens;
    b.labels = labels;
    return b;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    const Batch b = batch(rows);
    Dataset d;
    d.n = b.size;
    d.feature_dim = feature_dim;
    d.seq_len = seq_len;
    d.features = b.features;
    d.tokens = b.tokens;
    d.labels = b.labels;
    return d;
}

namespace {

void rotate_pairs(std::span<double> x, double angle, std::size_t pairs)
{
    if (angle == 0.0) {
        return;
    }
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (std::size_t p = 0; p < pairs && 2 * p + 1 < x.size(); ++p) {
        const double a = x[2 * p];
        const double b = x[2 * p + 1];
        x[2 * p] = c * a - s * b;
        x[2 * p + 1] = s * a + c * b;
    }
}

// Balanced labels: row i gets class i mod c.
int label_for(std::size_t row, std::size_t classes)
{
    return static_cast<int>(row % classes);
}

Dataset gaussian_clusters(const TaskSpec& spec, const RngStream& rng, const std::vector<double>& centres,
                          std::string_view label, std::size_t n, bool shifted)
{
    Dataset d;
    d.n = n;
    d.feature_dim = spec.input_dim;
    d.features.resize(n * spec.input_dim);
    Draws draws(rng.substream(label, 0, Purpose::data));
    std::vector<double> centroid(spec.input_dim, 0.0);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t k = 0; k < spec.input_dim; ++k) {
            centroid[k] += centres[c * spec.input_dim + k] / static_cast<double>(spec.num_classes);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int y = label_for(i, spec.num_classes);
        d.labels.push_back(y);
        std::span<double> x(&d.features[i * spec.input_dim], spec.input_dim);
        for (std::size_t k = 0; k < spec.input_dim; ++k) {
            x[k] = centres[static_cast<std::size_t>(y) * spec.input_dim + k] + spec.noise * draws.next_normal();
        }
        if (shifted) {
            // Rotate about the centroid of the class centres so the shift changes the
            // geometry between classes without translating the data.
            for (std::size_t k = 0; k < spec.input_dim; ++k) {
                x[k] -= centroid[k];
            }
            rotate_pairs(x, spec.shift, spec.input_dim / 2);
            for (std::size_t k = 0; k < spec.input_dim; ++k) {
                x[k] += centroid[k];
            }
        }
    }
    return d;
}

Dataset two_moons(const TaskSpec& spec, const RngStream& rng, std::string_view label, std::size_t n, bool shifted)
{
    Dataset d;
    d.n = n;
    d.feature_dim = spec.input_dim;
    d.features.resize(n * spec.input_dim);
    Draws draws(rng.substream(label, 0, Purpose::data));
    for (std::size_t i = 0; i < n; ++i) {
        const int y = label_for(i, 2);
        d.labels.push_back(y);
        std::span<double> x(&d.features[i * spec.input_dim], spec.input_dim);
        const double t = std::numbers::pi * draws.next_uniform();
        const double px = y == 0 ? std::cos(t) : 1.0 - std::cos(t);
        const double py = y == 0 ? std::sin(t) : 0.5 - std::sin(t);
        // Centre the pair of moons on the origin before scaling.
        x[0] = spec.separation * (px - 0.5) + spec.noise * draws.next_normal();
        x[1] = spec.separation * (py - 0.25) + spec.noise * draws.next_normal();
        for (std::size_t k = 2; k < spec.input_dim; ++k) {
            x[k] = spec.noise * draws.next_normal();
        }
        if (shifted) {
            rotate_pairs(x, spec.shift, 1);
        }
    }
    return d;
}

Dataset token_pattern(const TaskSpec& spec, const RngStream& rng, const std::vector<int>& signal_map,
                      std::string_view label, std::size_t n)
{
    const std::size_t m = spec.signal_tokens_per_class();
    const std::size_t classes = spec.num_classes;
    const std::size_t filler_begin = 2 * classes * m;
    const std::size_t filler_count = spec.vocab - filler_begin;
    const std::size_t signals = std::max<std::size_t>(1, spec.seq_len / 4);

    Dataset d;
    d.n = n;
    d.seq_len = spec.seq_len;
    d.tokens.resize(n * spec.seq_len);
    Draws draws(rng.substream(label, 0, Purpose::data));
    for (std::size_t i = 0; i < n; ++i) {
        const int y = label_for(i, classes);
        d.labels.push_back(y);
        int* seq = &d.tokens[i * spec.seq_len];
        for (std::size_t t = 0; t < spec.seq_len; ++t) {
            seq[t] = static_cast<int>(filler_begin + draws.next_below(filler_count));
        }
        for (std::size_t k = 0; k < signals; ++k) {
            const std::size_t pos = draws.next_below(spec.seq_len);
            const std::size_t source_token = static_cast<std::size_t>(y) * m + draws.next_below(m);
            seq[pos] = signal_map[source_token];
        }
        if (draws.next_uniform() < spec.noise) {
            const std::size_t pos = draws.next_below(spec.seq_len);
            const std::size_t other = draws.next_below(classes);
            seq[pos] = signal_map[other * m + draws.next_below(m)];
        }
    }
    return d;
}

} // namespace

TaskData generate_task(const TaskSpec& spec)
{
    spec.validate();
    const RngStream rng(spec.seed);
    TaskData data;
    switch (spec.generator) {
    case Generator::gaussian_clusters: {
        std::vector<double> centres(spec.num_classes * spec.input_dim);
        Draws draws(rng.substream("task.centres", 0, Purpose::data));
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            double norm = 0.0;
            for (std::size_t k = 0; k < spec.input_dim; ++k) {
                centres[c * spec.input_dim + k] = draws.next_normal();
                norm += centres[c * spec.input_dim + k] * centres[c * spec.input_dim + k];
            }
            norm = std::sqrt(norm);
            for (std::size_t k = 0; k < spec.input_dim; ++k) {
                centres[c * spec.input_dim + k] *= spec.separation / norm;
            }
        }
        data.source.train = gaussian_clusters(spec, rng, centres, "source.train", spec.n_train, false);
        data.source.dev = gaussian_clusters(spec, rng, centres, "source.dev", spec.n_dev, false);
        data.target.train = gaussian_clusters(spec, rng, centres, "target.train", spec.n_train, true);
        data.target.dev = gaussian_clusters(spec, rng, centres, "target.dev", spec.n_dev, true);
        break;
    }
    case Generator::two_moons:
        data.source.train = two_moons(spec, rng, "source.train", spec.n_train, false);
        data.source.dev = two_moons(spec, rng, "source.dev", spec.n_dev, false);
        data.target.train = two_moons(spec, rng, "target.train", spec.n_train, true);
        data.target.dev = two_moons(spec, rng, "target.dev", spec.n_dev, true);
        break;
    case Generator::token_pattern: {
        const std::size_t pool = spec.num_classes * spec.signal_tokens_per_class();
        std::vector<int> identity(pool);
        std::vector<int> shifted(pool);
        const Substream remap = rng.substream("task.remap", 0, Purpose::data);
        const double swap_probability = std::min(spec.shift, 1.0);
        for (std::size_t s = 0; s < pool; ++s) {
            identity[s] = static_cast<int>(s);
            shifted[s] = remap.uniform(s) < swap_probability ? static_cast<int>(s + pool) : static_cast<int>(s);
        }
        data.source.train = token_pattern(spec, rng, identity, "source.train", spec.n_train);
        data.source.dev = token_pattern(spec, rng, identity, "source.dev", spec.n_dev);
        data.target.train = token_pattern(spec, rng, shifted, "target.train", spec.n_train);
        data.target.dev = token_pattern(spec, rng, shifted, "target.dev", spec.n_dev);
        break;
    }
    }
    return data;
}

std::string_view to_string(Generator generator)
{
    switch (generator) {
    case Generator::gaussian_clusters:
        return "gaussian_clusters";
    case Generator::two_moons:
        return "two_moons";
    case Generator::token_pattern:
        return "token_pattern";
    }
    return "unknown";
}

Generator parse_generator(std::string_view text)
{
    for (Generator g : {Generator::gaussian_clusters, Generator::two_moons, Generator::token_pattern}) {
        if (to_string(g) == text) {
            return g;
        }
    }
    throw ConfigError("unknown task generator '" + std::string(text) + "'");
}

} // namespace pats
