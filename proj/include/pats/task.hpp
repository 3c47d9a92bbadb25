#pragma once

#include "pats/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pats {

enum class Generator { gaussian_clusters, two_moons, token_pattern };

/// Synthetic classification task with a source distribution (used for pretraining)
/// and a target distribution shifted by `shift`.
///
/// Shift semantics per generator:
///  - gaussian_clusters: target inputs are rotated by `shift` radians in every
///    consecutive coordinate pair, about the centroid of the class centres.
///  - two_moons: the first coordinate pair is rotated by `shift` about the origin.
///  - token_pattern: each class-signal token is swapped for a target-only token with
///    probability min(shift, 1).
struct TaskSpec {
    Generator generator = Generator::gaussian_clusters;
    std::size_t n_train = 640;
    std::size_t n_dev = 400;
    std::size_t input_dim = 8;
    std::size_t vocab = 32;
    std::size_t seq_len = 8;
    std::size_t num_classes = 4;
    double shift = 0.5;
    /// Cluster-centre radius (gaussian_clusters) or moon scale (two_moons).
    double separation = 3.0;
    /// Input noise std (continuous tasks) or distractor probability (token_pattern).
    double noise = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    /// Signal tokens per class for token_pattern.
    std::size_t signal_tokens_per_class() const;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct Dataset {
    std::size_t n = 0;
    std::size_t feature_dim = 0;
    std::size_t seq_len = 0;
    std::vector<double> features;
    std::vector<int> tokens;
    std::vector<int> labels;

    Batch batch(std::span<const std::size_t> rows) const;
    Batch all() const;
    Dataset subset(std::span<const std::size_t> rows) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Split {
    Dataset train;
    Dataset dev;
};

struct TaskData {
    Split source;
    Split target;
};

/// Pure function of the spec (seed included).
TaskData generate_task(const TaskSpec& spec);

std::string_view to_string(Generator generator);
Generator parse_generator(std::string_view text);

} // namespace pats
