#pragma once

#include "pats/model.hpp"
#include "pats/rng.hpp"
#include "pats/tensor.hpp"

#include <cstddef>
#include <span>
#include <string_view>

namespace pats {

/// Where the division guard sits in the noise-scale ratio.
enum class EpsilonPlacement {
    per_parameter, ///< mean(S) / (S_j + eps)
    matrix_sum,    ///< sum(S) / (N * S_j + eps)
};

struct PatsConfig {
    double lr = 1e-3;       ///< base step size
    double beta1 = 0.9;     ///< first-moment decay
    double beta2 = 0.999;   ///< infinity-norm decay
    double beta = 0.75;     ///< sensitivity EMA decay
    double lambda = 2e-6;   ///< basic noise variance
    double gamma = 0.002;   ///< minimum effective sensitivity margin
    double eps = 1e-8;      ///< noise-ratio division guard
    double p = 0.2;         ///< Bernoulli perturbation probability
    double adamax_eps = 1e-8;
    double warmup_fraction = 0.1;
    /// Schedule length. Zero disables the schedule and keeps lr constant.
    std::size_t total_steps = 0;
    EpsilonPlacement eps_placement = EpsilonPlacement::per_parameter;

    /// Throws ConfigError naming the first out-of-range field.
    void validate() const;

    friend bool operator==(const PatsConfig&, const PatsConfig&) = default;
};

/// lambda=2e-6, gamma=0.002, beta=0.75, p=0.2 with Adamax defaults for the rest.
PatsConfig paper_defaults();

/// Steps in the linear warm-up phase: ceil(warmup_fraction * total_steps).
std::size_t warmup_steps(const PatsConfig& config);
/// Linear warm-up from 0 to lr, then linear decay to 0 at total_steps.
double lr_schedule(std::size_t step, const PatsConfig& config);

/// Per-parameter Gaussian noise variance for one group:
/// lambda * max(mean(S) / (S_j + eps) - gamma, 0).
Tensor noise_scale(const Tensor& sensitivity, double lambda, double gamma, double eps,
                   EpsilonPlacement placement = EpsilonPlacement::per_parameter);
Tensor noise_scale(const Tensor& sensitivity, const PatsConfig& config);

/// Q * Z with Q_j ~ N(0, R_j) and Z_j ~ Bernoulli(p). Draw j of each stream belongs
/// to parameter j, so the result does not depend on evaluation order.
Tensor sample_perturbation(const Tensor& variance, double p, const Substream& gauss, const Substream& bernoulli);
/// Uses the (group, step) noise substreams of `rng`.
Tensor sample_perturbation(const Tensor& variance, double p, const RngStream& rng, std::string_view group,
                           std::size_t step);

/// Plain Adamax. Also advances each group's sensitivity EMA so reports are
/// available for every optimizer; the EMA never feeds back into the update.
void adamax_step(std::span<ParamGroup> groups, const PatsConfig& config, std::size_t t);

/// Adamax plus sensitivity-scaled Bernoulli-gated Gaussian noise on perturbable groups.
void pats_step(std::span<ParamGroup> groups, const PatsConfig& config, std::size_t t, const RngStream& rng);

/// lr_j = base_lr * clip(mean(S) / (S_j + eps), 0.5, 2.0). A simplified SAGE-style
/// schedule, not a reproduction of SAGE.
Tensor sage_scale_lr(const Tensor& sensitivity, double base_lr, double eps);

/// Adamax with per-parameter step sizes from sage_scale_lr.
void sage_step(std::span<ParamGroup> groups, const PatsConfig& config, std::size_t t);

/// One-shot matrix-wise uniform noise: W += U(-a, a) with a = intensity * std(W),
/// applied to perturbable groups before fine-tuning starts.
void noisytune_perturb(std::span<ParamGroup> groups, double intensity, const RngStream& rng);

} // namespace pats
