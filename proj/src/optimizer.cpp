#include "pats/optimizer.hpp"

#include "pats/errors.hpp"
#include "pats/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pats {

void PatsConfig::validate() const
{
    auto require = [](bool ok, const char* what, double value) {
        if (!ok) {
            throw ConfigError(std::string("optimizer.") + what + " out of range: " + std::to_string(value));
        }
    };
    require(lr >= 0.0 && std::isfinite(lr), "lr", lr);
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1", beta1);
    require(beta2 >= 0.0 && beta2 <= 1.0, "beta2", beta2);
    require(beta > 0.0 && beta < 1.0, "beta", beta);
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda", lambda);
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma", gamma);
    require(eps > 0.0 && eps < 1.0, "eps", eps);
    require(p >= 0.0 && p <= 1.0, "p", p);
    require(adamax_eps >= 0.0 && adamax_eps < 1.0, "adamax_eps", adamax_eps);
    require(warmup_fraction >= 0.0 && warmup_fraction <= 1.0, "warmup_fraction", warmup_fraction);
}

PatsConfig paper_defaults()
{
    PatsConfig c;
    c.lambda = 2e-6;
    c.gamma = 0.002;
    c.beta = 0.75;
    c.p = 0.2;
    return c;
}

std::size_t warmup_steps(const PatsConfig& config)
{
    const double x = config.warmup_fraction * static_cast<double>(config.total_steps);
    const double nearest = std::round(x);
    // 0.1 * 30 is 3.0000000000000004 in binary; do not let that become 4.
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::ceil(x));
}

double lr_schedule(std::size_t step, const PatsConfig& config)
{
    if (config.total_steps == 0) {
        return config.lr;
    }
    if (step < 1 || step > config.total_steps) {
        throw ConfigError("schedule step " + std::to_string(step) + " outside [1, " +
                          std::to_string(config.total_steps) + "]");
    }
    const std::size_t warmup = warmup_steps(config);
    if (step <= warmup) {
        return config.lr * static_cast<double>(step) / static_cast<double>(warmup);
    }
    return config.lr * static_cast<double>(config.total_steps - step) /
           static_cast<double>(config.total_steps - warmup);
}

Tensor noise_scale(const Tensor& sensitivity, double lambda, double gamma, double eps, EpsilonPlacement placement)
{
    const double mean = group_mean(sensitivity);
    const double n = static_cast<double>(sensitivity.size());
    Tensor r(sensitivity.shape());
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double ratio = placement == EpsilonPlacement::per_parameter
                                 ? mean / (sensitivity[j] + eps)
                                 : (mean * n) / (n * sensitivity[j] + eps);
        r[j] = lambda * std::max(ratio - gamma, 0.0);
    }
    return r;
}

Tensor noise_scale(const Tensor& sensitivity, const PatsConfig& config)
{
    return noise_scale(sensitivity, config.lambda, config.gamma, config.eps, config.eps_placement);
}

Tensor sample_perturbation(const Tensor& variance, double p, const Substream& gauss, const Substream& bernoulli)
{
    Tensor out(variance.shape());
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (variance[j] > 0.0 && bernoulli.uniform(j) < p) {
            out[j] = std::sqrt(variance[j]) * gauss.normal(j);
        }
    }
    return out;
}

Tensor sample_perturbation(const Tensor& variance, double p, const RngStream& rng, std::string_view group,
                           std::size_t step)
{
    return sample_perturbation(variance, p, rng.substream(group, step, Purpose::gauss),
                               rng.substream(group, step, Purpose::bernoulli));
}

namespace {

void check_step(std::size_t t)
{
    if (t == 0) {
        throw StateError("optimizer steps are numbered from 1 (bias correction divides by 1 - beta1^t)");
    }
}

// M, U and the sensitivity EMA from the current gradient.
void update_moments(ParamGroup& g, const PatsConfig& config)
{
    if (!g.weights.has_grad()) {
        throw StateError("group '" + g.name + "' has no gradient; run backward() first");
    }
    auto grad = g.weights.grad();
    for (std::size_t j = 0; j < g.size(); ++j) {
        g.m[j] = config.beta1 * g.m[j] + (1.0 - config.beta1) * grad[j];
        g.u[j] = std::max(config.beta2 * g.u[j], std::abs(grad[j]));
    }
    update_ema_in_place(g.s, instantaneous_sensitivity(g.weights), config.beta);
}

double bias_corrected_step(const PatsConfig& config, std::size_t t)
{
    return lr_schedule(t, config) / (1.0 - std::pow(config.beta1, static_cast<double>(t)));
}

void descend(ParamGroup& g, double step_size, const PatsConfig& config)
{
    for (std::size_t j = 0; j < g.size(); ++j) {
        g.weights[j] -= step_size * g.m[j] / (g.u[j] + config.adamax_eps);
    }
}

} // namespace

void adamax_step(std::span<ParamGroup> groups, const PatsConfig& config, std::size_t t)
{
    check_step(t);
    const double step_size = bias_corrected_step(config, t);
    for (auto& g : groups) {
        update_moments(g, config);
        descend(g, step_size, config);
    }
}

void pats_step(std::span<ParamGroup> groups, const PatsConfig& config, std::size_t t, const RngStream& rng)
{
    check_step(t);
    const double step_size = bias_corrected_step(config, t);
    for (auto& g : groups) {
        update_moments(g, config);
        descend(g, step_size, config);
        if (!g.perturbable) {
            continue;
        }
        const Tensor noise = sample_perturbation(noise_scale(g.s, config), config.p, rng, g.name, t);
        for (std::size_t j = 0; j < g.size(); ++j) {
            // Skipping exact zeros keeps -0.0 weights bit-identical to plain Adamax.
            if (noise[j] != 0.0) {
                g.weights[j] += noise[j];
            }
        }
    }
}

Tensor sage_scale_lr(const Tensor& sensitivity, double base_lr, double eps)
{
    const double mean = group_mean(sensitivity);
    Tensor lr(sensitivity.shape());
    for (std::size_t j = 0; j < lr.size(); ++j) {
        lr[j] = base_lr * std::clamp(mean / (sensitivity[j] + eps), 0.5, 2.0);
    }
    return lr;
}

void sage_step(std::span<ParamGroup> groups, const PatsConfig& config, std::size_t t)
{
    check_step(t);
    const double correction = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double base = lr_schedule(t, config);
    for (auto& g : groups) {
        update_moments(g, config);
        const Tensor lr = sage_scale_lr(g.s, base, config.eps);
        for (std::size_t j = 0; j < g.size(); ++j) {
            g.weights[j] -= (lr[j] / correction) * g.m[j] / (g.u[j] + config.adamax_eps);
        }
    }
}

void noisytune_perturb(std::span<ParamGroup> groups, double intensity, const RngStream& rng)
{
    if (intensity < 0.0) {
        throw ConfigError("noisytune intensity must be >= 0");
    }
    for (auto& g : groups) {
        if (!g.perturbable || g.size() == 0) {
            continue;
        }
        const auto w = g.weights.values();
        double mean = 0.0;
        for (double v : w) {
            mean += v;
        }
        mean /= static_cast<double>(w.size());
        double var = 0.0;
        for (double v : w) {
            var += (v - mean) * (v - mean);
        }
        const double half_width = intensity * std::sqrt(var / static_cast<double>(w.size()));
        if (half_width == 0.0) {
            continue;
        }
        const Substream stream = rng.substream(g.name, 0, Purpose::noisytune);
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] += half_width * (2.0 * stream.uniform(j) - 1.0);
        }
    }
}

} // namespace pats
