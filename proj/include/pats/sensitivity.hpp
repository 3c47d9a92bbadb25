#pragma once

#include "pats/model.hpp"
#include "pats/tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pats {

/// |theta_j * g_j| elementwise: first-order estimate of the loss change from zeroing theta_j.
/// Throws StateError when `weights` carries no gradient.
Tensor instantaneous_sensitivity(const Tensor& weights);
Tensor instantaneous_sensitivity(const Tensor& weights, const Tensor& grads);

/// beta * ema + (1 - beta) * current, elementwise. beta must lie in (0, 1).
Tensor update_ema(const Tensor& ema, const Tensor& current, double beta);
/// In-place variant used by the optimizers.
void update_ema_in_place(Tensor& ema, const Tensor& current, double beta);

/// Arithmetic mean over one parameter matrix.
double group_mean(const Tensor& sensitivity);

struct GroupSensitivity {
    std::string name;
    std::size_t size = 0;
    double mean = 0.0;

    bool operator==(const GroupSensitivity&) const = default;
};

struct ReportOptions {
    std::size_t bins = 24;
    /// Fixed [low, high] window; when absent the window is [1e-3, 1e3] x median.
    std::optional<std::pair<double, double>> window;
    /// Restrict the report to perturbable groups.
    bool perturbable_only = true;
};

/// Summary of the sensitivity-EMA distribution over a set of groups.
///
/// `counts` has one entry per log-spaced bin between consecutive `bin_edges`; the
/// counts sum to `in_window`. Log statistics are taken over strictly positive values
/// inside the window.
struct SensitivityReport {
    std::vector<GroupSensitivity> groups;
    double window_low = 0.0;
    double window_high = 0.0;
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    std::size_t in_window = 0;
    std::size_t below_window = 0;
    std::size_t above_window = 0;
    double fraction_below = 0.0;
    double mean_log10 = 0.0;
    double std_log10 = 0.0;

    friend bool operator==(const SensitivityReport&, const SensitivityReport&) = default;
};

SensitivityReport distribution_report(std::span<const ParamGroup> groups, const ReportOptions& options = {});

} // namespace pats
