#include "pats/sensitivity.hpp"

#include "pats/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pats {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                             shape_to_string(b.shape()) + " differ");
    }
}

} // namespace

Tensor instantaneous_sensitivity(const Tensor& weights)
{
    if (!weights.has_grad()) {
        throw StateError("sensitivity needs gradients from a backward pass");
    }
    Tensor out(weights.shape());
    auto g = weights.grad();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::abs(weights[i] * g[i]);
    }
    return out;
}

Tensor instantaneous_sensitivity(const Tensor& weights, const Tensor& grads)
{
    require_same_shape("instantaneous_sensitivity", weights, grads);
    Tensor out(weights.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::abs(weights[i] * grads[i]);
    }
    return out;
}

Tensor update_ema(const Tensor& ema, const Tensor& current, double beta)
{
    Tensor out = ema;
    update_ema_in_place(out, current, beta);
    return out;
}

void update_ema_in_place(Tensor& ema, const Tensor& current, double beta)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ConfigError("sensitivity EMA decay must lie in (0, 1), got " + std::to_string(beta));
    }
    require_same_shape("update_ema", ema, current);
    for (std::size_t i = 0; i < ema.size(); ++i) {
        ema[i] = beta * ema[i] + (1.0 - beta) * current[i];
    }
}

double group_mean(const Tensor& sensitivity)
{
    if (sensitivity.size() == 0) {
        throw DimensionError("group_mean of an empty group");
    }
    double total = 0.0;
    for (double v : sensitivity.values()) {
        total += v;
    }
    return total / static_cast<double>(sensitivity.size());
}

SensitivityReport distribution_report(std::span<const ParamGroup> groups, const ReportOptions& options)
{
    if (options.bins == 0) {
        throw ConfigError("report needs at least one histogram bin");
    }
    SensitivityReport report;
    std::vector<double> values;
    for (const auto& g : groups) {
        if (options.perturbable_only && !g.perturbable) {
            continue;
        }
        report.groups.push_back({g.name, g.size(), group_mean(g.s)});
        values.insert(values.end(), g.s.values().begin(), g.s.values().end());
    }
    report.total = values.size();

    double low = 0.0;
    double high = 0.0;
    if (options.window) {
        std::tie(low, high) = *options.window;
        if (!(low > 0.0 && high > low)) {
            throw ConfigError("report window must satisfy 0 < low < high");
        }
    } else {
        std::vector<double> positive;
        std::copy_if(values.begin(), values.end(), std::back_inserter(positive), [](double v) { return v > 0.0; });
        if (!positive.empty()) {
            const auto mid = positive.begin() + static_cast<std::ptrdiff_t>(positive.size() / 2);
            std::nth_element(positive.begin(), mid, positive.end());
            low = 1e-3 * *mid;
            high = 1e3 * *mid;
        }
    }
    report.window_low = low;
    report.window_high = high;
    report.counts.assign(options.bins, 0);

    if (high <= 0.0) {
        // Nothing positive to bin.
        report.below_window = report.total;
        report.fraction_below = report.total == 0 ? 0.0 : 1.0;
        return report;
    }

    const double log_low = std::log10(low);
    const double log_span = std::log10(high) - log_low;
    const double bins = static_cast<double>(options.bins);
    for (std::size_t i = 0; i <= options.bins; ++i) {
        report.bin_edges.push_back(std::pow(10.0, log_low + log_span * static_cast<double>(i) / bins));
    }

    double sum = 0.0;
    for (double v : values) {
        if (v < low) {
            ++report.below_window;
            continue;
        }
        if (v > high) {
            ++report.above_window;
            continue;
        }
        const double lv = std::log10(v);
        auto bin = static_cast<std::size_t>(std::floor((lv - log_low) / log_span * bins));
        report.counts[std::min(bin, options.bins - 1)] += 1;
        ++report.in_window;
        sum += lv;
    }
    report.fraction_below =
        report.total == 0 ? 0.0 : static_cast<double>(report.below_window) / static_cast<double>(report.total);
    if (report.in_window > 0) {
        const double n = static_cast<double>(report.in_window);
        report.mean_log10 = sum / n;
        double ss = 0.0;
        for (double v : values) {
            if (v >= low && v <= high) {
                const double d = std::log10(v) - report.mean_log10;
                ss += d * d;
            }
        }
        report.std_log10 = std::sqrt(ss / n);
    }
    return report;
}

} // namespace pats
