#include "pats/sweep.hpp"

#include "pats/errors.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace pats {

MetricSummary summarize(std::span<const double> values)
{
    MetricSummary s;
    if (values.empty()) {
        return s;
    }
    for (double v : values) {
        s.mean += v;
    }
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

SeedSweep fold(std::vector<MetricsRecord> records)
{
    SeedSweep sweep;
    std::vector<double> best;
    std::vector<double> final;
    std::vector<double> spread;
    for (const auto& r : records) {
        best.push_back(r.best_dev_accuracy);
        final.push_back(r.final_dev_accuracy);
        if (r.status == RunStatus::diverged) {
            ++sweep.diverged;
        } else {
            spread.push_back(r.sensitivity.std_log10);
        }
    }
    sweep.best_dev_accuracy = summarize(best);
    sweep.final_dev_accuracy = summarize(final);
    sweep.std_log10_sensitivity = summarize(spread);
    sweep.records = std::move(records);
    return sweep;
}

} // namespace

SeedSweep seed_sweep(const RunSpec& run, const Model& initial, const TaskData& data,
                     std::span<const std::uint64_t> seeds, std::size_t workers)
{
    if (seeds.empty()) {
        throw ConfigError("seed sweep needs at least one seed");
    }
    std::vector<MetricsRecord> records(seeds.size());
    parallel_for(seeds.size(), workers, [&](std::size_t i) {
        RunSpec one = run;
        one.seed = seeds[i];
        records[i] = train_run(one, initial, data);
    });
    return fold(std::move(records));
}

std::vector<FractionRow> data_fraction_sweep(const RunSpec& run, const Model& initial, const TaskData& data,
                                             std::span<const double> fractions,
                                             std::span<const std::uint64_t> seeds, std::size_t workers)
{
    if (seeds.empty()) {
        throw ConfigError("fraction sweep needs at least one seed");
    }
    for (double f : fractions) {
        RunSpec probe = run;
        probe.data_fraction = f;
        if (!(f > 0.0 && f <= 1.0)) {
            throw SpecError("sweep fraction " + std::to_string(f) + " outside (0, 1]");
        }
        probe.validate();
    }
    // Flatten (fraction, seed) so workers stay busy across fractions.
    const std::size_t per = seeds.size();
    std::vector<MetricsRecord> records(fractions.size() * per);
    parallel_for(records.size(), workers, [&](std::size_t i) {
        RunSpec one = run;
        one.data_fraction = fractions[i / per];
        one.seed = seeds[i % per];
        records[i] = train_run(one, initial, data);
    });
    std::vector<FractionRow> rows;
    for (std::size_t f = 0; f < fractions.size(); ++f) {
        std::vector<MetricsRecord> slice(std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(f * per)),
                                         std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>((f + 1) * per)));
        FractionRow row;
        row.optimizer = run.optimizer;
        row.fraction = fractions[f];
        row.n_train = fraction_count(fractions[f], data.target.train.n);
        row.sweep = fold(std::move(slice));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace pats
