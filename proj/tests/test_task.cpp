#include "pats/errors.hpp"
#include "pats/task.hpp"
#include "pats/training.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pats;

namespace {

struct Moments {
    std::vector<double> mean;
    std::vector<double> var;
};

Moments column_moments(const Dataset& d)
{
    Moments m{std::vector<double>(d.feature_dim, 0.0), std::vector<double>(d.feature_dim, 0.0)};
    const double n = static_cast<double>(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t c = 0; c < d.feature_dim; ++c) {
            m.mean[c] += d.features[i * d.feature_dim + c] / n;
        }
    }
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t c = 0; c < d.feature_dim; ++c) {
            const double x = d.features[i * d.feature_dim + c] - m.mean[c];
            m.var[c] += x * x / (n - 1);
        }
    }
    return m;
}

} // namespace

TEST(GenerateTask, SameSeedGivesIdenticalData)
{
    for (Generator g : {Generator::gaussian_clusters, Generator::two_moons, Generator::token_pattern}) {
        TaskSpec spec;
        spec.generator = g;
        spec.num_classes = g == Generator::two_moons ? 2 : 4;
        const TaskData a = generate_task(spec);
        const TaskData b = generate_task(spec);
        EXPECT_EQ(a.source.train, b.source.train);
        EXPECT_EQ(a.target.dev, b.target.dev);
        spec.seed = 1;
        EXPECT_FALSE(generate_task(spec).source.train == a.source.train);
    }
}

TEST(GenerateTask, NoShiftMeansSameDistribution)
{
    for (Generator g : {Generator::gaussian_clusters, Generator::two_moons}) {
        TaskSpec spec;
        spec.generator = g;
        spec.num_classes = 2;
        spec.shift = 0.0;
        spec.n_train = 4000;
        const TaskData data = generate_task(spec);
        const Moments s = column_moments(data.source.train);
        const Moments t = column_moments(data.target.train);
        for (std::size_t c = 0; c < s.mean.size(); ++c) {
            const double se = std::sqrt(s.var[c] / 4000 + t.var[c] / 4000);
            EXPECT_LT(std::abs(s.mean[c] - t.mean[c]), 3 * se) << to_string(g) << " column " << c;
        }
    }
}

TEST(GenerateTask, ShiftHurtsASourceTrainedLinearProbe)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TaskSpec task;
        task.num_classes = 2;
        task.input_dim = 8;
        task.shift = 0.5;
        task.seed = seed;
        ModelSpec probe;
        probe.layer_sizes = {8, 2};
        probe.init_seed = seed;
        task.n_dev = 2000;
        const TaskData data = generate_task(task);
        // Trained to convergence: an underfit probe can be luckier on a rotated copy.
        PretrainConfig config;
        config.steps = 3000;
        config.lr = 0.05;
        const Model trained = pretrain_then_snapshot(probe, data, config);
        EXPECT_LT(trained.accuracy(data.target.dev.all()), trained.accuracy(data.source.dev.all()))
            << "seed " << seed;
    }
}

TEST(GenerateTask, LabelsBalancedAndInRange)
{
    TaskSpec spec;
    spec.generator = Generator::token_pattern;
    const TaskData data = generate_task(spec);
    std::vector<int> counts(spec.num_classes, 0);
    for (int y : data.target.train.labels) {
        ASSERT_GE(y, 0);
        ASSERT_LT(y, static_cast<int>(spec.num_classes));
        ++counts[static_cast<std::size_t>(y)];
    }
    for (int c : counts) {
        EXPECT_EQ(c, static_cast<int>(spec.n_train / spec.num_classes));
    }
    for (int tok : data.target.train.tokens) {
        ASSERT_GE(tok, 0);
        ASSERT_LT(tok, static_cast<int>(spec.vocab));
    }
}

TEST(GenerateTask, InvalidSpecs)
{
    TaskSpec spec;
    spec.n_train = 0;
    EXPECT_THROW(generate_task(spec), SpecError);
    spec = TaskSpec{};
    spec.shift = -1;
    EXPECT_THROW(generate_task(spec), SpecError);
    spec = TaskSpec{};
    spec.generator = Generator::two_moons;
    spec.num_classes = 3;
    EXPECT_THROW(generate_task(spec), SpecError);
}

TEST(Dataset, SubsetAndBatchSelectRows)
{
    TaskSpec spec;
    spec.n_train = 8;
    const Dataset d = generate_task(spec).source.train;
    const std::size_t rows[] = {5, 2};
    const Dataset sub = d.subset(rows);
    const Batch b = d.batch(rows);
    ASSERT_EQ(sub.n, 2u);
    EXPECT_EQ(sub.labels[0], d.labels[5]);
    EXPECT_EQ(b.labels[1], d.labels[2]);
    EXPECT_EQ(b.features[0], d.features[5 * d.feature_dim]);
}
