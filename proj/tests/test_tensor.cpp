#include "pats/errors.hpp"
#include "pats/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using pats::Tensor;

TEST(Tensor, ShapeMustMatchValueCount)
{
    EXPECT_THROW(Tensor({2, 3}, {1, 2, 3}), pats::DimensionError);
    const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_EQ(t.at(1, 2), 6.0);
}

TEST(Tensor, ScalarHasRankZero)
{
    const Tensor s = Tensor::scalar(3.5);
    EXPECT_TRUE(s.is_scalar());
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(s.item(), 3.5);
    EXPECT_THROW(s.rows(), pats::DimensionError);
    EXPECT_THROW(Tensor::vector({1, 2}).item(), pats::DimensionError);
}

TEST(Tensor, GradIsExplicit)
{
    Tensor t = Tensor::vector({1, 2});
    EXPECT_FALSE(t.has_grad());
    EXPECT_THROW(t.grad(), pats::StateError);
    t.zero_grad();
    ASSERT_TRUE(t.has_grad());
    EXPECT_EQ(t.grad().size(), t.size());
    t.grad()[0] = 4.0;
    t.zero_grad();
    EXPECT_EQ(t.grad()[0], 0.0);
    t.clear_grad();
    EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, EqualityIgnoresGradient)
{
    Tensor a = Tensor::vector({1, 2});
    Tensor b = Tensor::vector({1, 2});
    a.zero_grad();
    EXPECT_EQ(a, b);
    EXPECT_FALSE(Tensor::vector({1, 2}) == Tensor::matrix(1, 2, {1, 2}));
}

TEST(Tensor, FiniteCheck)
{
    Tensor t = Tensor::vector({1, 2});
    EXPECT_TRUE(t.all_finite());
    t[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(t.all_finite());
    t[1] = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(t.all_finite());
}

TEST(Tensor, ShapeToString)
{
    EXPECT_EQ(pats::shape_to_string({2, 3}), "[2x3]");
    EXPECT_EQ(pats::shape_to_string({}), "[]");
}
