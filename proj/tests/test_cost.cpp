#include <gtest/gtest.h>

#include <limits>

#include "gemtl/cost.hpp"
#include "gemtl/io_json.hpp"

using namespace gemtl;

namespace {

std::vector<std::size_t> random_dims(Prng& rng, std::size_t max_order, std::size_t max_extent) {
    std::vector<std::size_t> d(rng.below(max_order + 1));
    for (auto& v : d) v = 1 + rng.below(max_extent);
    return d;
}

std::vector<std::size_t> cat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST(AnalyticCost, DirectSubstitution) {
    const CostReport r = analytic_cost({{8}, {4}, {10}});
    EXPECT_EQ(r.time_cost, 320u);
    EXPECT_EQ(r.memory_cost, 120u);
    EXPECT_EQ(r.flops, 640u);
    EXPECT_FALSE(r.measured_mults.has_value());
}

TEST(AnalyticCost, UnitExtents) {
    const CostReport r = analytic_cost({{1}, {1}, {1}});
    EXPECT_EQ(r.time_cost, 1u);
    EXPECT_EQ(r.memory_cost, 2u);
    EXPECT_EQ(r.flops, 2u);
    EXPECT_EQ(analytic_cost({{}, {}, {}}).time_cost, 1u);
}

TEST(AnalyticCost, MultiModeFlopsMatchInstrumentedCount) {
    const CostReport r = analytic_cost({{3, 4}, {2}, {5}});
    EXPECT_EQ(r.flops, 240u);
    Prng rng(700);
    const Layer l = make_layer({{5}, {3, 4}, {2}, Activation::identity, BiasMode::per_position}, rng);
    EXPECT_EQ(measured_cost(l, Tensor(Shape{3, 4, 2}, 1.0)).measured_mults, 120u);
}

TEST(AnalyticCost, SharedBiasReplacesBiasTerm) {
    const CostReport r = analytic_cost({{8}, {4}, {10}}, BiasMode::shared);
    EXPECT_TRUE(r.shared_bias);
    EXPECT_EQ(r.memory_cost, 90u);
}

TEST(AnalyticCost, OverflowIsReportedNotWrapped) {
    const std::size_t big = std::size_t{1} << 32;
    EXPECT_THROW((void)analytic_cost({{big}, {big}, {2}}), std::overflow_error);
    EXPECT_THROW((void)analytic_cost({{big, big}, {}, {}}), std::overflow_error);
}

TEST(MeasuredCost, UnitAndMatrixCases) {
    Prng rng(701);
    const Layer unit = make_layer({{1}, {1}, {1}, Activation::identity, BiasMode::shared}, rng);
    EXPECT_EQ(measured_cost(unit, Tensor(Shape{1, 1}, 1.0)).measured_mults, 1u);
    const Layer mat = make_layer({{7}, {5}, {3}, Activation::identity, BiasMode::shared}, rng);
    EXPECT_EQ(measured_cost(mat, Tensor(Shape{5, 3}, 1.0)).measured_mults, 7u * 5u * 3u);
}

TEST(MeasuredCost, RandomDimsMatchAnalyticModel) {
    Prng rng(702);
    for (int trial = 0; trial < 50; ++trial) {
        const auto i = random_dims(rng, 3, 6), j = random_dims(rng, 3, 6), k = random_dims(rng, 3, 6);
        const Layer l = make_layer({k, i, j, Activation::identity, BiasMode::per_position}, rng);
        const CostReport r = measured_cost(l, Tensor(Shape(cat(i, j)), 1.0));
        EXPECT_EQ(r.measured_mults.value(), r.time_cost);
        EXPECT_EQ(r.flops, 2 * r.time_cost);
        EXPECT_EQ(r.memory_cost, l.weight.size() + l.bias.size());
    }
}

TEST(MeasuredCost, CountingLeavesResultUnchanged) {
    Prng rng(703);
    const Tensor x = random_uniform(Shape{3, 4, 2}, -1, 1, rng);
    const Tensor y = random_uniform(Shape{4, 2, 5}, -1, 1, rng);
    detail::MultiplyCounter counter;
    EXPECT_EQ(detail::einstein_product_counted(x, y, 2, counter), einstein_product(x, y, 2));
    EXPECT_EQ(counter.mults, 3u * 4 * 2 * 5);
}

TEST(CostReportJson, Fields) {
    CostReport r = analytic_cost({{8}, {4}, {10}});
    nlohmann::json j = r;
    EXPECT_EQ(j.at("flops"), 640);
    EXPECT_TRUE(j.at("measured_mults").is_null());
    r.measured_mults = 320;
    j = r;
    EXPECT_EQ(j.at("measured_mults"), 320);
}
