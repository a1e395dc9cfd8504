#include <gtest/gtest.h>

#include <vector>

#include "gemtl/network.hpp"
#include "oracles.hpp"

using namespace gemtl;

namespace {

Layer random_layer(Prng& rng, const LayerSpec& spec) {
    Layer l = make_layer(spec, rng);
    l.bias = random_uniform(l.bias.shape(), -0.5, 0.5, rng);
    return l;
}

Layer identity_layer(std::size_t n) {
    Layer l;
    l.weight = Tensor(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) l.weight.at({i, i}) = 1.0;
    l.bias = Tensor(Shape{n});
    l.output_modes = 1;
    l.contracted_modes = 1;
    return l;
}

TrainState state_of(std::vector<Layer> layers, std::size_t heads = 1, double lr = 0.1) {
    TrainState s;
    s.layers = std::move(layers);
    s.head_count = heads;
    s.learning_rate = lr;
    return s;
}

/// Extended-precision probe loss over every head: sum_h sum(r_h ⊙ y_h).
long double network_probe(const TrainState& s, const Tensor& x, const std::vector<Tensor>& probes) {
    std::vector<long double> feed = oracle::widen(x);
    for (std::size_t l = 0; l < s.trunk_size(); ++l) feed = oracle::layer_forward(s.layers[l], feed);
    long double total = 0;
    for (std::size_t h = 0; h < s.head_count; ++h) {
        total += oracle::probe_sum(oracle::layer_forward(s.layers[s.trunk_size() + h], feed), probes[h]);
    }
    return total;
}

}  // namespace

TEST(NetworkForward, SingleLayerEqualsLayerForward) {
    Prng rng(400);
    const Layer l = random_layer(rng, {{3}, {4}, {5}, Activation::sigmoid, BiasMode::per_position});
    const Tensor x = random_uniform(Shape{4, 5}, -1, 1, rng);
    EXPECT_EQ(network_forward(state_of({l}), x).output(), forward(l, x));
}

TEST(NetworkForward, IdentityLayersReturnInput) {
    Prng rng(401);
    const Tensor x = random_uniform(Shape{3, 7}, -1, 1, rng);
    EXPECT_EQ(network_forward(state_of({identity_layer(3), identity_layer(3)}), x).output(), x);
}

TEST(NetworkForward, RejectsIncompatibleLayers) {
    Prng rng(402);
    const Layer a = make_layer({{3}, {4}, {}, Activation::relu, BiasMode::shared}, rng);
    const Layer b = make_layer({{2}, {5}, {}, Activation::identity, BiasMode::shared}, rng);
    EXPECT_THROW(state_of({a, b}).validate(), ShapeError);
    EXPECT_THROW((void)network_forward(state_of({a, b}), Tensor(Shape{4, 2})), ShapeError);
}

TEST(NetworkBackward, TwoLayerGradientsMatchFiniteDifferences) {
    Prng rng(403);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const BiasMode mode = trial % 2 ? BiasMode::shared : BiasMode::per_position;
        TrainState s = state_of({random_layer(rng, {{3, 2}, {4}, {2, 3}, Activation::sigmoid, mode}),
                                 random_layer(rng, {{3}, {3, 2}, {2, 3}, Activation::softmax, mode})});
        Tensor x = random_uniform(Shape{4, 2, 3}, -1, 1, rng);
        const std::vector<Tensor> r{random_uniform(Shape{3, 2, 3}, -1, 1, rng)};
        const auto grads = network_backward(s, network_forward(s, x), HeadGradient{r[0], GradientWrt::output});
        auto loss = [&] { return network_probe(s, x, r); };
        for (std::size_t l = 0; l < 2; ++l) {
            worst = std::max(worst, oracle::max_gradient_error(s.layers[l].weight, grads[l].d_weight, loss));
            worst = std::max(worst, oracle::max_gradient_error(s.layers[l].bias, grads[l].d_bias, loss));
        }
        worst = std::max(worst, oracle::max_gradient_error(x, grads[0].d_input, loss));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(NetworkBackward, ParallelHeadsAccumulateIntoTrunk) {
    Prng rng(404);
    double worst = 0;
    for (int trial = 0; trial < 30; ++trial) {
        TrainState s = state_of({random_layer(rng, {{5}, {3}, {2, 2}, Activation::relu, BiasMode::shared}),
                                 random_layer(rng, {{4}, {5}, {2, 2}, Activation::box, BiasMode::shared}),
                                 random_layer(rng, {{1}, {5}, {2, 2}, Activation::sigmoid, BiasMode::shared}),
                                 random_layer(rng, {{3}, {5}, {2, 2}, Activation::softmax, BiasMode::shared})},
                                3);
        Tensor x = random_uniform(Shape{3, 2, 2}, -1, 1, rng);
        const auto fwd = network_forward(s, x);
        bool kink = false;
        for (double v : fwd.layers[0].preactivation.data()) kink |= std::abs(v) < 1e-3;
        if (kink) continue;
        const std::vector<Tensor> r{random_uniform(Shape{4, 2, 2}, -1, 1, rng),
                                    random_uniform(Shape{1, 2, 2}, -1, 1, rng),
                                    random_uniform(Shape{3, 2, 2}, -1, 1, rng)};
        const std::vector<HeadGradient> hg{{r[0], GradientWrt::output}, {r[1], GradientWrt::output},
                                           {r[2], GradientWrt::output}};
        const auto grads = network_backward(s, fwd, hg);
        auto loss = [&] { return network_probe(s, x, r); };
        for (std::size_t l = 0; l < 4; ++l) {
            worst = std::max(worst, oracle::max_gradient_error(s.layers[l].weight, grads[l].d_weight, loss));
        }
        worst = std::max(worst, oracle::max_gradient_error(x, grads[0].d_input, loss));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(NetworkBackward, PreactivationGradientSkipsActivation) {
    Prng rng(405);
    const TrainState s = state_of({random_layer(rng, {{3}, {2}, {4}, Activation::softmax, BiasMode::shared})});
    const Tensor x = random_uniform(Shape{2, 4}, -1, 1, rng);
    const Tensor delta = random_uniform(Shape{3, 4}, -1, 1, rng);
    const auto g = network_backward(s, network_forward(s, x), HeadGradient{delta, GradientWrt::preactivation});
    EXPECT_EQ(g[0].d_weight, backward_from_delta(s.layers[0], x, delta).d_weight);
}

TEST(Gegd, ScalarUpdate) {
    Layer l;
    l.weight = Tensor(Shape{1, 1}, 2.0);
    l.bias = Tensor(Shape{1}, 1.0);
    l.output_modes = l.contracted_modes = 1;
    const std::vector<LayerGradients> g{{Tensor(Shape{1, 1}, 0.5), Tensor(Shape{1}, -1.0), {}}};
    const TrainState next = gegd_step(state_of({l}, 1, 0.1), g);
    EXPECT_DOUBLE_EQ(next.layers[0].weight.item(), 1.95);
    EXPECT_DOUBLE_EQ(next.layers[0].bias.item(), 1.1);
    EXPECT_EQ(next.step, 1u);
}

TEST(Gegd, UnitRateWithGradientEqualToWeightsZeroesThem) {
    Prng rng(406);
    const Layer l = random_layer(rng, {{3, 2}, {4}, {}, Activation::identity, BiasMode::shared});
    const std::vector<LayerGradients> g{{l.weight, l.bias, {}}};
    const TrainState next = gegd_step(state_of({l}, 1, 1.0), g);
    EXPECT_EQ(frobenius_norm(next.layers[0].weight), 0.0);
    EXPECT_EQ(frobenius_norm(next.layers[0].bias), 0.0);
}

TEST(Gegd, ZeroGradientsLeaveParametersUnchanged) {
    Prng rng(407);
    const Layer l = random_layer(rng, {{3}, {4}, {2}, Activation::identity, BiasMode::per_position});
    const std::vector<LayerGradients> g{{Tensor(l.weight.shape()), Tensor(l.bias.shape()), {}}};
    const TrainState next = gegd_step(state_of({l}), g);
    EXPECT_EQ(next.layers[0].weight, l.weight);
    EXPECT_EQ(next.layers[0].bias, l.bias);
}

TEST(Gegd, RejectsBadRateAndShapes) {
    Prng rng(408);
    const Layer l = random_layer(rng, {{3}, {4}, {}, Activation::identity, BiasMode::shared});
    const std::vector<LayerGradients> g{{Tensor(l.weight.shape()), Tensor(l.bias.shape()), {}}};
    EXPECT_THROW((void)gegd_step(state_of({l}, 1, 0.0), g), ConfigError);
    EXPECT_THROW((void)gegd_step(state_of({l}, 1, -0.1), g), ConfigError);
    const std::vector<LayerGradients> bad{{Tensor(Shape{4, 3}), Tensor(l.bias.shape()), {}}};
    EXPECT_THROW((void)gegd_step(state_of({l}), bad), ShapeError);
}

TEST(Gegd, DescendsRandomQuadratics) {
    // L(W) = ||W *_1 X - T||^2 with identity activation; one step at 1e-3 must lower it.
    Prng rng(409);
    for (int trial = 0; trial < 100; ++trial) {
        TrainState s = state_of({random_layer(rng, {{3}, {4}, {5}, Activation::identity, BiasMode::shared})}, 1, 1e-3);
        const Tensor x = random_uniform(Shape{4, 5}, -1, 1, rng);
        const Tensor target = random_uniform(Shape{3, 5}, -1, 1, rng);
        auto loss = [&](const TrainState& st) {
            const Tensor d = network_forward(st, x).output() - target;
            return frobenius_norm(d) * frobenius_norm(d);
        };
        const Tensor y = network_forward(s, x).output();
        const auto grads = network_backward(s, network_forward(s, x), HeadGradient{2.0 * (y - target)});
        const double before = loss(s);
        EXPECT_LT(loss(gegd_step(s, grads)), before);
    }
}
