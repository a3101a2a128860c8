#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "emu/cnn.hpp"
#include "emu/errors.hpp"

using namespace emu;

namespace {

std::vector<double> flatten(const CnnParams& p) {
    std::vector<double> v;
    for (const auto& k : p.kernels)
        v.insert(v.end(), k.values().begin(), k.values().end());
    v.insert(v.end(), p.conv_biases.begin(), p.conv_biases.end());
    v.insert(v.end(), p.dense_weights.begin(), p.dense_weights.end());
    v.push_back(p.dense_bias);
    return v;
}

CnnParams unflatten(std::span<const double> v) {
    CnnParams p = make_cnn_params();
    std::size_t i = 0;
    for (auto& k : p.kernels)
        for (double& w : k.values()) w = v[i++];
    for (double& b : p.conv_biases) b = v[i++];
    for (double& w : p.dense_weights) w = v[i++];
    p.dense_bias = v[i++];
    REQUIRE(i == v.size());
    return p;
}

std::vector<double> flatten(const CnnGradients& g) {
    std::vector<double> v;
    for (const auto& k : g.kernels)
        v.insert(v.end(), k.values().begin(), k.values().end());
    v.insert(v.end(), g.conv_biases.begin(), g.conv_biases.end());
    v.insert(v.end(), g.dense_weights.begin(), g.dense_weights.end());
    v.push_back(g.dense_bias);
    return v;
}

CnnParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CnnParams p = make_cnn_params();
    for (auto& k : p.kernels)
        for (double& w : k.values()) w = u(rng);
    for (double& b : p.conv_biases) b = u(rng);
    for (double& w : p.dense_weights) w = u(rng);
    p.dense_bias = u(rng);
    return p;
}

FeatureMap random_input(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMap map(3, 3);
    for (double& v : map.values()) v = u(rng);
    return map;
}

double independent_mse(const CnnParams& params, std::span<const TrainingSample> samples) {
    double acc = 0.0;
    for (const auto& s : samples) {
        const double d = cnn_forward(params, s.input).output - s.target;
        acc += d * d;
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace

TEST_SUITE("cnn") {

TEST_CASE("forward pass with all-zero parameters") {
    const CnnParams params = make_cnn_params();
    const FeatureMap input(3, 3, 0.7);
    const CnnForwardCache cache = cnn_forward(params, input);
    // sigmoid(0) = 0.5 everywhere, the average pool keeps it, zero weights drop it
    for (double z : cache.pooled) CHECK(z == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cache.output == 0.0);
}

TEST_CASE("forward pass with zero dense weights returns the dense bias") {
    std::mt19937_64 rng(3);
    CnnParams params = random_params(rng);
    params.dense_weights.assign(kKernelCount, 0.0);
    params.dense_bias = -0.37;
    CHECK(cnn_forward(params, random_input(rng)).output == -0.37);
}

TEST_CASE("forward pass rejects inputs that are not 3x3") {
    const CnnParams params = make_cnn_params();
    CHECK_THROWS_AS(cnn_forward(params, Grid2D(2, 2, 0.0)), ShapeError);
}

TEST_CASE("cnn_loss") {
    CHECK(cnn_loss(0.8, 0.8) == 0.0);
    CHECK(cnn_loss(0.5, 0.3) == doctest::Approx(0.02).epsilon(1e-15));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) CHECK(cnn_loss(u(rng), u(rng)) >= 0.0);
}

TEST_CASE("backward with zero residual gives zero gradients") {
    std::mt19937_64 rng(9);
    const CnnParams params = random_params(rng);
    const CnnForwardCache cache = cnn_forward(params, random_input(rng));
    const CnnGradients g = cnn_backward(params, cache, cache.output);
    for (double v : flatten(g)) CHECK(v == 0.0);
}

TEST_CASE("backward is linear in the residual for a fixed cache") {
    std::mt19937_64 rng(21);
    const CnnParams params = random_params(rng);
    const CnnForwardCache cache = cnn_forward(params, random_input(rng));
    const double r = 0.31;
    const auto g1 = flatten(cnn_backward(params, cache, cache.output - r));
    const auto g2 = flatten(cnn_backward(params, cache, cache.output - 2.0 * r));
    for (std::size_t i = 0; i < g1.size(); ++i)
        CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("backward rejects a stale cache") {
    std::mt19937_64 rng(33);
    const CnnParams params = random_params(rng);
    const CnnForwardCache cache = cnn_forward(params, random_input(rng));
    CnnParams changed = params;
    changed.dense_bias += 0.1;
    CHECK_THROWS_AS(cnn_backward(changed, cache, 0.5), ValidationError);
}

TEST_CASE("max pooling forwards but has no training path") {
    std::mt19937_64 rng(34);
    CnnParams params = random_params(rng);
    params.pool.mode = PoolMode::max;
    const FeatureMap input = random_input(rng);
    const CnnForwardCache cache = cnn_forward(params, input);
    CHECK(std::isfinite(cache.output));
    CHECK_THROWS_AS(cnn_backward(params, cache, 0.5), ValidationError);
}

TEST_CASE("analytic gradients match finite differences on random instances") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const CnnParams params = random_params(rng);
        const FeatureMap input = random_input(rng);
        const double target = ut(rng);

        const CnnForwardCache cache = cnn_forward(params, input);
        const auto analytic = flatten(cnn_backward(params, cache, target));

        const auto loss = [&](std::span<const double> v) {
            return cnn_loss(cnn_forward(unflatten(v), input).output, target);
        };
        const auto numeric = finite_diff_gradient(loss, flatten(params));

        REQUIRE(analytic.size() == numeric.size());
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
            CHECK(std::abs(analytic[i] - numeric[i]) <= std::max(1e-8, 1e-5 * scale));
        }
    }
}

TEST_CASE("sgd_step") {
    std::mt19937_64 rng(55);
    const CnnParams params = random_params(rng);
    const CnnForwardCache cache = cnn_forward(params, random_input(rng));
    const CnnGradients grads = cnn_backward(params, cache, 0.2);

    SUBCASE("learning rate zero leaves params bit-identical") {
        CHECK(sgd_step(params, grads, 0.0) == params);
    }
    SUBCASE("scalar update follows p - lr*g") {
        CnnParams p = make_cnn_params();
        p.dense_bias = 1.0;
        CnnGradients g;
        g.dense_weights.assign(kKernelCount, 0.0);
        for (auto& k : g.kernels) k = Grid2D(kKernelSize, kKernelSize, 0.0);
        g.dense_bias = 2.0;
        CHECK(sgd_step(p, g, 0.5).dense_bias == 0.0);
    }
    SUBCASE("step followed by the negated step restores params") {
        const CnnParams stepped = sgd_step(params, grads, 0.5);
        CnnGradients negated = grads;
        for (auto& k : negated.kernels)
            for (double& v : k.values()) v = -v;
        for (double& v : negated.conv_biases) v = -v;
        for (double& v : negated.dense_weights) v = -v;
        negated.dense_bias = -negated.dense_bias;
        const CnnParams restored = sgd_step(stepped, negated, 0.5);
        const auto a = flatten(params);
        const auto b = flatten(restored);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(std::abs(a[i] - b[i]) <= 1e-15);
    }
    SUBCASE("non-finite gradient names the parameter") {
        CnnGradients bad = grads;
        bad.conv_biases[1] = std::nan("");
        try {
            sgd_step(params, bad, 0.5);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("conv_bias.1") != std::string::npos);
        }
    }
}

TEST_CASE("one small step never increases the sample loss") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const CnnParams params = random_params(rng);
        const FeatureMap input = random_input(rng);
        const double target = ut(rng);

        const CnnForwardCache cache = cnn_forward(params, input);
        const double before = cnn_loss(cache.output, target);
        const CnnParams stepped =
            sgd_step(params, cnn_backward(params, cache, target), 1e-3);
        const double after = cnn_loss(cnn_forward(stepped, input).output, target);
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("train_cnn contract") {
    std::mt19937_64 rng(99);
    std::vector<TrainingSample> samples;
    for (int i = 0; i < 5; ++i)
        samples.push_back({random_input(rng), 0.1 * (i + 1), 2007 + i});

    TrainConfig config;
    config.seed = 42;

    SUBCASE("empty sample list is a validation error") {
        CHECK_THROWS_AS(train_cnn({}, config), ValidationError);
    }
    SUBCASE("zero epochs returns the seeded initial params and an empty trace") {
        config.epochs = 0;
        const CnnTrainResult r = train_cnn(samples, config);
        CHECK(r.trace.empty());
        for (double v : flatten(r.params)) {
            CHECK(std::isfinite(v));
            CHECK(std::abs(v) <= config.init_scale);
        }
    }
    SUBCASE("learning rate zero keeps params at their initial values") {
        config.epochs = 0;
        const CnnParams initial = train_cnn(samples, config).params;
        config.epochs = 10;
        config.learning_rate = 0.0;
        const CnnTrainResult r = train_cnn(samples, config);
        CHECK(r.params == initial);
        REQUIRE(r.trace.size() == 10);
        for (double mse : r.trace) CHECK(mse == r.trace.front());
    }
    SUBCASE("training is deterministic") {
        config.epochs = 25;
        const CnnTrainResult a = train_cnn(samples, config);
        const CnnTrainResult b = train_cnn(samples, config);
        CHECK(a.params == b.params);
        CHECK(a.trace == b.trace);
    }
    SUBCASE("shuffled order is deterministic too and changes the outcome") {
        config.epochs = 25;
        const CnnTrainResult chron = train_cnn(samples, config);
        config.sample_order = SampleOrder::shuffled_per_epoch;
        const CnnTrainResult shuf1 = train_cnn(samples, config);
        const CnnTrainResult shuf2 = train_cnn(samples, config);
        CHECK(shuf1.params == shuf2.params);
        CHECK(shuf1.trace == shuf2.trace);
        CHECK(shuf1.trace != chron.trace);
    }
    SUBCASE("trace entries equal the MSE recomputed from epoch-end params") {
        config.epochs = 8;
        const CnnTrainResult full = train_cnn(samples, config);
        for (int k = 1; k <= 8; ++k) {
            TrainConfig partial = config;
            partial.epochs = k;
            const CnnTrainResult upto = train_cnn(samples, partial);
            const double recomputed = independent_mse(upto.params, samples);
            CHECK(full.trace[k - 1] == doctest::Approx(recomputed).epsilon(1e-12));
        }
    }
}

TEST_CASE("per-sample updates can raise the epoch MSE and the trace keeps it") {
    // two samples pulling the parameters in opposite directions at a large step
    std::vector<TrainingSample> samples;
    samples.push_back({FeatureMap(3, 3, 0.0), 1.0, 1});
    samples.push_back({FeatureMap(3, 3, 1.0), 0.0, 2});

    TrainConfig config;
    config.seed = 1;
    config.epochs = 12;
    config.learning_rate = 2.0;
    const CnnTrainResult r = train_cnn(samples, config);

    bool rose = false;
    for (std::size_t k = 0; k + 1 < r.trace.size(); ++k)
        if (r.trace[k + 1] > r.trace[k]) rose = true;
    CHECK(rose);
    for (double mse : r.trace) {
        CHECK(std::isfinite(mse));
        CHECK(mse >= 0.0);
    }
}

TEST_CASE("to_trains rounds half away from zero") {
    CHECK(to_trains(0.5, ValueRange{105.0, 2206.0}) == 1156);  // 1155.5 rounds up
    CHECK(to_trains(0.0, ValueRange{105.0, 2206.0}) == 105);
    CHECK(to_trains(1.0, ValueRange{105.0, 2206.0}) == 2206);
    CHECK(to_trains(-1.5, ValueRange{0.0, 1.0}) == -2);
    CHECK(to_trains(2.5, ValueRange{0.0, 1.0}) == 3);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    std::mt19937_64 rng(2024);
    const CnnParams params = random_params(rng);
    std::ostringstream out;
    save_checkpoint(params, out);
    std::istringstream in(out.str());
    const CnnParams loaded = load_cnn_checkpoint(in);
    CHECK(loaded == params);
}

TEST_CASE("bundled reference checkpoint carries the documented parameters") {
    std::ifstream in(EMU_DATA_DIR "/table4.ckpt");
    REQUIRE(in.good());
    const CnnParams p = load_cnn_checkpoint(in);

    CHECK(p.kernels[0] == Grid2D{{-0.5831, 0.3488}, {-0.2483, 0.1905}});
    CHECK(p.kernels[1] == Grid2D{{0.8984, -0.0949}, {0.5874, 0.9605}});
    CHECK(p.kernels[2] == Grid2D{{0.1974, -0.0220}, {-0.1205, -0.0415}});
    CHECK(p.conv_biases == std::array<double, 3>{-0.1579, -1.4013, -0.1631});
    CHECK(p.dense_weights == std::vector<double>{-0.1831, 2.0049, -0.2069});
    CHECK(p.dense_bias == -0.2678);
    CHECK(p.conv_activation == Activation::sigmoid);
    CHECK(p.dense_transfer == Activation::linear);
}

TEST_CASE("checkpoint parser rejects broken inputs") {
    std::mt19937_64 rng(31);
    const CnnParams params = random_params(rng);
    std::ostringstream out;
    save_checkpoint(params, out);
    const std::string good = out.str();

    SUBCASE("wrong format line") {
        std::istringstream in("format=cnn-ckpt-v2\n");
        CHECK_THROWS_AS(load_cnn_checkpoint(in), ParseError);
    }
    SUBCASE("truncated file") {
        std::istringstream in(good.substr(0, good.size() / 2));
        CHECK_THROWS_AS(load_cnn_checkpoint(in), ParseError);
    }
    SUBCASE("wrong arity names the line") {
        std::string bad = good;
        const auto pos = bad.find("dense_w=");
        bad = bad.substr(0, pos) + "dense_w= 0.5 0.5\n" + "dense_b= 0\n" +
              "conv_act=sigmoid\ndense_act=linear\n";
        std::istringstream in(bad);
        try {
            load_cnn_checkpoint(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("dense_w") != std::string::npos);
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }
    SUBCASE("garbage value line") {
        std::string bad = good;
        const auto pos = bad.find("conv_bias.0=");
        bad.replace(pos, std::string("conv_bias.0=").size(), "conv_bias.0=zz ");
        std::istringstream in(bad);
        CHECK_THROWS_AS(load_cnn_checkpoint(in), ParseError);
    }
}

}  // TEST_SUITE
