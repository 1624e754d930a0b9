#include <catch2/catch_amalgamated.hpp>

#include "gzgd/adam.hpp"
#include "helpers.hpp"

using namespace gzgd;
using T64 = Tensor<double>;

TEST_CASE("first bias-corrected step for unit gradient has magnitude ~lr") {
    auto theta = parameter(T64({1}, {0.0}));
    theta->grad.data[0] = 1.0;
    Adam<double> opt({theta}, 0.001);
    opt.step();
    // lr * 1/(1 + 1e-8), from one hand-evaluated update
    CHECK(theta->value.data[0] == Catch::Approx(-0.0009999999900000003).epsilon(1e-12));
    CHECK(std::fabs(std::fabs(theta->value.data[0]) - 0.001) / 0.001 < 1e-6);
}

TEST_CASE("zero gradient from a fresh state leaves parameters unchanged") {
    auto theta = parameter(T64({3}, {1.0, -2.0, 3.0}));
    Adam<double> opt({theta}, 0.1);
    for (int i = 0; i < 5; ++i) opt.step();
    CHECK(theta->value.data == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("minimizes (x-3)^2 from 0 within 500 steps") {
    auto x = parameter(T64({1}, {0.0}));
    Adam<double> opt({x}, 0.1);
    for (int i = 0; i < 500; ++i) {
        auto diff = sub(x, constant(T64({1}, {3.0})));
        auto loss = mul(diff, diff);
        backward(loss);
        opt.step();
        opt.zero_grad();
    }
    CHECK(std::fabs(x->value.data[0] - 3.0) < 1e-2);
}

TEST_CASE("same seed gives bit-identical training trajectories") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        auto w = parameter(testutil::random_tensor({4}, rng));
        Adam<double> opt({w}, 0.01);
        std::vector<double> history;
        for (int i = 0; i < 50; ++i) {
            auto target = constant(T64({4}, {1.0, 2.0, 3.0, 4.0}));
            auto loss = mse_loss(w, target);
            backward(loss);
            opt.step();
            opt.zero_grad();
            history.push_back(loss->value.data[0]);
        }
        return history;
    };
    CHECK(run(77) == run(77));
    CHECK(run(77) != run(78));
}
