#include "doctest.h"

#include <cmath>
#include <vector>

#include "ecolab/numeric.hpp"
#include "ecolab/rng.hpp"
#include "support/fixtures.hpp"

using namespace ecolab;

TEST_SUITE("numeric") {

TEST_CASE("entropy basics") {
    std::vector<double> fair{0.5, 0.5};
    CHECK(entropy(fair) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    std::vector<double> point{1.0, 0.0};
    CHECK(entropy(point) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
}

TEST_CASE("kl conventions") {
    std::vector<double> p{0.0, 1.0};
    std::vector<double> q{0.5, 0.5};
    // 0 * log(0/q) = 0
    CHECK(kl_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(kl_divergence(p, p) == 0.0);
    // p > 0 where q = 0 is a broken mixture
    std::vector<double> zero{1.0, 0.0};
    CHECK_THROWS_AS(kl_divergence(q, zero), std::logic_error);
    // cross_entropy tolerates it with +inf instead
    CHECK(std::isinf(cross_entropy(q, zero)));
}

TEST_CASE("hellinger range") {
    std::vector<double> a{1.0, 0.0};
    std::vector<double> b{0.0, 1.0};
    CHECK(squared_hellinger(a, b) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(squared_hellinger(a, a) == 0.0);
}

TEST_CASE("weighted js equals mixture-entropy gap") {
    // JS_w({P_i}) = H(sum w_i P_i) - sum w_i H(P_i): an independent route.
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + rng.uniform_int(3);
        const int nv = 2 + rng.uniform_int(4);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < k; ++i) rows.push_back(testing::random_simplex(rng, nv));
        const auto weights = testing::random_simplex(rng, k);
        std::vector<std::span<const double>> views;
        for (const auto& r : rows) views.emplace_back(r);
        const double js = weighted_js(weights, views);

        std::vector<double> mix(static_cast<size_t>(nv), 0.0);
        double mean_h = 0.0;
        for (size_t i = 0; i < rows.size(); ++i) {
            for (size_t v = 0; v < mix.size(); ++v) mix[v] += weights[i] * rows[i][v];
            mean_h += weights[i] * entropy(rows[i]);
        }
        CHECK(js == doctest::Approx(entropy(mix) - mean_h).epsilon(1e-12));
        CHECK(js >= 0.0);
    }
}

TEST_CASE("hellinger below kl when finite") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int nv = 2 + rng.uniform_int(5);
        const auto p = testing::random_simplex(rng, nv);
        const auto q = testing::random_simplex(rng, nv);
        CHECK(squared_hellinger(p, q) <= kl_divergence(p, q) + 1e-12);
    }
}

TEST_CASE("js pair matches the general form") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int nv = 2 + rng.uniform_int(4);
        const auto p = testing::random_simplex(rng, nv);
        const auto q = testing::random_simplex(rng, nv);
        const double lambda = rng.uniform();
        std::vector<double> weights{lambda, 1.0 - lambda};
        std::vector<std::span<const double>> views{p, q};
        CHECK(weighted_js_pair(lambda, p, q) ==
              doctest::Approx(weighted_js(weights, views)).epsilon(1e-13));
    }
}

}  // TEST_SUITE
