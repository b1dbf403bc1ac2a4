#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ecolab/ecology.hpp"
#include "ecolab/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ecolab;
using namespace ecolab::testing;

namespace {

const double kLn2 = std::log(2.0);
// ECO-B all-merged excess: (2/3) ln(3/2) + (1/3) ln 3, frozen from the
// direct summation oracle.
const double kEcoBMergedExcess = 2.0 / 3.0 * std::log(1.5) + std::log(3.0) / 3.0;

}  // namespace

TEST_SUITE("ecology") {

TEST_CASE("file round trip and validation errors") {
    const std::string dir = test_output_dir("ecology");
    const Ecology e = eco_b();
    save_ecology(e, dir + "/eco_b.json");
    const Ecology back = load_ecology(dir + "/eco_b.json");
    CHECK(back.worlds() == e.worlds());
    CHECK(back.num_contexts() == 1);
    CHECK(back.row(0, 0)[0] == 1.0);

    SUBCASE("zero prior") {
        try {
            Ecology::create({"w1", "w2"}, {0.0, 1.0}, {"a"}, {{"c0", 1.0}},
                            {1.0, 1.0});
            CHECK(false);
        } catch (const ValidationError& ex) {
            CHECK(std::string(ex.what()).find("prior must be strictly positive") !=
                  std::string::npos);
        }
    }
    SUBCASE("broken row names world and context") {
        try {
            Ecology::create({"w1", "w2"}, {0.5, 0.5}, {"a", "b"}, {{"c1", 1.0}},
                            {1.0, 0.0, 0.49, 0.49});
            CHECK(false);
        } catch (const ValidationError& ex) {
            const std::string msg = ex.what();
            CHECK(msg.find("w2") != std::string::npos);
            CHECK(msg.find("c1") != std::string::npos);
        }
    }
    SUBCASE("malformed file") {
        std::ofstream(dir + "/bad.json") << "{not json";
        CHECK_THROWS_AS(load_ecology(dir + "/bad.json"), ParseError);
        CHECK_THROWS_AS(load_ecology(dir + "/missing.json"), ParseError);
    }
    SUBCASE("duplicate ids") {
        CHECK_THROWS_AS(Ecology::create({"w", "w"}, {0.5, 0.5}, {"a"},
                                        {{"c0", 1.0}}, {1.0, 1.0}),
                        ValidationError);
    }
}

TEST_CASE("entropy floor") {
    CHECK(entropy_floor(eco_a()) == 0.0);

    // every row a fair coin -> ln 2
    const Ecology coin = Ecology::create(
        {"w1", "w2"}, {0.5, 0.5}, {"a", "b"}, {{"c0", 0.25}, {"c1", 0.75}},
        {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(entropy_floor(coin) == doctest::Approx(kLn2).epsilon(1e-14));

    Rng rng(21);
    const Ecology random = random_ecology(rng, 3, 2, 3);
    CHECK(std::abs(entropy_floor(random) - floor_oracle(random)) <= 1e-12);
}

TEST_CASE("decompose reference values") {
    const Ecology a = eco_a();
    const auto merged = decompose(a, Partition::all_merged(2));
    CHECK(merged.excess == doctest::Approx(kLn2).epsilon(1e-14));
    CHECK(merged.optimal_loss == doctest::Approx(kLn2).epsilon(1e-14));

    const auto identity = decompose(a, Partition::identity(2));
    CHECK(identity.excess == 0.0);
    CHECK(identity.optimal_loss == identity.floor);

    const auto b = decompose(eco_b(), Partition::all_merged(3));
    CHECK(b.excess == doctest::Approx(kEcoBMergedExcess).epsilon(1e-14));

    // report invariants
    double sum = 0.0;
    for (const auto& term : b.per_cell) sum += term.contribution;
    CHECK(std::abs(b.excess - sum) <= 1e-10);
    CHECK(b.excess >= 0.0);

    CHECK_THROWS_AS(decompose(a, Partition::identity(3)), ValidationError);
}

TEST_CASE("decomposition identity against the joint-law oracle") {
    Rng rng(1234);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + rng.uniform_int(4);
        const Ecology e = random_ecology(rng, n, 1 + rng.uniform_int(4),
                                         2 + rng.uniform_int(3));
        for_each_partition(n, [&](const Partition& p) {
            const auto rep = decompose(e, p);
            const double direct = conditional_loss_oracle(e, p);
            CHECK(std::abs(direct - rep.floor - rep.excess) <= 1e-10);
            return true;
        });
    }
}

TEST_CASE("task distance") {
    const Ecology a = eco_a();
    CHECK(task_distance(a, 0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(task_distance(a, 0, 0) == 0.0);
    CHECK(task_distance(a, "w1", "w2") == doctest::Approx(1.0));
    CHECK_THROWS_AS(task_distance(a, "w1", "nope"), ValidationError);

    const Ecology b = eco_b();
    CHECK(task_distance(b, 0, 1) == 0.0);
    CHECK(task_distance(b, 0, 2) == doctest::Approx(1.0));

    Rng rng(5);
    const Ecology r = random_ecology(rng, 4, 3, 3);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i < j) {
                CHECK(task_distance(r, i, j) ==
                      doctest::Approx(sigma2_oracle(r, i, j)).epsilon(1e-13));
                CHECK(task_distance(r, i, j) == task_distance(r, j, i));
            }
        }
    }
}

TEST_CASE("separation structure") {
    const auto sa = separation_structure(eco_a(), 0.0);
    REQUIRE(sa.separated.size() == 1);
    CHECK(*sa.margin == doctest::Approx(1.0));

    const auto sb = separation_structure(eco_b(), 0.0);
    CHECK(sb.pairs.size() == 3);
    CHECK(sb.separated.size() == 2);
    CHECK(*sb.margin == doctest::Approx(1.0));

    const auto none = separation_structure(eco_a(), 2.0);
    CHECK(none.separated.empty());
    CHECK_FALSE(none.margin.has_value());
}

TEST_CASE("quotient partition") {
    CHECK(quotient_partition(eco_b(), 0.0) == Partition({0, 0, 1}));
    CHECK(quotient_partition(eco_a(), 0.0) == Partition({0, 1}));

    // three points on a Hellinger line: tolerance chains a~b~c but a,c exceed it
    const Ecology line = Ecology::create(
        {"a", "b", "c"}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {"x", "y"}, {{"c0", 1.0}},
        {1.0, 0.0, 0.5, 0.5, 0.0, 1.0});
    try {
        quotient_partition(line, 0.3);
        CHECK(false);
    } catch (const ValidationError& ex) {
        CHECK(std::string(ex.what()).find("non-transitive tolerance relation") !=
              std::string::npos);
    }
    CHECK(quotient_partition(line, 0.0) == Partition({0, 1, 2}));

    // planted quotients recovered exactly
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + rng.uniform_int(4);
        std::vector<int> raw(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) raw[static_cast<size_t>(i)] = rng.uniform_int(3);
        const Partition target = Partition::canonical(raw);
        const Ecology e = random_ecology_with_quotient(rng, target, 2, 3);
        CHECK(quotient_partition(e, 0.0) == target);
    }
}

TEST_CASE("zero excess iff refines the quotient") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + rng.uniform_int(3);
        std::vector<int> raw(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) raw[static_cast<size_t>(i)] = rng.uniform_int(2);
        const Partition target = Partition::canonical(raw);
        const Ecology e = random_ecology_with_quotient(rng, target, 2, 3);
        for_each_partition(n, [&](const Partition& p) {
            const bool zero = decompose(e, p).excess <= 1e-12;
            CHECK(zero == p.refines(target));
            return true;
        });
    }
}

TEST_CASE("expand ecology") {
    Rng rng(31);
    const Partition target({0, 0, 1});
    const Ecology base = random_ecology_with_quotient(rng, target, 2, 3);
    // Align the prior with base (expand requires matching priors).
    const Ecology extra = with_prior(random_ecology(rng, 3, 2, 3), base.prior());

    SUBCASE("degenerate mixtures") {
        const Ecology at0 = expand_ecology(base, extra, 0.0);
        const Ecology at1 = expand_ecology(base, extra, 1.0);
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                CHECK(task_distance(at0, i, j) ==
                      doctest::Approx(task_distance(base, i, j)).epsilon(1e-12));
                CHECK(task_distance(at1, i, j) ==
                      doctest::Approx(task_distance(extra, i, j)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("mixture linearity within 1e-12") {
        for (double alpha : {0.25, 0.5, 0.9}) {
            const Ecology mixed = expand_ecology(base, extra, alpha);
            for (int i = 0; i < 3; ++i) {
                for (int j = i + 1; j < 3; ++j) {
                    const double want = (1.0 - alpha) * task_distance(base, i, j) +
                                        alpha * task_distance(extra, i, j);
                    CHECK(std::abs(task_distance(mixed, i, j) - want) <= 1e-12);
                }
            }
        }
    }
    SUBCASE("refinement monotonicity") {
        for (double alpha : {0.1, 0.5, 1.0}) {
            const Ecology mixed = expand_ecology(base, extra, alpha);
            CHECK(quotient_partition(mixed, 0.0).refines(quotient_partition(base, 0.0)));
        }
    }
    SUBCASE("prior mismatch rejected") {
        const Ecology other = random_ecology(rng, 3, 2, 3);
        CHECK_THROWS_AS(expand_ecology(base, other, 0.5), ValidationError);
    }
    SUBCASE("gap pair splits at alpha one half") {
        // base merges (w0, w1); a separating extra with sigma2 > 0 on that pair
        const Ecology mixed = expand_ecology(base, extra, 0.5);
        const double expected = 0.5 * task_distance(extra, 0, 1);
        CHECK(task_distance(mixed, 0, 1) == doctest::Approx(expected).epsilon(1e-12));
        if (expected > 0.0) {
            const Partition q = quotient_partition(mixed, 0.0);
            CHECK(q.label(0) != q.label(1));
        }
    }
}

TEST_CASE("collapse to quotient") {
    const Ecology b = eco_b();
    const Ecology collapsed = collapse_to_quotient(b, Partition({0, 0, 1}));
    CHECK(collapsed.num_worlds() == 2);
    CHECK(collapsed.prior_of(0) == doctest::Approx(2.0 / 3));
    CHECK(collapsed.row(0, 0)[0] == doctest::Approx(1.0));
    CHECK(entropy_floor(collapsed) == doctest::Approx(0.0));
}

}  // TEST_SUITE
