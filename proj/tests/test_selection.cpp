#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include "ecolab/partition_lab.hpp"
#include "ecolab/rng.hpp"
#include "ecolab/selection.hpp"
#include "support/fixtures.hpp"

using namespace ecolab;
using namespace ecolab::testing;

namespace {

// Single-context two-token ecology with a prescribed Hellinger distance to a
// (1,0) anchor: row (a, 1-a) gives sigma2 = 1 - sqrt(a).
Ecology two_world_sigma(double sigma2) {
    const double a = (1.0 - sigma2) * (1.0 - sigma2);
    return Ecology::create({"w1", "w2"}, {0.5, 0.5}, {"x", "y"}, {{"c0", 1.0}},
                           {1.0, 0.0, a, 1.0 - a});
}

Population two_genotype_population(std::uint64_t seed) {
    Population pop;
    pop.genotypes = {Genotype{Partition({0, 1})}, Genotype{Partition({0, 0})}};
    pop.freqs = {0.5, 0.5};
    pop.seed = seed;
    return pop;
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("price identity reference value") {
    const std::vector<double> x{0.5, 0.5}, f{1.0, 3.0}, a{0.0, 1.0};
    // selected mean 0.75 minus mean 0.5
    CHECK(price_delta(x, f, a) == doctest::Approx(0.25).epsilon(1e-15));

    const std::vector<double> flat{0.7, 0.7};
    CHECK(price_delta(x, flat, a) == doctest::Approx(0.0));
    CHECK(price_delta(x, f, flat) == doctest::Approx(0.0));

    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(price_delta(x, zero, a), ValidationError);
}

TEST_CASE("price identity exact over 1000 random draws") {
    Rng rng(4242);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + rng.uniform_int(6);
        const auto x = random_simplex(rng, k);
        std::vector<double> f(static_cast<size_t>(k)), t(static_cast<size_t>(k));
        for (auto& v : f) v = 0.1 + rng.uniform() * 3.0;
        for (auto& v : t) v = rng.uniform() * 2.0 - 1.0;

        double bar_f = 0.0;
        for (int i = 0; i < k; ++i) bar_f += x[i] * f[i];
        double sel_mean = 0.0, mean = 0.0;
        for (int i = 0; i < k; ++i) {
            sel_mean += x[i] * f[i] / bar_f * t[i];
            mean += x[i] * t[i];
        }
        CHECK(std::abs(price_delta(x, f, t) - (sel_mean - mean)) <= 1e-12);
    }
}

TEST_CASE("expectation-mode selection is the replicator update") {
    Population pop = two_genotype_population(1);
    const std::vector<double> fit{1.0, 3.0};
    const MutationKernel stay;
    const Population next = wf_generation(pop, fit, stay, 100,
                                          EvolutionMode::Expectation);
    CHECK(next.freqs[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(next.freqs[1] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(next.generation == 1);
}

TEST_CASE("sampled mode is deterministic given the seed") {
    MutationKernel kernel;
    kernel.split = 0.1;
    kernel.merge = 0.1;
    Population a = two_genotype_population(99);
    Population b = two_genotype_population(99);
    for (int g = 0; g < 5; ++g) {
        a = wf_generation(a, std::vector<double>(a.genotypes.size(), 1.0), kernel,
                          200, EvolutionMode::Sampled);
        b = wf_generation(b, std::vector<double>(b.genotypes.size(), 1.0), kernel,
                          200, EvolutionMode::Sampled);
    }
    REQUIRE(a.genotypes.size() == b.genotypes.size());
    CHECK(a.freqs == b.freqs);
    for (size_t i = 0; i < a.genotypes.size(); ++i) {
        CHECK(genotype_key(a.genotypes[i]) == genotype_key(b.genotypes[i]));
    }

    const std::vector<double> fit{1.0, 2.0};
    Population c = two_genotype_population(100);  // different stream
    c = wf_generation(c, fit, kernel, 200, EvolutionMode::Sampled);
    Population a1 = two_genotype_population(99);
    a1 = wf_generation(a1, fit, kernel, 200, EvolutionMode::Sampled);
    CHECK(c.freqs != a1.freqs);  // overwhelmingly likely for these sizes
}

TEST_CASE("wf errors") {
    Population pop = two_genotype_population(3);
    const MutationKernel stay;
    CHECK_THROWS_AS(wf_generation(pop, std::vector<double>{0.0, 0.0}, stay, 10,
                                  EvolutionMode::Sampled),
                    ValidationError);
    pop.freqs = {0.6, 0.6};
    CHECK_THROWS_AS(wf_generation(pop, std::vector<double>{1.0, 1.0}, stay, 10,
                                  EvolutionMode::Sampled),
                    ValidationError);
}

TEST_CASE("parent counts follow the multinomial law (chi-square)") {
    // Selection-only: counts pooled over 2000 replicates against
    // multinomial(M, x*f / sum x*f); significance 0.001 at df = 3.
    const std::vector<double> x{0.4, 0.3, 0.2, 0.1};
    const std::vector<double> f{1.0, 2.0, 0.5, 3.0};
    Population pop;
    pop.genotypes = {Genotype{Partition({0, 1, 2, 3})}, Genotype{Partition({0, 0, 1, 2})},
                     Genotype{Partition({0, 1, 1, 2})}, Genotype{Partition({0, 0, 0, 0})}};
    pop.freqs = x;

    const int kReplicates = 2000;
    const int kPopsize = 50;
    std::vector<double> pooled(4, 0.0);
    for (int r = 0; r < kReplicates; ++r) {
        pop.seed = 7000 + static_cast<std::uint64_t>(r);
        pop.generation = 0;
        const auto step = wf_step(pop, f, MutationKernel{}, kPopsize,
                                  EvolutionMode::Sampled);
        for (size_t i = 0; i < 4; ++i) pooled[i] += step.parent_freqs[i] * kPopsize;
    }
    double total_f = 0.0;
    for (size_t i = 0; i < 4; ++i) total_f += x[i] * f[i];
    double chi2 = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        const double expected = kReplicates * kPopsize * x[i] * f[i] / total_f;
        chi2 += (pooled[i] - expected) * (pooled[i] - expected) / expected;
    }
    CHECK(chi2 < 16.266);  // chi-square 0.999 quantile at df = 3
}

TEST_CASE("selection-only expectation run has monotone mean risk") {
    EvolutionConfig cfg;
    cfg.mode = EvolutionMode::Expectation;
    cfg.kind = EvolutionConfig::Kind::PartitionSet;
    cfg.ecology = eco_a();
    cfg.init_genotypes = {Genotype{Partition({0, 1})}, Genotype{Partition({0, 0})}};
    cfg.generations = 30;
    cfg.popsize = 1;
    const Trajectory traj = run_evolution(cfg);
    REQUIRE(traj.records.size() == 30);
    for (size_t g = 0; g + 1 < traj.records.size(); ++g) {
        CHECK(traj.records[g + 1].mean_risk <= traj.records[g].mean_risk + 1e-12);
    }
    const double risk0 = traj.records[0].mean_risk;
    CHECK(risk0 == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    // expectation mode reports a zero residual with delta equal to its mean
    CHECK(traj.records[0].z == 0.0);
    CHECK(traj.records[0].delta_sel ==
          doctest::Approx(traj.records[0].expected_delta_sel).epsilon(1e-14));
}

TEST_CASE("offset fitness errors when C is too small") {
    EvolutionConfig cfg;
    cfg.mode = EvolutionMode::Expectation;
    cfg.kind = EvolutionConfig::Kind::PartitionSet;
    cfg.ecology = eco_a();
    cfg.init_genotypes = {Genotype{Partition({0, 0})}};
    cfg.generations = 2;
    cfg.fitness_form = EvolutionConfig::FitnessForm::Offset;
    cfg.fitness_offset = 0.5;  // below the merged excess ln 2
    CHECK_THROWS_AS(run_evolution(cfg), ValidationError);
}

TEST_CASE("recipe fitness g(1 - alpha) with offset 2 is 1 + alpha") {
    EvolutionConfig cfg;
    cfg.mode = EvolutionMode::Expectation;
    cfg.kind = EvolutionConfig::Kind::RecipeSet;
    cfg.delta_form = EvolutionConfig::DeltaForm::Linear;
    cfg.fitness_form = EvolutionConfig::FitnessForm::Offset;
    cfg.fitness_offset = 2.0;
    cfg.generations = 2;
    cfg.init_genotypes = {Genotype{Recipe{0.0, "z"}}, Genotype{Recipe{1.0, "z"}}};
    const Trajectory traj = run_evolution(cfg);
    CHECK(traj.records[0].mean_trait == doctest::Approx(0.5));
    CHECK(traj.records[0].mean_risk == doctest::Approx(0.5));
    // fitness 1 + alpha: selected frequencies (1/3, 2/3)
    CHECK(traj.records[1].mean_trait == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("recipe trait rises under selection over 25 generations") {
    EvolutionConfig cfg;
    cfg.mode = EvolutionMode::Sampled;
    cfg.kind = EvolutionConfig::Kind::RecipeSet;
    cfg.delta_form = EvolutionConfig::DeltaForm::Linear;
    cfg.generations = 25;
    cfg.popsize = 200;
    cfg.seed = 20250809;
    cfg.kernel.step = 0.05;
    for (double a0 : {0.1, 0.3, 0.5, 0.7}) {
        cfg.init_genotypes.push_back(Recipe{a0, "z"});
    }
    const Trajectory traj = run_evolution(cfg);
    CHECK(traj.records.back().mean_trait > traj.records.front().mean_trait);
}

TEST_CASE("two-ecology recipe risk steps down once alpha passes the threshold") {
    const Ecology token = eco_b();  // merges (w1, w2)
    const Ecology eval = Ecology::create(
        {"w1", "w2", "w3"}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {"a", "b"},
        {{"e0", 1.0}}, {1.0, 0.0, 0.0, 1.0, 0.5, 0.5});

    EvolutionConfig cfg;
    cfg.mode = EvolutionMode::Expectation;
    cfg.kind = EvolutionConfig::Kind::RecipeSet;
    cfg.delta_form = EvolutionConfig::DeltaForm::TwoEcology;
    cfg.token_ecology = token;
    cfg.eval_ecology = eval;
    cfg.inject_eps = 0.05;
    cfg.generations = 1;
    cfg.init_genotypes = {Genotype{Recipe{0.01, "z"}}, Genotype{Recipe{0.5, "z"}}};
    cfg.init_freqs = {0.5, 0.5};
    const Trajectory traj = run_evolution(cfg);
    // alpha = 0.01 leaves (w1,w2) merged: eval excess (2/3) JS_{1/2} = (2/3) ln 2;
    // alpha = 0.5 resolves it: excess 0. Mean risk is half of the former.
    CHECK(traj.records[0].mean_risk ==
          doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("directional selection at the distribution level") {
    Rng rng(31337);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 3 + rng.uniform_int(5);
        const auto x = random_simplex(rng, k);
        std::vector<double> alpha(static_cast<size_t>(k));
        for (auto& v : alpha) v = rng.uniform();
        // fitness from a strictly decreasing g of a strictly decreasing Delta
        std::vector<double> f(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) f[i] = 2.0 - (1.0 - alpha[i]);
        CHECK(price_delta(x, f, alpha) > 0.0);

        std::vector<double> flat(static_cast<size_t>(k), 1.5);
        CHECK(price_delta(x, flat, alpha) == doctest::Approx(0.0));
    }
}

TEST_CASE("gap closing: dominance transfers through nondecreasing h") {
    Rng rng(60601);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 4 + rng.uniform_int(4);
        const auto x = random_simplex(rng, k);
        std::vector<double> alpha(static_cast<size_t>(k));
        for (auto& v : alpha) v = rng.uniform();
        std::vector<double> f(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) f[i] = 0.5 + alpha[i];

        double bar_f = 0.0;
        for (int i = 0; i < k; ++i) bar_f += x[i] * f[i];
        std::vector<double> x_sel(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) x_sel[i] = x[i] * f[i] / bar_f;

        // fitness increasing in alpha: the selected trait distribution
        // first-order stochastically dominates the pre-selection one
        std::vector<int> order(static_cast<size_t>(k));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int i, int j) { return alpha[i] < alpha[j]; });
        double cdf = 0.0, cdf_sel = 0.0;
        for (int idx : order) {
            cdf += x[idx];
            cdf_sel += x_sel[idx];
            CHECK(cdf_sel <= cdf + 1e-12);
        }
        const auto mean_under = [&](const std::vector<double>& w, auto&& h) {
            double m = 0.0;
            for (int i = 0; i < k; ++i) m += w[i] * h(alpha[i]);
            return m;
        };
        const auto sq = [](double a) { return a * a; };
        const auto rt = [](double a) { return std::sqrt(a); };
        const auto step = [](double a) { return a > 0.5 ? 1.0 : 0.0; };
        CHECK(mean_under(x_sel, sq) >= mean_under(x, sq) - 1e-12);
        CHECK(mean_under(x_sel, rt) >= mean_under(x, rt) - 1e-12);
        CHECK(mean_under(x_sel, step) >= mean_under(x, step) - 1e-12);
    }
}

TEST_CASE("partition mutation keeps the chain on the lattice") {
    Population pop;
    pop.genotypes = {Genotype{Partition::identity(3)}};
    pop.freqs = {1.0};
    pop.seed = 11;
    MutationKernel kernel;
    kernel.merge = 1.0;  // every offspring merges
    const auto step = wf_step(pop, std::vector<double>{1.0}, kernel, 50,
                              EvolutionMode::Sampled);
    CHECK(step.next.genotypes.size() > 1);
    double mass_coarser = 0.0;
    for (size_t i = 0; i < step.next.genotypes.size(); ++i) {
        const auto& p = std::get<Partition>(step.next.genotypes[i]);
        if (p.cell_count() == 2) mass_coarser += step.next.freqs[i];
    }
    CHECK(mass_coarser == doctest::Approx(1.0));  // a merge is always legal here
}

TEST_CASE("expectation mode requires a move-closed genotype set") {
    Population pop;
    pop.genotypes = {Genotype{Partition::identity(3)}};
    pop.freqs = {1.0};
    MutationKernel kernel;
    kernel.merge = 0.5;
    CHECK_THROWS_AS(wf_generation(pop, std::vector<double>{1.0}, kernel, 1,
                                  EvolutionMode::Expectation),
                    ValidationError);
}

TEST_CASE("injection threshold") {
    SUBCASE("endpoint interpolation") {
        const auto t = injection_threshold(two_world_sigma(0.0),
                                           two_world_sigma(1.0), 0, 1, 0.5);
        CHECK(t.status == InjectionThreshold::Status::Finite);
        CHECK(t.alpha_star == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("formula value") {
        const auto t = injection_threshold(two_world_sigma(0.1),
                                           two_world_sigma(0.9), 0, 1, 0.3);
        CHECK(t.status == InjectionThreshold::Status::Finite);
        CHECK(t.alpha_star == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("markers") {
        const auto already = injection_threshold(two_world_sigma(0.4),
                                                 two_world_sigma(0.9), 0, 1, 0.3);
        CHECK(already.status == InjectionThreshold::Status::AlreadyResolved);
        const auto never = injection_threshold(two_world_sigma(0.1),
                                               two_world_sigma(0.2), 0, 1, 0.3);
        CHECK(never.status == InjectionThreshold::Status::NeverResolved);
        CHECK_THROWS_AS(injection_threshold(two_world_sigma(0.1),
                                            two_world_sigma(0.9), 0, 1, 0.0),
                        ValidationError);
    }
}

TEST_CASE("rescued set") {
    Rng rng(505);
    const Partition target({0, 0, 1});
    const Ecology base = random_ecology_with_quotient(rng, target, 2, 3);
    const Ecology extra = with_prior(random_ecology(rng, 3, 2, 3), base.prior());
    const double eps = 1e-6;

    CHECK(rescued_set(base, extra, 0.0, eps).empty());

    const auto t = injection_threshold(base, extra, 0, 1, eps);
    REQUIRE(t.status == InjectionThreshold::Status::Finite);
    const auto above = rescued_set(base, extra, t.alpha_star + 1e-6, eps);
    CHECK(std::find(above.begin(), above.end(), std::make_pair(0, 1)) != above.end());

    // monotone growth (the extra ecology separates what the base merges)
    std::vector<std::pair<int, int>> prev;
    for (double alpha : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        const auto cur = rescued_set(base, extra, alpha, eps);
        for (const auto& pr : prev) {
            CHECK(std::find(cur.begin(), cur.end(), pr) != cur.end());
        }
        prev = cur;
    }
}

TEST_CASE("trajectory csv") {
    EvolutionConfig cfg;
    cfg.mode = EvolutionMode::Sampled;
    cfg.kind = EvolutionConfig::Kind::PartitionSet;
    cfg.ecology = eco_a();
    cfg.init_genotypes = {Genotype{Partition({0, 1})}, Genotype{Partition({0, 0})}};
    cfg.generations = 10;
    cfg.popsize = 100;
    cfg.seed = 5;
    const Trajectory traj = run_evolution(cfg);
    const std::string dir = test_output_dir("selection");
    write_trajectory_csv(traj, dir + "/traj.csv");
    std::ifstream in(dir + "/traj.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "generation,mean_risk,mean_trait,delta_sel,expected_delta_sel,z");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 10);
}

}  // TEST_SUITE
