#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ecolab/ecology.hpp"
#include "ecolab/partition.hpp"

// Wright-Fisher / replicator-mutator selection over encodings and recipe
// traits, Price-identity diagnostics, injection thresholds, rescued sets.

namespace ecolab {

/// A post-training recipe: injection strength alpha plus an opaque tag for
/// all other coordinates.
struct Recipe {
    double alpha = 0.0;
    std::string zeta;
    bool operator==(const Recipe& o) const {
        return alpha == o.alpha && zeta == o.zeta;
    }
};

using Genotype = std::variant<Partition, Recipe>;

std::string genotype_key(const Genotype& g);

struct MutationKernel {
    // Partition genotypes: move probabilities (stay = 1 - split - merge).
    double split = 0.0;
    double merge = 0.0;
    // Recipe genotypes: additive uniform step in [-step, step], reflected
    // into [0,1]. step == 0 means stay.
    double step = 0.0;
};

struct Population {
    std::vector<Genotype> genotypes;
    std::vector<double> freqs;      // sums to 1, all >= 0
    std::uint64_t generation = 0;
    std::uint64_t seed = 0;
};

enum class EvolutionMode {
    Expectation,  // infinite population: deterministic replicator-mutator
    Sampled,      // finite Wright-Fisher resampling
};

/// Price identity: selection-stage change of the mean trait,
/// Cov_x(f, trait) / mean fitness. Throws on zero mean fitness.
double price_delta(std::span<const double> freqs, std::span<const double> fitness,
                   std::span<const double> trait);

struct GenerationStep {
    Population next;                  // after selection + mutation
    std::vector<double> parent_freqs; // selection stage only (counts/popsize,
                                      // or the exact reweighting in
                                      // expectation mode); indexed like the
                                      // *input* genotype list
};

/// One generation: fitness-weighted parent choice, then the mutation kernel
/// applied independently per offspring. Deterministic given
/// (pop.seed, pop.generation, inputs); the random substream is derived from
/// those two values, so replaying a population replays its trajectory.
GenerationStep wf_step(const Population& pop, std::span<const double> fitness,
                       const MutationKernel& kernel, int popsize,
                       EvolutionMode mode);

Population wf_generation(const Population& pop, std::span<const double> fitness,
                         const MutationKernel& kernel, int popsize,
                         EvolutionMode mode);

// --- full runs ---------------------------------------------------------------

struct GenerationRecord {
    std::uint64_t generation = 0;
    double mean_risk = 0.0;
    double mean_trait = 0.0;
    double delta_sel = 0.0;           // selection-stage change of mean risk
    double expected_delta_sel = 0.0;  // exact conditional expectation
    double z = 0.0;                   // standardized residual; NaN when the
                                      // conditional variance vanishes
};

struct Trajectory {
    std::vector<GenerationRecord> records;
};

struct EvolutionConfig {
    EvolutionMode mode = EvolutionMode::Sampled;
    enum class Kind { PartitionSet, RecipeSet } kind = Kind::PartitionSet;

    // Partition genotypes: risk = excess loss on this ecology.
    std::optional<Ecology> ecology;
    bool init_all_partitions = false;  // start from the full lattice

    // Recipe genotypes: risk = Delta_eval(alpha, zeta).
    enum class DeltaForm { Linear, TwoEcology } delta_form = DeltaForm::Linear;
    // Linear: Delta_eval(alpha) = max(0, 1 - slope * alpha).
    double linear_slope = 1.0;
    // TwoEcology: excess under eval_ecology of the quotient (at tolerance
    // inject_eps) of the mixture (1-alpha) token + alpha eval.
    std::optional<Ecology> token_ecology;
    std::optional<Ecology> eval_ecology;
    double inject_eps = 0.0;

    // Fitness g(risk): Offset -> C - risk (C > max achievable risk, checked);
    // OffsetAuto -> C = 1 + max achievable risk; Exp -> exp(-rate * risk).
    enum class FitnessForm { Offset, OffsetAuto, Exp } fitness_form = FitnessForm::OffsetAuto;
    double fitness_offset = 1.0;
    double exp_rate = 1.0;

    int generations = 100;
    int popsize = 100;
    std::uint64_t seed = 0;
    MutationKernel kernel;

    std::vector<Genotype> init_genotypes;
    std::vector<double> init_freqs;  // empty -> uniform
};

/// Parses the JSON run-config schema (see README); ecology paths are loaded
/// relative to the current working directory.
EvolutionConfig load_evolution_config(const std::string& json_text);

Trajectory run_evolution(const EvolutionConfig& config);

void write_trajectory_csv(const Trajectory& t, const std::string& path);

// --- two-ecology injection ----------------------------------------------------

struct InjectionThreshold {
    enum class Status { Finite, AlreadyResolved, NeverResolved } status =
        Status::Finite;
    double alpha_star = 0.0;  // meaningful only when status == Finite
};

/// alpha* = (eps - sigma2_base) / (sigma2_extra - sigma2_base) for a gap pair;
/// markers when the pair is already resolved under base (sigma2 > eps) or can
/// never be resolved (sigma2_extra <= eps).
InjectionThreshold injection_threshold(const Ecology& base, const Ecology& extra,
                                       int w1, int w2, double eps);

/// Pairs in the gap set {sigma2_base <= eps} whose mixed distance
/// (1-alpha) sigma2_base + alpha sigma2_extra exceeds eps.
std::vector<std::pair<int, int>> rescued_set(const Ecology& base,
                                             const Ecology& extra, double alpha,
                                             double eps);

}  // namespace ecolab
