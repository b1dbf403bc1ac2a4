#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecolab/partition.hpp"

namespace ecolab {

/// Raised when an input file or constructed object violates an invariant;
/// the message names the first violated invariant.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised on malformed input files.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Context {
    std::string id;
    double mass = 0.0;
};

/// A finite autoregressive task ecology: worlds with a strictly positive
/// prior, a weighted context set, and world-conditioned next-token tables
/// P_w(v|c). Immutable after construction; all operations on it are pure.
class Ecology {
  public:
    // Validates every invariant (positivity, simplex sums within 1e-9,
    // unique ids), then renormalizes prior, context masses and rows exactly.
    static Ecology create(std::vector<std::string> worlds,
                          std::vector<double> prior,
                          std::vector<std::string> vocab,
                          std::vector<Context> contexts,
                          std::vector<double> cond);

    int num_worlds() const { return static_cast<int>(worlds_.size()); }
    int num_contexts() const { return static_cast<int>(contexts_.size()); }
    int num_tokens() const { return static_cast<int>(vocab_.size()); }

    const std::vector<std::string>& worlds() const { return worlds_; }
    const std::vector<double>& prior() const { return prior_; }
    const std::vector<std::string>& vocab() const { return vocab_; }
    const std::vector<Context>& contexts() const { return contexts_; }

    double prior_of(int w) const { return prior_[static_cast<size_t>(w)]; }
    double context_mass(int c) const { return contexts_[static_cast<size_t>(c)].mass; }

    // Next-token row P_w(.|c), length num_tokens().
    std::span<const double> row(int w, int c) const {
        const size_t nv = vocab_.size();
        return {cond_.data() + (static_cast<size_t>(w) * contexts_.size() +
                                static_cast<size_t>(c)) * nv,
                nv};
    }

    int world_index(std::string_view id) const;      // throws ValidationError
    std::optional<int> find_world(std::string_view id) const;
    std::optional<int> find_context(std::string_view id) const;

  private:
    Ecology() = default;

    std::vector<std::string> worlds_;
    std::vector<double> prior_;
    std::vector<std::string> vocab_;
    std::vector<Context> contexts_;
    std::vector<double> cond_;  // (world, context, token), row-major
};

// --- file schema -----------------------------------------------------------
// JSON: {version:1, worlds:[{id,prior}], vocab:[string], contexts:[{id,mass}],
//        cond:{world_id:{context_id:[prob,...]}}}

Ecology load_ecology(const std::string& path);
Ecology parse_ecology_json(const std::string& text);
std::string ecology_to_json(const Ecology& e);
void save_ecology(const Ecology& e, const std::string& path);

// --- exact decomposition ----------------------------------------------------

struct DecompositionReport {
    double floor = 0.0;         // H(Y|C,W), nats
    double optimal_loss = 0.0;  // L*_D(p) = floor + excess
    double excess = 0.0;        // prior-weighted Jensen-Shannon term

    struct CellTerm {
        int cell = 0;
        double mass = 0.0;         // pi_x
        double js = 0.0;           // E_c[JS_{alpha_x}]
        double contribution = 0.0; // pi_x * E_c[JS_{alpha_x}]
    };
    std::vector<CellTerm> per_cell;

    // Bayes-optimal decoder: cell-average distribution per (cell, context).
    int cells = 0;
    int num_contexts = 0;
    int num_tokens = 0;
    std::vector<double> decoder;  // (cell, context, token), row-major
    std::span<const double> decoder_row(int cell, int c) const {
        const size_t nv = static_cast<size_t>(num_tokens);
        return {decoder.data() + (static_cast<size_t>(cell) * num_contexts +
                                  static_cast<size_t>(c)) * nv,
                nv};
    }
};

/// Entropy floor H(Y|C,W) = E_{w,c}[H(P_w(.|c))] in nats.
double entropy_floor(const Ecology& e);

/// Exact excess-loss decomposition of the Bayes-optimal loss of encoding `p`:
/// optimal_loss = floor + sum_c mass(c) sum_x pi_x JS_{alpha_x}.
DecompositionReport decompose(const Ecology& e, const Partition& p);

// --- task distances and quotients -------------------------------------------

/// Context-mass-weighted squared Hellinger distance between two worlds'
/// next-token rows; symmetric, in [0,1].
double task_distance(const Ecology& e, int w1, int w2);
double task_distance(const Ecology& e, std::string_view w1, std::string_view w2);

/// Full N x N matrix of task distances (row-major, zero diagonal).
std::vector<double> distance_matrix(const Ecology& e);

struct SeparationStructure {
    struct Pair {
        int w1 = 0, w2 = 0;
        double sigma2 = 0.0;
    };
    std::vector<Pair> pairs;      // all unordered pairs, (w1 < w2)
    std::vector<Pair> separated;  // subset with sigma2 > tol
    std::optional<double> margin; // min sigma2 over separated pairs
};

SeparationStructure separation_structure(const Ecology& e, double tol);

/// Partition of worlds into equivalence classes of {sigma2 <= tol}.
/// Throws ValidationError("non-transitive tolerance relation ...") when the
/// relation fails to be transitive; taking the closure instead could merge
/// separated pairs.
Partition quotient_partition(const Ecology& e, double tol);

/// Mixture ecology (1-alpha) * base + alpha * extra. Worlds, prior and vocab
/// must match; context lists are concatenated with rescaled masses (colliding
/// ids from `extra` get a deterministic "~k" suffix).
Ecology expand_ecology(const Ecology& base, const Ecology& extra, double alpha);

/// Ecology over the cells of `p`: prior mass pi_x and cell-average rows.
Ecology collapse_to_quotient(const Ecology& e, const Partition& p);

// CSV emitters.
void write_decomposition_csv(const DecompositionReport& rep, const std::string& path);
void write_separation_csv(const Ecology& e, const SeparationStructure& s,
                          const std::string& path);

}  // namespace ecolab
