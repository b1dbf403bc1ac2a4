#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecolab/ecology.hpp"
#include "ecolab/partition.hpp"

// Search over the set-partition lattice under the complexity-regularized
// objective J_beta(p) = L*(p) + beta * H(p(W)).

namespace ecolab {

/// Representational complexity H(p(W)) in nats: entropy of cell masses.
double complexity(const Partition& p, std::span<const double> prior);

struct ObjectiveEvaluation {
    Partition partition;
    double beta = 0.0;
    double loss = 0.0;        // L*(p)
    double complexity = 0.0;  // H(p(W))
    double objective = 0.0;   // loss + beta * complexity
};

ObjectiveEvaluation evaluate_objective(const Ecology& e, const Partition& p,
                                       double beta);

struct SplitReport {
    int cell = 0;
    std::vector<int> side_a, side_b;  // world indices
    double lambda = 0.0;              // pi_A / pi_S
    double gain = 0.0;                // E_c[JS_lambda(bar P_A, bar P_B)]
    double cost_rate = 0.0;           // h(lambda)
    double beta_star = 0.0;           // gain / h(lambda)
};

/// Closed-form split-versus-merge threshold for splitting `cell` of `p` into
/// `side_a` and its complement: J(p) - J(p^{A|B}) = pi_S (gain - beta h(lambda)).
SplitReport split_report(const Ecology& e, const Partition& p, int cell,
                         std::span<const int> side_a);

struct LocalMinMove {
    bool is_merge = false;
    int cell_a = 0, cell_b = 0;        // merge: the two cells
    std::vector<int> subset;           // split: side A world indices
    double gain = 0.0;                 // JS gain of the move's bipartition
    double threshold = 0.0;            // beta * h(lambda)
};

struct LocalMinReport {
    bool is_local_min = true;
    std::vector<LocalMinMove> violating_moves;
};

/// Checks every one-step split (all nontrivial bipartitions of every cell,
/// cells of size <= 13) and every pairwise merge against the stability
/// inequalities. Ties (gain exactly beta*h) favor the current partition.
LocalMinReport local_min_check(const Ecology& e, const Partition& p, double beta);

struct SweepOptions {
    double tie_tol = 1e-12;      // absolute slack for reporting ties
    double refine_width = 1e-6;  // bisection width for transition intervals
    bool force = false;          // lift the N <= 14 enumeration guard
};

struct SweepPoint {
    double beta = 0.0;
    std::vector<ObjectiveEvaluation> optima;  // all ties, canonical order
};

struct SweepTransition {
    double beta_lo = 0.0, beta_hi = 0.0;  // bracketing interval (width <= refine_width)
    std::vector<std::string> from, to;    // optimum sets as label strings
    bool predicted_local = false;         // matched by a one-step merge threshold
    double predicted_beta_star = 0.0;     // the matching beta* when local
};

struct SweepPath {
    std::vector<SweepPoint> points;           // one per requested grid value
    std::vector<SweepTransition> transitions; // refined between grid values
};

/// Global optimum path of J_beta over the full partition lattice along the
/// (sorted) beta grid, with all ties reported and each transition annotated
/// with whether the local split-threshold of the preceding optimum predicts it.
SweepPath beta_sweep(const Ecology& e, std::vector<double> grid,
                     const SweepOptions& opts = {});

struct MinComplexityResult {
    Partition partition;  // the quotient W/~
    double istar = 0.0;   // H(W/~)
};

/// The minimum-complexity zero-excess encoding: quotient_partition(e, 0).
MinComplexityResult min_complexity_veridical(const Ecology& e);

struct RateDistortionPoint {
    double level = 0.0;   // complexity budget I
    double excess = 0.0;  // R(I) = min excess over partitions with H(p) <= I
};

/// Rate-distortion curve by full enumeration; R(I) = 0 iff I >= I*(mu).
std::vector<RateDistortionPoint> rate_distortion(const Ecology& e,
                                                 std::span<const double> levels,
                                                 bool force = false);

/// Minimum over distinct quotient-cell pairs of gain / h(lambda); the quotient
/// is a local minimum of J_beta iff beta <= beta_min. Empty when the quotient
/// has a single cell (no merges possible).
std::optional<double> beta_min(const Ecology& e);

// CSV emitters for sweep paths, rate-distortion curves and split reports.
void write_sweep_csv(const SweepPath& path, const std::string& sweep_path,
                     const std::string& transitions_path);
void write_rate_distortion_csv(const std::vector<RateDistortionPoint>& curve,
                               const std::string& path);
void write_split_report_csv(const SplitReport& rep, const std::string& path);

}  // namespace ecolab
