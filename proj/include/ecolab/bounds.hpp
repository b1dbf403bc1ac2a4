#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecolab/ecology.hpp"
#include "ecolab/partition.hpp"

// Certification and comparison bounds: finite-class sample bounds, the
// decoder-gap decomposition, capacity criterion, generalist-vs-specialist
// comparison, off-ecology lower bounds and the non-identifiability witness.

namespace ecolab {

struct BoundInputs {
    double c_tau = 0.0;     // log(1/tau), nats
    double tau = 0.0;       // in (0,1); consistent with c_tau within 1e-12
    double gamma = 0.0;     // smallest positive excess over non-veridical encodings
    double eps_opt = 0.0;   // empirical optimisation error
    long long m_theta = 0;  // |induced encoding class|
    double alpha_conf = 0.0;  // confidence level in (0,1)
    enum class Prior { Uniform, Entropic } prior = Prior::Uniform;
    double beta0 = 0.0;     // entropic prior strength

    static BoundInputs from_tau(double tau, double gamma, double eps_opt,
                                long long m_theta, double alpha_conf);
};

/// Enumerated encoding family with known excesses; needed for the entropic
/// prior (the normalizer runs over exactly this set).
struct EnumeratedFamily {
    std::vector<Partition> partitions;
    std::vector<double> excesses;     // same order
    std::vector<double> prior;        // world prior, for H(p(W))
};

struct SampleBound {
    long long n = 0;
    struct PerPartition {
        std::string labels;
        double rho = 0.0;      // prior mass of this encoding
        double radius = 0.0;   // concentration radius eta_rho at the returned n
        bool veridical = false;
    };
    std::vector<PerPartition> per_partition;  // present when a family is given
};

/// Uniform prior: n = ceil(2 C_tau^2 / (gamma - eps_opt)^2 (log 2M + log 1/alpha)).
/// Entropic prior: rho(p) proportional to exp(-beta0 H(p(W))) over the supplied
/// family; n = ceil(2 C_tau^2 / (gamma - eps_opt)^2 max{N_v, max_p N_p}).
/// Throws ValidationError("no finite certificate ...") when gamma <= eps_opt.
SampleBound sample_bound(const BoundInputs& inputs,
                         const EnumeratedFamily* family = nullptr);

// --- decoder families ----------------------------------------------------------

struct DecoderFamilySpec {
    enum class Kind {
        BayesFull,      // all decoders; optimum is the cell-average table
        ContextPooled,  // decoders depending on the cell only
        ExplicitTable,  // a single, explicitly given decoder
    } kind = Kind::BayesFull;

    // ExplicitTable: (cell, context, token) row-major; contexts/token order of
    // the ecology the spec is evaluated against.
    int cells = 0;
    std::vector<double> table;
};

struct DecoderGapResult {
    double loss = 0.0;  // best loss within the family
    double gap = 0.0;   // loss - L*(p), >= 0
};

/// Best deployment-realizable loss within the family and its gap above the
/// Bayes optimum; loss = floor + excess + gap holds to 1e-10 by construction.
DecoderGapResult decoder_gap(const Ecology& e, const Partition& p,
                             const DecoderFamilySpec& fam);

/// Asserts the decoder-class monotonicity L^{fam2} <= L^{fam1} and
/// Gamma^{fam2} <= Gamma^{fam1} for nested families fam1 within fam2.
/// Throws on non-nested combinations.
bool nesting_check(const Ecology& e, const Partition& p,
                   const DecoderFamilySpec& fam1, const DecoderFamilySpec& fam2);

// --- capacity -------------------------------------------------------------------

struct CapacityResult {
    bool feasible = false;          // some member refines the quotient
    bool floor_attainable = false;  // same condition
    double min_excess = 0.0;        // 0 when feasible, else min excess > 0
};

CapacityResult capacity_check(const Ecology& e,
                              const std::vector<Partition>& realizable);

// --- generalist vs specialist ----------------------------------------------------

struct GeneralistReport {
    std::vector<double> per_task_excess;
    double mixture_excess = 0.0;
    struct MissedPair {
        int task = 0;
        int w1 = 0, w2 = 0;
        double bound = 0.0;  // (pi1+pi2) E_{c~task}[JS_lambda(P_w1, P_w2)]
    };
    std::vector<MissedPair> missed;  // merged pairs separated under some task
};

/// Tasks must share worlds, prior and vocabulary; the uniform mixture is built
/// by expand_ecology composition. For every merged pair separated under task s
/// the two-state lower bound on that task's excess is reported.
GeneralistReport generalist_specialist(const std::vector<Ecology>& tasks,
                                       const Partition& p);

// --- off-ecology ------------------------------------------------------------------

struct OffEcologyResult {
    double bound = 0.0;   // (pi1+pi2) E_{c~probe}[JS_lambda(P_w1, P_w2)]
    double actual = 0.0;  // excess of train's quotient evaluated under probe
};

/// Requires shared worlds, the pair merged by train's quotient and separated
/// by the probe; asserts actual >= bound > 0.
OffEcologyResult off_ecology_bound(const Ecology& train, const Ecology& probe,
                                   int w1, int w2);

struct NonidentWitness {
    std::vector<std::string> context_set;  // probe contexts A (train-null, rows differ)
    DecoderFamilySpec q1, q2;              // explicit tables over probe contexts
    double train_loss_q1 = 0.0, train_loss_q2 = 0.0;  // equal within 1e-12
    double probe_loss_q1 = 0.0, probe_loss_q2 = 0.0;  // differ on A
};

/// Builds two decoders that agree with the Bayes decoder off A and equal
/// P_w1 / P_w2 on A for the merged cell. `probe` must contain every train
/// context (matched by id) so both losses are evaluable on it.
NonidentWitness nonident_witness(const Ecology& train, const Ecology& probe,
                                 int w1, int w2);

/// Loss of an explicit decoder table under e/p; +inf if the table assigns
/// zero mass where the data has support.
double decoder_table_loss(const Ecology& e, const Partition& p,
                          const DecoderFamilySpec& table);

// --- CLI job schema ----------------------------------------------------------------

struct BoundsJob {
    BoundInputs inputs;
    bool gamma_given = false;
    bool m_theta_given = false;
    std::string ecology_path;  // when set, the family is the full lattice of
                               // this ecology and gamma/m_theta default from it
    std::optional<EnumeratedFamily> family;  // explicit partitions + excesses
};

BoundsJob load_bounds_job(const std::string& json_text);

/// Resolves the job (loading/enumerating the family when requested), filling
/// in gamma and m_theta where derivable.
SampleBound run_bounds_job(BoundsJob& job);

std::string sample_bound_to_json(const SampleBound& b, const BoundInputs& in);

}  // namespace ecolab
