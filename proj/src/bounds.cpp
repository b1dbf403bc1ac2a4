#include "ecolab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ecolab/numeric.hpp"
#include "ecolab/partition_lab.hpp"
#include "json.hpp"

namespace ecolab {

BoundInputs BoundInputs::from_tau(double tau, double gamma, double eps_opt,
                                  long long m_theta, double alpha_conf) {
    BoundInputs in;
    in.tau = tau;
    in.c_tau = -std::log(tau);
    in.gamma = gamma;
    in.eps_opt = eps_opt;
    in.m_theta = m_theta;
    in.alpha_conf = alpha_conf;
    return in;
}

namespace {

void validate_bound_inputs(const BoundInputs& in) {
    if (in.tau > 0.0) {
        if (!(in.tau < 1.0)) throw ValidationError("sample_bound: tau must be in (0,1)");
        if (std::abs(in.c_tau + std::log(in.tau)) > 1e-12) {
            throw ValidationError("sample_bound: c_tau must equal -ln(tau) within 1e-12");
        }
    }
    if (!(in.c_tau > 0.0)) throw ValidationError("sample_bound: c_tau must be > 0");
    if (!(in.alpha_conf > 0.0 && in.alpha_conf < 1.0)) {
        throw ValidationError("sample_bound: confidence alpha must be in (0,1)");
    }
    if (in.m_theta < 1) throw ValidationError("sample_bound: m_theta must be >= 1");
    if (!(in.gamma > in.eps_opt)) {
        throw ValidationError(
            "no finite certificate: gamma must exceed eps_opt (the veridicality "
            "gap is not resolvable)");
    }
}

constexpr double kVeridicalTol = 1e-12;

}  // namespace

SampleBound sample_bound(const BoundInputs& in, const EnumeratedFamily* family) {
    validate_bound_inputs(in);
    const double prefactor =
        2.0 * in.c_tau * in.c_tau / ((in.gamma - in.eps_opt) * (in.gamma - in.eps_opt));

    SampleBound out;
    if (in.prior == BoundInputs::Prior::Uniform && family == nullptr) {
        const double term = std::log(2.0 * static_cast<double>(in.m_theta)) +
                            std::log(1.0 / in.alpha_conf);
        out.n = static_cast<long long>(std::ceil(prefactor * term));
        return out;
    }
    if (family == nullptr) {
        throw ValidationError(
            "sample_bound: the entropic prior needs an enumerated partition set");
    }
    const size_t m = family->partitions.size();
    if (m == 0 || family->excesses.size() != m) {
        throw ValidationError("sample_bound: malformed partition family");
    }

    // rho(p) ~ exp(-beta0 H(p(W))) with the normalizer over exactly this set;
    // beta0 = 0 (or the uniform prior) makes rho constant.
    const double beta0 = in.prior == BoundInputs::Prior::Entropic ? in.beta0 : 0.0;
    std::vector<double> rho(m);
    double z = 0.0;
    for (size_t i = 0; i < m; ++i) {
        rho[i] = std::exp(-beta0 * complexity(family->partitions[i], family->prior));
        z += rho[i];
    }
    for (double& r : rho) r /= z;

    double min_nonveridical = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < m; ++i) {
        if (family->excesses[i] > kVeridicalTol) {
            min_nonveridical = std::min(min_nonveridical, family->excesses[i]);
        }
    }
    if (std::isfinite(min_nonveridical) && in.gamma > min_nonveridical + 1e-12) {
        throw ValidationError(
            "sample_bound: gamma exceeds the family's smallest non-veridical excess");
    }

    const double log_conf = std::log(2.0 / in.alpha_conf);
    double max_term = 0.0;
    bool any_veridical = false;
    for (size_t i = 0; i < m; ++i) {
        const double log_inv_rho = -std::log(rho[i]);
        if (family->excesses[i] <= kVeridicalTol) {
            any_veridical = true;
            max_term = std::max(max_term, log_inv_rho + log_conf);  // N_v
        } else {
            const double ratio = in.gamma / family->excesses[i];
            max_term = std::max(max_term, (log_inv_rho + log_conf) * ratio * ratio);
        }
    }
    if (!any_veridical) {
        throw ValidationError(
            "sample_bound: the family contains no veridical encoding");
    }
    out.n = static_cast<long long>(std::ceil(prefactor * max_term));

    for (size_t i = 0; i < m; ++i) {
        SampleBound::PerPartition pp;
        pp.labels = family->partitions[i].to_string();
        pp.rho = rho[i];
        pp.radius = in.c_tau * std::sqrt((-std::log(rho[i]) + log_conf) /
                                         (2.0 * static_cast<double>(out.n)));
        pp.veridical = family->excesses[i] <= kVeridicalTol;
        out.per_partition.push_back(std::move(pp));
    }
    return out;
}

// --- decoder families ------------------------------------------------------------

namespace {

void validate_table(const Ecology& e, const Partition& p,
                    const DecoderFamilySpec& fam) {
    const size_t expect = static_cast<size_t>(p.cell_count()) * e.num_contexts() *
                          e.num_tokens();
    if (fam.cells != p.cell_count() || fam.table.size() != expect) {
        throw ValidationError("decoder table has wrong shape");
    }
    const int nv = e.num_tokens();
    for (size_t r = 0; r * nv < fam.table.size(); ++r) {
        double sum = 0.0;
        for (int v = 0; v < nv; ++v) {
            const double x = fam.table[r * nv + static_cast<size_t>(v)];
            if (x < 0.0) throw ValidationError("decoder table has a negative entry");
            sum += x;
        }
        if (std::abs(sum - 1.0) > kProbTol) {
            throw ValidationError("decoder table row does not sum to 1 within 1e-9");
        }
    }
}

}  // namespace

double decoder_table_loss(const Ecology& e, const Partition& p,
                          const DecoderFamilySpec& fam) {
    if (fam.kind != DecoderFamilySpec::Kind::ExplicitTable) {
        throw ValidationError("decoder_table_loss: explicit table expected");
    }
    validate_table(e, p, fam);
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();
    double loss = 0.0;
    for (int w = 0; w < e.num_worlds(); ++w) {
        const int x = p.label(w);
        for (int c = 0; c < nc; ++c) {
            const double mc = e.context_mass(c);
            if (mc <= 0.0) continue;
            std::span<const double> q{
                fam.table.data() + (static_cast<size_t>(x) * nc + static_cast<size_t>(c)) * nv,
                static_cast<size_t>(nv)};
            loss += e.prior_of(w) * mc * cross_entropy(e.row(w, c), q);
        }
    }
    return loss;
}

DecoderGapResult decoder_gap(const Ecology& e, const Partition& p,
                             const DecoderFamilySpec& fam) {
    if (p.size() != e.num_worlds()) {
        throw ValidationError("partition length must equal number of worlds");
    }
    const auto rep = decompose(e, p);
    DecoderGapResult out;
    switch (fam.kind) {
        case DecoderFamilySpec::Kind::BayesFull:
            out.loss = rep.optimal_loss;
            out.gap = 0.0;
            break;
        case DecoderFamilySpec::Kind::ContextPooled: {
            // Optimal cell-only decoder: the D_C-weighted average of the
            // cell-average distributions.
            const int nc = e.num_contexts();
            const int nv = e.num_tokens();
            std::vector<double> pooled(static_cast<size_t>(p.cell_count()) * nv, 0.0);
            for (int x = 0; x < p.cell_count(); ++x) {
                for (int c = 0; c < nc; ++c) {
                    const auto bar = rep.decoder_row(x, c);
                    for (int v = 0; v < nv; ++v) {
                        pooled[static_cast<size_t>(x) * nv + v] +=
                            e.context_mass(c) * bar[static_cast<size_t>(v)];
                    }
                }
            }
            double extra = 0.0;  // sum KL(P_w || pooled) - sum KL(P_w || bar)
            double loss = rep.floor;
            for (int w = 0; w < e.num_worlds(); ++w) {
                const int x = p.label(w);
                std::span<const double> q{pooled.data() + static_cast<size_t>(x) * nv,
                                          static_cast<size_t>(nv)};
                for (int c = 0; c < nc; ++c) {
                    const double mc = e.context_mass(c);
                    if (mc <= 0.0) continue;
                    loss += e.prior_of(w) * mc * kl_divergence(e.row(w, c), q);
                    extra += e.prior_of(w) * mc *
                             (kl_divergence(e.row(w, c), q) -
                              kl_divergence(e.row(w, c), rep.decoder_row(x, c)));
                }
            }
            out.loss = loss;
            out.gap = extra;
            break;
        }
        case DecoderFamilySpec::Kind::ExplicitTable:
            out.loss = decoder_table_loss(e, p, fam);
            out.gap = out.loss - rep.optimal_loss;
            break;
    }
    return out;
}

namespace {

bool table_is_context_constant(const Ecology& e, const DecoderFamilySpec& fam) {
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();
    for (int x = 0; x < fam.cells; ++x) {
        for (int c = 1; c < nc; ++c) {
            for (int v = 0; v < nv; ++v) {
                const double a = fam.table[(static_cast<size_t>(x) * nc) * nv + static_cast<size_t>(v)];
                const double b = fam.table[(static_cast<size_t>(x) * nc + static_cast<size_t>(c)) * nv + static_cast<size_t>(v)];
                if (std::abs(a - b) > 1e-12) return false;
            }
        }
    }
    return true;
}

bool is_nested(const Ecology& e, const DecoderFamilySpec& fam1,
               const DecoderFamilySpec& fam2) {
    using Kind = DecoderFamilySpec::Kind;
    if (fam2.kind == Kind::BayesFull) return true;  // everything sits inside it
    if (fam1.kind == fam2.kind) {
        if (fam1.kind != Kind::ExplicitTable) return true;
        return fam1.cells == fam2.cells && fam1.table == fam2.table;
    }
    if (fam1.kind == Kind::ExplicitTable && fam2.kind == Kind::ContextPooled) {
        return table_is_context_constant(e, fam1);
    }
    return false;
}

}  // namespace

bool nesting_check(const Ecology& e, const Partition& p,
                   const DecoderFamilySpec& fam1, const DecoderFamilySpec& fam2) {
    if (!is_nested(e, fam1, fam2)) {
        throw ValidationError("nesting_check: fam1 is not contained in fam2");
    }
    const auto g1 = decoder_gap(e, p, fam1);
    const auto g2 = decoder_gap(e, p, fam2);
    return g2.loss <= g1.loss + 1e-12 && g2.gap <= g1.gap + 1e-12;
}

// --- capacity ---------------------------------------------------------------------

CapacityResult capacity_check(const Ecology& e,
                              const std::vector<Partition>& realizable) {
    if (realizable.empty()) {
        throw ValidationError("capacity_check: empty realizable set");
    }
    const Partition quotient = quotient_partition(e, 0.0);
    CapacityResult out;
    for (const auto& p : realizable) {
        if (p.refines(quotient)) {
            out.feasible = true;
            out.floor_attainable = true;
            out.min_excess = 0.0;
            return out;
        }
    }
    out.min_excess = std::numeric_limits<double>::infinity();
    for (const auto& p : realizable) {
        out.min_excess = std::min(out.min_excess, decompose(e, p).excess);
    }
    return out;
}

// --- generalist vs specialist ------------------------------------------------------

namespace {

// Two-state lower-bound term: (pi1+pi2) E_{c~task}[JS_lambda(P_w1, P_w2)].
double pair_bound(const Ecology& task, int w1, int w2) {
    const double pi1 = task.prior_of(w1);
    const double pi2 = task.prior_of(w2);
    const double lambda = pi1 / (pi1 + pi2);
    double gain = 0.0;
    for (int c = 0; c < task.num_contexts(); ++c) {
        const double mc = task.context_mass(c);
        if (mc <= 0.0) continue;
        gain += mc * weighted_js_pair(lambda, task.row(w1, c), task.row(w2, c));
    }
    return (pi1 + pi2) * gain;
}

}  // namespace

GeneralistReport generalist_specialist(const std::vector<Ecology>& tasks,
                                       const Partition& p) {
    if (tasks.empty()) throw ValidationError("generalist_specialist: no tasks");
    const Ecology& first = tasks.front();
    for (const auto& t : tasks) {
        if (t.worlds() != first.worlds() || t.vocab() != first.vocab()) {
            throw ValidationError(
                "generalist_specialist: tasks must share worlds and vocabulary");
        }
        for (int w = 0; w < t.num_worlds(); ++w) {
            if (std::abs(t.prior_of(w) - first.prior_of(w)) > kProbTol) {
                throw ValidationError("generalist_specialist: tasks must share the prior");
            }
        }
    }

    GeneralistReport rep;
    for (const auto& t : tasks) {
        rep.per_task_excess.push_back(decompose(t, p).excess);
    }

    // Uniform mixture by expand_ecology composition.
    Ecology mix = first;
    for (size_t t = 1; t < tasks.size(); ++t) {
        mix = expand_ecology(mix, tasks[t], 1.0 / static_cast<double>(t + 1));
    }
    rep.mixture_excess = decompose(mix, p).excess;

    const auto cells = p.cells();
    for (size_t s = 0; s < tasks.size(); ++s) {
        for (const auto& members : cells) {
            for (size_t i = 0; i < members.size(); ++i) {
                for (size_t j = i + 1; j < members.size(); ++j) {
                    if (task_distance(tasks[s], members[i], members[j]) > 0.0) {
                        rep.missed.push_back(
                            {static_cast<int>(s), members[i], members[j],
                             pair_bound(tasks[s], members[i], members[j])});
                    }
                }
            }
        }
    }
    return rep;
}

// --- off-ecology --------------------------------------------------------------------

namespace {

void check_same_worlds(const Ecology& a, const Ecology& b, const char* what) {
    if (a.worlds() != b.worlds() || a.vocab() != b.vocab()) {
        throw ValidationError(std::string(what) + ": ecologies must share worlds and vocabulary");
    }
    for (int w = 0; w < a.num_worlds(); ++w) {
        if (std::abs(a.prior_of(w) - b.prior_of(w)) > kProbTol) {
            throw ValidationError(std::string(what) + ": ecologies must share the prior");
        }
    }
}

}  // namespace

OffEcologyResult off_ecology_bound(const Ecology& train, const Ecology& probe,
                                   int w1, int w2) {
    check_same_worlds(train, probe, "off_ecology_bound");
    const Partition quotient = quotient_partition(train, 0.0);
    if (quotient.label(w1) != quotient.label(w2)) {
        throw ValidationError(
            "off_ecology_bound: pair not merged by the train quotient");
    }
    if (!(task_distance(probe, w1, w2) > 0.0)) {
        throw ValidationError("off_ecology_bound: pair not separated by the probe");
    }
    OffEcologyResult out;
    out.bound = pair_bound(probe, w1, w2);
    out.actual = decompose(probe, quotient).excess;
    if (!(out.bound > 0.0) || out.actual < out.bound - 1e-12) {
        throw std::logic_error("off_ecology_bound: lower bound violated");
    }
    return out;
}

NonidentWitness nonident_witness(const Ecology& train, const Ecology& probe,
                                 int w1, int w2) {
    check_same_worlds(train, probe, "nonident_witness");
    const Partition quotient = quotient_partition(train, 0.0);
    if (quotient.label(w1) != quotient.label(w2)) {
        throw ValidationError(
            "nonident_witness: pair not merged by the train quotient");
    }
    const int merged_cell = quotient.label(w1);
    const int nc = probe.num_contexts();
    const int nv = probe.num_tokens();

    // A = probe contexts with train mass < 1e-15 and differing rows.
    std::vector<int> set_a;
    for (int c = 0; c < nc; ++c) {
        const auto& id = probe.contexts()[static_cast<size_t>(c)].id;
        double train_mass = 0.0;
        if (auto tc = train.find_context(id)) train_mass = train.context_mass(*tc);
        if (train_mass >= 1e-15) continue;
        double diff = 0.0;
        for (int v = 0; v < nv; ++v) {
            diff = std::max(diff, std::abs(probe.row(w1, c)[static_cast<size_t>(v)] -
                                           probe.row(w2, c)[static_cast<size_t>(v)]));
        }
        if (diff > 1e-15) set_a.push_back(c);
    }
    if (set_a.empty()) {
        throw ValidationError("nonident_witness: no zero-mass separating context");
    }

    // Both decoders: Bayes under train where train has mass, the probe cell
    // average on other contexts, and P_w1 / P_w2 on A for the merged cell.
    const auto probe_rep = decompose(probe, quotient);
    const auto train_rep = decompose(train, quotient);
    const int k = quotient.cell_count();

    NonidentWitness wit;
    for (int c : set_a) wit.context_set.push_back(probe.contexts()[static_cast<size_t>(c)].id);

    auto build = [&](int pick_world) {
        DecoderFamilySpec fam;
        fam.kind = DecoderFamilySpec::Kind::ExplicitTable;
        fam.cells = k;
        fam.table.assign(static_cast<size_t>(k) * nc * nv, 0.0);
        for (int x = 0; x < k; ++x) {
            for (int c = 0; c < nc; ++c) {
                double* out = fam.table.data() +
                              (static_cast<size_t>(x) * nc + static_cast<size_t>(c)) * nv;
                const auto& id = probe.contexts()[static_cast<size_t>(c)].id;
                const bool in_a =
                    std::find(set_a.begin(), set_a.end(), c) != set_a.end();
                if (in_a && x == merged_cell) {
                    const auto row = probe.row(pick_world, c);
                    std::copy(row.begin(), row.end(), out);
                } else if (auto tc = train.find_context(id)) {
                    const auto row = train_rep.decoder_row(x, *tc);
                    std::copy(row.begin(), row.end(), out);
                } else {
                    const auto row = probe_rep.decoder_row(x, c);
                    std::copy(row.begin(), row.end(), out);
                }
            }
        }
        return fam;
    };
    wit.q1 = build(w1);
    wit.q2 = build(w2);

    // Train-side evaluation needs tables indexed by train contexts.
    auto train_view = [&](const DecoderFamilySpec& fam) {
        DecoderFamilySpec tv;
        tv.kind = DecoderFamilySpec::Kind::ExplicitTable;
        tv.cells = k;
        const int tnc = train.num_contexts();
        tv.table.assign(static_cast<size_t>(k) * tnc * nv, 0.0);
        for (int x = 0; x < k; ++x) {
            for (int tc = 0; tc < tnc; ++tc) {
                double* out = tv.table.data() +
                              (static_cast<size_t>(x) * tnc + static_cast<size_t>(tc)) * nv;
                const auto& id = train.contexts()[static_cast<size_t>(tc)].id;
                if (auto pc = probe.find_context(id)) {
                    const double* src = fam.table.data() +
                                        (static_cast<size_t>(x) * nc +
                                         static_cast<size_t>(*pc)) * nv;
                    std::copy(src, src + nv, out);
                } else {
                    const auto row = train_rep.decoder_row(x, tc);
                    std::copy(row.begin(), row.end(), out);
                }
            }
        }
        return tv;
    };

    wit.train_loss_q1 = decoder_table_loss(train, quotient, train_view(wit.q1));
    wit.train_loss_q2 = decoder_table_loss(train, quotient, train_view(wit.q2));
    wit.probe_loss_q1 = decoder_table_loss(probe, quotient, wit.q1);
    wit.probe_loss_q2 = decoder_table_loss(probe, quotient, wit.q2);
    if (std::abs(wit.train_loss_q1 - wit.train_loss_q2) > 1e-12) {
        throw std::logic_error("nonident_witness: train losses differ");
    }
    return wit;
}

// --- CLI job schema -------------------------------------------------------------------

BoundsJob load_bounds_job(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("bounds config is not valid JSON: ") + ex.what());
    }
    BoundsJob job;
    try {
        if (doc.contains("tau")) {
            job.inputs.tau = doc.at("tau").get<double>();
            job.inputs.c_tau = -std::log(job.inputs.tau);
        }
        if (doc.contains("c_tau")) {
            job.inputs.c_tau = doc.at("c_tau").get<double>();
            if (!doc.contains("tau")) job.inputs.tau = std::exp(-job.inputs.c_tau);
        }
        if (doc.contains("gamma")) {
            job.inputs.gamma = doc.at("gamma").get<double>();
            job.gamma_given = true;
        }
        job.inputs.eps_opt = doc.value("eps_opt", 0.0);
        if (doc.contains("m_theta")) {
            job.inputs.m_theta = doc.at("m_theta").get<long long>();
            job.m_theta_given = true;
        }
        job.inputs.alpha_conf = doc.value("alpha", 0.05);
        if (doc.contains("prior")) {
            const auto& pr = doc.at("prior");
            if (pr.is_string() && pr.get<std::string>() == "uniform") {
                job.inputs.prior = BoundInputs::Prior::Uniform;
            } else if (pr.is_object() && pr.contains("entropic")) {
                job.inputs.prior = BoundInputs::Prior::Entropic;
                job.inputs.beta0 = pr.at("entropic").get<double>();
            } else {
                throw ParseError("bounds config: prior must be \"uniform\" or "
                                 "{\"entropic\": beta0}");
            }
        }
        if (doc.contains("ecology")) {
            job.ecology_path = doc.at("ecology").get<std::string>();
        }
        if (doc.contains("partitions")) {
            EnumeratedFamily fam;
            for (const auto& p : doc.at("partitions")) {
                fam.partitions.push_back(
                    Partition::parse(p.at("labels").get<std::string>()));
                fam.excesses.push_back(p.at("excess").get<double>());
            }
            fam.prior = doc.at("world_prior").get<std::vector<double>>();
            job.family = std::move(fam);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("bounds config: bad schema: ") + ex.what());
    }
    return job;
}

SampleBound run_bounds_job(BoundsJob& job) {
    if (!job.ecology_path.empty()) {
        const Ecology e = load_ecology(job.ecology_path);
        EnumeratedFamily fam;
        fam.prior = e.prior();
        for_each_partition(e.num_worlds(), [&](const Partition& p) {
            fam.partitions.push_back(p);
            fam.excesses.push_back(decompose(e, p).excess);
            return true;
        });
        if (!job.gamma_given) {
            double gamma = std::numeric_limits<double>::infinity();
            for (double x : fam.excesses) {
                if (x > kVeridicalTol) gamma = std::min(gamma, x);
            }
            if (!std::isfinite(gamma)) {
                throw ValidationError(
                    "bounds: every encoding is veridical, gamma is undefined");
            }
            job.inputs.gamma = gamma;
            job.gamma_given = true;
        }
        job.family = std::move(fam);
    }
    if (job.family && !job.m_theta_given) {
        job.inputs.m_theta = static_cast<long long>(job.family->partitions.size());
        job.m_theta_given = true;
    }
    return sample_bound(job.inputs, job.family ? &*job.family : nullptr);
}

std::string sample_bound_to_json(const SampleBound& b, const BoundInputs& in) {
    nlohmann::ordered_json doc;
    doc["n"] = b.n;
    doc["c_tau"] = in.c_tau;
    doc["gamma"] = in.gamma;
    doc["eps_opt"] = in.eps_opt;
    doc["m_theta"] = in.m_theta;
    doc["alpha"] = in.alpha_conf;
    doc["prior"] = in.prior == BoundInputs::Prior::Uniform ? "uniform" : "entropic";
    if (in.prior == BoundInputs::Prior::Entropic) doc["beta0"] = in.beta0;
    if (!b.per_partition.empty()) {
        doc["per_partition"] = nlohmann::ordered_json::array();
        for (const auto& pp : b.per_partition) {
            doc["per_partition"].push_back({{"labels", pp.labels},
                                            {"rho", pp.rho},
                                            {"radius", pp.radius},
                                            {"veridical", pp.veridical}});
        }
    }
    return doc.dump(2);
}

}  // namespace ecolab
