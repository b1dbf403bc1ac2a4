#include "ecolab/partition_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "ecolab/numeric.hpp"

namespace ecolab {

namespace {

// Cell-average rows bar P_S(.|c) for a set of worlds, flattened (context, token).
std::vector<double> cell_average_rows(const Ecology& e, std::span<const int> members) {
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();
    double mass = 0.0;
    for (int w : members) mass += e.prior_of(w);
    std::vector<double> rows(static_cast<size_t>(nc) * nv, 0.0);
    for (int w : members) {
        const double a = e.prior_of(w) / mass;
        for (int c = 0; c < nc; ++c) {
            const auto row = e.row(w, c);
            double* out = rows.data() + static_cast<size_t>(c) * nv;
            for (int v = 0; v < nv; ++v) out[v] += a * row[static_cast<size_t>(v)];
        }
    }
    return rows;
}

// E_c[JS_lambda(bar P_A, bar P_B)] from two flattened (context, token) tables.
double pair_gain(const Ecology& e, const std::vector<double>& rows_a,
                 const std::vector<double>& rows_b, double lambda) {
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();
    double gain = 0.0;
    for (int c = 0; c < nc; ++c) {
        const double mc = e.context_mass(c);
        if (mc <= 0.0) continue;
        std::span<const double> pa{rows_a.data() + static_cast<size_t>(c) * nv,
                                   static_cast<size_t>(nv)};
        std::span<const double> pb{rows_b.data() + static_cast<size_t>(c) * nv,
                                   static_cast<size_t>(nv)};
        gain += mc * weighted_js_pair(lambda, pa, pb);
    }
    return gain;
}

double cell_mass(const Ecology& e, std::span<const int> members) {
    double m = 0.0;
    for (int w : members) m += e.prior_of(w);
    return m;
}

struct GainCost {
    double gain = 0.0;
    double lambda = 0.0;
    double cost = 0.0;  // h(lambda)
};

GainCost bipartition_gain(const Ecology& e, std::span<const int> side_a,
                          std::span<const int> side_b) {
    GainCost gc;
    const double pi_a = cell_mass(e, side_a);
    const double pi_b = cell_mass(e, side_b);
    gc.lambda = pi_a / (pi_a + pi_b);
    gc.cost = binary_entropy(gc.lambda);
    gc.gain = pair_gain(e, cell_average_rows(e, side_a),
                        cell_average_rows(e, side_b), gc.lambda);
    return gc;
}

}  // namespace

double complexity(const Partition& p, std::span<const double> prior) {
    if (prior.size() != static_cast<size_t>(p.size())) {
        throw ValidationError("complexity: prior length must match partition");
    }
    std::vector<double> masses(static_cast<size_t>(p.cell_count()), 0.0);
    for (int i = 0; i < p.size(); ++i) {
        masses[static_cast<size_t>(p.label(i))] += prior[static_cast<size_t>(i)];
    }
    return entropy(masses);
}

ObjectiveEvaluation evaluate_objective(const Ecology& e, const Partition& p,
                                       double beta) {
    if (beta < 0.0) throw ValidationError("beta must be >= 0");
    const auto rep = decompose(e, p);
    ObjectiveEvaluation out{p, beta, rep.optimal_loss,
                            complexity(p, e.prior()), 0.0};
    out.objective = out.loss + beta * out.complexity;
    return out;
}

SplitReport split_report(const Ecology& e, const Partition& p, int cell,
                         std::span<const int> side_a) {
    if (p.size() != e.num_worlds()) {
        throw ValidationError("partition length must equal number of worlds");
    }
    if (cell < 0 || cell >= p.cell_count()) {
        throw ValidationError("split_report: no such cell");
    }
    const auto cells = p.cells();
    const auto& members = cells[static_cast<size_t>(cell)];
    std::vector<char> in_a(static_cast<size_t>(p.size()), 0);
    for (int w : side_a) {
        if (w < 0 || w >= p.size() || p.label(w) != cell) {
            throw ValidationError("split_report: subset not contained in the cell");
        }
        in_a[static_cast<size_t>(w)] = 1;
    }
    SplitReport rep;
    rep.cell = cell;
    for (int w : members) {
        (in_a[static_cast<size_t>(w)] ? rep.side_a : rep.side_b).push_back(w);
    }
    if (rep.side_a.empty() || rep.side_b.empty()) {
        throw ValidationError("split_report: subset must be a nonempty proper subset");
    }
    const GainCost gc = bipartition_gain(e, rep.side_a, rep.side_b);
    rep.lambda = gc.lambda;
    rep.gain = gc.gain;
    rep.cost_rate = gc.cost;
    rep.beta_star = gc.cost > 0.0 ? gc.gain / gc.cost : 0.0;
    return rep;
}

LocalMinReport local_min_check(const Ecology& e, const Partition& p, double beta) {
    if (beta < 0.0) throw ValidationError("beta must be >= 0");
    if (p.size() != e.num_worlds()) {
        throw ValidationError("partition length must equal number of worlds");
    }
    LocalMinReport out;
    const auto cells = p.cells();

    // Split stability: no bipartition of a cell may strictly beat beta*h.
    for (int c = 0; c < p.cell_count(); ++c) {
        const auto& members = cells[static_cast<size_t>(c)];
        const size_t s = members.size();
        if (s < 2) continue;
        if (s > 13) {
            throw ValidationError("local_min_check: cell too large to enumerate "
                                  "bipartitions (size > 13)");
        }
        const std::uint64_t half = 1ull << (s - 1);
        for (std::uint64_t mask = 0; mask + 1 < half; ++mask) {
            std::vector<int> side_a{members[0]};
            std::vector<int> side_b;
            for (size_t i = 1; i < s; ++i) {
                if (mask & (1ull << (i - 1))) side_a.push_back(members[i]);
                else side_b.push_back(members[i]);
            }
            const GainCost gc = bipartition_gain(e, side_a, side_b);
            if (gc.gain > beta * gc.cost) {
                out.violating_moves.push_back(
                    {false, c, c, side_a, gc.gain, beta * gc.cost});
            }
        }
    }

    // Merge stability: every pair of cells must keep gain >= beta*h.
    for (int a = 0; a < p.cell_count(); ++a) {
        for (int b = a + 1; b < p.cell_count(); ++b) {
            const GainCost gc = bipartition_gain(e, cells[static_cast<size_t>(a)],
                                                 cells[static_cast<size_t>(b)]);
            if (gc.gain < beta * gc.cost) {
                out.violating_moves.push_back({true, a, b, {}, gc.gain, beta * gc.cost});
            }
        }
    }
    out.is_local_min = out.violating_moves.empty();
    return out;
}

namespace {

struct LatticePoint {
    Partition partition;
    double loss = 0.0;
    double complexity = 0.0;
};

std::vector<LatticePoint> enumerate_lattice(const Ecology& e, bool force) {
    std::vector<LatticePoint> points;
    for_each_partition(
        e.num_worlds(),
        [&](const Partition& p) {
            const auto rep = decompose(e, p);
            points.push_back({p, rep.optimal_loss, complexity(p, e.prior())});
            return true;
        },
        force);
    return points;
}

std::vector<size_t> optimum_set(const std::vector<LatticePoint>& points,
                                double beta, double tie_tol) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
        best = std::min(best, pt.loss + beta * pt.complexity);
    }
    std::vector<size_t> out;
    for (size_t i = 0; i < points.size(); ++i) {
        if (points[i].loss + beta * points[i].complexity <= best + tie_tol) {
            out.push_back(i);
        }
    }
    return out;
}

// Does a one-step merge of some partition in `from` yield some partition in
// `to` with threshold beta* inside [lo, hi] (widened by slack)?
bool transition_is_local(const Ecology& e, const std::vector<LatticePoint>& points,
                         const std::vector<size_t>& from, const std::vector<size_t>& to,
                         double lo, double hi, double slack, double* beta_star_out) {
    for (size_t i1 : from) {
        const Partition& p1 = points[i1].partition;
        for (size_t i2 : to) {
            const Partition& p2 = points[i2].partition;
            if (p2.cell_count() != p1.cell_count() - 1) continue;
            if (!p1.refines(p2)) continue;
            // Identify the merged pair: the p2-cell containing two p1-cells.
            std::map<int, std::vector<int>> fibers;  // p2 cell -> p1 cells
            for (int c1 = 0; c1 < p1.cell_count(); ++c1) {
                for (int w = 0; w < p1.size(); ++w) {
                    if (p1.label(w) == c1) {
                        fibers[p2.label(w)].push_back(c1);
                        break;
                    }
                }
            }
            for (const auto& [c2, c1s] : fibers) {
                if (c1s.size() != 2) continue;
                const auto cells1 = p1.cells();
                const GainCost gc = bipartition_gain(
                    e, cells1[static_cast<size_t>(c1s[0])],
                    cells1[static_cast<size_t>(c1s[1])]);
                const double beta_star = gc.cost > 0.0 ? gc.gain / gc.cost : 0.0;
                if (beta_star >= lo - slack && beta_star <= hi + slack) {
                    if (beta_star_out) *beta_star_out = beta_star;
                    return true;
                }
            }
        }
    }
    return false;
}

void refine_transitions(const Ecology& e, const std::vector<LatticePoint>& points,
                        double lo, double hi, std::vector<size_t> set_lo,
                        std::vector<size_t> set_hi, const SweepOptions& opts,
                        std::vector<SweepTransition>& out) {
    if (set_lo == set_hi) return;
    if (hi - lo <= opts.refine_width) {
        SweepTransition tr;
        tr.beta_lo = lo;
        tr.beta_hi = hi;
        for (size_t i : set_lo) tr.from.push_back(points[i].partition.to_string());
        for (size_t i : set_hi) tr.to.push_back(points[i].partition.to_string());
        tr.predicted_local =
            transition_is_local(e, points, set_lo, set_hi, lo, hi,
                                opts.refine_width, &tr.predicted_beta_star);
        out.push_back(std::move(tr));
        return;
    }
    const double mid = 0.5 * (lo + hi);
    auto set_mid = optimum_set(points, mid, opts.tie_tol);
    if (set_mid != set_lo) refine_transitions(e, points, lo, mid, set_lo, set_mid, opts, out);
    if (set_mid != set_hi) refine_transitions(e, points, mid, hi, set_mid, set_hi, opts, out);
}

}  // namespace

SweepPath beta_sweep(const Ecology& e, std::vector<double> grid,
                     const SweepOptions& opts) {
    if (grid.empty()) throw ValidationError("beta_sweep: empty beta grid");
    for (double b : grid) {
        if (b < 0.0) throw ValidationError("beta_sweep: beta values must be >= 0");
    }
    std::sort(grid.begin(), grid.end());
    const auto points = enumerate_lattice(e, opts.force);

    SweepPath path;
    std::vector<std::vector<size_t>> sets;
    for (double beta : grid) {
        auto set = optimum_set(points, beta, opts.tie_tol);
        SweepPoint pt;
        pt.beta = beta;
        for (size_t i : set) {
            ObjectiveEvaluation ev{points[i].partition, beta, points[i].loss,
                                   points[i].complexity, 0.0};
            ev.objective = ev.loss + beta * ev.complexity;
            pt.optima.push_back(std::move(ev));
        }
        path.points.push_back(std::move(pt));
        sets.push_back(std::move(set));
    }
    for (size_t g = 0; g + 1 < grid.size(); ++g) {
        refine_transitions(e, points, grid[g], grid[g + 1], sets[g], sets[g + 1],
                           opts, path.transitions);
    }
    return path;
}

MinComplexityResult min_complexity_veridical(const Ecology& e) {
    Partition q = quotient_partition(e, 0.0);
    const double istar = complexity(q, e.prior());
    return {std::move(q), istar};
}

std::vector<RateDistortionPoint> rate_distortion(const Ecology& e,
                                                 std::span<const double> levels,
                                                 bool force) {
    const auto points = enumerate_lattice(e, force);
    const double floor = entropy_floor(e);
    std::vector<RateDistortionPoint> curve;
    for (double level : levels) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pt : points) {
            if (pt.complexity <= level + 1e-9) {
                best = std::min(best, pt.loss - floor);
            }
        }
        if (!std::isfinite(best)) {
            // Complexity 0 (all-merged) is always feasible for level >= 0.
            best = decompose(e, Partition::all_merged(e.num_worlds())).excess;
        }
        curve.push_back({level, std::max(best, 0.0)});
    }
    return curve;
}

std::optional<double> beta_min(const Ecology& e) {
    const Partition q = quotient_partition(e, 0.0);
    if (q.cell_count() < 2) return std::nullopt;
    const auto cells = q.cells();
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.cell_count(); ++a) {
        for (int b = a + 1; b < q.cell_count(); ++b) {
            const GainCost gc = bipartition_gain(e, cells[static_cast<size_t>(a)],
                                                 cells[static_cast<size_t>(b)]);
            if (gc.cost > 0.0) best = std::min(best, gc.gain / gc.cost);
        }
    }
    return best;
}

// --- CSV emitters -------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

void write_sweep_csv(const SweepPath& path, const std::string& sweep_path,
                     const std::string& transitions_path) {
    std::ofstream sweep(sweep_path);
    if (!sweep) throw ParseError("cannot write \"" + sweep_path + "\"");
    sweep << "beta,tie_rank,labels,loss,complexity,objective\n";
    for (const auto& pt : path.points) {
        int rank = 0;
        for (const auto& ev : pt.optima) {
            sweep << fmt(pt.beta) << ',' << rank++ << ",\"" << ev.partition.to_string()
                  << "\"," << fmt(ev.loss) << ',' << fmt(ev.complexity) << ','
                  << fmt(ev.objective) << '\n';
        }
    }
    std::ofstream tr(transitions_path);
    if (!tr) throw ParseError("cannot write \"" + transitions_path + "\"");
    tr << "beta_lo,beta_hi,from,to,local,predicted_beta_star\n";
    for (const auto& t : path.transitions) {
        std::string from, to;
        for (size_t i = 0; i < t.from.size(); ++i) {
            if (i) from += ' ';
            from += t.from[i];
        }
        for (size_t i = 0; i < t.to.size(); ++i) {
            if (i) to += ' ';
            to += t.to[i];
        }
        tr << fmt(t.beta_lo) << ',' << fmt(t.beta_hi) << ",\"" << from << "\",\""
           << to << "\"," << (t.predicted_local ? 1 : 0) << ','
           << (t.predicted_local ? fmt(t.predicted_beta_star) : std::string()) << '\n';
    }
}

void write_rate_distortion_csv(const std::vector<RateDistortionPoint>& curve,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write \"" + path + "\"");
    out << "complexity,excess\n";
    for (const auto& pt : curve) {
        out << fmt(pt.level) << ',' << fmt(pt.excess) << '\n';
    }
}

void write_split_report_csv(const SplitReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write \"" + path + "\"");
    out << "cell,side_a,side_b,lambda,gain,cost_rate,beta_star\n";
    std::string a, b;
    for (size_t i = 0; i < rep.side_a.size(); ++i) {
        if (i) a += ' ';
        a += std::to_string(rep.side_a[i]);
    }
    for (size_t i = 0; i < rep.side_b.size(); ++i) {
        if (i) b += ' ';
        b += std::to_string(rep.side_b[i]);
    }
    out << rep.cell << ",\"" << a << "\",\"" << b << "\"," << fmt(rep.lambda) << ','
        << fmt(rep.gain) << ',' << fmt(rep.cost_rate) << ',' << fmt(rep.beta_star)
        << '\n';
}

}  // namespace ecolab
