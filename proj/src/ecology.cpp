#include "ecolab/ecology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "ecolab/numeric.hpp"
#include "json.hpp"

namespace ecolab {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            throw ValidationError(std::string(what) + " ids must be unique (duplicate \"" +
                                  id + "\")");
        }
    }
}

}  // namespace

Ecology Ecology::create(std::vector<std::string> worlds, std::vector<double> prior,
                        std::vector<std::string> vocab, std::vector<Context> contexts,
                        std::vector<double> cond) {
    if (worlds.empty()) throw ValidationError("ecology must have at least one world");
    if (vocab.empty()) throw ValidationError("vocabulary must be nonempty");
    if (contexts.empty()) throw ValidationError("context set must be nonempty");
    if (prior.size() != worlds.size()) {
        throw ValidationError("prior length must equal number of worlds");
    }
    check_unique(worlds, "world");
    check_unique(vocab, "token");
    {
        std::vector<std::string> ids;
        ids.reserve(contexts.size());
        for (const auto& c : contexts) ids.push_back(c.id);
        check_unique(ids, "context");
    }

    for (size_t w = 0; w < worlds.size(); ++w) {
        if (!(prior[w] > 0.0)) {
            throw ValidationError("prior must be strictly positive (world \"" +
                                  worlds[w] + "\")");
        }
    }
    double prior_sum = std::accumulate(prior.begin(), prior.end(), 0.0);
    if (std::abs(prior_sum - 1.0) > kProbTol) {
        throw ValidationError("prior must sum to 1 within 1e-9 (sum = " +
                              std::to_string(prior_sum) + ")");
    }
    double mass_sum = 0.0;
    for (const auto& c : contexts) {
        if (c.mass < 0.0) {
            throw ValidationError("context mass must be nonnegative (context \"" +
                                  c.id + "\")");
        }
        mass_sum += c.mass;
    }
    if (std::abs(mass_sum - 1.0) > kProbTol) {
        throw ValidationError("context masses must sum to 1 within 1e-9 (sum = " +
                              std::to_string(mass_sum) + ")");
    }

    const size_t nw = worlds.size(), nc = contexts.size(), nv = vocab.size();
    if (cond.size() != nw * nc * nv) {
        throw ValidationError("conditional table has wrong size");
    }
    for (size_t w = 0; w < nw; ++w) {
        for (size_t c = 0; c < nc; ++c) {
            double row_sum = 0.0;
            for (size_t v = 0; v < nv; ++v) {
                const double x = cond[(w * nc + c) * nv + v];
                if (x < 0.0) {
                    throw ValidationError("conditional row (" + worlds[w] + ", " +
                                          contexts[c].id + ") has a negative entry");
                }
                row_sum += x;
            }
            if (std::abs(row_sum - 1.0) > kProbTol) {
                throw ValidationError("conditional row (" + worlds[w] + ", " +
                                      contexts[c].id + ") sums to " +
                                      std::to_string(row_sum) +
                                      ", must be 1 within 1e-9");
            }
        }
    }

    // Exact renormalization so downstream identities hold to ~1e-10.
    for (double& x : prior) x /= prior_sum;
    for (auto& c : contexts) c.mass /= mass_sum;
    for (size_t w = 0; w < nw; ++w) {
        for (size_t c = 0; c < nc; ++c) {
            double row_sum = 0.0;
            for (size_t v = 0; v < nv; ++v) row_sum += cond[(w * nc + c) * nv + v];
            for (size_t v = 0; v < nv; ++v) cond[(w * nc + c) * nv + v] /= row_sum;
        }
    }

    Ecology e;
    e.worlds_ = std::move(worlds);
    e.prior_ = std::move(prior);
    e.vocab_ = std::move(vocab);
    e.contexts_ = std::move(contexts);
    e.cond_ = std::move(cond);
    return e;
}

int Ecology::world_index(std::string_view id) const {
    if (auto i = find_world(id)) return *i;
    throw ValidationError("unknown world id \"" + std::string(id) + "\"");
}

std::optional<int> Ecology::find_world(std::string_view id) const {
    for (size_t i = 0; i < worlds_.size(); ++i) {
        if (worlds_[i] == id) return static_cast<int>(i);
    }
    return std::nullopt;
}

std::optional<int> Ecology::find_context(std::string_view id) const {
    for (size_t i = 0; i < contexts_.size(); ++i) {
        if (contexts_[i].id == id) return static_cast<int>(i);
    }
    return std::nullopt;
}

// --- JSON schema -------------------------------------------------------------

Ecology parse_ecology_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("ecology file is not valid JSON: ") + ex.what());
    }
    try {
        if (!doc.contains("version") || doc["version"].get<int>() != 1) {
            throw ParseError("ecology file: unsupported or missing version (want 1)");
        }
        std::vector<std::string> worlds;
        std::vector<double> prior;
        for (const auto& w : doc.at("worlds")) {
            worlds.push_back(w.at("id").get<std::string>());
            prior.push_back(w.at("prior").get<double>());
        }
        std::vector<std::string> vocab =
            doc.at("vocab").get<std::vector<std::string>>();
        std::vector<Context> contexts;
        for (const auto& c : doc.at("contexts")) {
            contexts.push_back({c.at("id").get<std::string>(), c.at("mass").get<double>()});
        }
        const auto& cond = doc.at("cond");
        const size_t nv = vocab.size();
        std::vector<double> table(worlds.size() * contexts.size() * nv, 0.0);
        for (size_t w = 0; w < worlds.size(); ++w) {
            if (!cond.contains(worlds[w])) {
                throw ParseError("ecology file: cond is missing world \"" + worlds[w] + "\"");
            }
            const auto& per_world = cond.at(worlds[w]);
            for (size_t c = 0; c < contexts.size(); ++c) {
                if (!per_world.contains(contexts[c].id)) {
                    throw ParseError("ecology file: cond[" + worlds[w] +
                                     "] is missing context \"" + contexts[c].id + "\"");
                }
                const auto row = per_world.at(contexts[c].id).get<std::vector<double>>();
                if (row.size() != nv) {
                    throw ParseError("ecology file: row (" + worlds[w] + ", " +
                                     contexts[c].id + ") has wrong length");
                }
                std::copy(row.begin(), row.end(),
                          table.begin() + static_cast<long>((w * contexts.size() + c) * nv));
            }
        }
        return Ecology::create(std::move(worlds), std::move(prior), std::move(vocab),
                               std::move(contexts), std::move(table));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("ecology file: bad schema: ") + ex.what());
    }
}

Ecology load_ecology(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open ecology file \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_ecology_json(buf.str());
}

std::string ecology_to_json(const Ecology& e) {
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    doc["worlds"] = nlohmann::ordered_json::array();
    for (int w = 0; w < e.num_worlds(); ++w) {
        doc["worlds"].push_back({{"id", e.worlds()[static_cast<size_t>(w)]},
                                 {"prior", e.prior_of(w)}});
    }
    doc["vocab"] = e.vocab();
    doc["contexts"] = nlohmann::ordered_json::array();
    for (const auto& c : e.contexts()) {
        doc["contexts"].push_back({{"id", c.id}, {"mass", c.mass}});
    }
    nlohmann::ordered_json cond;
    for (int w = 0; w < e.num_worlds(); ++w) {
        nlohmann::ordered_json per_world;
        for (int c = 0; c < e.num_contexts(); ++c) {
            const auto row = e.row(w, c);
            per_world[e.contexts()[static_cast<size_t>(c)].id] =
                std::vector<double>(row.begin(), row.end());
        }
        cond[e.worlds()[static_cast<size_t>(w)]] = std::move(per_world);
    }
    doc["cond"] = std::move(cond);
    return doc.dump(2);
}

void save_ecology(const Ecology& e, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write ecology file \"" + path + "\"");
    out << ecology_to_json(e) << '\n';
}

// --- decomposition -----------------------------------------------------------

double entropy_floor(const Ecology& e) {
    double floor = 0.0;
    for (int w = 0; w < e.num_worlds(); ++w) {
        for (int c = 0; c < e.num_contexts(); ++c) {
            floor += e.prior_of(w) * e.context_mass(c) * entropy(e.row(w, c));
        }
    }
    return floor;
}

DecompositionReport decompose(const Ecology& e, const Partition& p) {
    if (p.size() != e.num_worlds()) {
        throw ValidationError("partition length must equal number of worlds");
    }
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();
    const auto cells = p.cells();
    const int k = p.cell_count();

    DecompositionReport rep;
    rep.floor = entropy_floor(e);
    rep.cells = k;
    rep.num_contexts = nc;
    rep.num_tokens = nv;
    rep.decoder.assign(static_cast<size_t>(k) * nc * nv, 0.0);
    rep.per_cell.resize(static_cast<size_t>(k));

    for (int x = 0; x < k; ++x) {
        const auto& members = cells[static_cast<size_t>(x)];
        double pi_x = 0.0;
        for (int w : members) pi_x += e.prior_of(w);
        auto& term = rep.per_cell[static_cast<size_t>(x)];
        term.cell = x;
        term.mass = pi_x;

        // Cell-average rows bar P_x(.|c).
        for (int c = 0; c < nc; ++c) {
            double* bar = rep.decoder.data() +
                          (static_cast<size_t>(x) * nc + static_cast<size_t>(c)) * nv;
            for (int w : members) {
                const double a = e.prior_of(w) / pi_x;
                const auto row = e.row(w, c);
                for (int v = 0; v < nv; ++v) bar[v] += a * row[static_cast<size_t>(v)];
            }
        }

        // E_c[JS_{alpha_x}] = sum_c mass(c) sum_w alpha_x(w) KL(P_w || bar P_x).
        double js = 0.0;
        for (int c = 0; c < nc; ++c) {
            const double mc = e.context_mass(c);
            if (mc <= 0.0) continue;
            const auto bar = rep.decoder_row(x, c);
            double js_c = 0.0;
            for (int w : members) {
                const double a = e.prior_of(w) / pi_x;
                js_c += a * kl_divergence(e.row(w, c), bar);
            }
            js += mc * js_c;
        }
        term.js = js;
        term.contribution = pi_x * js;
        rep.excess += term.contribution;
    }
    rep.optimal_loss = rep.floor + rep.excess;
    return rep;
}

// --- distances / quotient ----------------------------------------------------

double task_distance(const Ecology& e, int w1, int w2) {
    if (w1 < 0 || w1 >= e.num_worlds() || w2 < 0 || w2 >= e.num_worlds()) {
        throw ValidationError("unknown world index");
    }
    double s = 0.0;
    for (int c = 0; c < e.num_contexts(); ++c) {
        const double mc = e.context_mass(c);
        if (mc <= 0.0) continue;
        s += mc * squared_hellinger(e.row(w1, c), e.row(w2, c));
    }
    return s;
}

double task_distance(const Ecology& e, std::string_view w1, std::string_view w2) {
    return task_distance(e, e.world_index(w1), e.world_index(w2));
}

std::vector<double> distance_matrix(const Ecology& e) {
    const int n = e.num_worlds();
    std::vector<double> d(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double s = task_distance(e, i, j);
            d[static_cast<size_t>(i) * n + j] = s;
            d[static_cast<size_t>(j) * n + i] = s;
        }
    }
    return d;
}

SeparationStructure separation_structure(const Ecology& e, double tol) {
    if (tol < 0.0) throw ValidationError("separation tolerance must be >= 0");
    SeparationStructure out;
    const int n = e.num_worlds();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double s = task_distance(e, i, j);
            out.pairs.push_back({i, j, s});
            if (s > tol) out.separated.push_back({i, j, s});
        }
    }
    for (const auto& pr : out.separated) {
        if (!out.margin || pr.sigma2 < *out.margin) out.margin = pr.sigma2;
    }
    return out;
}

Partition quotient_partition(const Ecology& e, double tol) {
    if (tol < 0.0) throw ValidationError("quotient tolerance must be >= 0");
    const int n = e.num_worlds();
    const auto d = distance_matrix(e);

    // Union the relation {sigma2 <= tol}, then verify it was transitive.
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (d[static_cast<size_t>(i) * n + j] <= tol) {
                parent[static_cast<size_t>(find(i))] = find(j);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (find(i) == find(j) && d[static_cast<size_t>(i) * n + j] > tol) {
                throw ValidationError(
                    "non-transitive tolerance relation: worlds \"" +
                    e.worlds()[static_cast<size_t>(i)] + "\" and \"" +
                    e.worlds()[static_cast<size_t>(j)] +
                    "\" are chained through the tolerance but exceed it directly; "
                    "lower tol or use 0");
            }
        }
    }
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = find(i);
    return Partition::canonical(labels);
}

Ecology expand_ecology(const Ecology& base, const Ecology& extra, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw ValidationError("mixture weight alpha must lie in [0,1]");
    }
    if (base.worlds() != extra.worlds()) {
        throw ValidationError("expand_ecology: world lists must match");
    }
    if (base.vocab() != extra.vocab()) {
        throw ValidationError("expand_ecology: vocabularies must match");
    }
    for (int w = 0; w < base.num_worlds(); ++w) {
        if (std::abs(base.prior_of(w) - extra.prior_of(w)) > kProbTol) {
            throw ValidationError("expand_ecology: priors must match");
        }
    }

    const int nv = base.num_tokens();
    std::vector<Context> contexts;
    std::set<std::string> used;
    for (const auto& c : base.contexts()) {
        contexts.push_back({c.id, (1.0 - alpha) * c.mass});
        used.insert(c.id);
    }
    for (const auto& c : extra.contexts()) {
        std::string id = c.id;
        int suffix = 0;
        while (used.count(id)) id = c.id + "~" + std::to_string(++suffix);
        used.insert(id);
        contexts.push_back({id, alpha * c.mass});
    }

    const size_t nc = contexts.size();
    std::vector<double> cond(static_cast<size_t>(base.num_worlds()) * nc * nv, 0.0);
    for (int w = 0; w < base.num_worlds(); ++w) {
        size_t c_out = 0;
        for (int c = 0; c < base.num_contexts(); ++c, ++c_out) {
            const auto row = base.row(w, c);
            std::copy(row.begin(), row.end(),
                      cond.begin() + static_cast<long>((static_cast<size_t>(w) * nc + c_out) * nv));
        }
        for (int c = 0; c < extra.num_contexts(); ++c, ++c_out) {
            const auto row = extra.row(w, c);
            std::copy(row.begin(), row.end(),
                      cond.begin() + static_cast<long>((static_cast<size_t>(w) * nc + c_out) * nv));
        }
    }
    return Ecology::create(base.worlds(), base.prior(), base.vocab(),
                           std::move(contexts), std::move(cond));
}

namespace {

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

void write_decomposition_csv(const DecompositionReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write \"" + path + "\"");
    out << "quantity,cell,value\n";
    out << "floor,," << fmt17(rep.floor) << '\n';
    out << "optimal_loss,," << fmt17(rep.optimal_loss) << '\n';
    out << "excess,," << fmt17(rep.excess) << '\n';
    for (const auto& term : rep.per_cell) {
        out << "cell_mass," << term.cell << ',' << fmt17(term.mass) << '\n';
        out << "cell_js," << term.cell << ',' << fmt17(term.js) << '\n';
        out << "cell_contribution," << term.cell << ',' << fmt17(term.contribution)
            << '\n';
    }
}

void write_separation_csv(const Ecology& e, const SeparationStructure& s,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write \"" + path + "\"");
    out << "w1,w2,sigma2,separated\n";
    for (const auto& pr : s.pairs) {
        bool sep = false;
        for (const auto& q : s.separated) {
            if (q.w1 == pr.w1 && q.w2 == pr.w2) {
                sep = true;
                break;
            }
        }
        out << e.worlds()[static_cast<size_t>(pr.w1)] << ','
            << e.worlds()[static_cast<size_t>(pr.w2)] << ',' << fmt17(pr.sigma2)
            << ',' << (sep ? 1 : 0) << '\n';
    }
}

Ecology collapse_to_quotient(const Ecology& e, const Partition& p) {
    if (p.size() != e.num_worlds()) {
        throw ValidationError("partition length must equal number of worlds");
    }
    const auto rep = decompose(e, p);
    const int k = p.cell_count();
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();
    std::vector<std::string> worlds;
    std::vector<double> prior;
    for (int x = 0; x < k; ++x) {
        worlds.push_back("cell" + std::to_string(x));
        prior.push_back(rep.per_cell[static_cast<size_t>(x)].mass);
    }
    std::vector<double> cond(static_cast<size_t>(k) * nc * nv);
    std::copy(rep.decoder.begin(), rep.decoder.end(), cond.begin());
    return Ecology::create(std::move(worlds), std::move(prior), e.vocab(),
                           e.contexts(), std::move(cond));
}

}  // namespace ecolab
