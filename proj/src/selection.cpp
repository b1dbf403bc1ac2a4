#include "ecolab/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ecolab/numeric.hpp"
#include "ecolab/partition_lab.hpp"
#include "ecolab/rng.hpp"
#include "json.hpp"

namespace ecolab {

std::vector<long long> multinomial_counts(Rng& rng, long long n,
                                          std::span<const double> probs) {
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        cdf[i] = acc;
    }
    std::vector<long long> counts(probs.size(), 0);
    for (long long t = 0; t < n; ++t) {
        const double u = rng.uniform() * acc;
        size_t i = 0;
        while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
        ++counts[i];
    }
    return counts;
}

std::string genotype_key(const Genotype& g) {
    if (const auto* p = std::get_if<Partition>(&g)) return "p:" + p->to_string();
    const auto& r = std::get<Recipe>(g);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "r:%.17g:", r.alpha);
    return buf + r.zeta;
}

double price_delta(std::span<const double> freqs, std::span<const double> fitness,
                   std::span<const double> trait) {
    if (freqs.size() != fitness.size() || freqs.size() != trait.size()) {
        throw ValidationError("price_delta: length mismatch");
    }
    double mean_f = 0.0, mean_t = 0.0, mean_ft = 0.0;
    for (size_t i = 0; i < freqs.size(); ++i) {
        mean_f += freqs[i] * fitness[i];
        mean_t += freqs[i] * trait[i];
        mean_ft += freqs[i] * fitness[i] * trait[i];
    }
    if (!(mean_f > 0.0)) throw ValidationError("price_delta: zero mean fitness");
    return (mean_ft - mean_f * mean_t) / mean_f;
}

namespace {

void check_population(const Population& pop) {
    if (pop.genotypes.empty() || pop.genotypes.size() != pop.freqs.size()) {
        throw ValidationError("population: genotype/frequency length mismatch");
    }
    double sum = 0.0;
    for (double x : pop.freqs) {
        if (x < 0.0) throw ValidationError("population: negative frequency");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ValidationError("population: frequencies must sum to 1 within 1e-12");
    }
}

double reflect_unit(double x) {
    while (x < 0.0 || x > 1.0) {
        if (x < 0.0) x = -x;
        if (x > 1.0) x = 2.0 - x;
    }
    return x;
}

// Applies the kernel to one sampled offspring.
Genotype mutate(const Genotype& g, const MutationKernel& kernel, Rng& rng) {
    if (const auto* p = std::get_if<Partition>(&g)) {
        const double u = rng.uniform();
        if (u < kernel.split) {
            const auto targets = p->split_neighbors();
            if (!targets.empty()) return targets[static_cast<size_t>(
                rng.uniform_int(static_cast<int>(targets.size())))];
            return g;  // no legal split: stay
        }
        if (u < kernel.split + kernel.merge) {
            const auto targets = p->merge_neighbors();
            if (!targets.empty()) return targets[static_cast<size_t>(
                rng.uniform_int(static_cast<int>(targets.size())))];
            return g;
        }
        return g;
    }
    const auto& r = std::get<Recipe>(g);
    if (kernel.step <= 0.0) return g;
    const double stepped = r.alpha + rng.uniform(-kernel.step, kernel.step);
    return Recipe{reflect_unit(stepped), r.zeta};
}

}  // namespace

GenerationStep wf_step(const Population& pop, std::span<const double> fitness,
                       const MutationKernel& kernel, int popsize,
                       EvolutionMode mode) {
    check_population(pop);
    if (fitness.size() != pop.genotypes.size()) {
        throw ValidationError("wf_step: fitness length mismatch");
    }
    for (double f : fitness) {
        if (f < 0.0) throw ValidationError("wf_step: negative fitness");
    }
    double total = 0.0;
    for (size_t i = 0; i < pop.freqs.size(); ++i) total += pop.freqs[i] * fitness[i];
    if (!(total > 0.0)) throw ValidationError("wf_step: all-zero fitness");

    GenerationStep step;
    const size_t k = pop.genotypes.size();
    std::vector<double> sel(k);
    for (size_t i = 0; i < k; ++i) sel[i] = pop.freqs[i] * fitness[i] / total;

    if (mode == EvolutionMode::Expectation) {
        step.parent_freqs = sel;
        // Replicator-mutator: push selected mass through the kernel exactly.
        // Requires the genotype list to be closed under one-step moves.
        std::map<std::string, size_t> index;
        for (size_t i = 0; i < k; ++i) index[genotype_key(pop.genotypes[i])] = i;
        std::vector<double> next(k, 0.0);
        for (size_t i = 0; i < k; ++i) {
            if (sel[i] == 0.0) continue;
            if (const auto* p = std::get_if<Partition>(&pop.genotypes[i])) {
                const auto splits = p->split_neighbors();
                const auto merges = p->merge_neighbors();
                double stay = 1.0 - kernel.split - kernel.merge;
                double split_mass = kernel.split, merge_mass = kernel.merge;
                if (splits.empty()) { stay += split_mass; split_mass = 0.0; }
                if (merges.empty()) { stay += merge_mass; merge_mass = 0.0; }
                next[i] += sel[i] * stay;
                for (const auto& q : splits) {
                    auto it = index.find("p:" + q.to_string());
                    if (it == index.end()) {
                        throw ValidationError(
                            "wf_step: genotype set not closed under the mutation "
                            "kernel (expectation mode needs the full lattice)");
                    }
                    next[it->second] += sel[i] * split_mass / static_cast<double>(splits.size());
                }
                for (const auto& q : merges) {
                    auto it = index.find("p:" + q.to_string());
                    if (it == index.end()) {
                        throw ValidationError(
                            "wf_step: genotype set not closed under the mutation "
                            "kernel (expectation mode needs the full lattice)");
                    }
                    next[it->second] += sel[i] * merge_mass / static_cast<double>(merges.size());
                }
            } else {
                if (kernel.step > 0.0) {
                    throw ValidationError(
                        "wf_step: expectation mode does not support trait "
                        "mutation (continuous state); use stay-only kernel");
                }
                next[i] += sel[i];
            }
        }
        step.next.genotypes = pop.genotypes;
        step.next.freqs = std::move(next);
    } else {
        if (popsize < 1) throw ValidationError("wf_step: popsize must be >= 1");
        Rng rng(mix_seed(pop.seed, pop.generation));
        const auto counts = multinomial_counts(rng, popsize, sel);
        step.parent_freqs.resize(k);
        for (size_t i = 0; i < k; ++i) {
            step.parent_freqs[i] =
                static_cast<double>(counts[i]) / static_cast<double>(popsize);
        }
        // Mutation per offspring; new genotypes extend the list.
        std::map<std::string, size_t> index;
        std::vector<Genotype> genotypes = pop.genotypes;
        for (size_t i = 0; i < k; ++i) index[genotype_key(genotypes[i])] = i;
        std::vector<long long> tally(k, 0);
        for (size_t i = 0; i < k; ++i) {
            for (long long c = 0; c < counts[i]; ++c) {
                Genotype child = mutate(genotypes[i], kernel, rng);
                const std::string key = genotype_key(child);
                auto it = index.find(key);
                if (it == index.end()) {
                    index.emplace(key, genotypes.size());
                    genotypes.push_back(std::move(child));
                    tally.push_back(1);
                } else {
                    ++tally[it->second];
                }
            }
        }
        std::vector<double> next(genotypes.size());
        for (size_t i = 0; i < genotypes.size(); ++i) {
            next[i] = static_cast<double>(tally[i]) / static_cast<double>(popsize);
        }
        step.next.genotypes = std::move(genotypes);
        step.next.freqs = std::move(next);
    }
    step.next.generation = pop.generation + 1;
    step.next.seed = pop.seed;
    return step;
}

Population wf_generation(const Population& pop, std::span<const double> fitness,
                         const MutationKernel& kernel, int popsize,
                         EvolutionMode mode) {
    return wf_step(pop, fitness, kernel, popsize, mode).next;
}

// --- run_evolution -------------------------------------------------------------

namespace {

class RiskModel {
  public:
    explicit RiskModel(const EvolutionConfig& cfg) : cfg_(cfg) {
        if (cfg.kind == EvolutionConfig::Kind::PartitionSet) {
            if (!cfg.ecology) throw ValidationError("run_evolution: missing ecology");
            max_risk_ = decompose(*cfg.ecology,
                                  Partition::all_merged(cfg.ecology->num_worlds()))
                            .excess;
        } else if (cfg.delta_form == EvolutionConfig::DeltaForm::TwoEcology) {
            if (!cfg.token_ecology || !cfg.eval_ecology) {
                throw ValidationError(
                    "run_evolution: two-ecology recipes need token and eval "
                    "ecologies");
            }
            max_risk_ = decompose(*cfg.eval_ecology,
                                  Partition::all_merged(cfg.eval_ecology->num_worlds()))
                            .excess;
        } else {
            max_risk_ = 1.0;
        }
    }

    double max_risk() const { return max_risk_; }

    double risk(const Genotype& g) {
        const std::string key = genotype_key(g);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double r = 0.0;
        if (const auto* p = std::get_if<Partition>(&g)) {
            r = decompose(*cfg_.ecology, *p).excess;
        } else {
            const auto& rec = std::get<Recipe>(g);
            if (cfg_.delta_form == EvolutionConfig::DeltaForm::Linear) {
                r = std::max(0.0, 1.0 - cfg_.linear_slope * rec.alpha);
            } else {
                const Ecology mixed =
                    expand_ecology(*cfg_.token_ecology, *cfg_.eval_ecology, rec.alpha);
                const Partition q = quotient_partition(mixed, cfg_.inject_eps);
                r = decompose(*cfg_.eval_ecology, q).excess;
            }
        }
        cache_.emplace(key, r);
        return r;
    }

    double trait(const Genotype& g) const {
        if (const auto* p = std::get_if<Partition>(&g)) {
            return complexity(*p, cfg_.ecology->prior());
        }
        return std::get<Recipe>(g).alpha;
    }

    double fitness_of_risk(double r) const {
        switch (cfg_.fitness_form) {
            case EvolutionConfig::FitnessForm::Offset:
                return cfg_.fitness_offset - r;
            case EvolutionConfig::FitnessForm::OffsetAuto:
                return 1.0 + max_risk_ - r;
            case EvolutionConfig::FitnessForm::Exp:
                return std::exp(-cfg_.exp_rate * r);
        }
        return 0.0;
    }

  private:
    const EvolutionConfig& cfg_;
    double max_risk_ = 0.0;
    std::map<std::string, double> cache_;
};

}  // namespace

Trajectory run_evolution(const EvolutionConfig& cfg) {
    if (cfg.generations < 1) throw ValidationError("run_evolution: generations >= 1");
    RiskModel model(cfg);

    Population pop;
    pop.seed = cfg.seed;
    if (cfg.kind == EvolutionConfig::Kind::PartitionSet && cfg.init_all_partitions) {
        const int n = cfg.ecology->num_worlds();
        if (n > 10) {
            throw ValidationError(
                "run_evolution: full-lattice initialization limited to N <= 10");
        }
        for (const auto& p : all_partitions(n)) pop.genotypes.emplace_back(p);
    } else {
        pop.genotypes = cfg.init_genotypes;
    }
    if (pop.genotypes.empty()) {
        throw ValidationError("run_evolution: empty initial genotype set");
    }
    if (cfg.init_freqs.empty()) {
        pop.freqs.assign(pop.genotypes.size(),
                         1.0 / static_cast<double>(pop.genotypes.size()));
    } else {
        if (cfg.init_freqs.size() != pop.genotypes.size()) {
            throw ValidationError("run_evolution: init frequencies length mismatch");
        }
        pop.freqs = cfg.init_freqs;
    }

    Trajectory traj;
    for (int g = 0; g < cfg.generations; ++g) {
        const size_t k = pop.genotypes.size();
        std::vector<double> risk(k), fit(k), trait(k);
        for (size_t i = 0; i < k; ++i) {
            risk[i] = model.risk(pop.genotypes[i]);
            trait[i] = model.trait(pop.genotypes[i]);
            fit[i] = model.fitness_of_risk(risk[i]);
            if (!(fit[i] > 0.0)) {
                throw ValidationError(
                    "run_evolution: nonpositive fitness (offset C too small)");
            }
        }

        GenerationRecord rec;
        rec.generation = pop.generation;
        for (size_t i = 0; i < k; ++i) {
            rec.mean_risk += pop.freqs[i] * risk[i];
            rec.mean_trait += pop.freqs[i] * trait[i];
        }

        const GenerationStep step =
            wf_step(pop, fit, cfg.kernel, cfg.popsize, cfg.mode);

        // Selection-stage diagnostics under the exact multinomial law of the
        // parent draw, conditional on (risk, fitness).
        double bar_f = 0.0;
        for (size_t i = 0; i < k; ++i) bar_f += pop.freqs[i] * fit[i];
        double e_sel = 0.0, e_sel2 = 0.0;
        for (size_t i = 0; i < k; ++i) {
            const double p_i = pop.freqs[i] * fit[i] / bar_f;
            e_sel += p_i * risk[i];
            e_sel2 += p_i * risk[i] * risk[i];
        }
        double parent_mean = 0.0;
        for (size_t i = 0; i < k; ++i) parent_mean += step.parent_freqs[i] * risk[i];
        rec.delta_sel = parent_mean - rec.mean_risk;
        rec.expected_delta_sel = e_sel - rec.mean_risk;
        if (cfg.mode == EvolutionMode::Expectation) {
            rec.z = 0.0;
        } else {
            const double var =
                (e_sel2 - e_sel * e_sel) / static_cast<double>(cfg.popsize);
            rec.z = var > 1e-30
                        ? (rec.delta_sel - rec.expected_delta_sel) / std::sqrt(var)
                        : std::numeric_limits<double>::quiet_NaN();
        }
        traj.records.push_back(rec);
        pop = step.next;
    }
    return traj;
}

void write_trajectory_csv(const Trajectory& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write \"" + path + "\"");
    out << "generation,mean_risk,mean_trait,delta_sel,expected_delta_sel,z\n";
    char buf[160];
    for (const auto& r : t.records) {
        std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<unsigned long long>(r.generation), r.mean_risk,
                      r.mean_trait, r.delta_sel, r.expected_delta_sel, r.z);
        out << buf;
    }
}

EvolutionConfig load_evolution_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("evolve config is not valid JSON: ") + ex.what());
    }
    EvolutionConfig cfg;
    try {
        const std::string mode = doc.value("mode", "sampled");
        if (mode == "sampled") cfg.mode = EvolutionMode::Sampled;
        else if (mode == "expectation") cfg.mode = EvolutionMode::Expectation;
        else throw ParseError("evolve config: mode must be sampled|expectation");

        const std::string kind = doc.value("genotype", "partition");
        if (kind == "partition") cfg.kind = EvolutionConfig::Kind::PartitionSet;
        else if (kind == "recipe") cfg.kind = EvolutionConfig::Kind::RecipeSet;
        else throw ParseError("evolve config: genotype must be partition|recipe");

        cfg.generations = doc.value("generations", 100);
        cfg.popsize = doc.value("popsize", 100);
        cfg.seed = doc.value("seed", 0ull);

        if (doc.contains("kernel")) {
            const auto& k = doc.at("kernel");
            cfg.kernel.split = k.value("split", 0.0);
            cfg.kernel.merge = k.value("merge", 0.0);
            cfg.kernel.step = k.value("step", 0.0);
        }
        if (doc.contains("fitness")) {
            const auto& f = doc.at("fitness");
            const std::string form = f.value("form", "offset-auto");
            if (form == "offset") {
                cfg.fitness_form = EvolutionConfig::FitnessForm::Offset;
                cfg.fitness_offset = f.at("C").get<double>();
            } else if (form == "offset-auto") {
                cfg.fitness_form = EvolutionConfig::FitnessForm::OffsetAuto;
            } else if (form == "exp") {
                cfg.fitness_form = EvolutionConfig::FitnessForm::Exp;
                cfg.exp_rate = f.value("rate", 1.0);
            } else {
                throw ParseError("evolve config: fitness form must be "
                                 "offset|offset-auto|exp");
            }
        }

        if (cfg.kind == EvolutionConfig::Kind::PartitionSet) {
            cfg.ecology = load_ecology(doc.at("ecology").get<std::string>());
            if (doc.contains("init_partitions")) {
                const auto& init = doc.at("init_partitions");
                if (init.is_string() && init.get<std::string>() == "all") {
                    cfg.init_all_partitions = true;
                } else {
                    for (const auto& s : init) {
                        cfg.init_genotypes.emplace_back(
                            Partition::parse(s.get<std::string>()));
                    }
                }
            } else {
                cfg.init_all_partitions = true;
            }
        } else {
            const std::string delta = doc.value("delta_eval", "linear");
            if (delta == "linear") {
                cfg.delta_form = EvolutionConfig::DeltaForm::Linear;
                cfg.linear_slope = doc.value("linear_slope", 1.0);
            } else if (delta == "two-ecology") {
                cfg.delta_form = EvolutionConfig::DeltaForm::TwoEcology;
                cfg.token_ecology =
                    load_ecology(doc.at("token_ecology").get<std::string>());
                cfg.eval_ecology =
                    load_ecology(doc.at("eval_ecology").get<std::string>());
                cfg.inject_eps = doc.value("inject_eps", 0.0);
            } else {
                throw ParseError("evolve config: delta_eval must be "
                                 "linear|two-ecology");
            }
            const std::string zeta = doc.value("zeta", "default");
            for (const auto& a : doc.at("init_alphas")) {
                cfg.init_genotypes.emplace_back(Recipe{a.get<double>(), zeta});
            }
        }
        if (doc.contains("init_freqs")) {
            cfg.init_freqs = doc.at("init_freqs").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("evolve config: bad schema: ") + ex.what());
    }
    return cfg;
}

// --- injection ------------------------------------------------------------------

namespace {

void check_shared_worlds(const Ecology& base, const Ecology& extra) {
    if (base.worlds() != extra.worlds()) {
        throw ValidationError("ecologies must share the same world list");
    }
}

}  // namespace

InjectionThreshold injection_threshold(const Ecology& base, const Ecology& extra,
                                       int w1, int w2, double eps) {
    if (!(eps > 0.0)) throw ValidationError("injection threshold: eps must be > 0");
    check_shared_worlds(base, extra);
    const double s0 = task_distance(base, w1, w2);
    const double s1 = task_distance(extra, w1, w2);
    InjectionThreshold out;
    if (s0 > eps) {
        out.status = InjectionThreshold::Status::AlreadyResolved;
    } else if (s1 <= eps) {
        out.status = InjectionThreshold::Status::NeverResolved;
    } else {
        out.status = InjectionThreshold::Status::Finite;
        out.alpha_star = (eps - s0) / (s1 - s0);
    }
    return out;
}

std::vector<std::pair<int, int>> rescued_set(const Ecology& base,
                                             const Ecology& extra, double alpha,
                                             double eps) {
    if (!(eps > 0.0)) throw ValidationError("rescued_set: eps must be > 0");
    if (alpha < 0.0 || alpha > 1.0) {
        throw ValidationError("rescued_set: alpha must lie in [0,1]");
    }
    check_shared_worlds(base, extra);
    std::vector<std::pair<int, int>> out;
    const int n = base.num_worlds();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double s0 = task_distance(base, i, j);
            if (s0 > eps) continue;  // not a gap pair
            const double s1 = task_distance(extra, i, j);
            const double mixed = (1.0 - alpha) * s0 + alpha * s1;
            if (mixed > eps) out.emplace_back(i, j);
        }
    }
    return out;
}

}  // namespace ecolab
