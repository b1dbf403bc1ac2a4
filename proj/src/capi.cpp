// extern-C surface over the C++ core. Exceptions map to status codes, with
// the message retained per thread for ecolab_last_error().

#include "ecolab/ecolab.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "ecolab/bounds.hpp"
#include "ecolab/ecology.hpp"
#include "ecolab/geometry.hpp"
#include "ecolab/ingest.hpp"
#include "ecolab/manifest.hpp"
#include "ecolab/partition_lab.hpp"
#include "ecolab/selection.hpp"
#include "json.hpp"

using namespace ecolab;

struct ecolab_ecology {
    Ecology impl;
};

namespace {

thread_local std::string g_last_error;

ecolab_status fail(ecolab_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
ecolab_status guard(Fn&& fn) {
    try {
        fn();
        return ECOLAB_OK;
    } catch (const ParseError& ex) {
        return fail(ECOLAB_ERR_PARSE, ex.what());
    } catch (const ValidationError& ex) {
        return fail(ECOLAB_ERR_VALIDATION, ex.what());
    } catch (const std::invalid_argument& ex) {
        return fail(ECOLAB_ERR_USAGE, ex.what());
    } catch (const std::exception& ex) {
        return fail(ECOLAB_ERR_INTERNAL, ex.what());
    }
}

Partition make_partition(const ecolab_ecology* e, const int* labels, int n) {
    if (labels == nullptr || n <= 0) {
        throw std::invalid_argument("partition labels missing");
    }
    if (e != nullptr && n != e->impl.num_worlds()) {
        throw std::invalid_argument("partition length must equal number of worlds");
    }
    return Partition(std::vector<int>(labels, labels + n));
}

std::string slurp(const char* path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(std::string("cannot open \"") + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

extern "C" {

const char* ecolab_version(void) { return kVersion; }

const char* ecolab_last_error(void) { return g_last_error.c_str(); }

void ecolab_string_free(char* s) { std::free(s); }

/* --- lifecycle --------------------------------------------------------------- */

ecolab_status ecolab_ecology_load(const char* path, ecolab_ecology** out) {
    return guard([&] {
        if (path == nullptr || out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        auto* handle = new ecolab_ecology{load_ecology(path)};
        *out = handle;
    });
}

ecolab_status ecolab_ecology_save(const ecolab_ecology* e, const char* path) {
    return guard([&] {
        if (e == nullptr || path == nullptr) throw std::invalid_argument("null argument");
        save_ecology(e->impl, path);
    });
}

void ecolab_ecology_free(ecolab_ecology* e) { delete e; }

int ecolab_ecology_num_worlds(const ecolab_ecology* e) {
    return e ? e->impl.num_worlds() : 0;
}
int ecolab_ecology_num_contexts(const ecolab_ecology* e) {
    return e ? e->impl.num_contexts() : 0;
}
int ecolab_ecology_num_tokens(const ecolab_ecology* e) {
    return e ? e->impl.num_tokens() : 0;
}

const char* ecolab_ecology_world_id(const ecolab_ecology* e, int w) {
    if (e == nullptr || w < 0 || w >= e->impl.num_worlds()) return nullptr;
    return e->impl.worlds()[static_cast<size_t>(w)].c_str();
}

ecolab_status ecolab_ecology_world_index(const ecolab_ecology* e, const char* id,
                                         int* out) {
    return guard([&] {
        if (e == nullptr || id == nullptr || out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        *out = e->impl.world_index(id);
    });
}

/* --- ecology-core ------------------------------------------------------------- */

ecolab_status ecolab_entropy_floor(const ecolab_ecology* e, double* out) {
    return guard([&] {
        if (e == nullptr || out == nullptr) throw std::invalid_argument("null argument");
        *out = entropy_floor(e->impl);
    });
}

ecolab_status ecolab_decompose(const ecolab_ecology* e, const int* labels, int n,
                               double* floor_out, double* loss_out,
                               double* excess_out) {
    return guard([&] {
        if (e == nullptr) throw std::invalid_argument("null ecology");
        const auto rep = decompose(e->impl, make_partition(e, labels, n));
        if (floor_out) *floor_out = rep.floor;
        if (loss_out) *loss_out = rep.optimal_loss;
        if (excess_out) *excess_out = rep.excess;
    });
}

ecolab_status ecolab_decompose_write_csv(const ecolab_ecology* e, const int* labels,
                                         int n, const char* csv_path) {
    return guard([&] {
        if (e == nullptr || csv_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        write_decomposition_csv(decompose(e->impl, make_partition(e, labels, n)),
                                csv_path);
    });
}

ecolab_status ecolab_task_distance(const ecolab_ecology* e, const char* w1,
                                   const char* w2, double* out) {
    return guard([&] {
        if (e == nullptr || w1 == nullptr || w2 == nullptr || out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        *out = task_distance(e->impl, std::string_view(w1), std::string_view(w2));
    });
}

ecolab_status ecolab_separation_write_csv(const ecolab_ecology* e, double tol,
                                          const char* csv_path, double* margin_out,
                                          int* has_margin) {
    return guard([&] {
        if (e == nullptr || csv_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto s = separation_structure(e->impl, tol);
        write_separation_csv(e->impl, s, csv_path);
        if (has_margin) *has_margin = s.margin.has_value() ? 1 : 0;
        if (margin_out && s.margin) *margin_out = *s.margin;
    });
}

ecolab_status ecolab_quotient(const ecolab_ecology* e, double tol, int* labels_out,
                              int* cell_count_out) {
    return guard([&] {
        if (e == nullptr || labels_out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const Partition q = quotient_partition(e->impl, tol);
        for (int i = 0; i < q.size(); ++i) labels_out[i] = q.label(i);
        if (cell_count_out) *cell_count_out = q.cell_count();
    });
}

ecolab_status ecolab_expand(const ecolab_ecology* base, const ecolab_ecology* extra,
                            double alpha, ecolab_ecology** out) {
    return guard([&] {
        if (base == nullptr || extra == nullptr || out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        *out = new ecolab_ecology{expand_ecology(base->impl, extra->impl, alpha)};
    });
}

/* --- partition-lab --------------------------------------------------------------- */

ecolab_status ecolab_complexity(const ecolab_ecology* e, const int* labels, int n,
                                double* out) {
    return guard([&] {
        if (e == nullptr || out == nullptr) throw std::invalid_argument("null argument");
        *out = complexity(make_partition(e, labels, n), e->impl.prior());
    });
}

ecolab_status ecolab_sweep_beta(const ecolab_ecology* e, const double* grid,
                                int grid_len, int force, const char* sweep_csv,
                                const char* transitions_csv) {
    return guard([&] {
        if (e == nullptr || grid == nullptr || grid_len <= 0 || sweep_csv == nullptr ||
            transitions_csv == nullptr) {
            throw std::invalid_argument("null argument");
        }
        SweepOptions opts;
        opts.force = force != 0;
        const auto path = beta_sweep(e->impl,
                                     std::vector<double>(grid, grid + grid_len), opts);
        write_sweep_csv(path, sweep_csv, transitions_csv);
    });
}

ecolab_status ecolab_rate_distortion(const ecolab_ecology* e, const double* levels,
                                     int levels_len, int force, const char* csv_path) {
    return guard([&] {
        if (e == nullptr || levels == nullptr || levels_len <= 0 || csv_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto curve = rate_distortion(
            e->impl, std::span<const double>(levels, static_cast<size_t>(levels_len)),
            force != 0);
        write_rate_distortion_csv(curve, csv_path);
    });
}

ecolab_status ecolab_beta_min(const ecolab_ecology* e, double* out, int* defined) {
    return guard([&] {
        if (e == nullptr || out == nullptr || defined == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto b = beta_min(e->impl);
        *defined = b.has_value() ? 1 : 0;
        *out = b.value_or(0.0);
    });
}

ecolab_status ecolab_min_complexity(const ecolab_ecology* e, int* labels_out,
                                    int* cell_count_out, double* istar_out) {
    return guard([&] {
        if (e == nullptr || labels_out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto r = min_complexity_veridical(e->impl);
        for (int i = 0; i < r.partition.size(); ++i) labels_out[i] = r.partition.label(i);
        if (cell_count_out) *cell_count_out = r.partition.cell_count();
        if (istar_out) *istar_out = r.istar;
    });
}

/* --- selection --------------------------------------------------------------------- */

ecolab_status ecolab_evolve(const char* config_path, uint64_t seed_override,
                            int has_seed_override, const char* trajectory_csv,
                            double summary_out[4]) {
    return guard([&] {
        if (config_path == nullptr || trajectory_csv == nullptr) {
            throw std::invalid_argument("null argument");
        }
        EvolutionConfig cfg = load_evolution_config(slurp(config_path));
        if (has_seed_override) cfg.seed = seed_override;
        const Trajectory traj = run_evolution(cfg);
        write_trajectory_csv(traj, trajectory_csv);
        if (summary_out && !traj.records.empty()) {
            summary_out[0] = traj.records.front().mean_risk;
            summary_out[1] = traj.records.back().mean_risk;
            summary_out[2] = traj.records.front().mean_trait;
            summary_out[3] = traj.records.back().mean_trait;
        }
    });
}

ecolab_status ecolab_injection_threshold(const ecolab_ecology* base,
                                         const ecolab_ecology* extra,
                                         const char* w1, const char* w2, double eps,
                                         double* alpha_star_out, int* status_out) {
    return guard([&] {
        if (base == nullptr || extra == nullptr || w1 == nullptr || w2 == nullptr ||
            status_out == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const int i = base->impl.world_index(w1);
        const int j = base->impl.world_index(w2);
        const auto t = injection_threshold(base->impl, extra->impl, i, j, eps);
        *status_out = static_cast<int>(t.status);
        if (alpha_star_out) *alpha_star_out = t.alpha_star;
    });
}

ecolab_status ecolab_rescued_write_csv(const ecolab_ecology* base,
                                       const ecolab_ecology* extra,
                                       const double* alphas, int alphas_len,
                                       double eps, const char* csv_path) {
    return guard([&] {
        if (base == nullptr || extra == nullptr || alphas == nullptr ||
            alphas_len <= 0 || csv_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        std::ofstream out(csv_path);
        if (!out) throw ParseError(std::string("cannot write \"") + csv_path + "\"");
        out << "alpha,w1,w2\n";
        char buf[32];
        for (int a = 0; a < alphas_len; ++a) {
            const auto pairs = rescued_set(base->impl, extra->impl, alphas[a], eps);
            for (const auto& [i, j] : pairs) {
                std::snprintf(buf, sizeof(buf), "%.17g", alphas[a]);
                out << buf << ',' << base->impl.worlds()[static_cast<size_t>(i)] << ','
                    << base->impl.worlds()[static_cast<size_t>(j)] << '\n';
            }
        }
    });
}

/* --- geometry ------------------------------------------------------------------------ */

ecolab_status ecolab_geometry(const ecolab_ecology* e, int weighted_centering,
                              const char* dsigma_csv, const char* kernel_csv,
                              const char* spectrum_csv, const char* embedding_csv,
                              int* rank_out, double* min_eig_out,
                              int* collapsed_rank_out) {
    return guard([&] {
        if (e == nullptr || dsigma_csv == nullptr || kernel_csv == nullptr ||
            spectrum_csv == nullptr || embedding_csv == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto rep = ecology_kernel(e->impl, weighted_centering != 0);
        write_kernel_csvs(rep, dsigma_csv, kernel_csv, spectrum_csv, embedding_csv);
        if (rank_out) *rank_out = rep.rank;
        if (min_eig_out) {
            *min_eig_out = rep.eigenvalues.empty() ? 0.0 : rep.eigenvalues.back();
        }
        if (collapsed_rank_out) {
            const Partition q = quotient_partition(e->impl, 0.0);
            const Ecology collapsed = collapse_to_quotient(e->impl, q);
            *collapsed_rank_out = ecology_kernel(collapsed).rank;
        }
    });
}

ecolab_status ecolab_knn(const char* dist_csv, const char* dhat_csv, int k,
                         const char* report_json_path, double* gamma_out,
                         int* graphs_equal_out, int* zero_margin_out) {
    return guard([&] {
        if (dist_csv == nullptr || dhat_csv == nullptr) {
            throw std::invalid_argument("null argument");
        }
        int n1 = 0, n2 = 0;
        const auto d = read_square_matrix_csv(dist_csv, &n1);
        const auto dhat = read_square_matrix_csv(dhat_csv, &n2);
        if (n1 != n2) throw ValidationError("knn: matrices have different sizes");
        const auto res = knn_stability(d, dhat, n1, k);
        if (gamma_out) *gamma_out = res.report.gamma_k;
        if (graphs_equal_out) *graphs_equal_out = res.graphs_equal ? 1 : 0;
        if (zero_margin_out) *zero_margin_out = res.report.zero_margin ? 1 : 0;
        if (report_json_path != nullptr) {
            nlohmann::ordered_json doc;
            doc["k"] = res.report.k;
            doc["gamma_k"] = res.report.gamma_k;
            doc["stable_under"] = res.report.stable_under;
            doc["zero_margin"] = res.report.zero_margin;
            doc["graphs_equal"] = res.graphs_equal;
            doc["margins"] = res.report.margins;
            std::ofstream out(report_json_path);
            if (!out) {
                throw ParseError(std::string("cannot write \"") + report_json_path + "\"");
            }
            out << doc.dump(2) << '\n';
        }
    });
}

/* --- bounds --------------------------------------------------------------------------- */

ecolab_status ecolab_bounds(const char* config_path, const char* report_json_path,
                            long long* n_out) {
    return guard([&] {
        if (config_path == nullptr) throw std::invalid_argument("null argument");
        BoundsJob job = load_bounds_job(slurp(config_path));
        const SampleBound bound = run_bounds_job(job);
        if (n_out) *n_out = bound.n;
        if (report_json_path != nullptr) {
            std::ofstream out(report_json_path);
            if (!out) {
                throw ParseError(std::string("cannot write \"") + report_json_path + "\"");
            }
            out << sample_bound_to_json(bound, job.inputs) << '\n';
        }
    });
}

ecolab_status ecolab_decoder_gap(const ecolab_ecology* e, const int* labels, int n,
                                 const char* family, double* loss_out,
                                 double* gap_out) {
    return guard([&] {
        if (e == nullptr || family == nullptr) throw std::invalid_argument("null argument");
        const Partition p = make_partition(e, labels, n);
        DecoderFamilySpec spec;
        const std::string fam(family);
        if (fam == "bayes-full") {
            spec.kind = DecoderFamilySpec::Kind::BayesFull;
        } else if (fam == "context-pooled") {
            spec.kind = DecoderFamilySpec::Kind::ContextPooled;
        } else {
            // A path to an explicit-table JSON:
            // {"cells": {"0": {"<context id>": [probs...], ...}, ...}}
            spec.kind = DecoderFamilySpec::Kind::ExplicitTable;
            spec.cells = p.cell_count();
            const int nc = e->impl.num_contexts();
            const int nv = e->impl.num_tokens();
            spec.table.assign(static_cast<size_t>(spec.cells) * nc * nv, 0.0);
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(slurp(fam.c_str()));
            } catch (const nlohmann::json::exception& ex) {
                throw ParseError(std::string("decoder table is not valid JSON: ") +
                                 ex.what());
            }
            for (int x = 0; x < spec.cells; ++x) {
                const auto& cell = doc.at("cells").at(std::to_string(x));
                for (int c = 0; c < nc; ++c) {
                    const auto row = cell.at(e->impl.contexts()[static_cast<size_t>(c)].id)
                                         .get<std::vector<double>>();
                    if (row.size() != static_cast<size_t>(nv)) {
                        throw ValidationError("decoder table row has wrong length");
                    }
                    std::copy(row.begin(), row.end(),
                              spec.table.begin() +
                                  static_cast<long>((static_cast<size_t>(x) * nc +
                                                     static_cast<size_t>(c)) * nv));
                }
            }
        }
        const auto res = decoder_gap(e->impl, p, spec);
        if (loss_out) *loss_out = res.loss;
        if (gap_out) *gap_out = res.gap;
    });
}

ecolab_status ecolab_generalist(const char* const* ecology_paths, int num_tasks,
                                const int* labels, int n, const char* csv_path,
                                double* mixture_excess_out) {
    return guard([&] {
        if (ecology_paths == nullptr || num_tasks <= 0 || csv_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        std::vector<Ecology> tasks;
        for (int t = 0; t < num_tasks; ++t) tasks.push_back(load_ecology(ecology_paths[t]));
        const Partition p = make_partition(nullptr, labels, n);
        const auto rep = generalist_specialist(tasks, p);
        std::ofstream out(csv_path);
        if (!out) throw ParseError(std::string("cannot write \"") + csv_path + "\"");
        char buf[32];
        out << "record,task,w1,w2,value\n";
        for (size_t t = 0; t < rep.per_task_excess.size(); ++t) {
            std::snprintf(buf, sizeof(buf), "%.17g", rep.per_task_excess[t]);
            out << "task_excess," << t << ",,," << buf << '\n';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", rep.mixture_excess);
        out << "mixture_excess,,,," << buf << '\n';
        for (const auto& m : rep.missed) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.bound);
            out << "missed_pair_bound," << m.task << ','
                << tasks.front().worlds()[static_cast<size_t>(m.w1)] << ','
                << tasks.front().worlds()[static_cast<size_t>(m.w2)] << ',' << buf
                << '\n';
        }
        if (mixture_excess_out) *mixture_excess_out = rep.mixture_excess;
    });
}

ecolab_status ecolab_off_ecology(const ecolab_ecology* train,
                                 const ecolab_ecology* probe, const char* w1,
                                 const char* w2, double* bound_out,
                                 double* actual_out) {
    return guard([&] {
        if (train == nullptr || probe == nullptr || w1 == nullptr || w2 == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto res = off_ecology_bound(train->impl, probe->impl,
                                           train->impl.world_index(w1),
                                           train->impl.world_index(w2));
        if (bound_out) *bound_out = res.bound;
        if (actual_out) *actual_out = res.actual;
    });
}

ecolab_status ecolab_nonident_witness(const ecolab_ecology* train,
                                      const ecolab_ecology* probe, const char* w1,
                                      const char* w2, const char* report_json_path) {
    return guard([&] {
        if (train == nullptr || probe == nullptr || w1 == nullptr || w2 == nullptr ||
            report_json_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const auto wit = nonident_witness(train->impl, probe->impl,
                                          train->impl.world_index(w1),
                                          train->impl.world_index(w2));
        nlohmann::ordered_json doc;
        doc["context_set"] = wit.context_set;
        doc["train_loss_q1"] = wit.train_loss_q1;
        doc["train_loss_q2"] = wit.train_loss_q2;
        doc["probe_loss_q1"] = wit.probe_loss_q1;
        doc["probe_loss_q2"] = wit.probe_loss_q2;
        const int nc = probe->impl.num_contexts();
        const int nv = probe->impl.num_tokens();
        for (const char* name : {"q1", "q2"}) {
            const auto& fam = std::string(name) == "q1" ? wit.q1 : wit.q2;
            nlohmann::ordered_json cells;
            for (int x = 0; x < fam.cells; ++x) {
                nlohmann::ordered_json per_cell;
                for (int c = 0; c < nc; ++c) {
                    const double* row = fam.table.data() +
                                        (static_cast<size_t>(x) * nc +
                                         static_cast<size_t>(c)) * nv;
                    per_cell[probe->impl.contexts()[static_cast<size_t>(c)].id] =
                        std::vector<double>(row, row + nv);
                }
                cells[std::to_string(x)] = std::move(per_cell);
            }
            doc[name] = {{"cells", std::move(cells)}};
        }
        std::ofstream out(report_json_path);
        if (!out) {
            throw ParseError(std::string("cannot write \"") + report_json_path + "\"");
        }
        out << doc.dump(2) << '\n';
    });
}

/* --- ingestion --------------------------------------------------------------------------- */

ecolab_status ecolab_ingest(const char* config_path, const char* ecology_out_path,
                            const char* provenance_out_path) {
    return guard([&] {
        if (config_path == nullptr || ecology_out_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const IngestJob job = load_ingest_job(slurp(config_path));
        const EmpiricalEcology emp = ingest(job.worlds, job.config);
        save_ecology(emp.ecology, ecology_out_path);
        if (provenance_out_path != nullptr) {
            std::ofstream out(provenance_out_path);
            if (!out) {
                throw ParseError(std::string("cannot write \"") + provenance_out_path +
                                 "\"");
            }
            out << provenance_to_json(emp, job.config) << '\n';
        }
    });
}

ecolab_status ecolab_probe(const char* config_path, const char* report_json_path) {
    return guard([&] {
        if (config_path == nullptr || report_json_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        const ProbeJob job = load_probe_job(slurp(config_path));
        const Ecology train = load_ecology(job.train_ecology_path);
        const ProbeResult res = off_ecology_probe(train, job.probe_worlds, job.config);
        std::ofstream out(report_json_path);
        if (!out) {
            throw ParseError(std::string("cannot write \"") + report_json_path + "\"");
        }
        out << probe_result_to_json(res) << '\n';
    });
}

/* --- validation / manifest ------------------------------------------------------------------ */

ecolab_status ecolab_validate(const char* path) {
    return guard([&] {
        if (path == nullptr) throw std::invalid_argument("null argument");
        (void)load_ecology(path);
    });
}

ecolab_status ecolab_write_manifest(const char* subcommand, const char* config_text,
                                    const char* const* input_paths, int num_inputs,
                                    uint64_t seed, int has_seed,
                                    const char* const* output_paths, int num_outputs,
                                    const char* manifest_path) {
    return guard([&] {
        if (subcommand == nullptr || manifest_path == nullptr) {
            throw std::invalid_argument("null argument");
        }
        Manifest m;
        m.subcommand = subcommand;
        m.config_hash = fnv1a64_hex(config_text ? config_text : "");
        for (int i = 0; i < num_inputs; ++i) {
            m.input_hashes.emplace_back(input_paths[i], fnv1a64_file(input_paths[i]));
        }
        m.has_seed = has_seed != 0;
        m.seed = seed;
        for (int i = 0; i < num_outputs; ++i) m.outputs.emplace_back(output_paths[i]);
        write_manifest(m, manifest_path);
    });
}

} /* extern "C" */
