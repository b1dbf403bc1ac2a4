/* ecolab C API: opaque handles plus error codes over the C++ core.
 *
 * Every function returns an ecolab_status; on failure the message naming the
 * violated invariant (or the parse problem) is available through
 * ecolab_last_error() until the next call on the same thread. Out-parameters
 * are written only on ECOLAB_OK.
 */
#ifndef ECOLAB_ECOLAB_H
#define ECOLAB_ECOLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ecolab_ecology ecolab_ecology; /* opaque */

typedef enum ecolab_status {
    ECOLAB_OK = 0,
    ECOLAB_ERR_PARSE = 1,      /* malformed file */
    ECOLAB_ERR_VALIDATION = 2, /* invariant violated; see ecolab_last_error */
    ECOLAB_ERR_USAGE = 3,      /* bad arguments */
    ECOLAB_ERR_INTERNAL = 4,
} ecolab_status;

const char* ecolab_version(void);
const char* ecolab_last_error(void);
void ecolab_string_free(char* s);

/* --- ecology lifecycle ---------------------------------------------------- */

ecolab_status ecolab_ecology_load(const char* path, ecolab_ecology** out);
ecolab_status ecolab_ecology_save(const ecolab_ecology* e, const char* path);
void ecolab_ecology_free(ecolab_ecology* e);

int ecolab_ecology_num_worlds(const ecolab_ecology* e);
int ecolab_ecology_num_contexts(const ecolab_ecology* e);
int ecolab_ecology_num_tokens(const ecolab_ecology* e);
/* Returns a pointer owned by the ecology; NULL when out of range. */
const char* ecolab_ecology_world_id(const ecolab_ecology* e, int w);
ecolab_status ecolab_ecology_world_index(const ecolab_ecology* e, const char* id,
                                         int* out);

/* --- ecology-core operations ----------------------------------------------- */

ecolab_status ecolab_entropy_floor(const ecolab_ecology* e, double* out);

/* labels: restricted-growth labels, one per world. Fills floor/loss/excess. */
ecolab_status ecolab_decompose(const ecolab_ecology* e, const int* labels, int n,
                               double* floor_out, double* loss_out,
                               double* excess_out);
ecolab_status ecolab_decompose_write_csv(const ecolab_ecology* e, const int* labels,
                                         int n, const char* csv_path);

ecolab_status ecolab_task_distance(const ecolab_ecology* e, const char* w1,
                                   const char* w2, double* out);

/* Writes all pairs; margin_out receives the separation margin when any pair
 * exceeds tol (has_margin says whether it is defined). */
ecolab_status ecolab_separation_write_csv(const ecolab_ecology* e, double tol,
                                          const char* csv_path, double* margin_out,
                                          int* has_margin);

/* labels_out must hold num_worlds ints. */
ecolab_status ecolab_quotient(const ecolab_ecology* e, double tol, int* labels_out,
                              int* cell_count_out);

ecolab_status ecolab_expand(const ecolab_ecology* base, const ecolab_ecology* extra,
                            double alpha, ecolab_ecology** out);

/* --- partition-lab ----------------------------------------------------------- */

ecolab_status ecolab_complexity(const ecolab_ecology* e, const int* labels, int n,
                                double* out);
ecolab_status ecolab_sweep_beta(const ecolab_ecology* e, const double* grid,
                                int grid_len, int force, const char* sweep_csv,
                                const char* transitions_csv);
ecolab_status ecolab_rate_distortion(const ecolab_ecology* e, const double* levels,
                                     int levels_len, int force, const char* csv_path);
ecolab_status ecolab_beta_min(const ecolab_ecology* e, double* out, int* defined);
ecolab_status ecolab_min_complexity(const ecolab_ecology* e, int* labels_out,
                                    int* cell_count_out, double* istar_out);

/* --- selection dynamics -------------------------------------------------------- */

/* Runs the JSON config at config_path; when has_seed_override is nonzero the
 * seed replaces the config's. Writes the trajectory CSV; summary values are
 * the first/last mean risk and mean trait. */
ecolab_status ecolab_evolve(const char* config_path, uint64_t seed_override,
                            int has_seed_override, const char* trajectory_csv,
                            double summary_out[4]);

/* status_out: 0 finite threshold (alpha_star valid), 1 already-resolved,
 * 2 never-resolved. */
ecolab_status ecolab_injection_threshold(const ecolab_ecology* base,
                                         const ecolab_ecology* extra,
                                         const char* w1, const char* w2, double eps,
                                         double* alpha_star_out, int* status_out);

/* One row per (alpha, rescued pair). */
ecolab_status ecolab_rescued_write_csv(const ecolab_ecology* base,
                                       const ecolab_ecology* extra,
                                       const double* alphas, int alphas_len,
                                       double eps, const char* csv_path);

/* --- geometry -------------------------------------------------------------------- */

/* Writes dsigma/kernel/spectrum/embedding CSVs. rank_out: kernel rank;
 * min_eig_out: smallest eigenvalue; collapsed_rank_out: rank after collapsing
 * worlds to quotient-cell representatives. */
ecolab_status ecolab_geometry(const ecolab_ecology* e, int weighted_centering,
                              const char* dsigma_csv, const char* kernel_csv,
                              const char* spectrum_csv, const char* embedding_csv,
                              int* rank_out, double* min_eig_out,
                              int* collapsed_rank_out);

/* dist/dhat: square CSV matrices. */
ecolab_status ecolab_knn(const char* dist_csv, const char* dhat_csv, int k,
                         const char* report_json_path, double* gamma_out,
                         int* graphs_equal_out, int* zero_margin_out);

/* --- bounds ------------------------------------------------------------------------ */

/* config: JSON file; report written as JSON; n_out receives the sample bound. */
ecolab_status ecolab_bounds(const char* config_path, const char* report_json_path,
                            long long* n_out);

/* family: "bayes-full" | "context-pooled" | path to an explicit-table JSON. */
ecolab_status ecolab_decoder_gap(const ecolab_ecology* e, const int* labels, int n,
                                 const char* family, double* loss_out,
                                 double* gap_out);

ecolab_status ecolab_generalist(const char* const* ecology_paths, int num_tasks,
                                const int* labels, int n, const char* csv_path,
                                double* mixture_excess_out);

ecolab_status ecolab_off_ecology(const ecolab_ecology* train,
                                 const ecolab_ecology* probe, const char* w1,
                                 const char* w2, double* bound_out,
                                 double* actual_out);

ecolab_status ecolab_nonident_witness(const ecolab_ecology* train,
                                      const ecolab_ecology* probe, const char* w1,
                                      const char* w2, const char* report_json_path);

/* --- corpus ingestion ----------------------------------------------------------------- */

ecolab_status ecolab_ingest(const char* config_path, const char* ecology_out_path,
                            const char* provenance_out_path);
ecolab_status ecolab_probe(const char* config_path, const char* report_json_path);

/* --- validation / manifest -------------------------------------------------------------- */

/* ECOLAB_OK when the file validates; otherwise the violated invariant is in
 * ecolab_last_error(). */
ecolab_status ecolab_validate(const char* path);

ecolab_status ecolab_write_manifest(const char* subcommand, const char* config_text,
                                    const char* const* input_paths, int num_inputs,
                                    uint64_t seed, int has_seed,
                                    const char* const* output_paths, int num_outputs,
                                    const char* manifest_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ECOLAB_ECOLAB_H */
