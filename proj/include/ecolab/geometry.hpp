#pragma once

#include <string>
#include <vector>

#include "ecolab/ecology.hpp"

// Canonical Hilbert geometry of an ecology: square-root embedding, distance
// matrix, double-centered kernel, spectrum and rank, kNN-margin stability,
// Gaussian-linear proportionality.

namespace ecolab {

struct KernelReport {
    int n = 0;
    std::vector<double> dsigma;       // N x N task-distance matrix
    std::vector<double> kernel;       // K = -1/2 J D_sigma J (uniform centering)
    std::vector<double> eigenvalues;  // descending
    int rank = 0;                     // eigenvalues > rank_tol * max
    int embed_dim = 0;                // |contexts| * |V|
    std::vector<double> embedding;    // N x embed_dim mass-weighted sqrt rows
    double rank_tol = 1e-8;
};

/// Computes the task-distance kernel under the paper's uniform centering
/// gauge and cross-checks (to 1e-10) that the embedding reproduces the
/// distances and that K equals half the centered Gram of the embedding.
/// Set `weighted_centering` to use J_pi = I - 1 pi^T instead; that variant is
/// excluded from the checked invariants.
KernelReport ecology_kernel(const Ecology& e, bool weighted_centering = false);

struct KnnReport {
    int k = 0;
    std::vector<double> margins;  // per point: r_{k+1} - r_k
    double gamma_k = 0.0;         // min margin
    double stable_under = 0.0;    // gamma_k / 2
    bool zero_margin = false;     // ties made the margin vanish
};

struct KnnStabilityResult {
    KnnReport report;
    bool graphs_equal = false;  // directed kNN graphs of d and dhat agree
};

/// `d` and `dhat` are n x n symmetric matrices with zero diagonal; requires
/// n >= k + 2 so the (k+1)-st neighbor exists.
KnnStabilityResult knn_stability(const std::vector<double>& d,
                                 const std::vector<double>& dhat, int n, int k);

struct GaussianLinearCheck {
    int v_dim = 0;          // dim span{phi_i - phi_j : separated}
    bool isotropic = false; // Sigma_c restricted to V is sigma_c^2 * I
    double sigma_c2 = 0.0;  // trace(Sigma_c|V) / dim V
    std::vector<double> ratios;  // per pair: sigma2 / ||P_V dphi||^2
};

/// features: n x d (row-major), sigma_c: d x d symmetric PSD.
/// sigma2(w_i,w_j) = dphi^T Sigma_c dphi; under isotropy all ratios equal
/// sigma_c^2 within 1e-8, otherwise the spread of ratios is reported.
GaussianLinearCheck gaussian_linear_check(
    const std::vector<double>& features, int n, int d,
    const std::vector<double>& sigma_c,
    const std::vector<std::pair<int, int>>& separated_pairs);

// CSV emitters (distance matrix, spectrum, embedding coordinates).
void write_kernel_csvs(const KernelReport& rep, const std::string& dsigma_path,
                       const std::string& kernel_path,
                       const std::string& spectrum_path,
                       const std::string& embedding_path);

std::vector<double> read_square_matrix_csv(const std::string& path, int* n_out);

}  // namespace ecolab
