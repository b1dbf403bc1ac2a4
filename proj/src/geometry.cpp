#include "ecolab/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ecolab {

namespace {

constexpr double kIdentityTol = 1e-10;

Eigen::MatrixXd to_eigen(const std::vector<double>& data, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = data[static_cast<size_t>(i) * cols + j];
    }
    return m;
}

}  // namespace

KernelReport ecology_kernel(const Ecology& e, bool weighted_centering) {
    const int n = e.num_worlds();
    const int nc = e.num_contexts();
    const int nv = e.num_tokens();

    KernelReport rep;
    rep.n = n;
    rep.embed_dim = nc * nv;
    rep.dsigma = distance_matrix(e);

    // Square-root embedding: row for world w concatenates sqrt(mass(c)) *
    // sqrt(P_w(.|c)) over contexts, so that (1/2)||Psi_i - Psi_j||^2 = sigma2_ij.
    rep.embedding.assign(static_cast<size_t>(n) * rep.embed_dim, 0.0);
    for (int w = 0; w < n; ++w) {
        double* out = rep.embedding.data() + static_cast<size_t>(w) * rep.embed_dim;
        for (int c = 0; c < nc; ++c) {
            const double sm = std::sqrt(e.context_mass(c));
            const auto row = e.row(w, c);
            for (int v = 0; v < nv; ++v) {
                out[static_cast<size_t>(c) * nv + v] = sm * std::sqrt(row[static_cast<size_t>(v)]);
            }
        }
    }

    Eigen::MatrixXd d = to_eigen(rep.dsigma, n, n);
    Eigen::MatrixXd centering;
    if (weighted_centering) {
        // J_pi = I - 1 pi^T; exploratory option, excluded from the invariants.
        Eigen::VectorXd pi(n);
        for (int i = 0; i < n; ++i) pi(i) = e.prior_of(i);
        centering = Eigen::MatrixXd::Identity(n, n) -
                    Eigen::VectorXd::Ones(n) * pi.transpose();
    } else {
        centering = Eigen::MatrixXd::Identity(n, n) -
                    Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    }
    Eigen::MatrixXd kernel = -0.5 * centering * d * centering.transpose();
    // Symmetrize away rounding noise.
    kernel = 0.5 * (kernel + kernel.transpose()).eval();

    rep.kernel.resize(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) rep.kernel[static_cast<size_t>(i) * n + j] = kernel(i, j);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel);
    Eigen::VectorXd ev = es.eigenvalues();
    rep.eigenvalues.assign(ev.data(), ev.data() + n);
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), std::greater<>());
    const double top = rep.eigenvalues.empty() ? 0.0 : std::max(rep.eigenvalues.front(), 0.0);
    rep.rank = 0;
    for (double x : rep.eigenvalues) {
        if (x > rep.rank_tol * std::max(top, 1e-300)) ++rep.rank;
    }

    if (!weighted_centering) {
        // Internal consistency: the embedding must reproduce sigma2 and K must
        // equal half the centered Gram of the embedding.
        Eigen::MatrixXd psi = to_eigen(rep.embedding, n, rep.embed_dim);
        Eigen::MatrixXd psi_c = psi.rowwise() - psi.colwise().mean();
        Eigen::MatrixXd gram_half = 0.5 * psi_c * psi_c.transpose();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double dist2 = 0.5 * (psi.row(i) - psi.row(j)).squaredNorm();
                if (std::abs(dist2 - d(i, j)) > kIdentityTol) {
                    throw std::logic_error(
                        "ecology_kernel: embedding does not reproduce distances");
                }
                if (std::abs(gram_half(i, j) - kernel(i, j)) > kIdentityTol) {
                    throw std::logic_error(
                        "ecology_kernel: kernel is not half the centered Gram");
                }
            }
        }
    }
    return rep;
}

namespace {

// Indices of the k nearest neighbors of i (excluding i), with index
// tie-break so the comparison below is deterministic even at zero margin.
std::vector<int> knn_of(const std::vector<double>& d, int n, int i, int k) {
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(n) - 1);
    for (int j = 0; j < n; ++j) {
        if (j != i) idx.push_back(j);
    }
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double da = d[static_cast<size_t>(i) * n + a];
        const double db = d[static_cast<size_t>(i) * n + b];
        if (da != db) return da < db;
        return a < b;
    });
    idx.resize(static_cast<size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

KnnStabilityResult knn_stability(const std::vector<double>& d,
                                 const std::vector<double>& dhat, int n, int k) {
    if (k < 1) throw ValidationError("knn_stability: k must be >= 1");
    if (n < k + 2) {
        throw ValidationError(
            "knn_stability: need n >= k + 2 so the (k+1)-st neighbor exists");
    }
    if (d.size() != static_cast<size_t>(n) * n || dhat.size() != d.size()) {
        throw ValidationError("knn_stability: matrices must be n x n");
    }
    for (int i = 0; i < n; ++i) {
        if (d[static_cast<size_t>(i) * n + i] != 0.0 ||
            dhat[static_cast<size_t>(i) * n + i] != 0.0) {
            throw ValidationError("knn_stability: diagonals must be zero");
        }
        for (int j = 0; j < n; ++j) {
            if (d[static_cast<size_t>(i) * n + j] != d[static_cast<size_t>(j) * n + i] ||
                dhat[static_cast<size_t>(i) * n + j] != dhat[static_cast<size_t>(j) * n + i]) {
                throw ValidationError("knn_stability: matrices must be symmetric");
            }
        }
    }

    KnnStabilityResult out;
    out.report.k = k;
    out.report.gamma_k = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        std::vector<double> dists;
        dists.reserve(static_cast<size_t>(n) - 1);
        for (int j = 0; j < n; ++j) {
            if (j != i) dists.push_back(d[static_cast<size_t>(i) * n + j]);
        }
        std::sort(dists.begin(), dists.end());
        const double margin = dists[static_cast<size_t>(k)] - dists[static_cast<size_t>(k - 1)];
        out.report.margins.push_back(margin);
        out.report.gamma_k = std::min(out.report.gamma_k, margin);
    }
    out.report.zero_margin = out.report.gamma_k <= 0.0;
    out.report.stable_under = out.report.gamma_k / 2.0;

    out.graphs_equal = true;
    for (int i = 0; i < n; ++i) {
        if (knn_of(d, n, i, k) != knn_of(dhat, n, i, k)) {
            out.graphs_equal = false;
            break;
        }
    }
    return out;
}

GaussianLinearCheck gaussian_linear_check(
    const std::vector<double>& features, int n, int d,
    const std::vector<double>& sigma_c,
    const std::vector<std::pair<int, int>>& separated_pairs) {
    if (features.size() != static_cast<size_t>(n) * d) {
        throw ValidationError("gaussian_linear_check: features must be n x d");
    }
    if (sigma_c.size() != static_cast<size_t>(d) * d) {
        throw ValidationError("gaussian_linear_check: sigma_c must be d x d");
    }
    if (separated_pairs.empty()) {
        throw ValidationError("gaussian_linear_check: no separated pairs (degenerate V)");
    }
    Eigen::MatrixXd phi = to_eigen(features, n, d);
    Eigen::MatrixXd sigma = to_eigen(sigma_c, d, d);
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw ValidationError("gaussian_linear_check: sigma_c must be symmetric");
    }

    Eigen::MatrixXd diffs(d, static_cast<int>(separated_pairs.size()));
    for (size_t p = 0; p < separated_pairs.size(); ++p) {
        const auto [i, j] = separated_pairs[p];
        if (i < 0 || i >= n || j < 0 || j >= n) {
            throw ValidationError("gaussian_linear_check: pair index out of range");
        }
        diffs.col(static_cast<int>(p)) = (phi.row(i) - phi.row(j)).transpose();
    }

    // Orthonormal basis of V = span of difference vectors.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs, Eigen::ComputeThinU);
    const double top_sv = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    int v_dim = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > 1e-12 * std::max(top_sv, 1.0)) ++v_dim;
    }
    if (v_dim == 0) {
        throw ValidationError("gaussian_linear_check: all difference vectors vanish");
    }
    Eigen::MatrixXd basis = svd.matrixU().leftCols(v_dim);

    GaussianLinearCheck out;
    out.v_dim = v_dim;
    Eigen::MatrixXd restricted = basis.transpose() * sigma * basis;  // Sigma_c | V
    out.sigma_c2 = restricted.trace() / v_dim;
    out.isotropic =
        (restricted - out.sigma_c2 * Eigen::MatrixXd::Identity(v_dim, v_dim))
            .cwiseAbs()
            .maxCoeff() <= 1e-8 * std::max(1.0, std::abs(out.sigma_c2));

    for (size_t p = 0; p < separated_pairs.size(); ++p) {
        const Eigen::VectorXd dphi = diffs.col(static_cast<int>(p));
        const double sigma2 = dphi.dot(sigma * dphi);
        const double proj = (basis.transpose() * dphi).squaredNorm();
        out.ratios.push_back(proj > 0.0 ? sigma2 / proj
                                        : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

// --- CSV ----------------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_matrix_csv(const std::vector<double>& m, int rows, int cols,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write \"" + path + "\"");
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (j) out << ',';
            out << fmt(m[static_cast<size_t>(i) * cols + j]);
        }
        out << '\n';
    }
}

}  // namespace

void write_kernel_csvs(const KernelReport& rep, const std::string& dsigma_path,
                       const std::string& kernel_path,
                       const std::string& spectrum_path,
                       const std::string& embedding_path) {
    write_matrix_csv(rep.dsigma, rep.n, rep.n, dsigma_path);
    write_matrix_csv(rep.kernel, rep.n, rep.n, kernel_path);
    {
        std::ofstream out(spectrum_path);
        if (!out) throw ParseError("cannot write \"" + spectrum_path + "\"");
        out << "index,eigenvalue\n";
        for (size_t i = 0; i < rep.eigenvalues.size(); ++i) {
            out << i << ',' << fmt(rep.eigenvalues[i]) << '\n';
        }
    }
    write_matrix_csv(rep.embedding, rep.n, rep.embed_dim, embedding_path);
}

std::vector<double> read_square_matrix_csv(const std::string& path, int* n_out) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file \"" + path + "\"");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream is(line);
        std::string tok;
        while (std::getline(is, tok, ',')) row.push_back(std::stod(tok));
        rows.push_back(std::move(row));
    }
    const size_t n = rows.size();
    if (n == 0) throw ParseError("matrix file \"" + path + "\" is empty");
    std::vector<double> flat;
    flat.reserve(n * n);
    for (const auto& row : rows) {
        if (row.size() != n) {
            throw ParseError("matrix file \"" + path + "\" is not square");
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    if (n_out) *n_out = static_cast<int>(n);
    return flat;
}

}  // namespace ecolab
