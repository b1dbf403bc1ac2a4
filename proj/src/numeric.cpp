#include "ecolab/numeric.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ecolab {

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) h -= x * std::log(x);
    }
    return h;
}

double binary_entropy(double lambda) {
    double h = 0.0;
    if (lambda > 0.0) h -= lambda * std::log(lambda);
    if (lambda < 1.0) h -= (1.0 - lambda) * std::log(1.0 - lambda);
    return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    double d = 0.0;
    for (size_t v = 0; v < p.size(); ++v) {
        if (p[v] > 0.0) {
            if (q[v] <= 0.0) {
                throw std::logic_error(
                    "kl_divergence: q vanishes where p > 0 (mixture should "
                    "dominate components)");
            }
            d += p[v] * std::log(p[v] / q[v]);
        }
    }
    return d;
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
    double ce = 0.0;
    for (size_t v = 0; v < p.size(); ++v) {
        if (p[v] > 0.0) {
            if (q[v] <= 0.0) return std::numeric_limits<double>::infinity();
            ce -= p[v] * std::log(q[v]);
        }
    }
    return ce;
}

double squared_hellinger(std::span<const double> p, std::span<const double> q) {
    double s = 0.0;
    for (size_t v = 0; v < p.size(); ++v) {
        const double d = std::sqrt(p[v]) - std::sqrt(q[v]);
        s += d * d;
    }
    return 0.5 * s;
}

double weighted_js_pair(double lambda, std::span<const double> p,
                        std::span<const double> q) {
    std::vector<double> m(p.size());
    for (size_t v = 0; v < p.size(); ++v) {
        m[v] = lambda * p[v] + (1.0 - lambda) * q[v];
    }
    return lambda * kl_divergence(p, m) +
           (1.0 - lambda) * kl_divergence(q, m);
}

double weighted_js(std::span<const double> weights,
                   const std::vector<std::span<const double>>& rows) {
    if (rows.empty()) return 0.0;
    const size_t nv = rows.front().size();
    std::vector<double> mix(nv, 0.0);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t v = 0; v < nv; ++v) mix[v] += weights[i] * rows[i][v];
    }
    double js = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (weights[i] > 0.0) js += weights[i] * kl_divergence(rows[i], mix);
    }
    return js;
}

}  // namespace ecolab
