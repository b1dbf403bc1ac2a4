#pragma once

#include <cmath>
#include <vector>

#include "ecolab/ecology.hpp"
#include "ecolab/partition.hpp"

// Independent oracles used to freeze expected values. These deliberately go
// through the joint law rather than the library's decomposition path.

namespace ecolab::testing {

// H(Y | C, X) straight from the joint law: P(x, v | c) = sum_{w in x} pi_w
// P_w(v|c), conditional H summed with context masses.
inline double conditional_loss_oracle(const Ecology& e, const Partition& p) {
    const int nv = e.num_tokens();
    double h = 0.0;
    for (int c = 0; c < e.num_contexts(); ++c) {
        const double mc = e.context_mass(c);
        if (mc <= 0.0) continue;
        for (int x = 0; x < p.cell_count(); ++x) {
            std::vector<double> joint(static_cast<size_t>(nv), 0.0);
            double px = 0.0;
            for (int w = 0; w < e.num_worlds(); ++w) {
                if (p.label(w) != x) continue;
                px += e.prior_of(w);
                const auto row = e.row(w, c);
                for (int v = 0; v < nv; ++v) joint[static_cast<size_t>(v)] += e.prior_of(w) * row[static_cast<size_t>(v)];
            }
            for (int v = 0; v < nv; ++v) {
                const double pv = joint[static_cast<size_t>(v)];
                if (pv > 0.0) h -= mc * pv * std::log(pv / px);
            }
        }
    }
    return h;
}

// E_{w,c}[H(P_w(.|c))] as an explicit double sum.
inline double floor_oracle(const Ecology& e) {
    double h = 0.0;
    for (int w = 0; w < e.num_worlds(); ++w) {
        for (int c = 0; c < e.num_contexts(); ++c) {
            double hw = 0.0;
            const auto row = e.row(w, c);
            for (int v = 0; v < e.num_tokens(); ++v) {
                const double pv = row[static_cast<size_t>(v)];
                if (pv > 0.0) hw -= pv * std::log(pv);
            }
            h += e.prior_of(w) * e.context_mass(c) * hw;
        }
    }
    return h;
}

// Context-mass-weighted squared Hellinger distance, written out directly.
inline double sigma2_oracle(const Ecology& e, int w1, int w2) {
    double s = 0.0;
    for (int c = 0; c < e.num_contexts(); ++c) {
        double h2 = 0.0;
        const auto a = e.row(w1, c);
        const auto b = e.row(w2, c);
        for (int v = 0; v < e.num_tokens(); ++v) {
            const double d = std::sqrt(a[static_cast<size_t>(v)]) - std::sqrt(b[static_cast<size_t>(v)]);
            h2 += 0.5 * d * d;
        }
        s += e.context_mass(c) * h2;
    }
    return s;
}

}  // namespace ecolab::testing
