#pragma once

#include <span>
#include <vector>

// Scalar information-theoretic helpers shared by all modules.
// Every quantity is in nats (natural log).

namespace ecolab {

// Probability vectors are validated to this tolerance before exact
// renormalization, so downstream identities hold to ~1e-10.
inline constexpr double kProbTol = 1e-9;

// Shannon entropy, convention 0*ln(0) = 0.
double entropy(std::span<const double> p);

// Binary entropy h(lambda) = -l ln l - (1-l) ln(1-l).
double binary_entropy(double lambda);

// KL(p || q). Convention 0*ln(0/q) = 0. Throws std::logic_error when
// p[v] > 0 with q[v] = 0: inside cell averages the mixture dominates
// every component, so this indicates a corrupted input.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Cross-entropy sum_v p[v] * (-ln q[v]). Returns +inf when p[v] > 0 with
// q[v] = 0 (legal for explicit decoder tables, unlike kl_divergence).
double cross_entropy(std::span<const double> p, std::span<const double> q);

// Squared Hellinger distance H^2(p, q) = (1/2) sum_v (sqrt(p)-sqrt(q))^2,
// valued in [0, 1].
double squared_hellinger(std::span<const double> p, std::span<const double> q);

// Two-component weighted Jensen-Shannon divergence
//   JS_lambda(p, q) = lambda KL(p||m) + (1-lambda) KL(q||m),
// with m the (lambda, 1-lambda) mixture.
double weighted_js_pair(double lambda, std::span<const double> p,
                        std::span<const double> q);

// Multi-component weighted Jensen-Shannon divergence over `rows`
// (k rows of equal length) with weights summing to one.
double weighted_js(std::span<const double> weights,
                   const std::vector<std::span<const double>>& rows);

}  // namespace ecolab
