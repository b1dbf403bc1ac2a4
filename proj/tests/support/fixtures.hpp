#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ecolab/ecology.hpp"
#include "ecolab/partition.hpp"
#include "ecolab/rng.hpp"

// Shared fixtures: the two hand-checked reference ecologies, random-ecology
// generators (optionally with a planted quotient), and synthetic character
// corpora for the ingestion suites.

namespace ecolab::testing {

// Two worlds, uniform prior, one context, opposite deterministic rows.
Ecology eco_a();

// Three worlds, uniform prior, one context; w1 and w2 identical, w3 disjoint.
Ecology eco_b();

std::vector<double> random_simplex(Rng& rng, int k);

// Fully random ecology: positive prior and masses, generic rows (so the
// quotient at tol 0 is the identity partition almost surely).
Ecology random_ecology(Rng& rng, int num_worlds, int num_contexts, int num_tokens);

// Random ecology whose rows are copied within each cell of `target`, so its
// quotient at tol 0 is exactly `target`.
Ecology random_ecology_with_quotient(Rng& rng, const Partition& target,
                                     int num_contexts, int num_tokens);

// Same ecology with a replaced world prior (e.g. to align two ecologies for
// expand_ecology).
Ecology with_prior(const Ecology& e, std::vector<double> prior);

// --- synthetic corpora -----------------------------------------------------

// Character-level order-1 Markov chain over "a..z " (27 symbols).
using CharMatrix = std::vector<std::array<double, 27>>;

CharMatrix language_matrix(std::uint64_t seed);
// normalize((1 - mix) * base + mix * language_matrix(seed)): a related language.
CharMatrix perturbed_matrix(const CharMatrix& base, std::uint64_t seed, double mix);
// A structurally alien process: few active letters, rigid transitions.
CharMatrix glyph_matrix(std::uint64_t seed);

std::string sample_markov(const CharMatrix& m, std::uint64_t seed, size_t length);

// Writes text to dir/name (creating dir) and returns the full path.
std::string write_corpus_file(const std::string& dir, const std::string& name,
                              const std::string& text);

std::string test_output_dir(const std::string& name);  // created under cwd

}  // namespace ecolab::testing
