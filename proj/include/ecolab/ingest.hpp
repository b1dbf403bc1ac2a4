#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ecolab/bounds.hpp"
#include "ecolab/ecology.hpp"

// Turns raw text corpora (one or more files per world) into exact finite
// empirical ecologies with length-L prefix contexts, and evaluates
// off-ecology probes against a trained ecology.

namespace ecolab {

inline constexpr std::string_view kAsciiLowerVocab = "abcdefghijklmnopqrstuvwxyz ";

struct IngestConfig {
    int context_length = 2;            // characters of prefix used as context id
    int max_contexts = 200;            // top-mass truncation
    double smoothing = 0.0;            // additive pseudo-count per vocab symbol
    std::string vocab = std::string(kAsciiLowerVocab);
    double holdout_fraction = 0.0;     // in [0,1); 0 means use the whole text
    std::uint64_t seed = 0;            // seeds the held-out span offsets
    bool allow_pure_smoothing = false; // accept worlds never hitting any context
};

/// Lowercases, transliterates accented Latin characters to ASCII, collapses
/// everything outside the vocabulary to a single space and squeezes space
/// runs. Deterministic; lossy by design. Invalid UTF-8 bytes become spaces.
std::string normalize_text(std::string_view raw, std::string_view vocab_chars);

struct WorldFiles {
    std::string id;
    std::vector<std::string> files;
};

struct EmpiricalEcology {
    Ecology ecology;

    struct WorldInfo {
        std::string id;
        long long chars_total = 0;  // normalized length
        long long chars_used = 0;   // held-out span length
        long long span_begin = 0;   // [span_begin, span_begin + chars_used)
    };
    std::vector<WorldInfo> worlds;
    long long contexts_seen = 0;      // distinct contexts before truncation
    long long contexts_retained = 0;
    double mass_coverage = 0.0;       // retained pooled count / total pooled count
};

EmpiricalEcology ingest(const std::vector<WorldFiles>& worlds,
                        const IngestConfig& config);

/// Same pipeline on in-memory texts (id, raw text) — the file variant reads
/// and concatenates each world's files first.
EmpiricalEcology ingest_texts(
    const std::vector<std::pair<std::string, std::string>>& id_text,
    const IngestConfig& config);

std::string provenance_to_json(const EmpiricalEcology& e, const IngestConfig& config);

// --- off-ecology probes --------------------------------------------------------

struct ProbeConfig {
    double smoothing = 1e-4;          // pseudo-count for probe rows
    double near_zero_threshold = 0.05;  // reporting threshold for "same world"
};

struct ProbeResult {
    struct PerWorld {
        std::string id;
        std::string nearest;          // train world whose cell absorbs the probe
        double bound = 0.0;           // two-state lower bound
        double actual = 0.0;          // excess of the extended quotient
        bool near_zero = false;       // actual < near_zero_threshold
        int contexts_used = 0;        // overlap with train's retained contexts
        double context_coverage = 0.0;  // probe mass landing on the overlap
    };
    std::vector<PerWorld> worlds;
};

/// Evaluates each probe world's text under the train ecology's context scheme:
/// the probe world is adjoined to the train worlds, assigned (on the train
/// side) the rows of its nearest train world — the frozen encoding cannot
/// tell them apart — and the Appendix-style lower bound plus the realized
/// excess of that extended quotient are reported under the probe-reweighted
/// context distribution.
ProbeResult off_ecology_probe(const Ecology& train,
                              const std::vector<WorldFiles>& probe_worlds,
                              const ProbeConfig& config);

ProbeResult off_ecology_probe_texts(
    const Ecology& train,
    const std::vector<std::pair<std::string, std::string>>& id_text,
    const ProbeConfig& config);

std::string probe_result_to_json(const ProbeResult& r);

// --- CLI job schemas -------------------------------------------------------------

struct IngestJob {
    IngestConfig config;
    std::vector<WorldFiles> worlds;
};

IngestJob load_ingest_job(const std::string& json_text);

struct ProbeJob {
    std::string train_ecology_path;
    std::vector<WorldFiles> probe_worlds;
    ProbeConfig config;
};

ProbeJob load_probe_job(const std::string& json_text);

}  // namespace ecolab
