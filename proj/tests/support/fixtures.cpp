#include "support/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace ecolab::testing {

Ecology eco_a() {
    return Ecology::create({"w1", "w2"}, {0.5, 0.5}, {"a", "b"},
                           {{"c0", 1.0}},
                           {1.0, 0.0,   // w1 | c0
                            0.0, 1.0}); // w2 | c0
}

Ecology eco_b() {
    return Ecology::create({"w1", "w2", "w3"},
                           {1.0 / 3, 1.0 / 3, 1.0 / 3}, {"a", "b"},
                           {{"c0", 1.0}},
                           {1.0, 0.0,   // w1
                            1.0, 0.0,   // w2
                            0.0, 1.0}); // w3
}

std::vector<double> random_simplex(Rng& rng, int k) {
    std::vector<double> x(static_cast<size_t>(k));
    double sum = 0.0;
    for (double& v : x) {
        v = -std::log(1.0 - rng.uniform());  // Exp(1), strictly positive
        sum += v;
    }
    for (double& v : x) v /= sum;
    return x;
}

Ecology random_ecology(Rng& rng, int num_worlds, int num_contexts, int num_tokens) {
    std::vector<std::string> worlds, vocab;
    for (int w = 0; w < num_worlds; ++w) worlds.push_back("w" + std::to_string(w));
    for (int v = 0; v < num_tokens; ++v) vocab.push_back("t" + std::to_string(v));
    std::vector<Context> contexts;
    const auto masses = random_simplex(rng, num_contexts);
    for (int c = 0; c < num_contexts; ++c) {
        contexts.push_back({"c" + std::to_string(c), masses[static_cast<size_t>(c)]});
    }
    std::vector<double> cond;
    cond.reserve(static_cast<size_t>(num_worlds) * num_contexts * num_tokens);
    for (int w = 0; w < num_worlds; ++w) {
        for (int c = 0; c < num_contexts; ++c) {
            const auto row = random_simplex(rng, num_tokens);
            cond.insert(cond.end(), row.begin(), row.end());
        }
    }
    return Ecology::create(std::move(worlds), random_simplex(rng, num_worlds),
                           std::move(vocab), std::move(contexts), std::move(cond));
}

Ecology random_ecology_with_quotient(Rng& rng, const Partition& target,
                                     int num_contexts, int num_tokens) {
    const int n = target.size();
    std::vector<std::string> worlds, vocab;
    for (int w = 0; w < n; ++w) worlds.push_back("w" + std::to_string(w));
    for (int v = 0; v < num_tokens; ++v) vocab.push_back("t" + std::to_string(v));
    std::vector<Context> contexts;
    const auto masses = random_simplex(rng, num_contexts);
    for (int c = 0; c < num_contexts; ++c) {
        contexts.push_back({"c" + std::to_string(c), masses[static_cast<size_t>(c)]});
    }
    // One row table per cell, copied bitwise to every member world.
    std::vector<std::vector<double>> cell_rows(static_cast<size_t>(target.cell_count()));
    for (auto& rows : cell_rows) {
        for (int c = 0; c < num_contexts; ++c) {
            const auto row = random_simplex(rng, num_tokens);
            rows.insert(rows.end(), row.begin(), row.end());
        }
    }
    std::vector<double> cond;
    for (int w = 0; w < n; ++w) {
        const auto& rows = cell_rows[static_cast<size_t>(target.label(w))];
        cond.insert(cond.end(), rows.begin(), rows.end());
    }
    return Ecology::create(std::move(worlds), random_simplex(rng, n),
                           std::move(vocab), std::move(contexts), std::move(cond));
}

Ecology with_prior(const Ecology& e, std::vector<double> prior) {
    std::vector<double> cond;
    cond.reserve(static_cast<size_t>(e.num_worlds()) * e.num_contexts() * e.num_tokens());
    for (int w = 0; w < e.num_worlds(); ++w) {
        for (int c = 0; c < e.num_contexts(); ++c) {
            const auto row = e.row(w, c);
            cond.insert(cond.end(), row.begin(), row.end());
        }
    }
    return Ecology::create(e.worlds(), std::move(prior), e.vocab(), e.contexts(),
                           std::move(cond));
}

// --- synthetic corpora ----------------------------------------------------------

namespace {

constexpr const char* kAlphabet = "abcdefghijklmnopqrstuvwxyz ";

std::array<double, 27> spiky_row(Rng& rng) {
    std::array<double, 27> row{};
    double sum = 0.0;
    for (double& v : row) {
        const double u = rng.uniform();
        v = u * u * u * u;  // spiked weights distinguish languages at bigram level
        sum += v;
    }
    // Keep every transition positive so long samples hit every context.
    for (double& v : row) v = 0.9 * v / sum + 0.1 / 27.0;
    return row;
}

}  // namespace

CharMatrix language_matrix(std::uint64_t seed) {
    Rng rng(seed);
    CharMatrix m(27);
    for (auto& row : m) row = spiky_row(rng);
    return m;
}

CharMatrix perturbed_matrix(const CharMatrix& base, std::uint64_t seed, double mix) {
    Rng rng(seed);
    CharMatrix other(27);
    for (auto& row : other) row = spiky_row(rng);
    CharMatrix out(27);
    for (size_t i = 0; i < 27; ++i) {
        double sum = 0.0;
        for (size_t j = 0; j < 27; ++j) {
            out[i][j] = (1.0 - mix) * base[i][j] + mix * other[i][j];
            sum += out[i][j];
        }
        for (size_t j = 0; j < 27; ++j) out[i][j] /= sum;
    }
    return out;
}

CharMatrix glyph_matrix(std::uint64_t seed) {
    Rng rng(seed);
    CharMatrix m(27);
    // Only a handful of letters, near-deterministic successor structure.
    const std::array<int, 8> active = {0, 2, 4, 8, 14, 18, 19, 26};  // a c e i o s t space
    for (size_t i = 0; i < 27; ++i) {
        std::array<double, 27> row{};
        for (size_t j = 0; j < 27; ++j) row[j] = 1e-4;
        const int hot = active[static_cast<size_t>(rng.uniform_int(8))];
        const int warm = active[static_cast<size_t>(rng.uniform_int(8))];
        row[static_cast<size_t>(hot)] += 0.7;
        row[static_cast<size_t>(warm)] += 0.3;
        double sum = 0.0;
        for (double v : row) sum += v;
        for (double& v : row) v /= sum;
        m[i] = row;
    }
    return m;
}

std::string sample_markov(const CharMatrix& m, std::uint64_t seed, size_t length) {
    Rng rng(seed);
    std::string out;
    out.reserve(length);
    size_t state = 26;  // start from space
    for (size_t t = 0; t < length; ++t) {
        const auto& row = m[state];
        const double u = rng.uniform();
        double acc = 0.0;
        size_t next = 26;
        for (size_t j = 0; j < 27; ++j) {
            acc += row[j];
            if (u < acc) {
                next = j;
                break;
            }
        }
        out.push_back(kAlphabet[next]);
        state = next;
    }
    return out;
}

std::string write_corpus_file(const std::string& dir, const std::string& name,
                              const std::string& text) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
}

std::string test_output_dir(const std::string& name) {
    const std::string dir = "test-output/" + name;
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace ecolab::testing
