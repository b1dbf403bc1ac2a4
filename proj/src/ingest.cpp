#include "ecolab/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "ecolab/numeric.hpp"
#include "ecolab/rng.hpp"
#include "json.hpp"

namespace ecolab {

namespace {

// Maps one Unicode codepoint to its ASCII transliteration (lowercased), or
// nullptr when the codepoint carries no Latin letter content.
const char* transliterate(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') {
        static const char* lower[26] = {"a", "b", "c", "d", "e", "f", "g", "h",
                                        "i", "j", "k", "l", "m", "n", "o", "p",
                                        "q", "r", "s", "t", "u", "v", "w", "x",
                                        "y", "z"};
        return lower[cp - 'A'];
    }
    if (cp < 0x80) return nullptr;  // ASCII non-letters fall through to vocab check
    if (cp >= 0xC0 && cp <= 0xFF) {
        static const char* latin1[0x40] = {
            "a", "a", "a", "a", "a", "a", "ae", "c",   // C0-C7
            "e", "e", "e", "e", "i", "i", "i",  "i",   // C8-CF
            "d", "n", "o", "o", "o", "o", "o",  nullptr,  // D0-D7 (D7 is a sign)
            "o", "u", "u", "u", "u", "y", "th", "ss",  // D8-DF
            "a", "a", "a", "a", "a", "a", "ae", "c",   // E0-E7
            "e", "e", "e", "e", "i", "i", "i",  "i",   // E8-EF
            "d", "n", "o", "o", "o", "o", "o",  nullptr,  // F0-F7
            "o", "u", "u", "u", "u", "y", "th", "y"};  // F8-FF
        return latin1[cp - 0xC0];
    }
    if (cp >= 0x100 && cp <= 0x17F) {
        if (cp <= 0x105) return "a";
        if (cp <= 0x10D) return "c";
        if (cp <= 0x111) return "d";
        if (cp <= 0x11B) return "e";
        if (cp <= 0x123) return "g";
        if (cp <= 0x127) return "h";
        if (cp <= 0x131) return "i";
        if (cp <= 0x133) return "ij";
        if (cp <= 0x135) return "j";
        if (cp <= 0x138) return "k";
        if (cp <= 0x142) return "l";
        if (cp <= 0x14B) return "n";
        if (cp <= 0x151) return "o";
        if (cp <= 0x153) return "oe";
        if (cp <= 0x159) return "r";
        if (cp <= 0x161) return "s";
        if (cp <= 0x167) return "t";
        if (cp <= 0x173) return "u";
        if (cp <= 0x175) return "w";
        if (cp <= 0x178) return "y";
        if (cp <= 0x17E) return "z";
        return "s";  // long s
    }
    return nullptr;
}

// Minimal UTF-8 decoder; invalid sequences yield one replacement per byte.
std::uint32_t decode_utf8(std::string_view s, size_t& i) {
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](size_t k) {
        return k < s.size() && (byte(k) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        const std::uint32_t cp = ((b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        const std::uint32_t cp = ((b0 & 0x0Fu) << 12) | ((byte(i + 1) & 0x3Fu) << 6) |
                                 (byte(i + 2) & 0x3Fu);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        const std::uint32_t cp = ((b0 & 0x07u) << 18) | ((byte(i + 1) & 0x3Fu) << 12) |
                                 ((byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
        i += 4;
        return cp;
    }
    ++i;
    return 0xFFFD;
}

}  // namespace

std::string normalize_text(std::string_view raw, std::string_view vocab_chars) {
    std::string out;
    out.reserve(raw.size());
    bool last_space = true;  // swallow leading spaces
    auto push = [&](char ch) {
        if (ch == ' ') {
            if (last_space) return;
            last_space = true;
        } else {
            last_space = false;
        }
        out.push_back(ch);
    };
    auto in_vocab = [&](char ch) {
        return vocab_chars.find(ch) != std::string_view::npos;
    };

    size_t i = 0;
    while (i < raw.size()) {
        const std::uint32_t cp = decode_utf8(raw, i);
        const char* mapped = transliterate(cp);
        if (mapped != nullptr) {
            for (const char* q = mapped; *q; ++q) push(in_vocab(*q) ? *q : ' ');
        } else if (cp < 0x80 && in_vocab(static_cast<char>(cp))) {
            push(static_cast<char>(cp));
        } else {
            push(' ');
        }
    }
    return out;
}

namespace {

struct CountTable {
    // context -> per-token counts; std::map keeps iteration deterministic.
    std::map<std::string, std::vector<long long>> counts;
    std::map<std::string, long long> totals;
};

void count_world(const std::string& text, int context_length, int nv,
                 const std::map<char, int>& token_index, CountTable& table) {
    const long long len = static_cast<long long>(text.size());
    for (long long i = 0; i + context_length < len; ++i) {
        const std::string ctx = text.substr(static_cast<size_t>(i),
                                            static_cast<size_t>(context_length));
        const char next = text[static_cast<size_t>(i + context_length)];
        const auto it = token_index.find(next);
        if (it == token_index.end()) continue;  // cannot happen after normalize
        auto& row = table.counts[ctx];
        if (row.empty()) row.assign(static_cast<size_t>(nv), 0);
        ++row[static_cast<size_t>(it->second)];
        ++table.totals[ctx];
    }
}

}  // namespace

EmpiricalEcology ingest_texts(
    const std::vector<std::pair<std::string, std::string>>& id_text,
    const IngestConfig& config) {
    if (id_text.empty()) throw ValidationError("ingest: need at least one world");
    if (config.context_length < 0) {
        throw ValidationError("ingest: context_length must be >= 0");
    }
    if (config.max_contexts < 1) {
        throw ValidationError("ingest: max_contexts must be >= 1");
    }
    if (config.smoothing < 0.0 || !std::isfinite(config.smoothing)) {
        throw ValidationError("ingest: smoothing must be finite and >= 0");
    }
    if (config.holdout_fraction < 0.0 || config.holdout_fraction >= 1.0) {
        throw ValidationError("ingest: holdout_fraction must lie in [0,1)");
    }
    if (config.vocab.empty()) throw ValidationError("ingest: empty vocabulary");

    const int nv = static_cast<int>(config.vocab.size());
    std::map<char, int> token_index;
    for (int v = 0; v < nv; ++v) {
        if (!token_index.emplace(config.vocab[static_cast<size_t>(v)], v).second) {
            throw ValidationError("ingest: duplicate vocabulary character");
        }
    }

    std::vector<EmpiricalEcology::WorldInfo> world_infos;
    std::vector<CountTable> tables(id_text.size());
    for (size_t w = 0; w < id_text.size(); ++w) {
        const auto& [id, raw] = id_text[w];
        std::string text = normalize_text(raw, config.vocab);
        EmpiricalEcology::WorldInfo info;
        info.id = id;
        info.chars_total = static_cast<long long>(text.size());
        if (text.empty()) {
            throw ValidationError("ingest: world \"" + id +
                                  "\" has no text after normalization");
        }
        if (config.holdout_fraction > 0.0) {
            // Contiguous held-out span with a seeded offset; the empirical
            // ecology is built from the held-out characters only.
            const long long len = info.chars_total;
            long long m = static_cast<long long>(
                std::floor(config.holdout_fraction * static_cast<double>(len)));
            m = std::max<long long>(m, 1);
            Rng rng(mix_seed(config.seed,
                             std::hash<std::string>{}(id) ^ 0x77u));
            const long long begin =
                len - m > 0 ? static_cast<long long>(rng.uniform_int(
                                  static_cast<int>(std::min<long long>(len - m + 1,
                                                                       1 << 30))))
                            : 0;
            info.span_begin = begin;
            info.chars_used = m;
            text = text.substr(static_cast<size_t>(begin), static_cast<size_t>(m));
        } else {
            info.span_begin = 0;
            info.chars_used = info.chars_total;
        }
        count_world(text, config.context_length, nv, token_index, tables[w]);
        world_infos.push_back(info);
    }

    // Pool context counts, keep the top max_contexts by (count desc, id asc).
    std::map<std::string, long long> pooled;
    for (const auto& t : tables) {
        for (const auto& [ctx, total] : t.totals) pooled[ctx] += total;
    }
    if (pooled.empty()) {
        throw ValidationError("ingest: context set empty (texts shorter than "
                              "context_length + 1)");
    }
    const long long contexts_seen = static_cast<long long>(pooled.size());
    std::vector<std::pair<std::string, long long>> ranked(pooled.begin(), pooled.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > static_cast<size_t>(config.max_contexts)) {
        ranked.resize(static_cast<size_t>(config.max_contexts));
    }
    const long long contexts_retained = static_cast<long long>(ranked.size());
    long long total_pooled = 0, retained_pooled = 0;
    for (const auto& [ctx, cnt] : pooled) total_pooled += cnt;
    for (const auto& [ctx, cnt] : ranked) retained_pooled += cnt;
    const double mass_coverage =
        static_cast<double>(retained_pooled) / static_cast<double>(total_pooled);

    std::vector<Context> contexts;
    for (const auto& [ctx, cnt] : ranked) {
        contexts.push_back({ctx, static_cast<double>(cnt) /
                                     static_cast<double>(retained_pooled)});
    }

    // Assemble rows with additive smoothing.
    const size_t nw = id_text.size();
    const size_t nc = contexts.size();
    std::vector<double> cond(nw * nc * static_cast<size_t>(nv), 0.0);
    const double delta = config.smoothing;
    for (size_t w = 0; w < nw; ++w) {
        bool any_hit = false;
        for (size_t c = 0; c < nc; ++c) {
            const auto& ctx = contexts[c].id;
            const auto it = tables[w].counts.find(ctx);
            const long long total = it == tables[w].counts.end()
                                        ? 0
                                        : tables[w].totals.at(ctx);
            if (total > 0) any_hit = true;
            if (total == 0 && delta == 0.0) {
                throw ValidationError(
                    "ingest: world \"" + id_text[w].first +
                    "\" never hits retained context \"" + ctx +
                    "\" and smoothing is 0 (its row would be undefined)");
            }
            const double denom = static_cast<double>(total) + delta * nv;
            for (int v = 0; v < nv; ++v) {
                const long long k =
                    it == tables[w].counts.end() ? 0 : it->second[static_cast<size_t>(v)];
                cond[(w * nc + c) * static_cast<size_t>(nv) + static_cast<size_t>(v)] =
                    (static_cast<double>(k) + delta) / denom;
            }
        }
        if (!any_hit && !config.allow_pure_smoothing) {
            throw ValidationError(
                "ingest: world \"" + id_text[w].first +
                "\" has zero occurrences of every retained context; its rows "
                "would be pure smoothing (set allow_pure_smoothing to accept)");
        }
    }

    std::vector<std::string> world_ids;
    for (const auto& [id, text] : id_text) world_ids.push_back(id);
    std::vector<double> prior(nw, 1.0 / static_cast<double>(nw));
    std::vector<std::string> vocab;
    for (char ch : config.vocab) vocab.emplace_back(1, ch);

    return EmpiricalEcology{Ecology::create(std::move(world_ids), std::move(prior),
                                            std::move(vocab), std::move(contexts),
                                            std::move(cond)),
                            std::move(world_infos), contexts_seen,
                            contexts_retained, mass_coverage};
}

namespace {

std::string read_files(const std::vector<std::string>& files) {
    std::string all;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("cannot open corpus file \"" + path + "\"");
        std::ostringstream buf;
        buf << in.rdbuf();
        if (!all.empty()) all.push_back('\n');
        all += buf.str();
    }
    return all;
}

}  // namespace

EmpiricalEcology ingest(const std::vector<WorldFiles>& worlds,
                        const IngestConfig& config) {
    std::vector<std::pair<std::string, std::string>> id_text;
    for (const auto& w : worlds) id_text.emplace_back(w.id, read_files(w.files));
    return ingest_texts(id_text, config);
}

std::string provenance_to_json(const EmpiricalEcology& e, const IngestConfig& config) {
    nlohmann::ordered_json doc;
    doc["config"] = {{"context_length", config.context_length},
                     {"max_contexts", config.max_contexts},
                     {"smoothing", config.smoothing},
                     {"vocab", config.vocab},
                     {"holdout_fraction", config.holdout_fraction},
                     {"seed", config.seed},
                     {"allow_pure_smoothing", config.allow_pure_smoothing}};
    doc["worlds"] = nlohmann::ordered_json::array();
    for (const auto& w : e.worlds) {
        doc["worlds"].push_back({{"id", w.id},
                                 {"chars_total", w.chars_total},
                                 {"chars_used", w.chars_used},
                                 {"span_begin", w.span_begin}});
    }
    doc["contexts_seen"] = e.contexts_seen;
    doc["contexts_retained"] = e.contexts_retained;
    doc["mass_coverage"] = e.mass_coverage;
    return doc.dump(2);
}

// --- probes -------------------------------------------------------------------------

ProbeResult off_ecology_probe_texts(
    const Ecology& train,
    const std::vector<std::pair<std::string, std::string>>& id_text,
    const ProbeConfig& config) {
    // The train ecology must look like an ingested one: single-character
    // tokens and equal-length context ids.
    std::string vocab_chars;
    for (const auto& tok : train.vocab()) {
        if (tok.size() != 1) {
            throw ValidationError(
                "off_ecology_probe: train vocabulary must be single characters");
        }
        vocab_chars += tok;
    }
    const int nv = train.num_tokens();
    const size_t context_length = train.contexts().front().id.size();
    for (const auto& c : train.contexts()) {
        if (c.id.size() != context_length) {
            throw ValidationError(
                "off_ecology_probe: train context ids must share one length");
        }
    }
    std::map<char, int> token_index;
    for (int v = 0; v < nv; ++v) token_index.emplace(vocab_chars[static_cast<size_t>(v)], v);

    ProbeResult result;
    for (const auto& [probe_id, raw] : id_text) {
        if (train.find_world(probe_id)) {
            throw ValidationError("off_ecology_probe: probe world id \"" + probe_id +
                                  "\" collides with a train world");
        }
        const std::string text = normalize_text(raw, vocab_chars);
        CountTable table;
        count_world(text, static_cast<int>(context_length), nv, token_index, table);

        long long total_grams = 0;
        for (const auto& [ctx, cnt] : table.totals) total_grams += cnt;
        if (total_grams == 0) {
            throw ValidationError("off_ecology_probe: probe world \"" + probe_id +
                                  "\" has no contexts after normalization");
        }

        // Overlap of train's retained contexts with the probe text.
        std::vector<int> overlap;  // train context indices
        long long overlap_count = 0;
        for (int c = 0; c < train.num_contexts(); ++c) {
            const auto it = table.totals.find(train.contexts()[static_cast<size_t>(c)].id);
            if (it != table.totals.end() && it->second > 0) {
                overlap.push_back(c);
                overlap_count += it->second;
            }
        }
        if (overlap.empty()) {
            throw ValidationError(
                "off_ecology_probe: no overlapping contexts between the train "
                "scheme and probe world \"" + probe_id + "\"");
        }

        // Probe-side context weights and the probe world's smoothed rows.
        const size_t oc = overlap.size();
        std::vector<Context> probe_contexts;
        std::vector<double> probe_rows(oc * static_cast<size_t>(nv), 0.0);
        for (size_t k = 0; k < oc; ++k) {
            const auto& id = train.contexts()[static_cast<size_t>(overlap[k])].id;
            const long long cnt = table.totals.at(id);
            probe_contexts.push_back(
                {id, static_cast<double>(cnt) / static_cast<double>(overlap_count)});
            const auto& row_counts = table.counts.at(id);
            const double denom = static_cast<double>(cnt) + config.smoothing * nv;
            for (int v = 0; v < nv; ++v) {
                probe_rows[k * static_cast<size_t>(nv) + static_cast<size_t>(v)] =
                    (static_cast<double>(row_counts[static_cast<size_t>(v)]) +
                     config.smoothing) /
                    denom;
            }
        }

        // Nearest train world under the probe-reweighted Hellinger distance.
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int w = 0; w < train.num_worlds(); ++w) {
            double s = 0.0;
            for (size_t k = 0; k < oc; ++k) {
                std::span<const double> pr{
                    probe_rows.data() + k * static_cast<size_t>(nv),
                    static_cast<size_t>(nv)};
                s += probe_contexts[k].mass *
                     squared_hellinger(pr, train.row(w, overlap[k]));
            }
            if (s < best) {
                best = s;
                nearest = w;
            }
        }

        // Joint world set: train worlds plus the probe world, uniform prior.
        const int n_ext = train.num_worlds() + 1;
        std::vector<std::string> worlds = train.worlds();
        worlds.push_back(probe_id);
        std::vector<double> prior(static_cast<size_t>(n_ext),
                                  1.0 / static_cast<double>(n_ext));

        // Train-side ecology: train contexts/masses; the probe world carries
        // its nearest neighbor's rows (the frozen encoding merges them).
        const int tnc = train.num_contexts();
        std::vector<double> cond_train(static_cast<size_t>(n_ext) * tnc * nv);
        for (int w = 0; w < train.num_worlds(); ++w) {
            for (int c = 0; c < tnc; ++c) {
                const auto row = train.row(w, c);
                std::copy(row.begin(), row.end(),
                          cond_train.begin() +
                              static_cast<long>((static_cast<size_t>(w) * tnc +
                                                 static_cast<size_t>(c)) * nv));
            }
        }
        for (int c = 0; c < tnc; ++c) {
            const auto row = train.row(nearest, c);
            std::copy(row.begin(), row.end(),
                      cond_train.begin() +
                          static_cast<long>((static_cast<size_t>(n_ext - 1) * tnc +
                                             static_cast<size_t>(c)) * nv));
        }
        const Ecology train_ext = Ecology::create(worlds, prior, train.vocab(),
                                                  train.contexts(),
                                                  std::move(cond_train));

        // Probe-side ecology: overlap contexts with probe masses; train worlds
        // keep their train rows, the probe world its estimated rows.
        std::vector<double> cond_probe(static_cast<size_t>(n_ext) * oc * nv);
        for (int w = 0; w < train.num_worlds(); ++w) {
            for (size_t k = 0; k < oc; ++k) {
                const auto row = train.row(w, overlap[k]);
                std::copy(row.begin(), row.end(),
                          cond_probe.begin() +
                              static_cast<long>((static_cast<size_t>(w) * oc + k) * nv));
            }
        }
        std::copy(probe_rows.begin(), probe_rows.end(),
                  cond_probe.begin() +
                      static_cast<long>(static_cast<size_t>(n_ext - 1) * oc * nv));
        const Ecology probe_eco = Ecology::create(worlds, prior, train.vocab(),
                                                  probe_contexts,
                                                  std::move(cond_probe));

        const auto oe = off_ecology_bound(train_ext, probe_eco, nearest, n_ext - 1);

        ProbeResult::PerWorld pw;
        pw.id = probe_id;
        pw.nearest = train.worlds()[static_cast<size_t>(nearest)];
        pw.bound = oe.bound;
        pw.actual = oe.actual;
        pw.near_zero = oe.actual < config.near_zero_threshold;
        pw.contexts_used = static_cast<int>(oc);
        pw.context_coverage =
            static_cast<double>(overlap_count) / static_cast<double>(total_grams);
        result.worlds.push_back(std::move(pw));
    }
    return result;
}

ProbeResult off_ecology_probe(const Ecology& train,
                              const std::vector<WorldFiles>& probe_worlds,
                              const ProbeConfig& config) {
    std::vector<std::pair<std::string, std::string>> id_text;
    for (const auto& w : probe_worlds) id_text.emplace_back(w.id, read_files(w.files));
    return off_ecology_probe_texts(train, id_text, config);
}

std::string probe_result_to_json(const ProbeResult& r) {
    nlohmann::ordered_json doc;
    doc["worlds"] = nlohmann::ordered_json::array();
    for (const auto& w : r.worlds) {
        doc["worlds"].push_back({{"id", w.id},
                                 {"nearest", w.nearest},
                                 {"bound", w.bound},
                                 {"actual", w.actual},
                                 {"near_zero", w.near_zero},
                                 {"contexts_used", w.contexts_used},
                                 {"context_coverage", w.context_coverage}});
    }
    return doc.dump(2);
}

// --- job schemas ----------------------------------------------------------------------

IngestJob load_ingest_job(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("ingest config is not valid JSON: ") + ex.what());
    }
    IngestJob job;
    try {
        job.config.context_length = doc.value("context_length", 2);
        job.config.max_contexts = doc.value("max_contexts", 200);
        job.config.smoothing = doc.value("smoothing", 0.0);
        job.config.holdout_fraction = doc.value("holdout_fraction", 0.0);
        job.config.seed = doc.value("seed", 0ull);
        job.config.allow_pure_smoothing = doc.value("allow_pure_smoothing", false);
        if (doc.contains("vocab")) {
            const auto& v = doc.at("vocab");
            if (v.is_string() && v.get<std::string>() == "ascii-lower") {
                job.config.vocab = std::string(kAsciiLowerVocab);
            } else if (v.is_string()) {
                job.config.vocab = v.get<std::string>();
            } else {
                std::string chars;
                for (const auto& tok : v) chars += tok.get<std::string>();
                job.config.vocab = chars;
            }
        }
        for (const auto& w : doc.at("worlds")) {
            WorldFiles wf;
            wf.id = w.at("id").get<std::string>();
            wf.files = w.at("files").get<std::vector<std::string>>();
            job.worlds.push_back(std::move(wf));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("ingest config: bad schema: ") + ex.what());
    }
    return job;
}

ProbeJob load_probe_job(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("probe config is not valid JSON: ") + ex.what());
    }
    ProbeJob job;
    try {
        job.train_ecology_path = doc.at("train_ecology").get<std::string>();
        job.config.smoothing = doc.value("smoothing", 1e-4);
        job.config.near_zero_threshold = doc.value("near_zero_threshold", 0.05);
        for (const auto& w : doc.at("probe_worlds")) {
            WorldFiles wf;
            wf.id = w.at("id").get<std::string>();
            wf.files = w.at("files").get<std::vector<std::string>>();
            job.probe_worlds.push_back(std::move(wf));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("probe config: bad schema: ") + ex.what());
    }
    return job;
}

}  // namespace ecolab
