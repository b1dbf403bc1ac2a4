#include "ecolab/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ecolab/ecology.hpp"
#include "json.hpp"

namespace ecolab {

std::string fnv1a64_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open input file \"" + path + "\" for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64_hex(buf.str());
}

std::string manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json doc;
    doc["subcommand"] = m.subcommand;
    doc["config_hash"] = m.config_hash;
    doc["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [path, hash] : m.input_hashes) {
        doc["inputs"].push_back({{"path", path}, {"hash", hash}});
    }
    if (m.has_seed) doc["seed"] = m.seed;
    doc["version"] = m.version;
    doc["outputs"] = m.outputs;
    return doc.dump(2);
}

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write manifest \"" + path + "\"");
    out << manifest_to_json(m) << '\n';
}

}  // namespace ecolab
