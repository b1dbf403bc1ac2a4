#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ecolab {

inline constexpr const char* kVersion = "0.1.0";

/// Run manifest: enough to re-run a subcommand and get byte-identical
/// outputs. Deliberately carries no timestamp.
struct Manifest {
    std::string subcommand;
    std::string config_hash;  // fnv1a64 of the flag/config serialization
    std::vector<std::pair<std::string, std::string>> input_hashes;  // path, hash
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::string version = kVersion;
    std::vector<std::string> outputs;
};

std::string fnv1a64_hex(std::string_view data);
std::string fnv1a64_file(const std::string& path);  // throws ParseError

std::string manifest_to_json(const Manifest& m);
void write_manifest(const Manifest& m, const std::string& path);

}  // namespace ecolab
