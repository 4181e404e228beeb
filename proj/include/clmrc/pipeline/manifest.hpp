#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "clmrc/pipeline/config.hpp"

namespace clmrc::pipeline {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct InputRecord {
    std::string role;  // e.g. "train_file"
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

/// Everything needed to rerun a command: the full config, the kernel
/// variant (scalar and SIMD sums round differently) and input hashes.
struct Manifest {
    std::string command;
    RunConfig config;
    std::string kernels;
    std::vector<InputRecord> inputs;
    std::vector<std::string> outputs;  // file names relative to the run directory

    /// Hashes every nonempty path in config.data plus `extra` (role, path) pairs.
    static Manifest capture(std::string command, const RunConfig& config,
                            const std::vector<std::pair<std::string, std::string>>& extra = {});
};

nlohmann::json to_json(const Manifest& manifest);
void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

}  // namespace clmrc::pipeline
