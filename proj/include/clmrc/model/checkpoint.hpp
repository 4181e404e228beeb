#pragma once

// Binary parameter checkpoint, all integers little-endian:
//
//   magic        8 bytes  "CLMRCKP1"
//   meta_len     u32      length of the metadata JSON
//   meta         bytes    UTF-8 JSON (model kind, configs)
//   count        u32      number of tensors
//   per tensor:
//     name_len   u32
//     name       bytes    UTF-8
//     rows       u64
//     cols       u64
//     values     rows*cols IEEE-754 binary64, row-major
//
// docs/checkpoint.md carries the same description for other implementations.

#include <filesystem>

#include "json.hpp"

#include "clmrc/num/optim.hpp"

namespace clmrc::model {

void save_checkpoint(const std::filesystem::path& path, const num::ParameterList& params, const nlohmann::json& meta);

/// Reads only the metadata block.
nlohmann::json read_checkpoint_meta(const std::filesystem::path& path);

/// Fills params by name. Throws CheckpointError on a missing tensor, an
/// unexpected tensor, or a shape mismatch. Returns the metadata.
nlohmann::json load_checkpoint(const std::filesystem::path& path, const num::ParameterList& params);

}  // namespace clmrc::model
