#pragma once

// Run configuration shared by every subcommand. JSON layout (all keys
// optional, see docs/config.md):
//
// {
//   "model": "reader" | "aligner" | "verifier" | "dual",
//   "seed": 13, "max_len": 64, "tokenizer": "whitespace" | "char", "vocab_max": 256,
//   "encoder": {...}, "train": {...}, "dual": {...},
//   "data": {"train_file", "dev_file", "source_train_file", "source_dev_file",
//            "translated_file", "dict"},
//   "delta": 3, "use_simplematch": true, "noise_rate": 0.0, "out": "out"
// }
//
// A manifest written by a previous run is accepted too: its "config" member
// is read instead.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "clmrc/model/dual.hpp"
#include "clmrc/model/encoder.hpp"
#include "clmrc/model/trainer.hpp"
#include "clmrc/text/vocab.hpp"

namespace clmrc::pipeline {

enum class ModelKind { reader, aligner, verifier, dual };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct DataPaths {
    std::string train_file;
    std::string dev_file;
    std::string source_train_file;
    std::string source_dev_file;
    std::string translated_file;  // id -> translated answer (aligner / verifier)
    std::string dict;             // lexicon TSV, source<TAB>target
};

struct RunConfig {
    ModelKind model = ModelKind::reader;
    std::uint64_t seed = 13;
    std::size_t max_len = 64;
    text::TokenizerMode tokenizer = text::TokenizerMode::whitespace;
    std::size_t vocab_max = 256;
    // Desk scale: the library defaults (init 0.02, lr 4e-5, batch 64) are
    // sized for pretrained-width models and do not train from scratch here.
    model::EncoderConfig encoder{.init_std = 0.1};
    model::TrainConfig train{.epochs = 5, .batch_size = 8, .lr = 1e-3};
    model::DualConfig dual;
    DataPaths data;
    std::size_t delta = 3;
    bool use_simplematch = true;
    double noise_rate = 0.0;
    std::string out = "out";

    /// Copies seed and max_len into the encoder and trainer settings.
    void propagate();
    /// Throws ConfigError on out-of-range values (delta outside 0..5, ...).
    void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);
/// Reads a config or manifest file.
RunConfig load_run_config(const std::filesystem::path& path);

/// Throws ConfigError naming the first listed flag whose path is empty.
void require_nonempty(std::initializer_list<std::pair<const char*, const std::string*>> paths);
/// Throws ConfigError naming the first nonempty path that does not exist.
void require_files(std::initializer_list<std::pair<const char*, const std::string*>> paths);

}  // namespace clmrc::pipeline
