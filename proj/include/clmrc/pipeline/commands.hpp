#pragma once

// Subcommand bodies behind the clmrc executable. Each returns a JSON summary
// that the CLI prints on stdout; files go to config.out.

#include <string>
#include <vector>

#include "json.hpp"

#include "clmrc/num/gradcheck.hpp"
#include "clmrc/pipeline/config.hpp"

namespace clmrc::pipeline {

/// Fills the data paths a command needs from the gen-synthetic layout
/// (data/train.json, data/dev.json, ...) when they are empty.
void apply_default_paths(RunConfig& config, std::string_view command);

struct SyntheticOptions {
    std::size_t train_examples = 2000;
    std::size_t dev_examples = 500;
    double ambiguity_rate = 0.0;
};

/// Writes train.json, dev.json, source_train.json, source_dev.json and
/// lexicon.tsv (source<TAB>target) into config.out.
nlohmann::json gen_synthetic(const RunConfig& config, const SyntheticOptions& options);

/// Trains config.model. Writes vocab.txt, model.ckpt, metrics.jsonl,
/// dev_predictions.json (when a dev file is set) and manifest.json.
nlohmann::json train(const RunConfig& config);

/// Predicts config.data.dev_file with a trained run directory; writes
/// predictions.json.
nlohmann::json predict(const RunConfig& config, const std::string& checkpoint_dir);

/// Scores a prediction file against config.data.dev_file; writes eval.json.
nlohmann::json evaluate(const RunConfig& config, const std::string& predictions_file);

/// SimpleMatch batch mode: snaps config.data.translated_file answers onto
/// the dev passages; writes aligned.json.
nlohmann::json align(const RunConfig& config);

/// Zero-shot back-translation over config.data.dev_file with a source
/// reader run directory and the lexicon in config.data.dict; writes
/// predictions.json and report.json.
nlohmann::json backtranslate(const RunConfig& config, const std::string& checkpoint_dir);

/// dataset_stats for every data file that is set; writes stats.json.
nlohmann::json stats(const RunConfig& config);

/// Writes `summary` as config.out/file next to a manifest of the run.
void write_summary(const RunConfig& config, const std::string& command, const std::string& file,
                   const nlohmann::json& summary);

struct GradCheckSuiteOptions {
    ModelKind model = ModelKind::dual;
    /// "encoder" checks the bare encoder instead of a model kind.
    bool encoder_only = false;
    std::size_t hidden = 8;
    std::size_t layers = 1;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double tolerance = 1e-4;
    double fd_step = 1e-5;
};

struct GradCheckSuiteResult {
    bool passed = false;
    double max_relative_error = 0.0;
    std::vector<num::GradCheckReport> runs;  // one per seed
};

/// Composite-model gradient check on tiny synthetic inputs (sequences of at
/// most 12 tokens, batches of 2). Parameters whose gradient is identically
/// zero (biases that shift every logit of a softmax equally) are skipped.
GradCheckSuiteResult gradcheck_suite(const GradCheckSuiteOptions& options);

nlohmann::json to_json(const GradCheckSuiteResult& result);

}  // namespace clmrc::pipeline
