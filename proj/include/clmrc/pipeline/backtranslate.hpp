#pragma once

// Zero-shot back-translation: translate the target sample to the source
// language, answer it with a source-language reader, translate the answer
// back, and optionally snap it onto the target passage with SimpleMatch.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "clmrc/data/translate.hpp"
#include "clmrc/eval/metrics.hpp"
#include "clmrc/model/span.hpp"

namespace clmrc::pipeline {

struct BacktranslateOptions {
    bool use_simplematch = true;
    std::size_t delta = 3;
    std::uint64_t seed = 13;
    std::size_t max_len = 384;
    std::size_t max_answer_len = 30;
};

struct PipelineReport {
    std::size_t inputs = 0;
    std::size_t translated = 0;       // passage and question translated
    std::size_t answered = 0;         // source reader produced a span
    std::size_t back_translated = 0;  // answer translated back, nonempty
    std::size_t aligned = 0;          // SimpleMatch windows (0 when disabled)
    std::size_t emitted = 0;          // nonempty predictions
    std::size_t rejected = 0;         // inputs - emitted
    std::size_t low_confidence = 0;
    /// SimpleMatch F1 in ten buckets [0,0.1), ..., [0.9,1.0].
    std::array<std::size_t, 10> confidence_histogram{};
    std::map<std::string, double> stage_seconds;
    /// Failure reason per rejected example id.
    std::map<std::string, std::string> failures;
    std::optional<eval::EvalResult> eval;
};

nlohmann::json to_json(const PipelineReport& report, bool include_per_example = false);

struct BacktranslateResult {
    data::Predictions predictions;  // rejected examples map to ""
    PipelineReport report;
};

/// `target_to_source` translates the sample; its reverse translates the
/// answer back. A failing stage rejects that example only. When the targets
/// carry answers, the report includes their EvalResult.
BacktranslateResult run_backtranslation_pipeline(const std::vector<data::MRCExample>& targets,
                                                 const model::SingleEncoderModel& source_reader,
                                                 const text::Vocabulary& source_vocab,
                                                 const data::TranslatorSpec& target_to_source,
                                                 const BacktranslateOptions& options);

/// Seed for one example, stable across runs and input orderings.
std::uint64_t example_seed(std::uint64_t seed, std::string_view id);

/// Imitates a translated answer for aligner / verifier training: each token
/// of the gold answer is independently kept, replaced by a random passage
/// token, or dropped; the result is never empty.
std::string corrupt_answer(const data::MRCExample& example, double rate, num::Rng& rng,
                           text::TokenizerMode mode = text::TokenizerMode::whitespace);

}  // namespace clmrc::pipeline
