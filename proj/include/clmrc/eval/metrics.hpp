#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "clmrc/data/example.hpp"

namespace clmrc::eval {

/// Removes punctuation and symbol characters, lowercases A-Z and Latin-1
/// capitals, then strips surrounding whitespace. docs/metrics.md lists the
/// exact character ranges.
std::u32string normalize_answer(std::string_view text);
bool is_punctuation(char32_t c);

struct ExampleScore {
    std::string id;
    double em = 0.0;  // 0 or 1
    double f1 = 0.0;  // [0, 1]
};

/// (em, f1) of one prediction against its references, max over references.
/// Throws ScoringError on an empty reference list.
ExampleScore score_example(std::string_view prediction, const std::vector<std::string>& references);

struct EvalResult {
    double em = 0.0;  // percentages
    double f1 = 0.0;
    std::vector<ExampleScore> per_example;  // sorted by id
};

/// Means over examples x 100. Missing predictions score 0 with a warning;
/// duplicate example ids throw DataError. Sums run in id order, so the
/// result does not depend on the order of `examples`.
EvalResult evaluate_dataset(const data::Predictions& predictions, const std::vector<data::MRCExample>& examples);

nlohmann::json to_json(const EvalResult& result);

}  // namespace clmrc::eval
