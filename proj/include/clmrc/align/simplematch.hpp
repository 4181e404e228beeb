#pragma once

// Sliding-window character-F1 alignment of a back-translated answer into
// the target passage.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "clmrc/data/example.hpp"

namespace clmrc::align {

/// Bag-of-characters F1 over code points: 2|a ∩ b| / (|a| + |b|), with the
/// intersection taken as a multiset; 0 when either side is empty.
double char_f1(std::u32string_view a, std::u32string_view b);
double char_f1(std::string_view a, std::string_view b);

inline constexpr double kLowConfidence = 0.3;

struct MatchResult {
    std::size_t char_start = 0;  // code points, half-open
    std::size_t char_end = 0;
    double f1 = 0.0;
    std::size_t window_len = 0;
    bool low_confidence = true;  // f1 < kLowConfidence
};

/// Best window of length in [max(1, n - delta), n + delta] (n = answer
/// length, lengths capped at the passage length) by character F1; ties go
/// to the earlier start, then the shorter window. F1 values are compared as
/// exact fractions. Throws DataError on an empty passage or answer.
MatchResult simple_match(std::u32string_view passage, std::u32string_view answer, std::size_t delta);
MatchResult simple_match(std::string_view passage, std::string_view answer, std::size_t delta);

/// UTF-8 text of the matched window.
std::string match_text(std::string_view passage, const MatchResult& match);

struct BatchAlignment {
    data::Predictions aligned;               // id -> passage substring
    std::map<std::string, MatchResult> matches;
    std::size_t missing = 0;                 // examples without a translated answer
    std::size_t low_confidence = 0;
};

/// Aligns every example's translated answer into its passage. Examples with
/// no (or an empty) translated answer are skipped with a warning.
BatchAlignment align_batch(const std::vector<data::MRCExample>& examples, const data::Predictions& translated,
                           std::size_t delta);

}  // namespace clmrc::align
