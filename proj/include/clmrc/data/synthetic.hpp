#pragma once

// Synthetic bilingual reading-comprehension task.
//
// A target passage is a run of filler words with `segments` embedded
// (cue, answer...) groups, each cue distinct. Answer words come in one class
// per cue (word i belongs to class i % cue_vocab). The question is the cue
// of one group; its answer is the run of that cue's class words after it.
// The source example is the word-by-word dictionary image of the clean
// target. With probability ambiguity_rate the asked group's cue and answer
// words in the target are swapped for an unused class, so only the source
// copy still marks the answer.

#include <cstdint>
#include <vector>

#include "clmrc/data/example.hpp"
#include "clmrc/data/translate.hpp"

namespace clmrc::data {

struct SyntheticConfig {
    std::size_t num_examples = 100;
    std::size_t filler_vocab = 60;
    std::size_t answer_vocab = 40;
    std::size_t cue_vocab = 16;
    std::size_t passage_min = 16;  // tokens
    std::size_t passage_max = 24;
    std::size_t answer_min = 1;
    std::size_t answer_max = 3;
    std::size_t segments = 3;
    double ambiguity_rate = 0.0;
    std::uint64_t seed = 7;
    /// Seeds the word lists and dictionary, so splits generated with
    /// different `seed`s share one lexicon.
    std::uint64_t lexicon_seed = 0;

    /// Throws ConfigError on empty ranges, ambiguity outside [0,1], or
    /// groups that cannot fit in the shortest passage.
    void validate() const;
};

struct SyntheticDataset {
    std::vector<BilingualExample> examples;
    Lexicon lexicon;
    /// Per example: whether the target cue was corrupted.
    std::vector<bool> corrupted;
};

SyntheticDataset generate_synthetic_bilingual(const SyntheticConfig& config);

/// The lexicon alone (identical for every config sharing lexicon_seed and vocab sizes).
Lexicon synthetic_lexicon(const SyntheticConfig& config);

std::vector<MRCExample> targets(const std::vector<BilingualExample>& examples);
std::vector<MRCExample> sources(const std::vector<BilingualExample>& examples);

/// Joins target and source files by id. Examples with no source
/// counterpart, or whose source lacks an answer, get source_span_valid = false.
std::vector<BilingualExample> pair_by_id(const std::vector<MRCExample>& target, const std::vector<MRCExample>& source);

}  // namespace clmrc::data
