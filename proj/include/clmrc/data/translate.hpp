#pragma once

// Token-level mock translator standing in for an external MT system.
//
// Text is split with the translator's tokenizer, each token is looked up
// in the mapping, and the result is re-joined (single spaces in
// whitespace mode, no separator in char mode). A noise rate substitutes
// random output-side tokens to imitate translation loss.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clmrc/data/example.hpp"
#include "clmrc/num/rng.hpp"
#include "clmrc/text/vocab.hpp"

namespace clmrc::data {

enum class TranslatorKind { dictionary, identity };
enum class UnknownPolicy { keep, unk };

struct TranslatorSpec {
    TranslatorKind kind = TranslatorKind::identity;
    std::map<std::string, std::string> mapping;
    UnknownPolicy unknown_policy = UnknownPolicy::keep;
    double noise_rate = 0.0;
    text::TokenizerMode tokenizer = text::TokenizerMode::whitespace;

    static TranslatorSpec identity();
    /// Throws ConfigError when the invariants (noise in [0,1], nonempty
    /// mapping for the dictionary kind) do not hold.
    void validate() const;
    /// Dictionary spec for the opposite direction; on collisions the
    /// lexicographically first source token wins.
    TranslatorSpec reversed() const;
};

/// Dictionary file: UTF-8 TSV, `source_token<TAB>target_token` per line.
struct Lexicon {
    std::vector<std::pair<std::string, std::string>> pairs;  // (source, target)
};
Lexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const std::filesystem::path& path, const Lexicon& lexicon);

/// Target -> source (the direction used to translate a target sample) or the reverse.
TranslatorSpec dictionary_spec(const Lexicon& lexicon, bool target_to_source, double noise_rate = 0.0,
                               UnknownPolicy policy = UnknownPolicy::keep);

/// Where the translated answer sits in the translated passage. The span is
/// carried over from token positions, not re-searched, so noise that hits
/// answer tokens leaves it pointing at corrupted text; `reliable` is false then.
struct AnswerAlignment {
    bool has_span = false;
    std::size_t char_start = 0;
    std::size_t char_len = 0;
    bool reliable = false;
};

struct TranslationResult {
    MRCExample example;
    std::vector<AnswerAlignment> alignments;  // one per input answer
    std::size_t substituted_tokens = 0;
};

/// Translates passage, question and answers. Answers without a span in the
/// output are dropped from example.answers but keep an alignment entry.
/// Deterministic given seed. Throws TranslationError if passage or
/// question translates to nothing.
TranslationResult translate_example(const MRCExample& example, const TranslatorSpec& spec, std::uint64_t seed,
                                    std::string_view language_tag = "source");

/// Translates free text (e.g. a predicted answer). rng may be null for no noise.
std::string translate_text(std::string_view text, const TranslatorSpec& spec, num::Rng* rng = nullptr,
                           std::size_t* substitutions = nullptr);

}  // namespace clmrc::data
