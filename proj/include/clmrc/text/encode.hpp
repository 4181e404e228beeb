#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clmrc/num/ops.hpp"
#include "clmrc/text/vocab.hpp"

namespace clmrc::text {

/// Inclusive token indices into an EncodedPair.
struct TokenSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Model input `[CLS] seg [SEP] (seg [SEP])* P [SEP] [PAD]*` with the
/// offset maps needed to turn token spans back into passage text.
struct EncodedPair {
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> segment_ids;
    std::vector<bool> attention_mask;
    std::size_t passage_begin = 0;  // half-open token range of retained passage tokens
    std::size_t passage_end = 0;
    /// Code-point range of each retained passage token, indexed from passage_begin.
    std::vector<std::pair<std::size_t, std::size_t>> passage_token_chars;
    /// Absolute token index covering each passage code point, -1 when the
    /// character is whitespace (whitespace mode) or was truncated away.
    std::vector<long> char_to_token;
    std::u32string passage;

    std::size_t length() const { return token_ids.size(); }
    std::size_t real_length() const;
    std::size_t passage_length() const { return passage_end - passage_begin; }
    bool in_passage(std::size_t token) const { return token >= passage_begin && token < passage_end; }
    /// Code-point range of a passage token (absolute index).
    std::pair<std::size_t, std::size_t> token_to_char(std::size_t token) const;
    /// True on passage tokens only.
    num::Mask passage_mask() const;
};

/// `[CLS] question [SEP] passage [SEP]`, padded to max_len. The passage is
/// truncated from the right; the question never is.
EncodedPair encode_pair(std::string_view question, std::string_view passage, const Vocabulary& vocab,
                        std::size_t max_len);

/// General packing with one or more leading segments before the passage,
/// each followed by [SEP]. Segment id 0 covers everything before the passage.
EncodedPair encode_segments(std::span<const std::string> leading, std::string_view passage,
                            const Vocabulary& vocab, std::size_t max_len);

/// Smallest token span covering [char_start, char_start + char_len) of the
/// passage, or nullopt when any of it was truncated away or the interval
/// covers no token. Throws OffsetError when the interval leaves the passage.
std::optional<TokenSpan> char_span_to_token_span(const EncodedPair& pair, std::size_t char_start, std::size_t char_len);

/// Passage substring (UTF-8) covered by a passage token span.
std::string span_text(const EncodedPair& pair, TokenSpan span);

/// Same pair without trailing padding. Outputs at real positions are
/// unaffected because padding never feeds unmasked positions.
EncodedPair trim_padding(const EncodedPair& pair);

}  // namespace clmrc::text
