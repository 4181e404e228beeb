#include "clmrc/text/encode.hpp"

#include <algorithm>

#include "clmrc/errors.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::text {

std::size_t EncodedPair::real_length() const {
    return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), true));
}

std::pair<std::size_t, std::size_t> EncodedPair::token_to_char(std::size_t token) const {
    if (!in_passage(token)) throw OffsetError("token " + std::to_string(token) + " is not a passage token");
    return passage_token_chars[token - passage_begin];
}

num::Mask EncodedPair::passage_mask() const {
    num::Mask mask(token_ids.size(), false);
    for (std::size_t t = passage_begin; t < passage_end; ++t) mask[t] = true;
    return mask;
}

EncodedPair encode_pair(std::string_view question, std::string_view passage, const Vocabulary& vocab,
                        std::size_t max_len) {
    const std::string leading[] = {std::string(question)};
    return encode_segments(leading, passage, vocab, max_len);
}

EncodedPair encode_segments(std::span<const std::string> leading, std::string_view passage,
                            const Vocabulary& vocab, std::size_t max_len) {
    if (leading.empty()) throw EncodingError("at least one segment must precede the passage");
    for (const auto& seg : leading)
        if (seg.empty()) throw EncodingError("empty segment before the passage");
    if (passage.empty()) throw EncodingError("empty passage");

    const std::size_t specials = leading.size() + 2;
    std::vector<std::vector<Token>> lead_tokens;
    std::size_t lead_total = 0;
    for (const auto& seg : leading) {
        lead_tokens.push_back(tokenize(std::string_view(seg), vocab.mode()));
        lead_total += lead_tokens.back().size();
    }
    if (max_len < specials || lead_total > max_len - specials)
        throw InputTooLongError("leading segments use " + std::to_string(lead_total) + " tokens; max_len " +
                                std::to_string(max_len) + " leaves " +
                                std::to_string(max_len < specials ? 0 : max_len - specials));

    EncodedPair pair;
    pair.passage = decode_utf8(passage);
    const std::vector<Token> passage_tokens = tokenize(std::u32string_view(pair.passage), vocab.mode());
    const std::size_t kept = std::min(passage_tokens.size(), max_len - specials - lead_total);

    auto push = [&](std::size_t id, std::size_t segment) {
        pair.token_ids.push_back(id);
        pair.segment_ids.push_back(segment);
        pair.attention_mask.push_back(true);
    };
    push(Vocabulary::kCls, 0);
    for (const auto& seg : lead_tokens) {
        for (const auto& tok : seg) push(vocab.id(tok.text), 0);
        push(Vocabulary::kSep, 0);
    }
    pair.passage_begin = pair.token_ids.size();
    pair.char_to_token.assign(pair.passage.size(), -1);
    for (std::size_t i = 0; i < kept; ++i) {
        const Token& tok = passage_tokens[i];
        for (std::size_t c = tok.char_begin; c < tok.char_end; ++c)
            pair.char_to_token[c] = static_cast<long>(pair.token_ids.size());
        pair.passage_token_chars.emplace_back(tok.char_begin, tok.char_end);
        push(vocab.id(tok.text), 1);
    }
    pair.passage_end = pair.token_ids.size();
    push(Vocabulary::kSep, 1);
    while (pair.token_ids.size() < max_len) {
        pair.token_ids.push_back(Vocabulary::kPad);
        pair.segment_ids.push_back(0);
        pair.attention_mask.push_back(false);
    }
    return pair;
}

std::optional<TokenSpan> char_span_to_token_span(const EncodedPair& pair, std::size_t char_start, std::size_t char_len) {
    if (char_len == 0 || char_start + char_len > pair.passage.size())
        throw OffsetError("char interval [" + std::to_string(char_start) + ", " + std::to_string(char_start + char_len) +
                          ") outside passage of " + std::to_string(pair.passage.size()) + " characters");
    const std::size_t char_end = char_start + char_len;
    // truncated when the interval reaches past the last retained token
    const std::size_t retained_chars = pair.passage_token_chars.empty() ? 0 : pair.passage_token_chars.back().second;
    if (char_end > retained_chars) return std::nullopt;
    long first = -1, last = -1;
    for (std::size_t c = char_start; c < char_end; ++c) {
        const long t = pair.char_to_token[c];
        if (t < 0) continue;
        if (first < 0) first = t;
        last = t;
    }
    if (first < 0) return std::nullopt;
    return TokenSpan{static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

std::string span_text(const EncodedPair& pair, TokenSpan span) {
    if (span.start > span.end || !pair.in_passage(span.start) || !pair.in_passage(span.end))
        throw SpanError("span (" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                        ") is not inside the passage");
    const std::size_t begin = pair.token_to_char(span.start).first;
    const std::size_t end = pair.token_to_char(span.end).second;
    return encode_utf8(std::u32string_view(pair.passage).substr(begin, end - begin));
}

EncodedPair trim_padding(const EncodedPair& pair) {
    EncodedPair out = pair;
    const std::size_t real = pair.real_length();
    out.token_ids.resize(real);
    out.segment_ids.resize(real);
    out.attention_mask.resize(real);
    return out;
}

}  // namespace clmrc::text
