#include "clmrc/align/simplematch.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::align {

double char_f1(std::u32string_view a, std::u32string_view b) {
    if (a.empty() || b.empty()) return 0.0;
    std::unordered_map<char32_t, std::size_t> counts;
    for (char32_t c : b) ++counts[c];
    std::size_t overlap = 0;
    for (char32_t c : a) {
        auto it = counts.find(c);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(a.size() + b.size());
}

double char_f1(std::string_view a, std::string_view b) {
    return char_f1(text::decode_utf8(a), text::decode_utf8(b));
}

namespace {

struct Candidate {
    std::size_t start = 0;
    std::size_t len = 0;
    std::size_t overlap = 0;
};

// f1 = 2 overlap / (len + n); compare overlap_a (len_b + n) with overlap_b (len_a + n)
bool better(const Candidate& a, const Candidate& b, std::size_t n) {
    const std::size_t lhs = a.overlap * (b.len + n);
    const std::size_t rhs = b.overlap * (a.len + n);
    if (lhs != rhs) return lhs > rhs;
    if (a.start != b.start) return a.start < b.start;
    return a.len < b.len;
}

}  // namespace

MatchResult simple_match(std::u32string_view passage, std::u32string_view answer, std::size_t delta) {
    if (passage.empty()) throw DataError("simple_match: empty passage");
    if (answer.empty()) throw DataError("simple_match: empty translated answer");
    const std::size_t n = answer.size();
    const std::size_t m = passage.size();

    // answer characters get dense slots; other passage characters never overlap
    std::unordered_map<char32_t, std::size_t> slot;
    std::vector<std::size_t> need;
    for (char32_t c : answer) {
        auto [it, fresh] = slot.emplace(c, need.size());
        if (fresh) need.push_back(0);
        ++need[it->second];
    }
    std::vector<long> code(m, -1);
    for (std::size_t i = 0; i < m; ++i)
        if (auto it = slot.find(passage[i]); it != slot.end()) code[i] = static_cast<long>(it->second);

    std::size_t lo = n > delta ? n - delta : 1;
    std::size_t hi = std::min(n + delta, m);
    if (lo > hi) lo = hi;  // every allowed window is longer than the passage

    bool have = false;
    Candidate best;
    std::vector<std::size_t> window(need.size());
    for (std::size_t len = lo; len <= hi; ++len) {
        std::fill(window.begin(), window.end(), 0);
        std::size_t overlap = 0;
        auto add = [&](std::size_t i) {
            if (code[i] < 0) return;
            auto& w = window[static_cast<std::size_t>(code[i])];
            if (w < need[static_cast<std::size_t>(code[i])]) ++overlap;
            ++w;
        };
        auto remove = [&](std::size_t i) {
            if (code[i] < 0) return;
            auto& w = window[static_cast<std::size_t>(code[i])];
            --w;
            if (w < need[static_cast<std::size_t>(code[i])]) --overlap;
        };
        for (std::size_t i = 0; i < len; ++i) add(i);
        for (std::size_t start = 0; start + len <= m; ++start) {
            if (start > 0) {
                remove(start - 1);
                add(start + len - 1);
            }
            const Candidate c{start, len, overlap};
            if (!have || better(c, best, n)) {
                best = c;
                have = true;
            }
        }
    }
    MatchResult r;
    r.char_start = best.start;
    r.char_end = best.start + best.len;
    r.window_len = best.len;
    r.f1 = best.overlap == 0 ? 0.0 : 2.0 * static_cast<double>(best.overlap) / static_cast<double>(best.len + n);
    r.low_confidence = r.f1 < kLowConfidence;
    return r;
}

MatchResult simple_match(std::string_view passage, std::string_view answer, std::size_t delta) {
    return simple_match(text::decode_utf8(passage), text::decode_utf8(answer), delta);
}

std::string match_text(std::string_view passage, const MatchResult& match) {
    const std::u32string cps = text::decode_utf8(passage);
    if (match.char_end > cps.size() || match.char_start > match.char_end)
        throw OffsetError("match window exceeds the passage");
    return text::encode_utf8(std::u32string_view(cps).substr(match.char_start, match.window_len));
}

BatchAlignment align_batch(const std::vector<data::MRCExample>& examples, const data::Predictions& translated,
                           std::size_t delta) {
    BatchAlignment out;
    for (const auto& ex : examples) {
        auto it = translated.find(ex.id);
        if (it == translated.end() || it->second.empty()) {
            spdlog::warn("align: no translated answer for '{}'", ex.id);
            ++out.missing;
            continue;
        }
        const MatchResult m = simple_match(ex.passage, it->second, delta);
        if (m.low_confidence) ++out.low_confidence;
        out.aligned[ex.id] = match_text(ex.passage, m);
        out.matches[ex.id] = m;
    }
    return out;
}

}  // namespace clmrc::align
