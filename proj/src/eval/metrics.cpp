#include "clmrc/eval/metrics.hpp"

#include <algorithm>
#include <set>

#include "clmrc/align/simplematch.hpp"
#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::eval {

bool is_punctuation(char32_t c) {
    if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                         (c >= 0x7B && c <= 0x7E);
    if (c >= 0xA1 && c <= 0xBF) return true;    // Latin-1 punctuation and symbols
    if (c == 0xD7 || c == 0xF7) return true;    // multiplication, division
    if (c >= 0x2010 && c <= 0x2027) return true;  // dashes, quotes, bullets, ellipsis
    if (c >= 0x2030 && c <= 0x205E) return true;
    if (c >= 0x3001 && c <= 0x3003) return true;  // ideographic comma, full stop, ditto
    if (c >= 0x3008 && c <= 0x3011) return true;  // CJK brackets
    if (c >= 0x3014 && c <= 0x301F) return true;
    if (c == 0x30FB) return true;                 // katakana middle dot
    if (c >= 0xFF01 && c <= 0xFF0F) return true;  // fullwidth forms
    if (c >= 0xFF1A && c <= 0xFF20) return true;
    if (c >= 0xFF3B && c <= 0xFF40) return true;
    if (c >= 0xFF5B && c <= 0xFF65) return true;
    return false;
}

std::u32string normalize_answer(std::string_view text) {
    std::u32string out;
    for (char32_t c : text::decode_utf8(text)) {
        if (is_punctuation(c)) continue;
        if ((c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0xDE && c != 0xD7)) c += 0x20;
        out.push_back(c);
    }
    std::size_t b = 0, e = out.size();
    while (b < e && text::is_space(out[b])) ++b;
    while (e > b && text::is_space(out[e - 1])) --e;
    return out.substr(b, e - b);
}

ExampleScore score_example(std::string_view prediction, const std::vector<std::string>& references) {
    if (references.empty()) throw ScoringError("score_example: empty reference list");
    const std::u32string pred = normalize_answer(prediction);
    ExampleScore s;
    for (const auto& ref : references) {
        const std::u32string gold = normalize_answer(ref);
        if (pred == gold) s.em = 1.0;
        // both normalizing to empty counts as a match
        const double f1 = pred == gold ? 1.0 : align::char_f1(pred, gold);
        s.f1 = std::max(s.f1, f1);
    }
    return s;
}

EvalResult evaluate_dataset(const data::Predictions& predictions, const std::vector<data::MRCExample>& examples) {
    EvalResult r;
    std::set<std::string> seen;
    for (const auto& ex : examples) {
        if (!seen.insert(ex.id).second) throw DataError("duplicate example id '" + ex.id + "'");
        std::vector<std::string> refs;
        for (const auto& a : ex.answers) refs.push_back(a.text);
        ExampleScore s;
        auto it = predictions.find(ex.id);
        if (it == predictions.end()) {
            spdlog::warn("no prediction for '{}'; scored 0", ex.id);
        } else {
            s = score_example(it->second, refs);
        }
        s.id = ex.id;
        r.per_example.push_back(std::move(s));
    }
    std::sort(r.per_example.begin(), r.per_example.end(),
              [](const ExampleScore& a, const ExampleScore& b) { return a.id < b.id; });
    double em = 0.0, f1 = 0.0;
    for (const auto& s : r.per_example) {
        em += s.em;
        f1 += s.f1;
    }
    if (!r.per_example.empty()) {
        r.em = 100.0 * em / static_cast<double>(r.per_example.size());
        r.f1 = 100.0 * f1 / static_cast<double>(r.per_example.size());
    }
    return r;
}

nlohmann::json to_json(const EvalResult& result) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : result.per_example) per.push_back({{"id", s.id}, {"em", s.em}, {"f1", s.f1}});
    return {{"em", result.em}, {"f1", result.f1}, {"per_example", per}};
}

}  // namespace clmrc::eval
