#include "clmrc/data/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "clmrc/errors.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::data {
namespace {

LengthSummary summarize(std::vector<std::size_t> lengths) {
    LengthSummary s;
    if (lengths.empty()) return s;
    std::sort(lengths.begin(), lengths.end());
    double total = 0.0;
    for (auto n : lengths) total += static_cast<double>(n);
    s.mean = total / static_cast<double>(lengths.size());
    auto rank = [&](double pct) {
        const auto idx = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(lengths.size())));
        return lengths[std::max<std::size_t>(idx, 1) - 1];
    };
    s.p50 = rank(50);
    s.p90 = rank(90);
    s.p99 = rank(99);
    s.max = lengths.back();
    return s;
}

nlohmann::json to_json(const LengthSummary& s) {
    return {{"mean", s.mean}, {"p50", s.p50}, {"p90", s.p90}, {"p99", s.p99}, {"max", s.max}};
}

}  // namespace

DatasetStats dataset_stats(std::span<const MRCExample> examples) {
    if (examples.empty()) throw DataError("dataset_stats needs at least one example");
    DatasetStats st;
    std::set<std::string_view> passages;
    std::vector<std::size_t> plen, qlen, alen;
    for (const auto& ex : examples) {
        ++st.question_count;
        st.answer_count += ex.answers.size();
        if (passages.insert(ex.passage).second) plen.push_back(text::code_point_length(ex.passage));
        qlen.push_back(text::code_point_length(ex.question));
        for (const auto& a : ex.answers) alen.push_back(text::code_point_length(a.text));
    }
    st.passage_count = passages.size();
    st.answers_per_question = static_cast<double>(st.answer_count) / static_cast<double>(st.question_count);
    st.passage_chars = summarize(std::move(plen));
    st.question_chars = summarize(std::move(qlen));
    st.answer_chars = summarize(std::move(alen));
    return st;
}

nlohmann::json to_json(const DatasetStats& st) {
    return {{"question_count", st.question_count},
            {"passage_count", st.passage_count},
            {"answer_count", st.answer_count},
            {"answers_per_question", st.answers_per_question},
            {"passage_chars", to_json(st.passage_chars)},
            {"question_chars", to_json(st.question_chars)},
            {"answer_chars", to_json(st.answer_chars)}};
}

}  // namespace clmrc::data
