#include "clmrc/data/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "clmrc/errors.hpp"
#include "clmrc/num/rng.hpp"

namespace clmrc::data {
namespace {

struct WordLists {
    std::vector<std::string> filler, answer, cue;              // target side
    std::unordered_map<std::string, std::string> to_source;  // target -> source
};

std::vector<std::size_t> shuffled(std::size_t n, num::Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

WordLists make_words(const SyntheticConfig& cfg) {
    WordLists w;
    num::Rng rng(num::Rng::derive(cfg.lexicon_seed, 0xD1C7));
    auto fill = [&](std::vector<std::string>& list, std::size_t n, const char* tgt, const char* src) {
        const auto perm = shuffled(n, rng);
        for (std::size_t i = 0; i < n; ++i) {
            list.push_back(std::string(tgt) + std::to_string(i));
            w.to_source.emplace(list.back(), std::string(src) + std::to_string(perm[i]));
        }
    };
    fill(w.filler, cfg.filler_vocab, "tf", "sf");
    fill(w.answer, cfg.answer_vocab, "ta", "sa");
    fill(w.cue, cfg.cue_vocab, "tk", "sk");
    return w;
}

std::string join(const std::vector<std::string>& words, std::size_t* answer_char = nullptr, std::size_t answer_tok = 0) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) out += ' ';
        if (answer_char != nullptr && i == answer_tok) *answer_char = out.size();
        out += words[i];
    }
    return out;
}

std::string join_range(const std::vector<std::string>& words, std::size_t begin, std::size_t count) {
    return join(std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(begin),
                                         words.begin() + static_cast<std::ptrdiff_t>(begin + count)));
}

}  // namespace

void SyntheticConfig::validate() const {
    if (num_examples == 0) throw ConfigError("synthetic num_examples must be positive");
    if (passage_min == 0 || passage_min > passage_max) throw ConfigError("synthetic passage length range is empty");
    if (answer_min == 0 || answer_min > answer_max) throw ConfigError("synthetic answer length range is empty");
    if (!(ambiguity_rate >= 0.0 && ambiguity_rate <= 1.0)) throw ConfigError("ambiguity_rate must lie in [0, 1]");
    if (segments == 0) throw ConfigError("synthetic segments must be positive");
    if (filler_vocab == 0) throw ConfigError("synthetic filler vocabulary must be nonempty");
    if (answer_vocab < cue_vocab) throw ConfigError("answer_vocab must give every cue class at least one word");
    if (cue_vocab <= segments) throw ConfigError("cue_vocab must exceed segments so a corrupting cue exists");
    // every group needs its cue, its answer and one trailing filler word
    if (segments * (answer_max + 2) > passage_min)
        throw ConfigError("answer length range exceeds passage range: " + std::to_string(segments) + " groups of up to " +
                          std::to_string(answer_max + 2) + " words do not fit in " + std::to_string(passage_min) +
                          " words");
}

Lexicon synthetic_lexicon(const SyntheticConfig& config) {
    const WordLists w = make_words(config);
    Lexicon lex;
    for (const auto* list : {&w.filler, &w.answer, &w.cue})
        for (const auto& t : *list) lex.pairs.emplace_back(w.to_source.at(t), t);
    return lex;
}

SyntheticDataset generate_synthetic_bilingual(const SyntheticConfig& cfg) {
    cfg.validate();
    const WordLists w = make_words(cfg);
    SyntheticDataset ds;
    ds.lexicon = synthetic_lexicon(cfg);
    num::Rng rng(num::Rng::derive(cfg.seed, 0x5E9));

    for (std::size_t n = 0; n < cfg.num_examples; ++n) {
        const auto length = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.passage_min),
                                                                  static_cast<std::int64_t>(cfg.passage_max)));
        const auto cue_order = shuffled(cfg.cue_vocab, rng);
        std::vector<std::size_t> answer_lens(cfg.segments);
        std::size_t grouped = 0;
        for (auto& a : answer_lens) {
            a = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.answer_min),
                                                     static_cast<std::int64_t>(cfg.answer_max)));
            grouped += a + 2;  // cue + answer + trailing filler
        }
        // spread the spare filler words over the segments+1 gaps
        std::vector<std::size_t> gaps(cfg.segments + 1, 0);
        for (std::size_t spare = length - grouped; spare > 0; --spare) ++gaps[rng.below(gaps.size())];

        const std::size_t asked = rng.below(cfg.segments);
        const std::size_t per_class = cfg.answer_vocab / cfg.cue_vocab;
        // answer word of class c: index c + cue_vocab * k
        auto answer_word = [&](std::size_t cls) { return w.answer[cls + cfg.cue_vocab * rng.below(per_class)]; };
        std::vector<std::string> words;
        std::size_t answer_begin = 0, cue_pos = 0;
        auto filler = [&] { words.push_back(w.filler[rng.below(w.filler.size())]); };
        for (std::size_t s = 0; s < cfg.segments; ++s) {
            for (std::size_t g = 0; g < gaps[s]; ++g) filler();
            if (s == asked) cue_pos = words.size();
            words.push_back(w.cue[cue_order[s]]);
            if (s == asked) answer_begin = words.size();
            for (std::size_t k = 0; k < answer_lens[s]; ++k) words.push_back(answer_word(cue_order[s]));
            filler();
        }
        for (std::size_t g = 0; g < gaps[cfg.segments]; ++g) filler();

        const std::string question_word = w.cue[cue_order[asked]];
        std::vector<std::string> source_words;
        for (const auto& t : words) source_words.push_back(w.to_source.at(t));

        // corruption swaps the asked group's class (cue and answer words) for an unused one
        const bool corrupt = rng.bernoulli(cfg.ambiguity_rate);
        if (corrupt) {
            const std::size_t distractor = cue_order[cfg.segments + rng.below(cfg.cue_vocab - cfg.segments)];
            words[cue_pos] = w.cue[distractor];
            for (std::size_t k = 0; k < answer_lens[asked]; ++k) words[answer_begin + k] = answer_word(distractor);
        }

        const std::string id = "syn-" + std::to_string(cfg.seed) + "-" + std::to_string(n);
        const std::size_t alen = answer_lens[asked];
        BilingualExample ex;
        ex.target.id = id;
        ex.target.language_tag = "target";
        ex.target.question = question_word;
        Answer ta;
        ex.target.passage = join(words, &ta.char_start, answer_begin);
        ta.text = join_range(words, answer_begin, alen);
        ex.target.answers.push_back(ta);

        ex.source.id = id;
        ex.source.language_tag = "source";
        ex.source.question = w.to_source.at(question_word);
        Answer sa;
        ex.source.passage = join(source_words, &sa.char_start, answer_begin);
        sa.text = join_range(source_words, answer_begin, alen);
        ex.source.answers.push_back(sa);
        ex.source_span_valid = true;

        ds.examples.push_back(std::move(ex));
        ds.corrupted.push_back(corrupt);
    }
    return ds;
}

std::vector<MRCExample> targets(const std::vector<BilingualExample>& examples) {
    std::vector<MRCExample> out;
    for (const auto& e : examples) out.push_back(e.target);
    return out;
}

std::vector<MRCExample> sources(const std::vector<BilingualExample>& examples) {
    std::vector<MRCExample> out;
    for (const auto& e : examples) out.push_back(e.source);
    return out;
}

std::vector<BilingualExample> pair_by_id(const std::vector<MRCExample>& target, const std::vector<MRCExample>& source) {
    std::unordered_map<std::string, const MRCExample*> by_id;
    for (const auto& s : source) by_id.emplace(s.id, &s);
    std::vector<BilingualExample> out;
    for (const auto& t : target) {
        BilingualExample ex;
        ex.target = t;
        if (auto it = by_id.find(t.id); it != by_id.end()) {
            ex.source = *it->second;
            ex.source_span_valid = !ex.source.answers.empty();
        } else {
            ex.source = t;
            ex.source.language_tag = "source";
            ex.source_span_valid = false;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace clmrc::data
