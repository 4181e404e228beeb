#include "clmrc/data/translate.hpp"

#include <fstream>
#include <set>

#include "clmrc/errors.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::data {
namespace {

constexpr std::string_view kUnkToken = "[UNK]";

struct Rendered {
    std::string text;
    std::vector<std::pair<std::size_t, std::size_t>> offsets;  // code points per output token
    std::vector<bool> noised;
    std::size_t substitutions = 0;
};

std::vector<std::string> output_inventory(const TranslatorSpec& spec) {
    std::set<std::string> values;
    for (const auto& [from, to] : spec.mapping) values.insert(to);
    return {values.begin(), values.end()};
}

Rendered render(const std::vector<text::Token>& tokens, const TranslatorSpec& spec,
                const std::vector<std::string>& inventory, num::Rng* rng) {
    Rendered out;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::string word;
        if (auto it = spec.mapping.find(tokens[i].text); it != spec.mapping.end())
            word = it->second;
        else
            word = spec.unknown_policy == UnknownPolicy::keep ? tokens[i].text : std::string(kUnkToken);
        bool noised = false;
        if (rng != nullptr && spec.noise_rate > 0.0 && inventory.size() > 1 && rng->bernoulli(spec.noise_rate)) {
            std::string replacement = inventory[rng->below(inventory.size())];
            while (replacement == word) replacement = inventory[rng->below(inventory.size())];
            word = std::move(replacement);
            noised = true;
            ++out.substitutions;
        }
        if (i > 0 && spec.tokenizer == text::TokenizerMode::whitespace) {
            out.text += ' ';
            ++cursor;
        }
        const std::size_t len = text::code_point_length(word);
        out.offsets.emplace_back(cursor, cursor + len);
        out.noised.push_back(noised);
        cursor += len;
        out.text += word;
    }
    return out;
}

}  // namespace

TranslatorSpec TranslatorSpec::identity() { return {}; }

void TranslatorSpec::validate() const {
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
        throw ConfigError("translator noise_rate must lie in [0, 1], got " + std::to_string(noise_rate));
    if (kind == TranslatorKind::dictionary && mapping.empty())
        throw ConfigError("dictionary translator needs a nonempty mapping");
}

TranslatorSpec TranslatorSpec::reversed() const {
    TranslatorSpec out = *this;
    out.mapping.clear();
    for (const auto& [from, to] : mapping) out.mapping.emplace(to, from);
    return out;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dictionary file " + path.string());
    Lexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected two tab-separated columns");
        lex.pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return lex;
}

void save_lexicon(const std::filesystem::path& path, const Lexicon& lexicon) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& [src, tgt] : lexicon.pairs) out << src << '\t' << tgt << '\n';
}

TranslatorSpec dictionary_spec(const Lexicon& lexicon, bool target_to_source, double noise_rate, UnknownPolicy policy) {
    TranslatorSpec spec;
    spec.kind = TranslatorKind::dictionary;
    spec.noise_rate = noise_rate;
    spec.unknown_policy = policy;
    for (const auto& [src, tgt] : lexicon.pairs) {
        if (target_to_source)
            spec.mapping.emplace(tgt, src);
        else
            spec.mapping.emplace(src, tgt);
    }
    spec.validate();
    return spec;
}

std::string translate_text(std::string_view input, const TranslatorSpec& spec, num::Rng* rng, std::size_t* substitutions) {
    spec.validate();
    if (spec.kind == TranslatorKind::identity) return std::string(input);
    const auto rendered = render(text::tokenize(input, spec.tokenizer), spec, output_inventory(spec), rng);
    if (substitutions != nullptr) *substitutions += rendered.substitutions;
    return rendered.text;
}

TranslationResult translate_example(const MRCExample& example, const TranslatorSpec& spec, std::uint64_t seed,
                                    std::string_view language_tag) {
    spec.validate();
    TranslationResult result;
    result.example.id = example.id;
    result.example.language_tag = std::string(language_tag);

    if (spec.kind == TranslatorKind::identity) {
        result.example.passage = example.passage;
        result.example.question = example.question;
        result.example.answers = example.answers;
        for (const auto& a : example.answers)
            result.alignments.push_back({true, a.char_start, text::code_point_length(a.text), true});
        return result;
    }

    num::Rng rng(seed);
    const auto inventory = output_inventory(spec);
    const auto passage_tokens = text::tokenize(std::string_view(example.passage), spec.tokenizer);
    const Rendered passage = render(passage_tokens, spec, inventory, &rng);
    const Rendered question = render(text::tokenize(std::string_view(example.question), spec.tokenizer), spec, inventory, &rng);
    if (passage.text.empty() || question.text.empty())
        throw TranslationError("translation of example '" + example.id + "' is empty");
    result.example.passage = passage.text;
    result.example.question = question.text;
    result.substituted_tokens = passage.substitutions + question.substitutions;

    const std::u32string out32 = text::decode_utf8(passage.text);
    for (const auto& a : example.answers) {
        const std::size_t begin = a.char_start;
        const std::size_t end = begin + text::code_point_length(a.text);
        long first = -1, last = -1;
        for (std::size_t i = 0; i < passage_tokens.size(); ++i) {
            if (passage_tokens[i].char_begin < end && passage_tokens[i].char_end > begin) {
                if (first < 0) first = static_cast<long>(i);
                last = static_cast<long>(i);
            }
        }
        AnswerAlignment align;
        if (first >= 0) {
            const auto f = static_cast<std::size_t>(first), l = static_cast<std::size_t>(last);
            align.has_span = true;
            align.char_start = passage.offsets[f].first;
            align.char_len = passage.offsets[l].second - align.char_start;
            bool clean = passage_tokens[f].char_begin == begin && passage_tokens[l].char_end == end;
            for (std::size_t i = f; i <= l; ++i) clean = clean && !passage.noised[i];
            align.reliable = clean;
            result.example.answers.push_back(
                {text::encode_utf8(std::u32string_view(out32).substr(align.char_start, align.char_len)), align.char_start});
        }
        result.alignments.push_back(align);
    }
    return result;
}

}  // namespace clmrc::data
