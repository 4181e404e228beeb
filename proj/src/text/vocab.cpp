#include "clmrc/text/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "clmrc/errors.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::text {

std::string_view to_string(TokenizerMode mode) {
    return mode == TokenizerMode::character ? "char" : "whitespace";
}

TokenizerMode parse_tokenizer_mode(std::string_view name) {
    if (name == "char") return TokenizerMode::character;
    if (name == "whitespace") return TokenizerMode::whitespace;
    throw ConfigError("unknown tokenizer mode '" + std::string(name) + "' (expected char|whitespace)");
}

std::vector<Token> tokenize(std::u32string_view text, TokenizerMode mode) {
    std::vector<Token> out;
    if (mode == TokenizerMode::character) {
        out.reserve(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) out.push_back({encode_utf8(text[i]), i, i + 1});
        return out;
    }
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) break;
        const std::size_t begin = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        out.push_back({encode_utf8(text.substr(begin, i - begin)), begin, i});
    }
    return out;
}

std::vector<Token> tokenize(std::string_view utf8, TokenizerMode mode) {
    return tokenize(std::u32string_view(decode_utf8(utf8)), mode);
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, TokenizerMode mode, std::size_t max_size) {
    if (max_size < 5) throw ConfigError("vocabulary max_size must be at least 5, got " + std::to_string(max_size));
    if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, std::size_t> counts;
    for (const auto& doc : corpus)
        for (auto& tok : tokenize(std::string_view(doc), mode)) ++counts[std::move(tok.text)];
    for (auto special : kSpecials) counts.erase(std::string(special));
    // line breaks cannot be represented in the one-token-per-line file
    std::erase_if(counts, [](const auto& kv) { return kv.first.find_first_of("\r\n") != std::string::npos; });

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    // counts is ordered, so stable_sort keeps lexicographic order among ties
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
    for (auto& [tok, n] : ranked) {
        if (tokens.size() >= max_size) break;
        tokens.push_back(std::move(tok));
    }
    return from_tokens(std::move(tokens), mode);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, TokenizerMode mode) {
    if (tokens.size() < 4) throw ConfigError("vocabulary lacks the four special tokens");
    for (std::size_t i = 0; i < 4; ++i)
        if (tokens[i] != kSpecials[i])
            throw ConfigError("vocabulary id " + std::to_string(i) + " must be " + std::string(kSpecials[i]) +
                              ", found '" + tokens[i] + "'");
    Vocabulary v;
    v.mode_ = mode;
    v.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        if (!v.index_.emplace(v.tokens_[i], i).second)
            throw ConfigError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, TokenizerMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocabulary file " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    return from_tokens(std::move(tokens), mode);
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write vocabulary file " + path.string());
    for (const auto& tok : tokens_) out << tok << '\n';
}

std::size_t Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

const std::string& Vocabulary::token(std::size_t id) const {
    if (id >= tokens_.size()) throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

}  // namespace clmrc::text
