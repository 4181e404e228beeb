#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clmrc::text {

/// char: every code point (spaces included) is one token.
/// whitespace: maximal runs of non-space code points.
enum class TokenizerMode { character, whitespace };

std::string_view to_string(TokenizerMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view name);

struct Token {
    std::string text;          // UTF-8
    std::size_t char_begin = 0;  // code-point offsets, half-open
    std::size_t char_end = 0;
};

std::vector<Token> tokenize(std::u32string_view text, TokenizerMode mode);
std::vector<Token> tokenize(std::string_view utf8, TokenizerMode mode);

/// Token <-> id bijection with the four specials on ids 0..3.
class Vocabulary {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;
    static constexpr std::size_t kCls = 2;
    static constexpr std::size_t kSep = 3;
    static constexpr std::string_view kSpecials[4] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

    /// Specials first, then tokens by descending frequency with
    /// lexicographic tie-break, truncated to max_size entries in total.
    static Vocabulary build(std::span<const std::string> corpus, TokenizerMode mode, std::size_t max_size);

    /// Tokens in id order; ids 0..3 must be the specials in canonical order.
    static Vocabulary from_tokens(std::vector<std::string> tokens, TokenizerMode mode);

    /// One token per line, line number = id.
    static Vocabulary load(const std::filesystem::path& path, TokenizerMode mode);
    void save(const std::filesystem::path& path) const;

    std::size_t id(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(std::size_t id) const;
    std::size_t size() const { return tokens_.size(); }
    TokenizerMode mode() const { return mode_; }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
    TokenizerMode mode_ = TokenizerMode::character;
};

}  // namespace clmrc::text
