#include <algorithm>
#include <cctype>
#include <map>
#include <string>

#include "doctest.h"
#include "helpers.hpp"

#include "clmrc/align/simplematch.hpp"
#include "clmrc/errors.hpp"
#include "clmrc/eval/metrics.hpp"
#include "clmrc/num/rng.hpp"

using namespace clmrc;
using num::Rng;
using namespace testutil;

namespace {

std::string random_text(Rng& rng, std::size_t len, std::string_view alphabet) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
    return s;
}

// SQuAD-style scoring with character bags, written out for ASCII input.
std::string normalize_ascii(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::ispunct(static_cast<unsigned char>(c))) continue;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    const auto b = out.find_first_not_of(" \t\n");
    if (b == std::string::npos) return "";
    return out.substr(b, out.find_last_not_of(" \t\n") - b + 1);
}

std::pair<double, double> score_ascii(const std::string& pred, const std::vector<std::string>& refs) {
    double em = 0, f1 = 0;
    const std::string p = normalize_ascii(pred);
    for (const auto& r : refs) {
        const std::string g = normalize_ascii(r);
        if (p == g) {
            em = 1;
            f1 = 1;
            continue;
        }
        const auto [num, den] = f1_fraction(p, g);
        f1 = std::max(f1, static_cast<double>(num) / static_cast<double>(den));
    }
    return {em, f1};
}

}  // namespace

TEST_SUITE("simplematch") {

TEST_CASE("char_f1 examples") {
    CHECK(align::char_f1("abc", "abc") == 1.0);
    CHECK(align::char_f1("abc", "") == 0.0);
    CHECK(align::char_f1("", "") == 0.0);
    CHECK(align::char_f1("aab", "ab") == doctest::Approx(0.8));
    CHECK(align::char_f1("ab", "ba") == 1.0);  // order is ignored
    CHECK(align::char_f1("xyz", "abc") == 0.0);
    CHECK(align::char_f1("東京", "京都") == doctest::Approx(0.5));
}

TEST_CASE("char_f1 matches the multiset oracle on 500 random pairs") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const std::string a = random_text(rng, rng.below(9), "abcd ");
        const std::string b = random_text(rng, rng.below(9), "abcd ");
        const auto [num, den] = f1_fraction(a, b);
        CHECK(std::abs(align::char_f1(a, b) - static_cast<double>(num) / den) < 1e-12);
    }
}

TEST_CASE("simple_match examples") {
    const auto m = align::simple_match("the cat sat on the mat", "cat", 0);
    CHECK(m.char_start == 4);
    CHECK(m.char_end == 7);
    CHECK(m.f1 == 1.0);
    CHECK_FALSE(m.low_confidence);
    CHECK(align::match_text("the cat sat on the mat", m) == "cat");

    // a garbled answer still lands on the right region
    const auto g = align::simple_match("alpha beta gamma delta", "gamnma", 3);
    CHECK(align::match_text("alpha beta gamma delta", g).find("gamma") != std::string::npos);

    // tie between equal windows goes to the earlier one
    CHECK(align::simple_match("ab ab", "ab", 0).char_start == 0);

    CHECK(align::simple_match("xyz", "abc", 1).low_confidence);
    CHECK_THROWS_AS(align::simple_match("", "a", 1), DataError);
    CHECK_THROWS_AS(align::simple_match("a", "", 1), DataError);

    // answer longer than the passage: windows are capped
    const auto cap = align::simple_match("ab", "abcdef", 2);
    CHECK(cap.char_start == 0);
    CHECK(cap.char_end == 2);
}

TEST_CASE("simple_match matches brute force on 500 random instances") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const std::string passage = random_text(rng, 1 + rng.below(30), "abcde ");
        const std::string answer = random_text(rng, 1 + rng.below(8), "abcdef");
        const std::size_t delta = rng.below(6);
        const auto want = brute_match(passage, answer, delta);
        const auto got = align::simple_match(passage, answer, delta);
        CHECK(got.char_start == want.start);
        CHECK(got.char_end == want.end);
        const std::string text = align::match_text(passage, got);
        CHECK(passage.find(text) != std::string::npos);
        const auto [num, den] = f1_fraction(text, answer);
        CHECK(std::abs(got.f1 - static_cast<double>(num) / den) < 1e-10);
    }
}

TEST_CASE("align_batch skips missing answers") {
    const std::vector<data::MRCExample> ex = {{"a", "one two three", "q", {}, "t"},
                                              {"b", "four five six", "q", {}, "t"}};
    const auto r = align::align_batch(ex, {{"a", "two"}}, 1);
    CHECK(r.aligned.at("a") == "two");
    CHECK_FALSE(r.aligned.contains("b"));
    CHECK(r.missing == 1);
}

}  // TEST_SUITE

TEST_SUITE("metrics") {

TEST_CASE("normalization") {
    CHECK(eval::normalize_answer("  The Cat! ") == U"the cat");
    CHECK(eval::normalize_answer("\xC3\x89t\xC3\xA9") == U"été");
    CHECK(eval::normalize_answer("\xE3\x80\x8C東京\xE3\x80\x8D\xE3\x80\x82") == U"東京");
    CHECK(eval::normalize_answer("a\xEF\xBC\x8C" "b") == U"ab");  // fullwidth comma
    CHECK(eval::normalize_answer("...") == U"");
}

TEST_CASE("score_example: max over references, empty vs empty") {
    auto s = eval::score_example("Paris", {"London", "paris."});
    CHECK(s.em == 1.0);
    CHECK(s.f1 == 1.0);
    s = eval::score_example("", {"!"});
    CHECK(s.em == 1.0);
    s = eval::score_example("ab", {"abcd"});
    CHECK(s.em == 0.0);
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(eval::score_example("x", {}), ScoringError);
}

TEST_CASE("evaluate_dataset matches a scripted oracle on 1000 examples") {
    Rng rng(21);
    std::vector<data::MRCExample> examples;
    data::Predictions preds;
    double em = 0, f1 = 0;
    for (int i = 0; i < 1000; ++i) {
        data::MRCExample ex;
        ex.id = "q" + std::to_string(i);
        std::vector<std::string> refs;
        for (std::size_t r = 0, n = 1 + rng.below(3); r < n; ++r) {
            refs.push_back(random_text(rng, 1 + rng.below(6), "abAB .,"));
            ex.answers.push_back({refs.back(), 0});
        }
        examples.push_back(ex);
        if (rng.bernoulli(0.1)) continue;  // missing prediction scores 0
        std::string p = rng.bernoulli(0.3) ? refs[0] : random_text(rng, rng.below(6), "abAB .,!");
        preds[ex.id] = p;
        const auto [e, f] = score_ascii(p, refs);
        em += e;
        f1 += f;
    }
    std::reverse(examples.begin(), examples.end());
    const auto r = eval::evaluate_dataset(preds, examples);
    CHECK(std::abs(r.em - 100.0 * em / 1000.0) < 1e-9);
    CHECK(std::abs(r.f1 - 100.0 * f1 / 1000.0) < 1e-9);
    CHECK(r.per_example.front().id == "q0");

    examples.push_back(examples[0]);
    CHECK_THROWS_AS(eval::evaluate_dataset(preds, examples), DataError);
}

}  // TEST_SUITE
