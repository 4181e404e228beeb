#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace clmrc::data {

struct Answer {
    std::string text;
    std::size_t char_start = 0;  // code points into the passage

    friend bool operator==(const Answer&, const Answer&) = default;
};

/// One <passage, question, answers> record.
struct MRCExample {
    std::string id;
    std::string passage;
    std::string question;
    std::vector<Answer> answers;
    std::string language_tag;

    friend bool operator==(const MRCExample&, const MRCExample&) = default;
};

/// A target-language example and its translation into the source language.
struct BilingualExample {
    MRCExample target;
    MRCExample source;
    bool source_span_valid = false;
};

/// True when answer.text == passage[char_start, char_start + len) in code points.
bool answer_matches(const MRCExample& example, const Answer& answer);

/// Throws ValidationError naming the example id if any answer violates
/// the substring invariant or, when required, if there is no answer.
void validate_example(const MRCExample& example, bool require_answer = true);

/// qa id -> answer text, the prediction file format.
using Predictions = std::map<std::string, std::string>;

}  // namespace clmrc::data
