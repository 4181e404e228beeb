#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "clmrc/data/example.hpp"

namespace clmrc::data {

struct LoadOptions {
    /// Repair answers whose offset disagrees with the context by searching
    /// the first occurrence of the answer text.
    bool repair_offsets = true;
    std::string language_tag = "target";
};

struct LoadReport {
    std::size_t examples = 0;
    std::vector<std::string> repaired_ids;
};

/// SQuAD v1.1: data[] -> {title, paragraphs[] -> {context, qas[] -> {id, question, answers[] -> {text, answer_start}}}}.
/// Schema violations raise ParseError with a JSON path; unrepairable
/// offsets raise ValidationError listing the qa ids.
std::vector<MRCExample> parse_squad(const nlohmann::json& doc, const LoadOptions& options = {},
                                    LoadReport* report = nullptr);
std::vector<MRCExample> load_squad_json(const std::filesystem::path& path, const LoadOptions& options = {},
                                        LoadReport* report = nullptr);

/// One article per example, titled by its id.
nlohmann::json to_squad(const std::vector<MRCExample>& examples);
void save_squad_json(const std::filesystem::path& path, const std::vector<MRCExample>& examples);

Predictions load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, const Predictions& predictions);

/// Deterministic pretty-printed JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace clmrc::data
