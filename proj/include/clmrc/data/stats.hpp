#pragma once

#include <cstddef>
#include <span>

#include "json.hpp"

#include "clmrc/data/example.hpp"

namespace clmrc::data {

/// Character-length distribution. Percentiles use the nearest-rank method.
struct LengthSummary {
    double mean = 0.0;
    std::size_t p50 = 0;
    std::size_t p90 = 0;
    std::size_t p99 = 0;
    std::size_t max = 0;
};

struct DatasetStats {
    std::size_t question_count = 0;
    std::size_t passage_count = 0;  // distinct passage texts
    std::size_t answer_count = 0;
    double answers_per_question = 0.0;
    LengthSummary passage_chars;
    LengthSummary question_chars;
    LengthSummary answer_chars;
};

/// Throws DataError on an empty input.
DatasetStats dataset_stats(std::span<const MRCExample> examples);

nlohmann::json to_json(const DatasetStats& stats);

}  // namespace clmrc::data
