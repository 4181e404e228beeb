#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clmrc/data/example.hpp"
#include "clmrc/model/encoder.hpp"
#include "clmrc/num/ops.hpp"
#include "clmrc/text/encode.hpp"

namespace clmrc::model {

using text::TokenSpan;

/// reader: [CLS] Q [SEP] P [SEP]
/// aligner: [CLS] A_trans [SEP] P [SEP]
/// verifier: [CLS] Q [SEP] A_trans [SEP] P [SEP]
enum class PackingKind { reader, aligner, verifier };

std::string_view to_string(PackingKind kind);
PackingKind parse_packing_kind(std::string_view name);

/// Throws PackingError when a field the kind needs is absent or empty.
text::EncodedPair pack_input(PackingKind kind, const std::optional<std::string>& question,
                             const std::optional<std::string>& translated_answer, std::string_view passage,
                             const text::Vocabulary& vocab, std::size_t max_len);

/// Projection from a representation row to (start, end) logits.
struct SpanHead {
    Matrix weight;  // width x 2
    Matrix bias;    // 1 x 2

    static SpanHead init(std::size_t width, num::Rng& rng, double stddev = 0.02);
    void append_parameters(num::ParameterList& out, const std::string& prefix);
};

struct SpanDistributions {
    num::Var start;  // 1 x L, zero outside the mask
    num::Var end;
};

/// Start/end distributions from the two logit columns of rep * W + b,
/// each a masked softmax over positions.
SpanDistributions span_logits(num::Tape& tape, num::Var representation, const SpanHead& head, const num::Mask& mask);

/// cross_entropy(start, gold.start) + cross_entropy(end, gold.end) for one
/// example. Throws SupervisionError naming example_id when the gold span
/// is outside the mask.
num::Var span_loss(const SpanDistributions& dist, TokenSpan gold, const num::Mask& mask, std::string_view example_id);

/// Mean of per-example span losses (batch reduction).
num::Var mean_loss(const std::vector<num::Var>& losses);

struct SpanPrediction {
    TokenSpan span;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string text;
    double start_probability = 0.0;
    double end_probability = 0.0;
    double score = 0.0;
    std::string provenance;
};

/// argmax of P_s[i] * P_e[j] over passage positions with i <= j and
/// j - i + 1 <= max_answer_len; ties go to smaller i, then smaller j.
SpanPrediction decode_span(const Matrix& start_probs, const Matrix& end_probs, const text::EncodedPair& pair,
                           std::size_t max_answer_len);

/// Encoder plus one span head over h: the reader, aligner and verifier.
struct SingleEncoderModel {
    PackingKind kind = PackingKind::reader;
    EncoderParams encoder;
    SpanHead head;

    static SingleEncoderModel init(PackingKind kind, const EncoderConfig& config);
    num::ParameterList parameters();
};

/// A packed example with its resolved supervision.
struct PreparedExample {
    std::string id;
    text::EncodedPair pair;  // padding trimmed
    std::optional<TokenSpan> gold;
};

/// Packs and resolves the first answer's span; gold is nullopt if the
/// answer is missing or truncated away.
PreparedExample prepare_example(PackingKind kind, const data::MRCExample& example,
                                const std::optional<std::string>& translated_answer, const text::Vocabulary& vocab,
                                std::size_t max_len);

/// Loss of one prepared example (requires gold).
num::Var single_example_loss(num::Tape& tape, const SingleEncoderModel& model, const PreparedExample& ex,
                             bool train_mode, num::Rng* dropout_rng);

SpanPrediction predict_span(const SingleEncoderModel& model, const PreparedExample& ex, std::size_t max_answer_len);

}  // namespace clmrc::model
