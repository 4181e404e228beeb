#pragma once

// Bilingual span model over one shared encoder.
//
// Target path:  B_T, B_S -> self-adaptive attention -> R'
//               R = R' W_r + b_r,  H_T = [B_T, LayerNorm(B_T + R)]
//               start/end = masked softmax of H_T W_T + b
// Source path:  start/end = masked softmax of B_S W_S + b_S
// Loss:         L_T + lambda * L_aux, lambda = max(0, cos(span_rep_S, span_rep_T)),
//               lambda carries no gradient.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "clmrc/data/example.hpp"
#include "clmrc/data/translate.hpp"
#include "clmrc/model/encoder.hpp"
#include "clmrc/model/span.hpp"

namespace clmrc::model {

struct SaaOptions {
    /// false replaces the adapted attention with the raw B_T B_S^T scores (ablation).
    bool adaptive = true;
    /// Split h into this many column groups and run the attention per group.
    std::size_t heads = 1;
};

struct SaaHeadTrace {
    num::Var self_target;   // A_T  = softmax(B_T B_T^T), L_T x L_T
    num::Var self_source;   // A_S  = softmax(B_S B_S^T), L_S x L_S
    num::Var cross;         // A_TS = B_T B_S^T,          L_T x L_S
    num::Var adapted;       // A_T A_TS A_S^T,            L_T x L_S
    num::Var weights;       // softmax(adapted),          L_T x L_S
};

struct SaaResult {
    num::Var attended;  // R', L_T x h
    std::vector<SaaHeadTrace> heads;
};

/// Self-adaptive attention of the target encoding over the source encoding.
/// Softmaxes are row-wise with key padding masked; no scaling is applied.
SaaResult saa_attention(num::Var target, num::Var source, const num::Mask& target_mask, const num::Mask& source_mask,
                        const SaaOptions& options = {});

/// H_T = concat[B_T, LayerNorm(B_T + R' W_r + b_r)], width 2h.
num::Var fuse(num::Var target, num::Var attended, num::Var weight, num::Var bias, num::Var norm_gain,
              num::Var norm_bias);

/// concat[B[start], B[end], mean_rows(softmax(S S^T) S)] with S = B[start..end].
/// Works on values; throws SpanError on an invalid span.
std::vector<double> span_representation(const Matrix& encoding, TokenSpan span);

struct LambdaValue {
    double value = 0.0;
    bool detached = true;
};

/// max(0, cosine(rep_source, rep_target)); 0 with a warning on a zero vector.
LambdaValue dynamic_lambda(const std::vector<double>& rep_source, const std::vector<double>& rep_target);

enum class LambdaMode { dynamic, fixed };

struct DualConfig {
    SaaOptions saa;
    LambdaMode lambda_mode = LambdaMode::dynamic;
    double fixed_lambda = 0.0;
    /// Restrict span softmaxes to passage tokens; false spans the whole sequence.
    bool passage_only = true;
    /// Start each source word's embedding as a copy of its dictionary
    /// translation when training with a dictionary.
    bool tie_lexicon = true;
};

nlohmann::json to_json(const DualConfig& config);
DualConfig dual_config_from_json(const nlohmann::json& doc);

struct DualParams {
    EncoderParams encoder;
    Matrix fuse_weight;     // h x h
    Matrix fuse_bias;       // 1 x h
    Matrix fuse_norm_gain;  // 1 x h
    Matrix fuse_norm_bias;  // 1 x h
    SpanHead target_head;   // 2h x 2
    SpanHead source_head;   // h x 2

    static DualParams init(const EncoderConfig& config);
    num::ParameterList parameters();
};

/// Copies the embedding row of every lexicon target word onto its source
/// word, so translations start out with identical encodings (a stand-in
/// for a multilingual pretrained encoder). Pairs with an unknown side are
/// skipped. Returns the number of rows written.
std::size_t tie_translation_embeddings(EncoderParams& encoder, const text::Vocabulary& vocab,
                                       const data::Lexicon& lexicon);

struct PreparedDual {
    std::string id;
    text::EncodedPair target;  // padding trimmed
    text::EncodedPair source;
    TokenSpan target_gold;
    std::optional<TokenSpan> source_gold;  // empty when the source span is unusable
};

/// Packs both sides as reader inputs and resolves gold spans. Throws
/// SupervisionError when the target span cannot be resolved.
PreparedDual prepare_dual(const data::BilingualExample& example, const text::Vocabulary& target_vocab,
                          const text::Vocabulary& source_vocab, std::size_t max_len, bool require_target_gold = true);

struct DualOutput {
    num::Var total;
    num::Var target_loss;
    std::optional<num::Var> aux_loss;  // absent when the source span is unusable
    double lambda = 0.0;
    SpanDistributions target;
    SpanDistributions source;
};

/// Forward pass and joint loss for one example. lambda_override,
/// when set, replaces the configured lambda (used to freeze lambda for
/// gradient checks and to force the mixing weight in tests).
DualOutput dual_forward_loss(num::Tape& tape, const PreparedDual& example, const DualParams& params,
                             const DualConfig& config, bool train_mode, num::Rng* dropout_rng,
                             std::optional<double> lambda_override = std::nullopt);

/// Target-side distributions without supervision.
SpanDistributions dual_target_distributions(num::Tape& tape, const PreparedDual& example, const DualParams& params,
                                            const DualConfig& config);

SpanPrediction dual_predict(const DualParams& params, const PreparedDual& example, const DualConfig& config,
                            std::size_t max_answer_len);

}  // namespace clmrc::model
