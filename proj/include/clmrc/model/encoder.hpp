#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "clmrc/num/optim.hpp"
#include "clmrc/num/rng.hpp"
#include "clmrc/num/tape.hpp"
#include "clmrc/text/encode.hpp"

namespace clmrc::model {

using num::Matrix;

struct EncoderConfig {
    std::size_t vocab_size = 256;
    std::size_t hidden_size = 64;
    std::size_t num_layers = 2;
    std::size_t num_heads = 4;
    std::size_t ffn_size = 256;
    std::size_t max_len = 64;
    double dropout_rate = 0.1;
    /// Standard deviation of the truncated-normal initializer.
    double init_std = 0.02;
    std::uint64_t seed = 13;

    /// Throws ConfigError unless hidden_size % num_heads == 0 and dropout in [0, 1).
    void validate() const;
};

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& doc, EncoderConfig defaults = {});

struct LayerParams {
    Matrix query_weight, query_bias;
    Matrix key_weight;
    Matrix value_weight, value_bias;
    Matrix output_weight, output_bias;
    Matrix attention_norm_gain, attention_norm_bias;
    Matrix ffn_in_weight, ffn_in_bias;
    Matrix ffn_out_weight, ffn_out_bias;
    Matrix ffn_norm_gain, ffn_norm_bias;
};

/// One instance serves every language: both inputs of the dual model are
/// encoded through the same object.
struct EncoderParams {
    EncoderConfig config;
    Matrix token_embedding;     // vocab_size x h
    Matrix segment_embedding;   // 2 x h
    Matrix position_embedding;  // max_len x h
    std::vector<LayerParams> layers;

    void append_parameters(num::ParameterList& out, const std::string& prefix = "encoder.");
    std::size_t parameter_count();
};

/// Truncated normal (std init_std, cut at 2 sigma) weights and embeddings,
/// zero biases, unit layer-norm gains.
EncoderParams init_encoder(const EncoderConfig& config);

/// Draws a weight matrix from the same initializer, for heads built on top.
Matrix init_weight(std::size_t rows, std::size_t cols, num::Rng& rng, double stddev = 0.02);

/// Post-norm transformer stack over embedding sums; returns B (L x h).
/// Dropout runs only when train_mode is set, drawing from dropout_rng.
num::Var encode(num::Tape& tape, const text::EncodedPair& pair, const EncoderParams& params, bool train_mode,
                num::Rng* dropout_rng = nullptr);

}  // namespace clmrc::model
