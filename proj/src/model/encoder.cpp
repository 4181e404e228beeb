#include "clmrc/model/encoder.hpp"

#include <cmath>
#include <numeric>

#include "clmrc/errors.hpp"
#include "clmrc/num/ops.hpp"

namespace clmrc::model {

using num::Var;

void EncoderConfig::validate() const {
    if (hidden_size == 0 || num_heads == 0 || hidden_size % num_heads != 0)
        throw ConfigError("hidden_size " + std::to_string(hidden_size) + " is not divisible by num_heads " +
                          std::to_string(num_heads));
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (vocab_size < 5) throw ConfigError("vocab_size must be at least 5");
    if (max_len < 4) throw ConfigError("max_len must be at least 4");
    if (ffn_size == 0) throw ConfigError("ffn_size must be positive");
    if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

nlohmann::json to_json(const EncoderConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"hidden_size", c.hidden_size}, {"num_layers", c.num_layers},
            {"num_heads", c.num_heads},   {"ffn_size", c.ffn_size},       {"max_len", c.max_len},
            {"dropout_rate", c.dropout_rate}, {"init_std", c.init_std}, {"seed", c.seed}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& doc, EncoderConfig c) {
    c.vocab_size = doc.value("vocab_size", c.vocab_size);
    c.hidden_size = doc.value("hidden_size", c.hidden_size);
    c.num_layers = doc.value("num_layers", c.num_layers);
    c.num_heads = doc.value("num_heads", c.num_heads);
    c.ffn_size = doc.value("ffn_size", c.ffn_size);
    c.max_len = doc.value("max_len", c.max_len);
    c.dropout_rate = doc.value("dropout_rate", c.dropout_rate);
    c.init_std = doc.value("init_std", c.init_std);
    c.seed = doc.value("seed", c.seed);
    return c;
}

Matrix init_weight(std::size_t rows, std::size_t cols, num::Rng& rng, double stddev) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.truncated_normal(stddev);
    return m;
}

void EncoderParams::append_parameters(num::ParameterList& out, const std::string& prefix) {
    out.push_back({prefix + "token_embedding", &token_embedding});
    out.push_back({prefix + "segment_embedding", &segment_embedding});
    out.push_back({prefix + "position_embedding", &position_embedding});
    for (std::size_t i = 0; i < layers.size(); ++i) {
        LayerParams& l = layers[i];
        const std::string p = prefix + "layer" + std::to_string(i) + ".";
        out.push_back({p + "attention.query.weight", &l.query_weight});
        out.push_back({p + "attention.query.bias", &l.query_bias});
        out.push_back({p + "attention.key.weight", &l.key_weight});
        out.push_back({p + "attention.value.weight", &l.value_weight});
        out.push_back({p + "attention.value.bias", &l.value_bias});
        out.push_back({p + "attention.output.weight", &l.output_weight});
        out.push_back({p + "attention.output.bias", &l.output_bias});
        out.push_back({p + "attention.norm.gain", &l.attention_norm_gain});
        out.push_back({p + "attention.norm.bias", &l.attention_norm_bias});
        out.push_back({p + "ffn.in.weight", &l.ffn_in_weight});
        out.push_back({p + "ffn.in.bias", &l.ffn_in_bias});
        out.push_back({p + "ffn.out.weight", &l.ffn_out_weight});
        out.push_back({p + "ffn.out.bias", &l.ffn_out_bias});
        out.push_back({p + "ffn.norm.gain", &l.ffn_norm_gain});
        out.push_back({p + "ffn.norm.bias", &l.ffn_norm_bias});
    }
}

std::size_t EncoderParams::parameter_count() {
    num::ParameterList list;
    append_parameters(list);
    return std::accumulate(list.begin(), list.end(), std::size_t{0},
                           [](std::size_t acc, const num::NamedParameter& p) { return acc + p.value->size(); });
}

EncoderParams init_encoder(const EncoderConfig& config) {
    config.validate();
    num::Rng rng(config.seed);
    const std::size_t h = config.hidden_size, f = config.ffn_size;
    EncoderParams p;
    p.config = config;
    p.token_embedding = init_weight(config.vocab_size, h, rng, config.init_std);
    p.segment_embedding = init_weight(2, h, rng, config.init_std);
    p.position_embedding = init_weight(config.max_len, h, rng, config.init_std);
    for (std::size_t i = 0; i < config.num_layers; ++i) {
        LayerParams l;
        l.query_weight = init_weight(h, h, rng, config.init_std);
        l.query_bias = Matrix(1, h);
        l.key_weight = init_weight(h, h, rng, config.init_std);
        l.value_weight = init_weight(h, h, rng, config.init_std);
        l.value_bias = Matrix(1, h);
        l.output_weight = init_weight(h, h, rng, config.init_std);
        l.output_bias = Matrix(1, h);
        l.attention_norm_gain = Matrix(1, h, 1.0);
        l.attention_norm_bias = Matrix(1, h);
        l.ffn_in_weight = init_weight(h, f, rng, config.init_std);
        l.ffn_in_bias = Matrix(1, f);
        l.ffn_out_weight = init_weight(f, h, rng, config.init_std);
        l.ffn_out_bias = Matrix(1, h);
        l.ffn_norm_gain = Matrix(1, h, 1.0);
        l.ffn_norm_bias = Matrix(1, h);
        p.layers.push_back(std::move(l));
    }
    return p;
}

namespace {

Var self_attention(num::Tape& tape, Var x, const LayerParams& l, const num::Mask& key_mask, std::size_t heads) {
    const Var q = num::affine(x, tape.parameter(l.query_weight), tape.parameter(l.query_bias));
    // no key bias: it adds a per-row constant that the softmax cancels
    const Var k = num::matmul(x, tape.parameter(l.key_weight));
    const Var v = num::affine(x, tape.parameter(l.value_weight), tape.parameter(l.value_bias));
    const std::size_t width = x.cols() / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(width));
    Var context;
    for (std::size_t h = 0; h < heads; ++h) {
        const Var qh = num::slice_cols(q, h * width, width);
        const Var kh = num::slice_cols(k, h * width, width);
        const Var vh = num::slice_cols(v, h * width, width);
        const Var weights = num::masked_softmax(num::scale(num::matmul_nt(qh, kh), scale), key_mask);
        const Var head = num::matmul(weights, vh);
        context = h == 0 ? head : num::concat_cols(context, head);
    }
    return num::affine(context, tape.parameter(l.output_weight), tape.parameter(l.output_bias));
}

}  // namespace

Var encode(num::Tape& tape, const text::EncodedPair& pair, const EncoderParams& params, bool train_mode,
           num::Rng* dropout_rng) {
    const EncoderConfig& cfg = params.config;
    const std::size_t len = pair.length();
    if (len == 0 || len > cfg.max_len)
        throw EncodingError("sequence of " + std::to_string(len) + " tokens exceeds max_len " + std::to_string(cfg.max_len));
    for (std::size_t t = 0; t < len; ++t)
        if (pair.token_ids[t] >= cfg.vocab_size)
            throw EncodingError("token id " + std::to_string(pair.token_ids[t]) + " at position " + std::to_string(t) +
                                " outside vocabulary of " + std::to_string(cfg.vocab_size));
    const bool drop = train_mode && cfg.dropout_rate > 0.0;
    if (drop && dropout_rng == nullptr) throw ConfigError("train-mode encoding with dropout needs an rng");

    std::vector<std::size_t> positions(len);
    std::iota(positions.begin(), positions.end(), 0);
    Var x = num::add(num::add(num::gather_rows(tape.parameter(params.token_embedding), pair.token_ids),
                              num::gather_rows(tape.parameter(params.segment_embedding), pair.segment_ids)),
                     num::gather_rows(tape.parameter(params.position_embedding), positions));
    if (drop) x = num::dropout(x, cfg.dropout_rate, *dropout_rng);

    for (const LayerParams& l : params.layers) {
        Var attn = self_attention(tape, x, l, pair.attention_mask, cfg.num_heads);
        if (drop) attn = num::dropout(attn, cfg.dropout_rate, *dropout_rng);
        x = num::layer_norm(num::add(x, attn), tape.parameter(l.attention_norm_gain),
                            tape.parameter(l.attention_norm_bias));
        const Var hidden = num::gelu(num::affine(x, tape.parameter(l.ffn_in_weight), tape.parameter(l.ffn_in_bias)));
        Var ffn = num::affine(hidden, tape.parameter(l.ffn_out_weight), tape.parameter(l.ffn_out_bias));
        if (drop) ffn = num::dropout(ffn, cfg.dropout_rate, *dropout_rng);
        x = num::layer_norm(num::add(x, ffn), tape.parameter(l.ffn_norm_gain), tape.parameter(l.ffn_norm_bias));
    }
    return x;
}

}  // namespace clmrc::model
