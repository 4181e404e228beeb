#include "clmrc/model/dual.hpp"

#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::model {

using num::Var;

namespace {

SaaHeadTrace saa_head(Var target, Var source, const num::Mask& target_mask, const num::Mask& source_mask,
                      bool adaptive) {
    SaaHeadTrace t;
    t.cross = num::matmul_nt(target, source);
    if (adaptive) {
        t.self_target = num::masked_softmax(num::matmul_nt(target, target), target_mask);
        t.self_source = num::masked_softmax(num::matmul_nt(source, source), source_mask);
        t.adapted = num::matmul_nt(num::matmul(t.self_target, t.cross), t.self_source);
    } else {
        t.adapted = t.cross;
    }
    t.weights = num::masked_softmax(t.adapted, source_mask);
    return t;
}

}  // namespace

SaaResult saa_attention(Var target, Var source, const num::Mask& target_mask, const num::Mask& source_mask,
                        const SaaOptions& options) {
    if (target.cols() != source.cols())
        throw DimensionError("saa_attention: widths differ, " + target.value().shape_string() + " vs " +
                             source.value().shape_string());
    if (target_mask.size() != target.rows() || source_mask.size() != source.rows())
        throw DimensionError("saa_attention: masks of length " + std::to_string(target_mask.size()) + "/" +
                             std::to_string(source_mask.size()) + " for encodings " + target.value().shape_string() +
                             " and " + source.value().shape_string());
    const std::size_t heads = options.heads == 0 ? 1 : options.heads;
    if (target.cols() % heads != 0) throw ConfigError("saa heads must divide the hidden size");

    SaaResult result;
    if (heads == 1) {
        result.heads.push_back(saa_head(target, source, target_mask, source_mask, options.adaptive));
        result.attended = num::matmul(result.heads.back().weights, source);
        return result;
    }
    const std::size_t width = target.cols() / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        const Var src = num::slice_cols(source, h * width, width);
        result.heads.push_back(saa_head(num::slice_cols(target, h * width, width), src, target_mask, source_mask,
                                        options.adaptive));
        const Var part = num::matmul(result.heads.back().weights, src);
        result.attended = h == 0 ? part : num::concat_cols(result.attended, part);
    }
    return result;
}

Var fuse(Var target, Var attended, Var weight, Var bias, Var norm_gain, Var norm_bias) {
    if (!target.value().same_shape(attended.value()))
        throw DimensionError("fuse: B_T " + target.value().shape_string() + " vs R' " + attended.value().shape_string());
    const Var projected = num::affine(attended, weight, bias);
    return num::concat_cols(target, num::layer_norm(num::add(target, projected), norm_gain, norm_bias));
}

std::vector<double> span_representation(const Matrix& encoding, TokenSpan span) {
    if (span.start > span.end || span.end >= encoding.rows())
        throw SpanError("span (" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                        ") invalid for an encoding of " + std::to_string(encoding.rows()) + " rows");
    num::Tape scratch;
    const Var rows = num::slice_rows(scratch.constant(encoding), span.start, span.length());
    const Var scores = num::softmax(num::matmul_nt(rows, rows));
    const Var pooled = num::mean_rows(num::matmul(scores, rows));
    std::vector<double> rep;
    rep.reserve(3 * encoding.cols());
    const auto start = encoding.row(span.start);
    const auto end = encoding.row(span.end);
    rep.insert(rep.end(), start.begin(), start.end());
    rep.insert(rep.end(), end.begin(), end.end());
    rep.insert(rep.end(), pooled.value().values().begin(), pooled.value().values().end());
    return rep;
}

LambdaValue dynamic_lambda(const std::vector<double>& rep_source, const std::vector<double>& rep_target) {
    try {
        return {std::max(0.0, num::cosine_similarity(rep_source, rep_target)), true};
    } catch (const DegenerateVectorError&) {
        spdlog::warn("zero-norm span representation; lambda set to 0");
        return {0.0, true};
    }
}

nlohmann::json to_json(const DualConfig& c) {
    return {{"saa_adaptive", c.saa.adaptive},
            {"saa_heads", c.saa.heads},
            {"lambda_mode", c.lambda_mode == LambdaMode::dynamic ? "dynamic" : "fixed"},
            {"fixed_lambda", c.fixed_lambda},
            {"passage_only", c.passage_only},
            {"tie_lexicon", c.tie_lexicon}};
}

DualConfig dual_config_from_json(const nlohmann::json& doc) {
    DualConfig c;
    c.saa.adaptive = doc.value("saa_adaptive", c.saa.adaptive);
    c.saa.heads = doc.value("saa_heads", c.saa.heads);
    const std::string mode = doc.value("lambda_mode", std::string("dynamic"));
    if (mode != "dynamic" && mode != "fixed") throw ConfigError("lambda_mode must be dynamic or fixed");
    c.lambda_mode = mode == "dynamic" ? LambdaMode::dynamic : LambdaMode::fixed;
    c.fixed_lambda = doc.value("fixed_lambda", c.fixed_lambda);
    if (c.fixed_lambda < 0.0 || c.fixed_lambda > 1.0) throw ConfigError("fixed_lambda must lie in [0, 1]");
    c.passage_only = doc.value("passage_only", c.passage_only);
    c.tie_lexicon = doc.value("tie_lexicon", c.tie_lexicon);
    return c;
}

std::size_t tie_translation_embeddings(EncoderParams& encoder, const text::Vocabulary& vocab,
                                       const data::Lexicon& lexicon) {
    Matrix& e = encoder.token_embedding;
    std::size_t n = 0;
    for (const auto& [source, target] : lexicon.pairs) {
        const std::size_t s = vocab.id(source), t = vocab.id(target);
        if (s == text::Vocabulary::kUnk || t == text::Vocabulary::kUnk || s == t) continue;
        if (s >= e.rows() || t >= e.rows()) throw DimensionError("vocabulary larger than the embedding table");
        for (std::size_t c = 0; c < e.cols(); ++c) e(s, c) = e(t, c);
        ++n;
    }
    return n;
}

DualParams DualParams::init(const EncoderConfig& config) {
    DualParams p;
    p.encoder = init_encoder(config);
    const std::size_t h = config.hidden_size;
    num::Rng rng(num::Rng::derive(config.seed, 0xD0A1));
    p.fuse_weight = init_weight(h, h, rng, config.init_std);
    p.fuse_bias = Matrix(1, h);
    p.fuse_norm_gain = Matrix(1, h, 1.0);
    p.fuse_norm_bias = Matrix(1, h);
    p.target_head = SpanHead::init(2 * h, rng, config.init_std);
    p.source_head = SpanHead::init(h, rng, config.init_std);
    return p;
}

num::ParameterList DualParams::parameters() {
    num::ParameterList out;
    encoder.append_parameters(out);
    out.push_back({"fusion.weight", &fuse_weight});
    out.push_back({"fusion.bias", &fuse_bias});
    out.push_back({"fusion.norm.gain", &fuse_norm_gain});
    out.push_back({"fusion.norm.bias", &fuse_norm_bias});
    target_head.append_parameters(out, "target_head.");
    source_head.append_parameters(out, "source_head.");
    return out;
}

PreparedDual prepare_dual(const data::BilingualExample& example, const text::Vocabulary& target_vocab,
                          const text::Vocabulary& source_vocab, std::size_t max_len, bool require_target_gold) {
    PreparedDual out;
    out.id = example.target.id;
    out.target = text::trim_padding(
        text::encode_pair(example.target.question, example.target.passage, target_vocab, max_len));
    out.source = text::trim_padding(
        text::encode_pair(example.source.question, example.source.passage, source_vocab, max_len));

    auto resolve = [](const text::EncodedPair& pair, const data::MRCExample& ex) -> std::optional<TokenSpan> {
        if (ex.answers.empty()) return std::nullopt;
        const auto& a = ex.answers.front();
        const std::size_t len = text::code_point_length(a.text);
        if (len == 0) return std::nullopt;
        return text::char_span_to_token_span(pair, a.char_start, len);
    };
    const auto target_gold = resolve(out.target, example.target);
    if (target_gold)
        out.target_gold = *target_gold;
    else if (require_target_gold)
        throw SupervisionError("example '" + out.id + "': target gold span cannot be resolved");
    if (example.source_span_valid) out.source_gold = resolve(out.source, example.source);
    return out;
}

namespace {

struct Encodings {
    Var target;
    Var source;
};

Encodings encode_both(num::Tape& tape, const PreparedDual& ex, const DualParams& params, bool train_mode,
                      num::Rng* rng) {
    // one EncoderParams instance serves both languages
    const Var bt = encode(tape, ex.target, params.encoder, train_mode, rng);
    const Var bs = encode(tape, ex.source, params.encoder, train_mode, rng);
    return {bt, bs};
}

SpanDistributions target_path(num::Tape& tape, const Encodings& enc, const PreparedDual& ex, const DualParams& params,
                              const DualConfig& config) {
    const SaaResult saa = saa_attention(enc.target, enc.source, ex.target.attention_mask, ex.source.attention_mask,
                                        config.saa);
    const Var fused = fuse(enc.target, saa.attended, tape.parameter(params.fuse_weight), tape.parameter(params.fuse_bias),
                           tape.parameter(params.fuse_norm_gain), tape.parameter(params.fuse_norm_bias));
    const num::Mask mask = config.passage_only ? ex.target.passage_mask() : ex.target.attention_mask;
    return span_logits(tape, fused, params.target_head, mask);
}

}  // namespace

SpanDistributions dual_target_distributions(num::Tape& tape, const PreparedDual& example, const DualParams& params,
                                            const DualConfig& config) {
    return target_path(tape, encode_both(tape, example, params, false, nullptr), example, params, config);
}

DualOutput dual_forward_loss(num::Tape& tape, const PreparedDual& ex, const DualParams& params, const DualConfig& config,
                             bool train_mode, num::Rng* dropout_rng, std::optional<double> lambda_override) {
    const Encodings enc = encode_both(tape, ex, params, train_mode, dropout_rng);
    DualOutput out;
    out.target = target_path(tape, enc, ex, params, config);
    const num::Mask target_mask = config.passage_only ? ex.target.passage_mask() : ex.target.attention_mask;
    out.target_loss = span_loss(out.target, ex.target_gold, target_mask, ex.id);

    const num::Mask source_mask = config.passage_only ? ex.source.passage_mask() : ex.source.attention_mask;
    out.source = span_logits(tape, enc.source, params.source_head, source_mask);
    if (!ex.source_gold) {
        out.lambda = 0.0;
        out.total = out.target_loss;
        return out;
    }
    out.aux_loss = span_loss(out.source, *ex.source_gold, source_mask, ex.id);

    if (lambda_override) {
        out.lambda = *lambda_override;
    } else if (config.lambda_mode == LambdaMode::fixed) {
        out.lambda = config.fixed_lambda;
    } else {
        out.lambda = dynamic_lambda(span_representation(enc.source.value(), *ex.source_gold),
                                    span_representation(enc.target.value(), ex.target_gold))
                         .value;
    }
    // lambda enters as a constant: no gradient flows into it
    out.total = num::add(out.target_loss, num::scale(*out.aux_loss, out.lambda));
    return out;
}

SpanPrediction dual_predict(const DualParams& params, const PreparedDual& example, const DualConfig& config,
                            std::size_t max_answer_len) {
    num::Tape tape;
    const SpanDistributions dist = dual_target_distributions(tape, example, params, config);
    SpanPrediction p = decode_span(dist.start.value(), dist.end.value(), example.target, max_answer_len);
    p.provenance = "dual";
    return p;
}

}  // namespace clmrc::model
