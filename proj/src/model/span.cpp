#include "clmrc/model/span.hpp"

#include "clmrc/errors.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::model {

using num::Var;

std::string_view to_string(PackingKind kind) {
    switch (kind) {
        case PackingKind::reader: return "reader";
        case PackingKind::aligner: return "aligner";
        case PackingKind::verifier: return "verifier";
    }
    return "reader";
}

PackingKind parse_packing_kind(std::string_view name) {
    if (name == "reader") return PackingKind::reader;
    if (name == "aligner") return PackingKind::aligner;
    if (name == "verifier") return PackingKind::verifier;
    throw ConfigError("unknown single-encoder model kind '" + std::string(name) + "'");
}

text::EncodedPair pack_input(PackingKind kind, const std::optional<std::string>& question,
                             const std::optional<std::string>& translated_answer, std::string_view passage,
                             const text::Vocabulary& vocab, std::size_t max_len) {
    auto need = [&](const std::optional<std::string>& field, const char* what) -> const std::string& {
        if (!field || field->empty())
            throw PackingError(std::string(to_string(kind)) + " packing needs a " + what);
        return *field;
    };
    if (passage.empty()) throw PackingError("packing needs a passage");
    std::vector<std::string> leading;
    switch (kind) {
        case PackingKind::reader: leading = {need(question, "question")}; break;
        case PackingKind::aligner: leading = {need(translated_answer, "translated answer")}; break;
        case PackingKind::verifier:
            leading = {need(question, "question"), need(translated_answer, "translated answer")};
            break;
    }
    return text::encode_segments(leading, passage, vocab, max_len);
}

SpanHead SpanHead::init(std::size_t width, num::Rng& rng, double stddev) {
    return {init_weight(width, 2, rng, stddev), Matrix(1, 2)};
}

void SpanHead::append_parameters(num::ParameterList& out, const std::string& prefix) {
    out.push_back({prefix + "weight", &weight});
    out.push_back({prefix + "bias", &bias});
}

SpanDistributions span_logits(num::Tape& tape, Var representation, const SpanHead& head, const num::Mask& mask) {
    if (representation.cols() != head.weight.rows())
        throw DimensionError("span head of width " + std::to_string(head.weight.rows()) + " on representation " +
                             representation.value().shape_string());
    const Var logits = num::transpose(num::affine(representation, tape.parameter(head.weight), tape.parameter(head.bias)));
    const Var probs = num::masked_softmax(logits, mask);
    return {num::slice_rows(probs, 0, 1), num::slice_rows(probs, 1, 1)};
}

Var span_loss(const SpanDistributions& dist, TokenSpan gold, const num::Mask& mask, std::string_view example_id) {
    const std::size_t len = dist.start.cols();
    auto allowed = [&](std::size_t t) { return t < len && (mask.empty() || mask[t]); };
    if (gold.start > gold.end || !allowed(gold.start) || !allowed(gold.end))
        throw SupervisionError("example '" + std::string(example_id) + "': gold span (" + std::to_string(gold.start) +
                               ", " + std::to_string(gold.end) + ") lies outside the prediction mask");
    return num::add(num::cross_entropy(dist.start, gold.start, mask), num::cross_entropy(dist.end, gold.end, mask));
}

Var mean_loss(const std::vector<Var>& losses) {
    if (losses.empty()) throw Error("mean_loss of an empty batch");
    Var total = losses.front();
    for (std::size_t i = 1; i < losses.size(); ++i) total = num::add(total, losses[i]);
    return num::scale(total, 1.0 / static_cast<double>(losses.size()));
}

SpanPrediction decode_span(const Matrix& start_probs, const Matrix& end_probs, const text::EncodedPair& pair,
                           std::size_t max_answer_len) {
    if (max_answer_len == 0) throw DecodeError("max_answer_len must be at least 1");
    if (start_probs.size() < pair.passage_end || end_probs.size() < pair.passage_end)
        throw DimensionError("distributions shorter than the passage range");
    bool found = false;
    SpanPrediction best;
    for (std::size_t i = pair.passage_begin; i < pair.passage_end; ++i) {
        const std::size_t last = std::min(pair.passage_end, i + max_answer_len);
        for (std::size_t j = i; j < last; ++j) {
            const double score = start_probs[i] * end_probs[j];
            if (!found || score > best.score) {
                found = true;
                best.score = score;
                best.span = {i, j};
            }
        }
    }
    if (!found) throw DecodeError("no valid answer span: the passage has no tokens");
    best.start_probability = start_probs[best.span.start];
    best.end_probability = end_probs[best.span.end];
    best.char_start = pair.token_to_char(best.span.start).first;
    best.char_end = pair.token_to_char(best.span.end).second;
    best.text = text::span_text(pair, best.span);
    return best;
}

SingleEncoderModel SingleEncoderModel::init(PackingKind kind, const EncoderConfig& config) {
    SingleEncoderModel m;
    m.kind = kind;
    m.encoder = init_encoder(config);
    num::Rng rng(num::Rng::derive(config.seed, 0x4EAD));
    m.head = SpanHead::init(config.hidden_size, rng, config.init_std);
    return m;
}

num::ParameterList SingleEncoderModel::parameters() {
    num::ParameterList out;
    encoder.append_parameters(out);
    head.append_parameters(out, "span_head.");
    return out;
}

PreparedExample prepare_example(PackingKind kind, const data::MRCExample& example,
                                const std::optional<std::string>& translated_answer, const text::Vocabulary& vocab,
                                std::size_t max_len) {
    PreparedExample out;
    out.id = example.id;
    out.pair = text::trim_padding(pack_input(kind, example.question, translated_answer, example.passage, vocab, max_len));
    if (!example.answers.empty()) {
        const auto& a = example.answers.front();
        const std::size_t len = text::code_point_length(a.text);
        if (len > 0) out.gold = text::char_span_to_token_span(out.pair, a.char_start, len);
    }
    return out;
}

Var single_example_loss(num::Tape& tape, const SingleEncoderModel& model, const PreparedExample& ex, bool train_mode,
                        num::Rng* dropout_rng) {
    if (!ex.gold) throw SupervisionError("example '" + ex.id + "' has no resolvable gold span");
    const Var rep = encode(tape, ex.pair, model.encoder, train_mode, dropout_rng);
    const num::Mask mask = ex.pair.passage_mask();
    return span_loss(span_logits(tape, rep, model.head, mask), *ex.gold, mask, ex.id);
}

SpanPrediction predict_span(const SingleEncoderModel& model, const PreparedExample& ex, std::size_t max_answer_len) {
    num::Tape tape;
    const Var rep = encode(tape, ex.pair, model.encoder, false);
    const SpanDistributions dist = span_logits(tape, rep, model.head, ex.pair.passage_mask());
    SpanPrediction p = decode_span(dist.start.value(), dist.end.value(), ex.pair, max_answer_len);
    p.provenance = std::string(to_string(model.kind));
    return p;
}

}  // namespace clmrc::model
