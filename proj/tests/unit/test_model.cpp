#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"

#include "clmrc/data/synthetic.hpp"
#include "clmrc/errors.hpp"
#include "clmrc/model/checkpoint.hpp"
#include "clmrc/num/gradcheck.hpp"
#include "clmrc/model/dual.hpp"
#include "clmrc/model/encoder.hpp"
#include "clmrc/model/span.hpp"
#include "clmrc/model/trainer.hpp"

using namespace clmrc;
using namespace testutil;
using num::Mask;

namespace {

text::Vocabulary word_vocab() {
    std::vector<std::string> corpus = {"a b c d e f g h i j k l m n o p q r s t"};
    return text::Vocabulary::build(corpus, text::TokenizerMode::whitespace, 64);
}

model::EncoderConfig small_encoder(std::size_t layers, std::size_t vocab) {
    model::EncoderConfig c;
    c.vocab_size = vocab;
    c.hidden_size = 8;
    c.num_heads = 2;
    c.ffn_size = 12;
    c.num_layers = layers;
    c.max_len = 24;
    c.dropout_rate = 0.0;
    c.init_std = 0.3;
    c.seed = 5;
    return c;
}

Matrix layer_norm_ref(const Matrix& x, const Matrix& gain, const Matrix& bias) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double mean = 0, var = 0;
        for (std::size_t c = 0; c < x.cols(); ++c) mean += x(r, c);
        mean /= x.cols();
        for (std::size_t c = 0; c < x.cols(); ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
        var /= x.cols();
        for (std::size_t c = 0; c < x.cols(); ++c)
            out(r, c) = gain[c] * (x(r, c) - mean) / std::sqrt(var + 1e-12) + bias[c];
    }
    return out;
}

Matrix add_bias(Matrix x, const Matrix& b) {
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) += b[c];
    return x;
}

data::SyntheticDataset tiny_bilingual(std::uint64_t seed, double ambiguity, std::size_t n = 4) {
    data::SyntheticConfig c;
    c.num_examples = n;
    c.filler_vocab = 10;
    c.answer_vocab = 8;
    c.cue_vocab = 4;
    c.passage_min = 8;
    c.passage_max = 10;
    c.answer_max = 2;
    c.segments = 2;
    c.ambiguity_rate = ambiguity;
    c.seed = seed;
    c.lexicon_seed = seed;
    return data::generate_synthetic_bilingual(c);
}

text::Vocabulary lexicon_vocab(const data::Lexicon& lex) {
    std::vector<std::string> corpus;
    for (const auto& [s, t] : lex.pairs) {
        corpus.push_back(s);
        corpus.push_back(t);
    }
    return text::Vocabulary::build(corpus, text::TokenizerMode::whitespace, 256);
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("zero layers: B is the sum of three embedding rows") {
    const auto vocab = word_vocab();
    const auto params = model::init_encoder(small_encoder(0, vocab.size()));
    const auto pair = text::encode_pair("a b", "c d e", vocab, 12);
    Tape tape;
    const Matrix b = model::encode(tape, pair, params, false).value();
    REQUIRE(b.rows() == 12);
    for (std::size_t t = 0; t < 12; ++t)
        for (std::size_t c = 0; c < 8; ++c)
            CHECK(b(t, c) == params.token_embedding(pair.token_ids[t], c) +
                                 params.segment_embedding(pair.segment_ids[t], c) + params.position_embedding(t, c));
}

TEST_CASE("one layer matches a direct evaluation of the post-norm block") {
    const auto vocab = word_vocab();
    const auto params = model::init_encoder(small_encoder(1, vocab.size()));
    const auto pair = text::trim_padding(text::encode_pair("a b", "c d e f", vocab, 12));
    Tape tape;
    const Matrix got = model::encode(tape, pair, params, false).value();

    const std::size_t len = pair.length();
    Matrix x(len, 8);
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t c = 0; c < 8; ++c)
            x(t, c) = params.token_embedding(pair.token_ids[t], c) + params.segment_embedding(pair.segment_ids[t], c) +
                      params.position_embedding(t, c);
    const auto& l = params.layers[0];
    const Matrix q = add_bias(naive_matmul(x, l.query_weight), l.query_bias);
    const Matrix k = naive_matmul(x, l.key_weight);
    const Matrix v = add_bias(naive_matmul(x, l.value_weight), l.value_bias);
    Matrix context(len, 8);
    for (std::size_t h = 0; h < 2; ++h) {
        Matrix scores = naive_matmul(cols(q, 4 * h, 4), naive_transpose(cols(k, 4 * h, 4)));
        for (double& s : scores.values()) s /= 2.0;  // sqrt(4)
        const Matrix head = naive_matmul(naive_softmax(scores, pair.attention_mask), cols(v, 4 * h, 4));
        for (std::size_t r = 0; r < len; ++r)
            for (std::size_t c = 0; c < 4; ++c) context(r, 4 * h + c) = head(r, c);
    }
    Matrix attn = add_bias(naive_matmul(context, l.output_weight), l.output_bias);
    for (std::size_t i = 0; i < attn.size(); ++i) attn[i] += x[i];
    const Matrix y = layer_norm_ref(attn, l.attention_norm_gain, l.attention_norm_bias);
    Matrix hidden = add_bias(naive_matmul(y, l.ffn_in_weight), l.ffn_in_bias);
    for (double& z : hidden.values()) z = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
    Matrix ffn = add_bias(naive_matmul(hidden, l.ffn_out_weight), l.ffn_out_bias);
    for (std::size_t i = 0; i < ffn.size(); ++i) ffn[i] += y[i];
    const Matrix want = layer_norm_ref(ffn, l.ffn_norm_gain, l.ffn_norm_bias);
    CHECK(max_rel_diff(got, want) < 1e-10);
}

TEST_CASE("padding does not change outputs at real positions") {
    const auto vocab = word_vocab();
    const auto params = model::init_encoder(small_encoder(2, vocab.size()));
    const auto padded = text::encode_pair("a b", "c d e f g", vocab, 20);
    const auto trimmed = text::trim_padding(padded);
    Tape t1, t2;
    const Matrix full = model::encode(t1, padded, params, false).value();
    const Matrix small = model::encode(t2, trimmed, params, false).value();
    for (std::size_t r = 0; r < trimmed.length(); ++r)
        for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(full(r, c) - small(r, c)) < 1e-12);
}

TEST_CASE("encoder rejects sequences it cannot embed") {
    const auto vocab = word_vocab();
    auto cfg = small_encoder(1, vocab.size());
    cfg.max_len = 8;
    const auto params = model::init_encoder(cfg);
    const auto pair = text::encode_pair("a b", "c d e f g", vocab, 12);
    Tape tape;
    CHECK_THROWS_AS(model::encode(tape, pair, params, false), EncodingError);
    cfg.num_heads = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("grad_check through a 1-layer encoder on a 2-example batch") {
    const auto vocab = word_vocab();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto cfg = small_encoder(1, vocab.size());
        cfg.seed = seed;
        auto params = model::init_encoder(cfg);
        const text::EncodedPair pairs[] = {text::trim_padding(text::encode_pair("a b", "c d e", vocab, 12)),
                                           text::trim_padding(text::encode_pair("f", "g h i j k", vocab, 12))};
        Rng rng(seed);
        const Matrix r0 = random_matrix(rng, pairs[0].length(), 8), r1 = random_matrix(rng, pairs[1].length(), 8);
        num::ParameterList list;
        params.append_parameters(list);
        num::GradCheckOptions o;
        o.tolerance = 1e-4;
        const auto report = num::grad_check(
            [&](Tape& t) {
                return num::add(weighted_sum(num::gelu(model::encode(t, pairs[0], params, false)), r0),
                                weighted_sum(num::gelu(model::encode(t, pairs[1], params, false)), r1));
            },
            list, o);
        CHECK_MESSAGE(report.passed, "seed ", seed, ": ", report.max_relative_error, " at ", report.worst_parameter);
    }
}

TEST_CASE("checkpoint round trip and mismatch errors") {
    const auto vocab = word_vocab();
    auto m = model::SingleEncoderModel::init(model::PackingKind::reader, small_encoder(2, vocab.size()));
    const auto path = std::filesystem::temp_directory_path() / "clmrc_ckpt_test.ckpt";
    model::save_checkpoint(path, m.parameters(), {{"kind", "reader"}});
    CHECK(model::read_checkpoint_meta(path)["kind"] == "reader");

    auto cfg = small_encoder(2, vocab.size());
    cfg.seed = 99;
    auto other = model::SingleEncoderModel::init(model::PackingKind::reader, cfg);
    CHECK_FALSE(other.encoder.token_embedding == m.encoder.token_embedding);
    model::load_checkpoint(path, other.parameters());
    auto a = m.parameters(), b = other.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].value == *b[i].value);

    auto bigger = model::SingleEncoderModel::init(model::PackingKind::reader, small_encoder(3, vocab.size()));
    CHECK_THROWS_AS(model::load_checkpoint(path, bigger.parameters()), CheckpointError);
    auto smaller = model::SingleEncoderModel::init(model::PackingKind::reader, small_encoder(1, vocab.size()));
    CHECK_THROWS_AS(model::load_checkpoint(path, smaller.parameters()), CheckpointError);
    auto wide_cfg = small_encoder(2, vocab.size());
    wide_cfg.ffn_size = 16;
    auto wide = model::SingleEncoderModel::init(model::PackingKind::reader, wide_cfg);
    CHECK_THROWS_AS(model::load_checkpoint(path, wide.parameters()), CheckpointError);

    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "NOTACKPT";
    }
    CHECK_THROWS_AS(model::load_checkpoint(path, m.parameters()), CheckpointError);
    std::filesystem::remove(path);
}

}  // TEST_SUITE

TEST_SUITE("spanmodels") {

TEST_CASE("packing layouts") {
    const auto vocab = word_vocab();
    const auto r = model::pack_input(model::PackingKind::reader, std::string("a b"), std::nullopt, "c d", vocab, 16);
    CHECK(r.passage_begin == 4);
    const auto al = model::pack_input(model::PackingKind::aligner, std::nullopt, std::string("e"), "c d", vocab, 16);
    CHECK(al.passage_begin == 3);
    CHECK(al.token_ids[1] == vocab.id("e"));
    // verifier: [CLS] Q [SEP] A [SEP] P [SEP], segment 0 until the passage
    const auto v = model::pack_input(model::PackingKind::verifier, std::string("a b"), std::string("e"), "c d", vocab, 16);
    CHECK(v.token_ids[4] == vocab.id("e"));
    CHECK(v.token_ids[5] == text::Vocabulary::kSep);
    CHECK(v.passage_begin == 6);
    CHECK(v.segment_ids[5] == 0);
    CHECK(v.segment_ids[6] == 1);
    CHECK_THROWS_AS(model::pack_input(model::PackingKind::verifier, std::string("a"), std::nullopt, "c", vocab, 16),
                    PackingError);
    CHECK_THROWS_AS(model::pack_input(model::PackingKind::aligner, std::nullopt, std::string(""), "c", vocab, 16),
                    PackingError);
}

TEST_CASE("decode_span matches brute force on 200 random instances") {
    Rng rng(2024);
    const auto vocab = word_vocab();
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t plen = 1 + rng.below(10);
        std::string passage;
        for (std::size_t i = 0; i < plen; ++i) passage += (i ? " " : "") + vocab.token(4 + rng.below(15));
        const auto pair = text::trim_padding(text::encode_pair("a", passage, vocab, 32));
        const std::size_t len = pair.length();
        Matrix ps(1, len), pe(1, len);
        for (std::size_t i = 0; i < len; ++i) {
            // coarse values make ties common
            ps[i] = pair.in_passage(i) ? static_cast<double>(rng.below(4)) / 8.0 : 0.9;
            pe[i] = pair.in_passage(i) ? static_cast<double>(rng.below(4)) / 8.0 : 0.9;
        }
        const std::size_t max_len = 1 + rng.below(5);
        double best = 0;
        const auto [bi, bj] = brute_decode(ps, pe, pair.passage_begin, pair.passage_end, max_len, &best);
        const auto got = model::decode_span(ps, pe, pair, max_len);
        CHECK(got.span.start == bi);
        CHECK(got.span.end == bj);
        CHECK(got.score == best);
        CHECK(got.text == text::span_text(pair, {bi, bj}));
    }
}

TEST_CASE("span_loss rejects gold outside the mask") {
    Tape tape;
    const Var p = tape.constant(Matrix(1, 4, {0.0, 0.5, 0.5, 0.0}));
    const Mask mask = {false, true, true, false};
    CHECK(model::span_loss({p, p}, {1, 2}, mask, "x").scalar() == doctest::Approx(2 * std::log(2.0)));
    CHECK_THROWS_AS(model::span_loss({p, p}, {0, 2}, mask, "x"), SupervisionError);
    CHECK_THROWS_AS(model::span_loss({p, p}, {2, 1}, mask, "x"), SupervisionError);
}

TEST_CASE("grad_check: reader, aligner and verifier losses") {
    const auto vocab = word_vocab();
    for (auto kind : {model::PackingKind::reader, model::PackingKind::aligner, model::PackingKind::verifier}) {
        auto cfg = small_encoder(1, vocab.size());
        auto m = model::SingleEncoderModel::init(kind, cfg);
        const data::MRCExample ex{"e", "c d e f", "a b", {{"d e", 2}}, "target"};
        const auto prepared = model::prepare_example(kind, ex, std::string("d x"), vocab, 16);
        REQUIRE(prepared.gold);
        auto params = m.parameters();
        // shifting every start (end) logit by the same amount changes nothing
        std::erase_if(params, [](const num::NamedParameter& p) {
            return p.name == "span_head.bias" || p.name == "encoder.layer0.ffn.norm.bias";
        });
        num::GradCheckOptions o;
        o.tolerance = 1e-4;
        const auto report = num::grad_check(
            [&](Tape& t) { return model::single_example_loss(t, m, prepared, false, nullptr); }, params, o);
        CHECK_MESSAGE(report.passed, model::to_string(kind), ": ", report.max_relative_error, " at ",
                      report.worst_parameter);
    }
}

}  // TEST_SUITE

TEST_SUITE("dualbert") {

TEST_CASE("SAA: 2x2 closed form") {
    // T = S = I: A_T = A_S = [[a, b], [b, a]] with a = e/(e+1), b = 1/(e+1),
    // adapted = A^2 and the weights are a two-way softmax of its rows.
    Tape tape;
    const Var t = tape.constant(Matrix::identity(2));
    const auto r = model::saa_attention(t, t, {true, true}, {true, true});
    const double a = std::exp(1.0) / (std::exp(1.0) + 1.0), b = 1.0 / (std::exp(1.0) + 1.0);
    const double diag = a * a + b * b, off = 2 * a * b;
    const double w0 = 1.0 / (1.0 + std::exp(off - diag));
    const Matrix& w = r.heads[0].weights.value();
    CHECK(w(0, 0) == doctest::Approx(w0).epsilon(1e-14));
    CHECK(w(0, 1) == doctest::Approx(1 - w0).epsilon(1e-14));
    CHECK(w(1, 1) == doctest::Approx(w0).epsilon(1e-14));
    CHECK(r.attended.value()(1, 0) == doctest::Approx(1 - w0).epsilon(1e-14));
    CHECK(r.heads[0].adapted.value()(0, 1) == doctest::Approx(off).epsilon(1e-14));
}

TEST_CASE("SAA matches direct evaluation on 200 random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t lt = 1 + rng.below(7), ls = 1 + rng.below(7);
        const std::size_t heads = 1 + rng.below(2), h = heads * (1 + rng.below(4));
        const Matrix t = random_matrix(rng, lt, h, 0.7), s = random_matrix(rng, ls, h, 0.7);
        Mask mt(lt), ms(ls);
        for (std::size_t i = 0; i < lt; ++i) mt[i] = i == 0 || rng.bernoulli(0.8);
        for (std::size_t i = 0; i < ls; ++i) ms[i] = i == 0 || rng.bernoulli(0.8);
        const bool adaptive = trial % 4 != 3;
        Tape tape;
        const auto r = model::saa_attention(tape.constant(t), tape.constant(s), mt, ms, {adaptive, heads});
        const std::size_t w = h / heads;
        for (std::size_t k = 0; k < heads; ++k) {
            const Matrix want = saa_ref(cols(t, k * w, w), cols(s, k * w, w), mt, ms, adaptive);
            const Matrix got = cols(r.attended.value(), k * w, w);
            CHECK(max_rel_diff(got, want) < 1e-10);
            // every weight row is a distribution over unmasked source positions
            const Matrix& weights = r.heads[k].weights.value();
            for (std::size_t i = 0; i < lt; ++i) {
                double sum = 0;
                for (std::size_t j = 0; j < ls; ++j) {
                    if (!ms[j]) CHECK(weights(i, j) == 0.0);
                    sum += weights(i, j);
                }
                CHECK(std::abs(sum - 1.0) < 1e-9);
            }
        }
    }
    Tape tape;
    CHECK_THROWS_AS(model::saa_attention(tape.constant(Matrix(2, 3)), tape.constant(Matrix(2, 4)), {true, true},
                                         {true, true}),
                    DimensionError);
}

TEST_CASE("span_representation matches direct evaluation on 200 random instances") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t len = 1 + rng.below(9), h = 1 + rng.below(6);
        const Matrix b = random_matrix(rng, len, h);
        const std::size_t i = rng.below(len), j = i + rng.below(len - i);
        const auto got = model::span_representation(b, {i, j});
        const auto want = span_rep_ref(b, i, j);
        REQUIRE(got.size() == 3 * h);
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) < 1e-10);
    }
    CHECK_THROWS_AS(model::span_representation(Matrix(3, 2), {2, 3}), SpanError);
}

TEST_CASE("dynamic lambda: clamped cosine, detached, zero on degenerate input") {
    CHECK(model::dynamic_lambda({1, 0}, {1, 0}).value == doctest::Approx(1.0));
    CHECK(model::dynamic_lambda({1, 0}, {-1, 0}).value == 0.0);
    CHECK(model::dynamic_lambda({1, 1}, {1, 0}).value == doctest::Approx(std::sqrt(0.5)));
    CHECK(model::dynamic_lambda({0, 0}, {1, 0}).value == 0.0);
    CHECK(model::dynamic_lambda({1, 2}, {3, 4}).detached);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> u(6), v(6);
        for (auto& x : u) x = rng.normal();
        for (auto& x : v) x = rng.normal();
        const double l = model::dynamic_lambda(u, v).value;
        CHECK(l >= 0.0);
        CHECK(l <= 1.0);
    }
}

TEST_CASE("joint loss: lambda 0 and 1 decompose bit-exactly, identity translation gives lambda 1") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = tiny_bilingual(seed, 0.5);
        const auto vocab = lexicon_vocab(d.lexicon);
        auto cfg = small_encoder(1, vocab.size());
        cfg.seed = seed;
        const auto params = model::DualParams::init(cfg);
        const model::DualConfig config;
        for (const auto& b : d.examples) {
            const auto ex = model::prepare_dual(b, vocab, vocab, 24);
            REQUIRE(ex.source_gold);
            Tape t0, t1, t2;
            const auto zero = model::dual_forward_loss(t0, ex, params, config, false, nullptr, 0.0);
            CHECK(zero.total.scalar() == zero.target_loss.scalar());
            const auto one = model::dual_forward_loss(t1, ex, params, config, false, nullptr, 1.0);
            CHECK(one.total.scalar() == one.target_loss.scalar() + one.aux_loss->scalar());
            const auto dyn = model::dual_forward_loss(t2, ex, params, config, false, nullptr);
            CHECK(dyn.lambda >= 0.0);
            CHECK(dyn.lambda <= 1.0);

            // the identity translator makes the source a copy of the target
            data::BilingualExample same{b.target, b.target, true};
            same.source.language_tag = "source";
            const auto twin = model::prepare_dual(same, vocab, vocab, 24);
            Tape t3;
            CHECK(model::dual_forward_loss(t3, twin, params, config, false, nullptr).lambda ==
                  doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("tied translation embeddings make a clean pair encode identically") {
    const auto d = tiny_bilingual(6, 0.0, 3);
    const auto vocab = lexicon_vocab(d.lexicon);
    auto params = model::DualParams::init(small_encoder(1, vocab.size()));
    CHECK(model::tie_translation_embeddings(params.encoder, vocab, d.lexicon) == d.lexicon.pairs.size());
    const auto& [s0, t0] = d.lexicon.pairs[0];
    for (std::size_t c = 0; c < 8; ++c)
        CHECK(params.encoder.token_embedding(vocab.id(s0), c) == params.encoder.token_embedding(vocab.id(t0), c));
    for (const auto& b : d.examples) {
        const auto ex = model::prepare_dual(b, vocab, vocab, 24);
        Tape t1, t2, t3;
        CHECK(model::encode(t1, ex.target, params.encoder, false).value() ==
              model::encode(t2, ex.source, params.encoder, false).value());
        CHECK(model::dual_forward_loss(t3, ex, params, {}, false, nullptr).lambda == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("lambda carries no gradient") {
    const auto d = tiny_bilingual(8, 0.0, 1);
    const auto vocab = lexicon_vocab(d.lexicon);
    auto params = model::DualParams::init(small_encoder(1, vocab.size()));
    const auto ex = model::prepare_dual(d.examples[0], vocab, vocab, 24);
    const model::DualConfig config;
    Tape t1;
    const auto dyn = model::dual_forward_loss(t1, ex, params, config, false, nullptr);
    t1.backward(dyn.total);
    Tape t2;
    const auto frozen = model::dual_forward_loss(t2, ex, params, config, false, nullptr, dyn.lambda);
    t2.backward(frozen.total);
    CHECK(dyn.total.scalar() == frozen.total.scalar());
    for (const auto& p : params.parameters()) {
        const Matrix* g1 = t1.parameter_grad(*p.value);
        const Matrix* g2 = t2.parameter_grad(*p.value);
        REQUIRE((g1 == nullptr) == (g2 == nullptr));
        if (g1 != nullptr) CHECK(*g1 == *g2);
    }
}

TEST_CASE("missing source span: aux loss absent, lambda 0") {
    const auto d = tiny_bilingual(3, 0.0, 1);
    const auto vocab = lexicon_vocab(d.lexicon);
    const auto params = model::DualParams::init(small_encoder(1, vocab.size()));
    auto b = d.examples[0];
    b.source_span_valid = false;
    const auto ex = model::prepare_dual(b, vocab, vocab, 24);
    CHECK_FALSE(ex.source_gold);
    Tape tape;
    const auto out = model::dual_forward_loss(tape, ex, params, {}, false, nullptr);
    CHECK_FALSE(out.aux_loss);
    CHECK(out.lambda == 0.0);
    CHECK(out.total.scalar() == out.target_loss.scalar());

    // only the first passage word fits, and an answer always follows its cue
    CHECK_THROWS_AS(model::prepare_dual(b, vocab, vocab, 5), SupervisionError);
}

TEST_CASE("grad_check of the joint loss (h=8, L<=12, 2 examples, lambda frozen)") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        data::SyntheticConfig c;
        c.num_examples = 2;
        c.filler_vocab = 10;
        c.answer_vocab = 8;
        c.cue_vocab = 4;
        c.passage_min = 8;
        c.passage_max = 8;
        c.answer_max = 2;
        c.segments = 2;
        c.ambiguity_rate = 0.5;
        c.seed = seed;
        const auto d = data::generate_synthetic_bilingual(c);
        const auto vocab = lexicon_vocab(d.lexicon);
        auto cfg = small_encoder(1, vocab.size());
        cfg.seed = seed;
        auto params = model::DualParams::init(cfg);
        std::vector<model::PreparedDual> ex;
        std::vector<double> lambdas;
        for (const auto& b : d.examples) {
            ex.push_back(model::prepare_dual(b, vocab, vocab, 12));
            CHECK(ex.back().target.length() <= 12);
            Tape t;
            lambdas.push_back(model::dual_forward_loss(t, ex.back(), params, {}, false, nullptr).lambda);
        }
        auto list = params.parameters();
        std::erase_if(list, [](const num::NamedParameter& p) {
            return p.name == "target_head.bias" || p.name == "source_head.bias" || p.name == "fusion.norm.bias";
        });
        num::GradCheckOptions o;
        o.tolerance = 1e-4;
        const auto report = num::grad_check(
            [&](Tape& t) {
                return model::mean_loss({model::dual_forward_loss(t, ex[0], params, {}, false, nullptr, lambdas[0]).total,
                                         model::dual_forward_loss(t, ex[1], params, {}, false, nullptr, lambdas[1]).total});
            },
            list, o);
        CHECK_MESSAGE(report.passed, "seed ", seed, ": ", report.max_relative_error, " at ", report.worst_parameter);
    }
}

TEST_CASE("training is deterministic per seed") {
    const auto d = tiny_bilingual(5, 0.5, 12);
    const auto vocab = lexicon_vocab(d.lexicon);
    auto run = [&](std::uint64_t seed) {
        auto cfg = small_encoder(1, vocab.size());
        cfg.dropout_rate = 0.1;
        cfg.seed = seed;
        auto params = model::DualParams::init(cfg);
        std::vector<model::PreparedDual> ex;
        for (const auto& b : d.examples) ex.push_back(model::prepare_dual(b, vocab, vocab, 24));
        model::TrainConfig tc;
        tc.epochs = 2;
        tc.batch_size = 4;
        tc.lr = 1e-3;
        tc.seed = seed;
        const auto records = model::train_dual(params, {}, ex, tc);
        return std::make_pair(records, params.fuse_weight);
    };
    const auto [r1, w1] = run(3);
    const auto [r2, w2] = run(3);
    const auto [r3, w3] = run(4);
    REQUIRE(r1.size() == 2);
    CHECK(r1[1].target_loss == r2[1].target_loss);
    CHECK(*r1[1].lambda_mean == *r2[1].lambda_mean);
    CHECK(w1 == w2);
    CHECK_FALSE(w1 == w3);
    CHECK(r1[1].step == 6);
}

}  // TEST_SUITE
