#include "clmrc/pipeline/backtranslate.hpp"

#include <chrono>

#include "clmrc/align/simplematch.hpp"
#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::pipeline {

nlohmann::json to_json(const PipelineReport& r, bool include_per_example) {
    nlohmann::json j = {{"inputs", r.inputs},
                        {"translated", r.translated},
                        {"answered", r.answered},
                        {"back_translated", r.back_translated},
                        {"aligned", r.aligned},
                        {"emitted", r.emitted},
                        {"rejected", r.rejected},
                        {"low_confidence", r.low_confidence},
                        {"confidence_histogram", r.confidence_histogram},
                        {"stage_seconds", r.stage_seconds},
                        {"failures", r.failures}};
    if (r.eval) {
        nlohmann::json e = eval::to_json(*r.eval);
        if (!include_per_example) e.erase("per_example");
        j["eval"] = e;
    }
    return j;
}

// FNV-1a, so per-example seeds do not depend on the standard library's hash
std::uint64_t example_seed(std::uint64_t seed, std::string_view id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : id) h = (h ^ c) * 0x100000001b3ULL;
    return num::Rng::derive(seed, h);
}

namespace {

class StageClock {
public:
    explicit StageClock(double& total) : total_(total), start_(std::chrono::steady_clock::now()) {}
    ~StageClock() { total_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    double& total_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

BacktranslateResult run_backtranslation_pipeline(const std::vector<data::MRCExample>& targets,
                                                 const model::SingleEncoderModel& source_reader,
                                                 const text::Vocabulary& source_vocab,
                                                 const data::TranslatorSpec& target_to_source,
                                                 const BacktranslateOptions& options) {
    target_to_source.validate();
    const data::TranslatorSpec source_to_target =
        target_to_source.kind == data::TranslatorKind::identity ? target_to_source : target_to_source.reversed();
    BacktranslateResult out;
    PipelineReport& rep = out.report;
    double& t_translate = rep.stage_seconds["translate"];
    double& t_read = rep.stage_seconds["read"];
    double& t_back = rep.stage_seconds["back_translate"];
    double& t_match = rep.stage_seconds["simplematch"];
    bool any_answers = false;

    for (const auto& ex : targets) {
        ++rep.inputs;
        any_answers = any_answers || !ex.answers.empty();
        std::string& prediction = out.predictions[ex.id];
        const std::uint64_t seed = example_seed(options.seed, ex.id);
        try {
            data::MRCExample source;
            {
                StageClock c(t_translate);
                data::MRCExample question_only = ex;
                question_only.answers.clear();  // zero-shot: the gold answer is never read
                source = data::translate_example(question_only, target_to_source, seed).example;
            }
            ++rep.translated;
            std::string source_answer;
            {
                StageClock c(t_read);
                const model::PreparedExample prepared = model::prepare_example(
                    model::PackingKind::reader, source, std::nullopt, source_vocab, options.max_len);
                source_answer = model::predict_span(source_reader, prepared, options.max_answer_len).text;
            }
            ++rep.answered;
            std::string answer;
            {
                StageClock c(t_back);
                num::Rng rng(num::Rng::derive(seed, 0xBAC4));
                answer = data::translate_text(source_answer, source_to_target, &rng);
            }
            if (answer.empty()) throw TranslationError("answer translated back to nothing");
            ++rep.back_translated;
            if (options.use_simplematch) {
                StageClock c(t_match);
                const align::MatchResult m = align::simple_match(ex.passage, answer, options.delta);
                ++rep.aligned;
                rep.confidence_histogram[std::min<std::size_t>(9, static_cast<std::size_t>(m.f1 * 10.0))]++;
                if (m.low_confidence) ++rep.low_confidence;
                answer = align::match_text(ex.passage, m);
            }
            prediction = answer;
            ++rep.emitted;
        } catch (const Error& e) {
            prediction.clear();
            rep.failures[ex.id] = e.what();
            spdlog::warn("backtranslate: example '{}' rejected: {}", ex.id, e.what());
        }
    }
    rep.rejected = rep.inputs - rep.emitted;
    if (any_answers) rep.eval = eval::evaluate_dataset(out.predictions, targets);
    return out;
}

std::string corrupt_answer(const data::MRCExample& example, double rate, num::Rng& rng, text::TokenizerMode mode) {
    if (example.answers.empty()) throw SupervisionError("example '" + example.id + "' has no answer to corrupt");
    const auto answer = text::tokenize(std::string_view(example.answers.front().text), mode);
    const auto passage = text::tokenize(std::string_view(example.passage), mode);
    auto is_word = [](const text::Token& t) { return !t.text.empty() && !text::is_space(text::decode_utf8(t.text)[0]); };
    std::vector<std::string> pool;
    for (const auto& t : passage)
        if (is_word(t)) pool.push_back(t.text);
    std::vector<std::string> kept;
    for (const auto& t : answer) {
        if (!is_word(t)) continue;
        const double u = rng.uniform();
        if (u >= rate)
            kept.push_back(t.text);
        else if (u < rate / 2 && !pool.empty())
            kept.push_back(pool[rng.below(pool.size())]);
        // otherwise dropped
    }
    if (kept.empty()) kept.push_back(pool.empty() ? answer.front().text : pool[rng.below(pool.size())]);
    std::string out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i > 0 && mode == text::TokenizerMode::whitespace) out += ' ';
        out += kept[i];
    }
    return out;
}

}  // namespace clmrc::pipeline
