#include "clmrc/pipeline/commands.hpp"

#include <algorithm>
#include <filesystem>

#include "clmrc/align/simplematch.hpp"
#include "clmrc/data/squad.hpp"
#include "clmrc/data/stats.hpp"
#include "clmrc/data/synthetic.hpp"
#include "clmrc/data/translate.hpp"
#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/model/checkpoint.hpp"
#include "clmrc/pipeline/backtranslate.hpp"
#include "clmrc/pipeline/manifest.hpp"

namespace clmrc::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kCorruptStream = 0xC022;

void set_if_empty(std::string& field, const char* value) {
    if (field.empty()) field = value;
}

fs::path prepare_out(const RunConfig& config) {
    fs::path out(config.out);
    fs::create_directories(out);
    return out;
}

std::vector<data::MRCExample> load(const std::string& path, const char* tag) {
    data::LoadOptions options;
    options.language_tag = tag;
    return data::load_squad_json(path, options);
}

data::Predictions load_translated(const std::string& path) {
    return path.empty() ? data::Predictions{} : data::load_predictions(path);
}

model::PackingKind packing(ModelKind kind) {
    switch (kind) {
        case ModelKind::aligner: return model::PackingKind::aligner;
        case ModelKind::verifier: return model::PackingKind::verifier;
        default: return model::PackingKind::reader;
    }
}

// Translated answer for aligner / verifier inputs: the supplied one if any,
// otherwise a seeded corruption of the gold answer.
std::optional<std::string> translated_answer(ModelKind kind, const data::MRCExample& ex,
                                             const data::Predictions& translated, const RunConfig& config) {
    if (kind == ModelKind::reader) return std::nullopt;
    if (auto it = translated.find(ex.id); it != translated.end()) return it->second;
    if (ex.answers.empty()) throw SupervisionError("example '" + ex.id + "' has neither a translated nor a gold answer");
    num::Rng rng(example_seed(num::Rng::derive(config.seed, kCorruptStream), ex.id));
    return corrupt_answer(ex, config.noise_rate, rng, config.tokenizer);
}

std::vector<model::PreparedExample> prepare_single(ModelKind kind, const std::vector<data::MRCExample>& examples,
                                                   const data::Predictions& translated, const text::Vocabulary& vocab,
                                                   const RunConfig& config) {
    std::vector<model::PreparedExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples)
        out.push_back(model::prepare_example(packing(kind), ex, translated_answer(kind, ex, translated, config), vocab,
                                             config.max_len));
    return out;
}

// Source side through the dictionary translator. The translated span is
// kept when the translator reports it reliable; otherwise SimpleMatch
// looks for the translated answer text in the translated passage.
std::vector<data::BilingualExample> bilingual_from_dict(const std::vector<data::MRCExample>& targets,
                                                        const data::Lexicon& lexicon, const RunConfig& config) {
    const data::TranslatorSpec spec = data::dictionary_spec(lexicon, true, config.noise_rate);
    std::vector<data::BilingualExample> out;
    out.reserve(targets.size());
    for (const auto& t : targets) {
        data::BilingualExample b;
        b.target = t;
        const std::uint64_t seed = example_seed(config.seed, t.id);
        data::TranslationResult tr = data::translate_example(t, spec, seed);
        b.source = std::move(tr.example);
        if (!tr.alignments.empty() && tr.alignments.front().reliable) {
            b.source_span_valid = true;
        } else if (config.use_simplematch && !t.answers.empty()) {
            num::Rng rng(num::Rng::derive(seed, 0xA45));
            const std::string answer = data::translate_text(t.answers.front().text, spec, &rng);
            if (!answer.empty()) {
                const align::MatchResult m = align::simple_match(b.source.passage, answer, config.delta);
                if (!m.low_confidence) {
                    b.source.answers = {{align::match_text(b.source.passage, m), m.char_start}};
                    b.source_span_valid = true;
                }
            }
        }
        if (!b.source_span_valid) b.source.answers.clear();
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<data::BilingualExample> load_bilingual(const std::string& target_file, const std::string& source_file,
                                                   const RunConfig& config) {
    auto targets = load(target_file, "target");
    if (!source_file.empty()) return data::pair_by_id(targets, load(source_file, "source"));
    if (config.data.dict.empty())
        throw ConfigError("the dual model needs a source file or a dictionary (--dict)");
    return bilingual_from_dict(targets, data::load_lexicon(config.data.dict), config);
}

void add_texts(std::vector<std::string>& corpus, const data::MRCExample& ex) {
    corpus.push_back(ex.passage);
    corpus.push_back(ex.question);
}

nlohmann::json checkpoint_meta(const RunConfig& config, const model::EncoderConfig& encoder) {
    return {{"kind", std::string(to_string(config.model))},
            {"encoder", model::to_json(encoder)},
            {"dual", model::to_json(config.dual)},
            {"tokenizer", std::string(text::to_string(config.tokenizer))},
            {"max_len", config.max_len},
            {"max_answer_len", config.train.max_answer_len}};
}

// A trained run directory: vocabulary, model kind and parameters.
struct LoadedModel {
    ModelKind kind = ModelKind::reader;
    text::Vocabulary vocab;
    std::size_t max_len = 0;
    std::size_t max_answer_len = 0;
    model::DualConfig dual_config;
    model::SingleEncoderModel single;
    model::DualParams dual;
};

LoadedModel load_model(const std::string& dir) {
    const fs::path root(dir);
    const fs::path ckpt = root / "model.ckpt";
    if (!fs::exists(ckpt)) throw ConfigError("no model.ckpt in " + dir);
    const nlohmann::json meta = model::read_checkpoint_meta(ckpt);
    LoadedModel m;
    try {
        m.kind = parse_model_kind(meta.at("kind").get<std::string>());
        m.vocab = text::Vocabulary::load(root / "vocab.txt",
                                         text::parse_tokenizer_mode(meta.at("tokenizer").get<std::string>()));
        m.max_len = meta.at("max_len").get<std::size_t>();
        m.max_answer_len = meta.at("max_answer_len").get<std::size_t>();
        m.dual_config = model::dual_config_from_json(meta.at("dual"));
        const model::EncoderConfig encoder = model::encoder_config_from_json(meta.at("encoder"));
        if (m.kind == ModelKind::dual) {
            m.dual = model::DualParams::init(encoder);
            model::load_checkpoint(ckpt, m.dual.parameters());
        } else {
            m.single = model::SingleEncoderModel::init(packing(m.kind), encoder);
            model::load_checkpoint(ckpt, m.single.parameters());
        }
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint metadata in " + dir + ": " + e.what());
    }
    return m;
}

nlohmann::json eval_summary(const eval::EvalResult& r) { return {{"em", r.em}, {"f1", r.f1}}; }

}  // namespace

void apply_default_paths(RunConfig& c, std::string_view command) {
    auto& d = c.data;
    const bool dual = c.model == ModelKind::dual;
    if (command == "train") {
        set_if_empty(d.train_file, "data/train.json");
        set_if_empty(d.dev_file, "data/dev.json");
        if (dual && d.dict.empty()) {
            set_if_empty(d.source_train_file, "data/source_train.json");
            set_if_empty(d.source_dev_file, "data/source_dev.json");
            if (fs::exists("data/lexicon.tsv")) d.dict = "data/lexicon.tsv";
        }
    } else if (command == "predict") {
        set_if_empty(d.dev_file, "data/dev.json");
    } else if (command == "evaluate" || command == "align") {
        set_if_empty(d.dev_file, "data/dev.json");
    } else if (command == "backtranslate") {
        set_if_empty(d.dev_file, "data/dev.json");
        set_if_empty(d.dict, "data/lexicon.tsv");
    } else if (command == "stats") {
        if (d.train_file.empty() && d.dev_file.empty() && d.source_train_file.empty() && d.source_dev_file.empty()) {
            d.train_file = "data/train.json";
            d.dev_file = "data/dev.json";
        }
    }
}

nlohmann::json gen_synthetic(const RunConfig& config, const SyntheticOptions& options) {
    const fs::path out = prepare_out(config);
    data::SyntheticConfig sc;
    sc.ambiguity_rate = options.ambiguity_rate;
    sc.lexicon_seed = config.seed;
    sc.num_examples = options.train_examples;
    sc.seed = num::Rng::derive(config.seed, 1);
    const data::SyntheticDataset train = data::generate_synthetic_bilingual(sc);
    sc.num_examples = options.dev_examples;
    sc.seed = num::Rng::derive(config.seed, 2);
    const data::SyntheticDataset dev = data::generate_synthetic_bilingual(sc);

    data::save_squad_json(out / "train.json", data::targets(train.examples));
    data::save_squad_json(out / "dev.json", data::targets(dev.examples));
    data::save_squad_json(out / "source_train.json", data::sources(train.examples));
    data::save_squad_json(out / "source_dev.json", data::sources(dev.examples));
    data::save_lexicon(out / "lexicon.tsv", train.lexicon);

    Manifest m = Manifest::capture("gen-synthetic", config);
    m.outputs = {"train.json", "dev.json", "source_train.json", "source_dev.json", "lexicon.tsv"};
    write_manifest(out, m);
    const auto corrupted = [](const data::SyntheticDataset& d) {
        return static_cast<std::size_t>(std::count(d.corrupted.begin(), d.corrupted.end(), true));
    };
    return {{"out", out.string()},
            {"train_examples", train.examples.size()},
            {"dev_examples", dev.examples.size()},
            {"ambiguity_rate", options.ambiguity_rate},
            {"corrupted_train", corrupted(train)},
            {"corrupted_dev", corrupted(dev)},
            {"lexicon_entries", train.lexicon.pairs.size()}};
}

nlohmann::json train(const RunConfig& input) {
    RunConfig config = input;
    config.propagate();
    config.validate();
    require_nonempty({{"--train-file", &config.data.train_file}});
    require_files({{"--train-file", &config.data.train_file},
                   {"--dev-file", &config.data.dev_file},
                   {"--source-train-file", &config.data.source_train_file},
                   {"--source-dev-file", &config.data.source_dev_file},
                   {"--translated-file", &config.data.translated_file},
                   {"--dict", &config.data.dict}});
    const Manifest manifest_in = Manifest::capture("train", config);
    const fs::path out = prepare_out(config);
    const bool has_dev = !config.data.dev_file.empty();

    std::vector<model::MetricRecord> records;
    data::Predictions dev_predictions;
    std::vector<std::string> corpus;
    model::EncoderConfig encoder = config.encoder;
    nlohmann::json summary = {{"model", std::string(to_string(config.model))}};

    if (config.model == ModelKind::dual) {
        const auto train_set = load_bilingual(config.data.train_file, config.data.source_train_file, config);
        std::vector<data::BilingualExample> dev_set;
        if (has_dev) dev_set = load_bilingual(config.data.dev_file, config.data.source_dev_file, config);
        for (const auto& b : train_set) {
            add_texts(corpus, b.target);
            add_texts(corpus, b.source);
        }
        if (!config.data.dict.empty())
            for (const auto& [s, t] : data::load_lexicon(config.data.dict).pairs) {
                corpus.push_back(s);
                corpus.push_back(t);
            }
        const auto vocab = text::Vocabulary::build(corpus, config.tokenizer, config.vocab_max);
        vocab.save(out / "vocab.txt");
        encoder.vocab_size = vocab.size();

        std::vector<model::PreparedDual> prepared;
        std::size_t skipped = 0;
        for (const auto& b : train_set) {
            try {
                prepared.push_back(model::prepare_dual(b, vocab, vocab, config.max_len));
            } catch (const SupervisionError& e) {
                ++skipped;
                spdlog::warn("{}", e.what());
            }
        }
        if (prepared.empty()) throw SupervisionError("no training example has a resolvable target span");
        model::DevSet<model::PreparedDual> dev;
        for (const auto& b : dev_set) {
            dev.prepared.push_back(model::prepare_dual(b, vocab, vocab, config.max_len, false));
            dev.references.push_back(b.target);
        }
        model::DualParams params = model::DualParams::init(encoder);
        if (config.dual.tie_lexicon && !config.data.dict.empty())
            summary["tied_embeddings"] =
                model::tie_translation_embeddings(params.encoder, vocab, data::load_lexicon(config.data.dict));
        records = model::train_dual(params, config.dual, prepared, config.train, has_dev ? &dev : nullptr);
        if (has_dev) dev_predictions = model::predict_dual(params, config.dual, dev.prepared, config.train.max_answer_len);
        model::save_checkpoint(out / "model.ckpt", params.parameters(), checkpoint_meta(config, encoder));
        summary["train_examples"] = prepared.size();
        summary["skipped"] = skipped;
        summary["source_spans"] = std::count_if(prepared.begin(), prepared.end(),
                                                [](const model::PreparedDual& p) { return p.source_gold.has_value(); });
    } else {
        const auto train_examples = load(config.data.train_file, "target");
        std::vector<data::MRCExample> dev_examples;
        if (has_dev) dev_examples = load(config.data.dev_file, "target");
        const data::Predictions translated = load_translated(config.data.translated_file);
        for (const auto& ex : train_examples) add_texts(corpus, ex);
        const auto vocab = text::Vocabulary::build(corpus, config.tokenizer, config.vocab_max);
        vocab.save(out / "vocab.txt");
        encoder.vocab_size = vocab.size();

        const auto prepared = prepare_single(config.model, train_examples, translated, vocab, config);
        model::DevSet<model::PreparedExample> dev{prepare_single(config.model, dev_examples, translated, vocab, config),
                                                  dev_examples};
        model::SingleEncoderModel m = model::SingleEncoderModel::init(packing(config.model), encoder);
        records = model::train_single(m, prepared, config.train, has_dev ? &dev : nullptr);
        if (has_dev) dev_predictions = model::predict_single(m, dev.prepared, config.train.max_answer_len);
        model::save_checkpoint(out / "model.ckpt", m.parameters(), checkpoint_meta(config, encoder));
        summary["train_examples"] = std::count_if(prepared.begin(), prepared.end(),
                                                  [](const model::PreparedExample& p) { return p.gold.has_value(); });
    }

    model::write_metric_log(out / "metrics.jsonl", records);
    Manifest manifest = manifest_in;
    manifest.outputs = {"vocab.txt", "model.ckpt", "metrics.jsonl"};
    if (has_dev) {
        data::save_predictions(out / "dev_predictions.json", dev_predictions);
        manifest.outputs.push_back("dev_predictions.json");
    }
    write_manifest(out, manifest);
    summary["vocab_size"] = encoder.vocab_size;
    summary["epochs"] = records.size();
    if (!records.empty()) {
        summary["final_loss"] = records.back().target_loss;
        if (records.back().dev_em) summary["dev"] = {{"em", *records.back().dev_em}, {"f1", *records.back().dev_f1}};
    }
    summary["out"] = out.string();
    return summary;
}

nlohmann::json predict(const RunConfig& input, const std::string& checkpoint_dir) {
    RunConfig config = input;
    require_nonempty({{"--dev-file", &config.data.dev_file}, {"--checkpoint", &checkpoint_dir}});
    require_files({{"--dev-file", &config.data.dev_file},
                   {"--source-dev-file", &config.data.source_dev_file},
                   {"--translated-file", &config.data.translated_file},
                   {"--dict", &config.data.dict},
                   {"--checkpoint", &checkpoint_dir}});
    LoadedModel m = load_model(checkpoint_dir);
    // the run directory fixes the model and its input layout
    config.model = m.kind;
    config.max_len = m.max_len;
    config.tokenizer = m.vocab.mode();
    const Manifest manifest_in = Manifest::capture("predict", config, {{"checkpoint", checkpoint_dir}});
    const fs::path out = prepare_out(config);

    data::Predictions predictions;
    std::size_t count = 0;
    if (m.kind == ModelKind::dual) {
        const auto examples = load_bilingual(config.data.dev_file, config.data.source_dev_file, config);
        std::vector<model::PreparedDual> prepared;
        for (const auto& b : examples) prepared.push_back(model::prepare_dual(b, m.vocab, m.vocab, m.max_len, false));
        predictions = model::predict_dual(m.dual, m.dual_config, prepared, m.max_answer_len);
        count = prepared.size();
    } else {
        const auto examples = load(config.data.dev_file, "target");
        if (m.kind != ModelKind::reader && config.data.translated_file.empty())
            spdlog::warn("no --translated-file: corrupting gold answers at noise rate {}", config.noise_rate);
        const auto prepared =
            prepare_single(m.kind, examples, load_translated(config.data.translated_file), m.vocab, config);
        predictions = model::predict_single(m.single, prepared, m.max_answer_len);
        count = prepared.size();
    }
    data::save_predictions(out / "predictions.json", predictions);
    Manifest manifest = manifest_in;
    manifest.outputs = {"predictions.json"};
    write_manifest(out, manifest);
    return {{"model", std::string(to_string(m.kind))}, {"examples", count}, {"out", (out / "predictions.json").string()}};
}

nlohmann::json evaluate(const RunConfig& config, const std::string& predictions_file) {
    require_nonempty({{"--dev-file", &config.data.dev_file}, {"--predictions", &predictions_file}});
    require_files({{"--dev-file", &config.data.dev_file}, {"--predictions", &predictions_file}});
    const Manifest manifest_in = Manifest::capture("evaluate", config, {{"predictions", predictions_file}});
    const auto examples = load(config.data.dev_file, "target");
    const eval::EvalResult result = eval::evaluate_dataset(data::load_predictions(predictions_file), examples);
    const fs::path out = prepare_out(config);
    data::write_json_file(out / "eval.json", eval::to_json(result));
    Manifest manifest = manifest_in;
    manifest.outputs = {"eval.json"};
    write_manifest(out, manifest);
    nlohmann::json summary = eval_summary(result);
    summary["examples"] = result.per_example.size();
    return summary;
}

nlohmann::json align(const RunConfig& config) {
    config.validate();
    require_nonempty({{"--dev-file", &config.data.dev_file}, {"--translated-file", &config.data.translated_file}});
    require_files({{"--dev-file", &config.data.dev_file}, {"--translated-file", &config.data.translated_file}});
    const Manifest manifest_in = Manifest::capture("align", config);
    const auto examples = load(config.data.dev_file, "target");
    const align::BatchAlignment batch =
        align::align_batch(examples, data::load_predictions(config.data.translated_file), config.delta);
    const fs::path out = prepare_out(config);
    data::save_predictions(out / "aligned.json", batch.aligned);
    Manifest manifest = manifest_in;
    manifest.outputs = {"aligned.json"};
    write_manifest(out, manifest);
    nlohmann::json summary = {{"examples", examples.size()},
                              {"aligned", batch.aligned.size()},
                              {"missing", batch.missing},
                              {"low_confidence", batch.low_confidence}};
    const bool answered = std::all_of(examples.begin(), examples.end(),
                                      [](const data::MRCExample& e) { return !e.answers.empty(); });
    if (answered && !examples.empty()) summary["eval"] = eval_summary(eval::evaluate_dataset(batch.aligned, examples));
    return summary;
}

nlohmann::json backtranslate(const RunConfig& input, const std::string& checkpoint_dir) {
    RunConfig config = input;
    config.validate();
    const std::pair<const char*, const std::string*> needed[] = {
        {"--dev-file", &config.data.dev_file}, {"--dict", &config.data.dict}, {"--checkpoint", &checkpoint_dir}};
    for (const auto& n : needed) {
        require_nonempty({n});
        require_files({n});
    }
    LoadedModel m = load_model(checkpoint_dir);
    if (m.kind != ModelKind::reader) throw ConfigError("backtranslate needs a reader checkpoint, got " +
                                                       std::string(to_string(m.kind)));
    const Manifest manifest_in = Manifest::capture("backtranslate", config, {{"checkpoint", checkpoint_dir}});
    const auto targets = load(config.data.dev_file, "target");
    const data::TranslatorSpec spec = data::dictionary_spec(data::load_lexicon(config.data.dict), true, config.noise_rate);
    BacktranslateOptions options;
    options.use_simplematch = config.use_simplematch;
    options.delta = config.delta;
    options.seed = config.seed;
    options.max_len = m.max_len;
    options.max_answer_len = m.max_answer_len;
    const BacktranslateResult result = run_backtranslation_pipeline(targets, m.single, m.vocab, spec, options);

    const fs::path out = prepare_out(config);
    data::save_predictions(out / "predictions.json", result.predictions);
    data::write_json_file(out / "report.json", to_json(result.report, true));
    Manifest manifest = manifest_in;
    manifest.outputs = {"predictions.json", "report.json"};
    write_manifest(out, manifest);
    nlohmann::json summary = to_json(result.report, false);
    summary.erase("failures");
    summary.erase("stage_seconds");
    return summary;
}

void write_summary(const RunConfig& config, const std::string& command, const std::string& file,
                   const nlohmann::json& summary) {
    Manifest m = Manifest::capture(command, config);
    const fs::path out = prepare_out(config);
    data::write_json_file(out / file, summary);
    m.outputs = {file};
    write_manifest(out, m);
}

nlohmann::json stats(const RunConfig& config) {
    const std::pair<const char*, const std::string*> files[] = {{"train_file", &config.data.train_file},
                                                                {"dev_file", &config.data.dev_file},
                                                                {"source_train_file", &config.data.source_train_file},
                                                                {"source_dev_file", &config.data.source_dev_file}};
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [role, path] : files) {
        if (path->empty()) continue;
        if (!fs::exists(*path)) throw ConfigError("--" + std::string(role) + ": no such file " + *path);
        // official files can carry misaligned offsets; repair rather than abort
        const auto examples = load(*path, "target");
        nlohmann::json s = data::to_json(data::dataset_stats(examples));
        s["path"] = *path;
        out[role] = s;
    }
    write_summary(config, "stats", "stats.json", out);
    return out;
}

// ---- gradient check suite

namespace {

struct TinyTask {
    data::SyntheticDataset data;
    text::Vocabulary vocab;
    model::EncoderConfig encoder;
};

TinyTask tiny_task(const GradCheckSuiteOptions& o, std::uint64_t seed) {
    TinyTask t;
    data::SyntheticConfig sc;
    sc.num_examples = 2;
    sc.filler_vocab = 10;
    sc.answer_vocab = 8;
    sc.cue_vocab = 4;
    sc.passage_min = 8;  // [CLS] q [SEP] 8 words [SEP] = 12 tokens
    sc.passage_max = 8;
    sc.answer_max = 2;
    sc.segments = 2;
    sc.ambiguity_rate = 0.5;
    sc.seed = seed;
    sc.lexicon_seed = seed;
    t.data = data::generate_synthetic_bilingual(sc);
    std::vector<std::string> corpus;
    for (const auto& [s, tgt] : t.data.lexicon.pairs) {
        corpus.push_back(s);
        corpus.push_back(tgt);
    }
    t.vocab = text::Vocabulary::build(corpus, text::TokenizerMode::whitespace, 256);
    auto& e = t.encoder;
    e.vocab_size = t.vocab.size();
    e.hidden_size = o.hidden;
    e.num_heads = o.hidden % 2 == 0 ? 2 : 1;
    e.ffn_size = 2 * o.hidden;
    e.num_layers = o.layers;
    e.max_len = 16;  // room for the verifier's answer segment
    e.dropout_rate = 0.0;
    // larger weights than training init so every path carries signal
    e.init_std = 0.3;
    e.seed = seed;
    return t;
}

num::ParameterList without(num::ParameterList params, std::initializer_list<std::string> names) {
    std::erase_if(params, [&](const num::NamedParameter& p) {
        return std::find(names.begin(), names.end(), p.name) != names.end();
    });
    return params;
}

std::string last_layer(std::size_t layers) { return "encoder.layer" + std::to_string(layers - 1) + "."; }

}  // namespace

GradCheckSuiteResult gradcheck_suite(const GradCheckSuiteOptions& o) {
    if (o.hidden == 0 || o.layers == 0) throw ConfigError("gradcheck needs h >= 1 and at least one layer");
    GradCheckSuiteResult result;
    result.passed = true;
    for (const std::uint64_t seed : o.seeds) {
        TinyTask task = tiny_task(o, seed);
        num::GradCheckOptions gopt;
        gopt.fd_step = o.fd_step;
        gopt.tolerance = o.tolerance;
        gopt.seed = seed;
        num::GradCheckReport report;

        if (o.encoder_only) {
            model::EncoderParams enc = model::init_encoder(task.encoder);
            std::vector<text::EncodedPair> inputs;
            std::vector<std::pair<num::Matrix, num::Matrix>> projections;
            num::Rng rng(num::Rng::derive(seed, 0xE2C));
            for (const auto& b : task.data.examples) {
                inputs.push_back(text::trim_padding(
                    text::encode_pair(b.target.question, b.target.passage, task.vocab, task.encoder.max_len)));
                num::Matrix u(1, inputs.back().length()), w(o.hidden, 1);
                for (double& v : u.values()) v = rng.normal();
                for (double& v : w.values()) v = rng.normal();
                projections.emplace_back(std::move(u), std::move(w));
            }
            num::ParameterList params;
            enc.append_parameters(params);
            // u^T gelu(B) w: a random scalar read-out of the whole encoding
            report = num::grad_check(
                [&](num::Tape& tape) {
                    std::vector<num::Var> parts;
                    for (std::size_t i = 0; i < inputs.size(); ++i) {
                        const num::Var b = model::encode(tape, inputs[i], enc, false);
                        parts.push_back(num::matmul(num::matmul(tape.constant(projections[i].first), num::gelu(b)),
                                                    tape.constant(projections[i].second)));
                    }
                    return model::mean_loss(parts);
                },
                params, gopt);
        } else if (o.model == ModelKind::dual) {
            model::DualParams params = model::DualParams::init(task.encoder);
            model::DualConfig config;
            std::vector<model::PreparedDual> prepared;
            std::vector<double> lambdas;
            for (const auto& b : task.data.examples) {
                prepared.push_back(model::prepare_dual(b, task.vocab, task.vocab, task.encoder.max_len));
                num::Tape scratch;
                lambdas.push_back(model::dual_forward_loss(scratch, prepared.back(), params, config, false, nullptr).lambda);
            }
            // lambda is frozen at the base point: it carries no gradient by design
            report = num::grad_check(
                [&](num::Tape& tape) {
                    std::vector<num::Var> parts;
                    for (std::size_t i = 0; i < prepared.size(); ++i)
                        parts.push_back(
                            model::dual_forward_loss(tape, prepared[i], params, config, false, nullptr, lambdas[i]).total);
                    return model::mean_loss(parts);
                },
                without(params.parameters(), {"target_head.bias", "source_head.bias", "fusion.norm.bias"}), gopt);
        } else {
            const model::PackingKind kind = packing(o.model);
            model::SingleEncoderModel m = model::SingleEncoderModel::init(kind, task.encoder);
            std::vector<model::PreparedExample> prepared;
            for (const auto& b : task.data.examples) {
                std::optional<std::string> answer;
                if (kind != model::PackingKind::reader) answer = b.target.answers.front().text;
                prepared.push_back(model::prepare_example(kind, b.target, answer, task.vocab, task.encoder.max_len));
            }
            report = num::grad_check(
                [&](num::Tape& tape) {
                    std::vector<num::Var> parts;
                    for (const auto& p : prepared) parts.push_back(model::single_example_loss(tape, m, p, false, nullptr));
                    return model::mean_loss(parts);
                },
                without(m.parameters(), {"span_head.bias", last_layer(o.layers) + "ffn.norm.bias"}), gopt);
        }
        result.max_relative_error = std::max(result.max_relative_error, report.max_relative_error);
        result.passed = result.passed && report.passed;
        result.runs.push_back(std::move(report));
    }
    return result;
}

nlohmann::json to_json(const GradCheckSuiteResult& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : r.runs)
        runs.push_back({{"max_relative_error", run.max_relative_error},
                        {"worst_parameter", run.worst_parameter},
                        {"coordinates", run.coordinates_checked},
                        {"passed", run.passed}});
    return {{"passed", r.passed}, {"max_relative_error", r.max_relative_error}, {"runs", runs}};
}

}  // namespace clmrc::pipeline
