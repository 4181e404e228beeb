// clmrc: train, predict, evaluate, align, backtranslate, gen-synthetic,
// stats and gradcheck. Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/pipeline/commands.hpp"

using namespace clmrc;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;
    std::optional<std::string> train_file, dev_file, source_train_file, source_dev_file, translated_file, dict;
    std::optional<std::size_t> delta, max_len, epochs, batch;
    std::optional<double> lr, noise, init_std;
    std::optional<std::string> out;
    bool no_simplematch = false;

    std::string checkpoint;
    std::string predictions;
    std::size_t num = 100;
    std::optional<std::size_t> dev_num;
    double ambiguity = 0.0;
    std::size_t h = 8;
    std::size_t layers = 1;
    double tolerance = 1e-4;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config or a manifest.json from an earlier run")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Seed for data order, init, dropout and noise");
    cmd->add_option("--model", f.model, "reader | aligner | verifier | dual")
        ->check(CLI::IsMember({"reader", "aligner", "verifier", "dual"}));
    cmd->add_option("--train-file", f.train_file, "Target-language SQuAD-format training file");
    cmd->add_option("--dev-file", f.dev_file, "Target-language SQuAD-format dev file");
    cmd->add_option("--source-train-file", f.source_train_file, "Source-language training file (dual)");
    cmd->add_option("--source-dev-file", f.source_dev_file, "Source-language dev file (dual)");
    cmd->add_option("--translated-file", f.translated_file, "JSON id -> translated answer");
    cmd->add_option("--dict", f.dict, "Lexicon TSV, source<TAB>target");
    cmd->add_option("--delta", f.delta, "SimpleMatch window slack, 0..5 (default 3)");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--max-len", f.max_len, "Maximum packed sequence length");
    cmd->add_option("--epochs", f.epochs, "Training epochs");
    cmd->add_option("--batch", f.batch, "Batch size");
    cmd->add_option("--lr", f.lr, "Peak learning rate");
    cmd->add_option("--noise", f.noise, "Translation noise / answer corruption rate in [0, 1]");
    cmd->add_option("--init-std", f.init_std, "Initializer standard deviation");
}

pipeline::RunConfig resolve(const Flags& f, std::string_view command) {
    pipeline::RunConfig c = f.config.empty() ? pipeline::RunConfig{} : pipeline::load_run_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.model) c.model = pipeline::parse_model_kind(*f.model);
    if (f.train_file) c.data.train_file = *f.train_file;
    if (f.dev_file) c.data.dev_file = *f.dev_file;
    if (f.source_train_file) c.data.source_train_file = *f.source_train_file;
    if (f.source_dev_file) c.data.source_dev_file = *f.source_dev_file;
    if (f.translated_file) c.data.translated_file = *f.translated_file;
    if (f.dict) c.data.dict = *f.dict;
    if (f.delta) c.delta = *f.delta;
    if (f.out) c.out = *f.out;
    else if (command == "gen-synthetic" && f.config.empty()) c.out = "data";
    if (f.max_len) c.max_len = *f.max_len;
    if (f.epochs) c.train.epochs = *f.epochs;
    if (f.batch) c.train.batch_size = *f.batch;
    if (f.lr) c.train.lr = *f.lr;
    if (f.noise) c.noise_rate = *f.noise;
    if (f.init_std) c.encoder.init_std = *f.init_std;
    if (f.no_simplematch) c.use_simplematch = false;
    c.propagate();
    c.validate();
    pipeline::apply_default_paths(c, command);
    return c;
}

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Cross-lingual span-extraction reading comprehension"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic bilingual dataset");
    auto* train = app.add_subcommand("train", "Train a reader, aligner, verifier or dual model");
    auto* predict = app.add_subcommand("predict", "Predict the dev file with a trained run");
    auto* evaluate = app.add_subcommand("evaluate", "Score a prediction file (EM / F1)");
    auto* align = app.add_subcommand("align", "SimpleMatch translated answers onto passages");
    auto* backtranslate = app.add_subcommand("backtranslate", "Zero-shot back-translation with a source reader");
    auto* stats = app.add_subcommand("stats", "Dataset statistics");
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check of a model");
    for (auto* cmd : {gen, train, predict, evaluate, align, backtranslate, stats, gradcheck}) add_run_flags(cmd, f);

    gen->add_option("--num", f.num, "Training examples");
    gen->add_option("--dev-num", f.dev_num, "Dev examples (default num / 4)");
    gen->add_option("--ambiguity", f.ambiguity, "Share of targets whose cue is corrupted")
        ->check(CLI::Range(0.0, 1.0));
    predict->add_option("--checkpoint", f.checkpoint, "Run directory written by train")->required();
    backtranslate->add_option("--checkpoint", f.checkpoint, "Source reader run directory")->required();
    backtranslate->add_flag("--no-simplematch", f.no_simplematch, "Emit back-translated answers unaligned");
    evaluate->add_option("--predictions", f.predictions, "JSON id -> answer")->required();
    gradcheck->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
    gradcheck->add_option("--h", f.h, "Hidden size");
    gradcheck->add_option("--layers", f.layers, "Encoder layers");
    gradcheck->add_option("--tolerance", f.tolerance, "Maximum relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        nlohmann::json summary;
        int code = 0;
        if (*gen) {
            const auto c = resolve(f, "gen-synthetic");
            pipeline::SyntheticOptions o;
            o.train_examples = f.num;
            o.dev_examples = f.dev_num.value_or(std::max<std::size_t>(1, f.num / 4));
            o.ambiguity_rate = f.ambiguity;
            summary = pipeline::gen_synthetic(c, o);
        } else if (*train) {
            summary = pipeline::train(resolve(f, "train"));
        } else if (*predict) {
            summary = pipeline::predict(resolve(f, "predict"), f.checkpoint);
        } else if (*evaluate) {
            summary = pipeline::evaluate(resolve(f, "evaluate"), f.predictions);
        } else if (*align) {
            summary = pipeline::align(resolve(f, "align"));
        } else if (*backtranslate) {
            summary = pipeline::backtranslate(resolve(f, "backtranslate"), f.checkpoint);
        } else if (*stats) {
            summary = pipeline::stats(resolve(f, "stats"));
        } else if (*gradcheck) {
            const auto c = resolve(f, "gradcheck");
            pipeline::GradCheckSuiteOptions o;
            o.model = c.model;
            if (!f.model) o.model = pipeline::ModelKind::dual;
            o.hidden = f.h;
            o.layers = f.layers;
            o.tolerance = f.tolerance;
            const auto result = pipeline::gradcheck_suite(o);
            summary = pipeline::to_json(result);
            pipeline::write_summary(c, "gradcheck", "gradcheck.json", summary);
            code = result.passed ? 0 : 1;
        }
        std::cout << summary.dump(2) << '\n';
        return code;
    } catch (const ConfigError& e) {
        return fail(2, e.kind(), e.what());
    } catch (const Error& e) {
        return fail(1, e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail(1, "InternalError", e.what());
    }
}
