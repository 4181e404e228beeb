#include "clmrc/pipeline/config.hpp"

#include "clmrc/data/squad.hpp"
#include "clmrc/errors.hpp"

namespace clmrc::pipeline {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::reader: return "reader";
        case ModelKind::aligner: return "aligner";
        case ModelKind::verifier: return "verifier";
        case ModelKind::dual: return "dual";
    }
    return "reader";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "reader") return ModelKind::reader;
    if (name == "aligner") return ModelKind::aligner;
    if (name == "verifier") return ModelKind::verifier;
    if (name == "dual") return ModelKind::dual;
    throw ConfigError("unknown model kind '" + std::string(name) + "' (reader|aligner|verifier|dual)");
}

void RunConfig::propagate() {
    encoder.seed = seed;
    encoder.max_len = max_len;
    train.seed = seed;
}

void RunConfig::validate() const {
    if (delta > 5) throw ConfigError("delta must lie in 0..5, got " + std::to_string(delta));
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("noise_rate must lie in [0, 1]");
    if (max_len < 4) throw ConfigError("max_len must be at least 4");
    if (vocab_max < 5) throw ConfigError("vocab_max must be at least 5");
    encoder.validate();
    train.validate();
}

nlohmann::json to_json(const RunConfig& c) {
    return {{"model", std::string(to_string(c.model))},
            {"seed", c.seed},
            {"max_len", c.max_len},
            {"tokenizer", std::string(text::to_string(c.tokenizer))},
            {"vocab_max", c.vocab_max},
            {"encoder", model::to_json(c.encoder)},
            {"train", model::to_json(c.train)},
            {"dual", model::to_json(c.dual)},
            {"data",
             {{"train_file", c.data.train_file},
              {"dev_file", c.data.dev_file},
              {"source_train_file", c.data.source_train_file},
              {"source_dev_file", c.data.source_dev_file},
              {"translated_file", c.data.translated_file},
              {"dict", c.data.dict}}},
            {"delta", c.delta},
            {"use_simplematch", c.use_simplematch},
            {"noise_rate", c.noise_rate},
            {"out", c.out}};
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    try {
        RunConfig c;
        c.model = parse_model_kind(doc.value("model", std::string("reader")));
        c.seed = doc.value("seed", c.seed);
        c.max_len = doc.value("max_len", c.max_len);
        c.tokenizer = text::parse_tokenizer_mode(doc.value("tokenizer", std::string("whitespace")));
        c.vocab_max = doc.value("vocab_max", c.vocab_max);
        if (doc.contains("encoder")) c.encoder = model::encoder_config_from_json(doc["encoder"], c.encoder);
        if (doc.contains("train")) c.train = model::train_config_from_json(doc["train"], c.train);
        if (doc.contains("dual")) c.dual = model::dual_config_from_json(doc["dual"]);
        if (doc.contains("data")) {
            const auto& d = doc["data"];
            c.data.train_file = d.value("train_file", std::string());
            c.data.dev_file = d.value("dev_file", std::string());
            c.data.source_train_file = d.value("source_train_file", std::string());
            c.data.source_dev_file = d.value("source_dev_file", std::string());
            c.data.translated_file = d.value("translated_file", std::string());
            c.data.dict = d.value("dict", std::string());
        }
        c.delta = doc.value("delta", c.delta);
        c.use_simplematch = doc.value("use_simplematch", c.use_simplematch);
        c.noise_rate = doc.value("noise_rate", c.noise_rate);
        c.out = doc.value("out", c.out);
        c.propagate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const nlohmann::json doc = data::read_json_file(path);
    if (doc.is_object() && doc.contains("config") && doc.contains("inputs")) return run_config_from_json(doc["config"]);
    return run_config_from_json(doc);
}

void require_nonempty(std::initializer_list<std::pair<const char*, const std::string*>> paths) {
    for (const auto& [flag, path] : paths)
        if (path->empty()) throw ConfigError(std::string(flag) + " is required");
}

void require_files(std::initializer_list<std::pair<const char*, const std::string*>> paths) {
    for (const auto& [flag, path] : paths) {
        if (path->empty()) continue;
        if (!std::filesystem::exists(*path)) throw ConfigError(std::string(flag) + ": no such file " + *path);
    }
}

}  // namespace clmrc::pipeline
