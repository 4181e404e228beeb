#include "clmrc/data/squad.hpp"

#include <fstream>

#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"
#include "clmrc/text/utf8.hpp"

namespace clmrc::data {

using nlohmann::json;

bool answer_matches(const MRCExample& example, const Answer& answer) {
    const std::u32string passage = text::decode_utf8(example.passage);
    const std::u32string target = text::decode_utf8(answer.text);
    if (target.empty() || answer.char_start + target.size() > passage.size()) return false;
    return passage.compare(answer.char_start, target.size(), target) == 0;
}

void validate_example(const MRCExample& example, bool require_answer) {
    if (require_answer && example.answers.empty())
        throw ValidationError("example '" + example.id + "' has no answer");
    for (const auto& a : example.answers)
        if (!answer_matches(example, a))
            throw ValidationError("example '" + example.id + "': answer '" + a.text + "' does not occur at offset " +
                                  std::to_string(a.char_start));
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
    return *it;
}

const json& require_array(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_array()) throw ParseError(path + "." + key + ": expected an array");
    return v;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) throw ParseError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::string require_id(const json& obj, const std::string& path) {
    const json& v = require(obj, "id", path);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError(path + ".id: expected a string");
}

}  // namespace

std::vector<MRCExample> parse_squad(const json& doc, const LoadOptions& options, LoadReport* report) {
    std::vector<MRCExample> out;
    std::vector<std::string> broken;
    std::vector<std::string> repaired;
    const json& data = require_array(doc, "data", "$");
    for (std::size_t a = 0; a < data.size(); ++a) {
        const std::string apath = "$.data[" + std::to_string(a) + "]";
        const json& paragraphs = require_array(data[a], "paragraphs", apath);
        for (std::size_t p = 0; p < paragraphs.size(); ++p) {
            const std::string ppath = apath + ".paragraphs[" + std::to_string(p) + "]";
            const std::string context = require_string(paragraphs[p], "context", ppath);
            const std::u32string context32 = text::decode_utf8(context);
            const json& qas = require_array(paragraphs[p], "qas", ppath);
            for (std::size_t q = 0; q < qas.size(); ++q) {
                const std::string qpath = ppath + ".qas[" + std::to_string(q) + "]";
                MRCExample ex;
                ex.id = require_id(qas[q], qpath);
                ex.question = require_string(qas[q], "question", qpath);
                ex.passage = context;
                ex.language_tag = options.language_tag;
                const json& answers = require_array(qas[q], "answers", qpath);
                bool ok = true;
                for (std::size_t k = 0; k < answers.size(); ++k) {
                    const std::string kpath = qpath + ".answers[" + std::to_string(k) + "]";
                    Answer ans;
                    ans.text = require_string(answers[k], "text", kpath);
                    const json& start = require(answers[k], "answer_start", kpath);
                    if (!start.is_number_integer() || start.get<long long>() < 0)
                        throw ParseError(kpath + ".answer_start: expected a non-negative integer");
                    ans.char_start = start.get<std::size_t>();
                    const std::u32string ans32 = text::decode_utf8(ans.text);
                    const bool matches = !ans32.empty() && ans.char_start + ans32.size() <= context32.size() &&
                                         context32.compare(ans.char_start, ans32.size(), ans32) == 0;
                    if (!matches) {
                        const auto found = ans32.empty() ? std::u32string::npos : context32.find(ans32);
                        if (options.repair_offsets && found != std::u32string::npos) {
                            spdlog::warn("repaired answer offset of '{}': {} -> {}", ex.id, ans.char_start, found);
                            ans.char_start = found;
                            repaired.push_back(ex.id);
                        } else {
                            ok = false;
                        }
                    }
                    ex.answers.push_back(std::move(ans));
                }
                if (!ok) broken.push_back(ex.id);
                out.push_back(std::move(ex));
            }
        }
    }
    if (!broken.empty()) {
        std::string ids;
        for (const auto& id : broken) ids += (ids.empty() ? "" : ", ") + id;
        throw ValidationError("answer offsets do not match context for qa ids: " + ids);
    }
    if (report != nullptr) {
        report->examples = out.size();
        report->repaired_ids = std::move(repaired);
    }
    return out;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::vector<MRCExample> load_squad_json(const std::filesystem::path& path, const LoadOptions& options,
                                        LoadReport* report) {
    return parse_squad(read_json_file(path), options, report);
}

json to_squad(const std::vector<MRCExample>& examples) {
    json data = json::array();
    for (const auto& ex : examples) {
        json answers = json::array();
        for (const auto& a : ex.answers) answers.push_back({{"text", a.text}, {"answer_start", a.char_start}});
        json qa = {{"id", ex.id}, {"question", ex.question}, {"answers", answers}};
        json paragraph = {{"context", ex.passage}, {"qas", json::array({qa})}};
        data.push_back({{"title", ex.id}, {"paragraphs", json::array({paragraph})}});
    }
    return {{"version", "1.1"}, {"data", data}};
}

void save_squad_json(const std::filesystem::path& path, const std::vector<MRCExample>& examples) {
    write_json_file(path, to_squad(examples));
}

Predictions load_predictions(const std::filesystem::path& path) {
    const json doc = read_json_file(path);
    if (!doc.is_object()) throw ParseError(path.string() + ": prediction file must be a JSON object");
    Predictions out;
    for (const auto& [id, text] : doc.items()) {
        if (!text.is_string()) throw ParseError(path.string() + ": $." + id + ": expected a string");
        out.emplace(id, text.get<std::string>());
    }
    return out;
}

void save_predictions(const std::filesystem::path& path, const Predictions& predictions) {
    json doc = json::object();
    for (const auto& [id, text] : predictions) doc[id] = text;
    write_json_file(path, doc);
}

}  // namespace clmrc::data
