#include "clmrc/pipeline/manifest.hpp"

#include <array>
#include <fstream>

#include <openssl/evp.h>

#include "clmrc/data/squad.hpp"
#include "clmrc/errors.hpp"
#include "clmrc/kernels.hpp"

namespace clmrc::pipeline {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string() + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 unavailable");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 15]);
    }
    return out;
}

Manifest Manifest::capture(std::string command, const RunConfig& config,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
    Manifest m;
    m.command = std::move(command);
    m.config = config;
    m.kernels = kernels::active().name;
    std::vector<std::pair<std::string, std::string>> all = {{"train_file", config.data.train_file},
                                                            {"dev_file", config.data.dev_file},
                                                            {"source_train_file", config.data.source_train_file},
                                                            {"source_dev_file", config.data.source_dev_file},
                                                            {"translated_file", config.data.translated_file},
                                                            {"dict", config.data.dict}};
    all.insert(all.end(), extra.begin(), extra.end());
    for (const auto& [role, path] : all) {
        if (path.empty()) continue;
        std::error_code ec;
        if (std::filesystem::is_directory(path, ec)) {
            // model directories: hash the files inside in name order
            std::vector<std::filesystem::path> files;
            for (const auto& e : std::filesystem::directory_iterator(path))
                if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files)
                m.inputs.push_back({role, f.string(), sha256_file(f), std::filesystem::file_size(f)});
        } else {
            m.inputs.push_back({role, path, sha256_file(path), std::filesystem::file_size(path)});
        }
    }
    return m;
}

nlohmann::json to_json(const Manifest& m) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& i : m.inputs)
        inputs.push_back({{"role", i.role}, {"path", i.path}, {"sha256", i.sha256}, {"bytes", i.bytes}});
    return {{"command", m.command}, {"config", to_json(m.config)}, {"kernels", m.kernels},
            {"inputs", inputs},     {"outputs", m.outputs}};
}

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest) {
    data::write_json_file(dir / "manifest.json", to_json(manifest));
}

}  // namespace clmrc::pipeline
