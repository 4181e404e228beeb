#include "clmrc/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "clmrc/errors.hpp"

namespace clmrc::model {
namespace {

constexpr char kMagic[8] = {'C', 'L', 'M', 'R', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T> || std::is_same_v<T, double>);
    unsigned char bytes[sizeof(T)];
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>)
        bits = std::bit_cast<std::uint64_t>(value);
    else
        bits = static_cast<std::uint64_t>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw CheckpointError(path.string() + ": truncated checkpoint");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    if constexpr (std::is_same_v<T, double>)
        return std::bit_cast<double>(bits);
    else
        return static_cast<T>(bits);
}

std::string get_string(std::istream& in, const std::filesystem::path& path) {
    const auto len = get<std::uint32_t>(in, path);
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) throw CheckpointError(path.string() + ": truncated checkpoint");
    return s;
}

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
    try {
        return nlohmann::json::parse(get_string(in, path));
    } catch (const nlohmann::json::parse_error& e) {
        throw CheckpointError(path.string() + ": bad metadata: " + e.what());
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const num::ParameterList& params, const nlohmann::json& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(kMagic, 8);
    const std::string meta_text = meta.dump();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
    out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<std::uint64_t>(out, p.value->rows());
        put<std::uint64_t>(out, p.value->cols());
        for (double v : p.value->values()) put<double>(out, v);
    }
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

nlohmann::json read_checkpoint_meta(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    return read_header(in, path);
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, const num::ParameterList& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    nlohmann::json meta = read_header(in, path);
    std::map<std::string, num::Matrix*> by_name;
    for (const auto& p : params) by_name.emplace(p.name, p.value);
    const auto count = get<std::uint32_t>(in, path);
    std::size_t filled = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = get_string(in, path);
        const auto rows = get<std::uint64_t>(in, path);
        const auto cols = get<std::uint64_t>(in, path);
        auto it = by_name.find(name);
        if (it == by_name.end()) throw CheckpointError(path.string() + ": unexpected tensor '" + name + "'");
        num::Matrix& target = *it->second;
        if (target.rows() != rows || target.cols() != cols)
            throw CheckpointError(path.string() + ": tensor '" + name + "' is " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + ", model expects " + target.shape_string());
        for (double& v : target.values()) v = get<double>(in, path);
        ++filled;
    }
    if (filled != params.size())
        throw CheckpointError(path.string() + ": holds " + std::to_string(filled) + " of " +
                              std::to_string(params.size()) + " expected tensors");
    return meta;
}

}  // namespace clmrc::model
