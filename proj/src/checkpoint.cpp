#include "ptm/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace ptm {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'M', 'C'};
constexpr unsigned char kVersion = 1;

void put_u64_le(std::ofstream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

std::uint64_t get_u64_le(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f32_le(std::ofstream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(buf, 4);
}

float get_f32_le(std::ifstream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const nn::ParamStore& params,
                     const CheckpointMeta& meta) {
    nlohmann::json header;
    header["format"] = kVersion;
    header["model"] = meta.model;
    header["seed"] = meta.seed;
    header["config"] = meta.config;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& name : params.names()) {
        const nn::Tensor& t = params.at(name);
        tensors.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    }
    header["tensors"] = tensors;
    std::string header_text = header.dump();

    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(kMagic, 4);
        out.put(static_cast<char>(kVersion));
        put_u64_le(out, header_text.size());
        out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
        for (const auto& name : params.names()) {
            const nn::Tensor& t = params.at(name);
            for (double v : t.value) put_f32_le(out, static_cast<float>(v));
        }
        if (!out) throw Error(ErrorCategory::training, "CHECKPOINT_WRITE", "cannot write " + path);
    }
    fs::rename(tmp, target);
}

CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore& params_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointCorrupt(path, "bad magic");
    int version = in.get();
    if (version != kVersion)
        throw CheckpointCorrupt(path, "unsupported version " + std::to_string(version));
    std::uint64_t header_len = get_u64_le(in);
    if (!in || header_len > (1ull << 30)) throw CheckpointCorrupt(path, "bad header length");
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw CheckpointCorrupt(path, "truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointCorrupt(path, std::string("header not valid JSON: ") + e.what());
    }

    CheckpointMeta meta;
    meta.model = header.value("model", std::string());
    meta.seed = header.value("seed", std::uint64_t{0});
    if (header.contains("config"))
        meta.config = header["config"].get<std::map<std::string, std::string>>();

    Rng dummy(0);
    for (const auto& entry : header["tensors"]) {
        std::string name = entry.at("name").get<std::string>();
        int rows = entry.at("rows").get<int>();
        int cols = entry.at("cols").get<int>();
        if (rows <= 0 || cols <= 0) throw CheckpointCorrupt(path, "bad tensor shape for " + name);
        nn::Tensor& t = params_out.ensure(name, rows, cols, dummy, 0.0);
        for (double& v : t.value) {
            v = static_cast<double>(get_f32_le(in));
        }
        if (!in) throw CheckpointCorrupt(path, "truncated tensor data at " + name);
    }
    return meta;
}

}  // namespace ptm
