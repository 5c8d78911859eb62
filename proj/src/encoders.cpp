#include "ptm/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ptm/hashutil.hpp"

namespace ptm {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxHashingTokens = 4096;

std::vector<std::string> simple_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size() && tokens.size() < kMaxHashingTokens) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            tokens.push_back(text.substr(i, j - i));
            i = j;
        } else {
            tokens.push_back(std::string(1, c));
            ++i;
        }
    }
    return tokens;
}

void write_le_f32(std::ofstream& out, const Embedding& vec) {
    for (float v : vec) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        char buf[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                       static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
        out.write(buf, 4);
    }
}

Embedding read_le_f32(std::ifstream& in, std::size_t count) {
    Embedding vec(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char buf[4];
        in.read(reinterpret_cast<char*>(buf), 4);
        std::uint32_t bits = static_cast<std::uint32_t>(buf[0]) |
                             (static_cast<std::uint32_t>(buf[1]) << 8) |
                             (static_cast<std::uint32_t>(buf[2]) << 16) |
                             (static_cast<std::uint32_t>(buf[3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        vec[i] = v;
    }
    return vec;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::string root) : root_(std::move(root)) {}

std::optional<Embedding> EmbeddingCache::get(const std::string& backend, const std::string& key,
                                             int dim) {
    std::string mem_key = backend + "/" + key;
    auto mit = memory_.find(mem_key);
    if (mit != memory_.end()) {
        ++stats_.hits;
        return mit->second;
    }
    if (root_.empty()) {
        ++stats_.misses;
        return std::nullopt;
    }
    fs::path path = fs::path(root_) / backend / key.substr(0, 2) / (key + ".vec");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ++stats_.misses;
        return std::nullopt;
    }
    auto size = fs::file_size(path);
    if (size != static_cast<std::uintmax_t>(dim) * 4)
        throw CacheCorrupt(path.string(), "size " + std::to_string(size) + " does not match dim " +
                                              std::to_string(dim));
    Embedding vec = read_le_f32(in, static_cast<std::size_t>(dim));
    if (!in) throw CacheCorrupt(path.string(), "short read");
    for (float v : vec) {
        if (!std::isfinite(v)) throw CacheCorrupt(path.string(), "non-finite entry");
    }
    memory_.emplace(mem_key, vec);
    ++stats_.hits;
    return vec;
}

void EmbeddingCache::put(const std::string& backend, const std::string& key, const Embedding& vec) {
    if (root_.empty()) {
        memory_[backend + "/" + key] = vec;
        return;
    }
    fs::path dir = fs::path(root_) / backend / key.substr(0, 2);
    fs::create_directories(dir);
    fs::path path = dir / (key + ".vec");
    fs::path tmp = dir / (key + ".vec.tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        write_le_f32(out, vec);
    }
    fs::rename(tmp, path);
    {
        std::ofstream idx(fs::path(root_) / backend / "index.tsv", std::ios::app);
        idx << key << "\t" << vec.size() << "\n";
    }
    memory_[backend + "/" + key] = vec;
}

HashingEncoder::HashingEncoder(int dim) {
    backend_ = {"hashing", dim > 0 ? dim : 64, true};
}

Embedding HashingEncoder::compute(const std::string& text) const {
    const int dim = backend_.dim;
    Embedding vec(static_cast<std::size_t>(dim), 0.0f);
    std::vector<std::string> tokens = simple_tokens(text);
    for (std::size_t n = 1; n <= 3; ++n) {
        if (tokens.size() < n) break;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string gram;
            for (std::size_t j = 0; j < n; ++j) {
                if (j) gram.push_back('\x1f');
                gram += tokens[i + j];
            }
            std::uint64_t h = fnv1a64(gram);
            std::size_t bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
            float sign = (h >> 63) ? -1.0f : 1.0f;
            vec[bucket] += sign;
        }
    }
    double norm = 0;
    for (float v : vec) norm += static_cast<double>(v) * static_cast<double>(v);
    if (norm > 0) {
        double inv = 1.0 / std::sqrt(norm);
        for (float& v : vec) v = static_cast<float>(static_cast<double>(v) * inv);
    }
    return vec;
}

PrecomputedEncoder::PrecomputedEncoder(std::string name, int dim) {
    backend_ = {std::move(name), dim, true};
}

Embedding PrecomputedEncoder::compute(const std::string&) const {
    throw BackendUnavailable(backend_.name);
}

std::unique_ptr<Encoder> make_encoder(const std::string& name, int dim) {
    if (name == "hashing") return std::make_unique<HashingEncoder>(dim > 0 ? dim : 64);
    if (name == "codebert" || name == "bert")
        return std::make_unique<PrecomputedEncoder>(name, dim > 0 ? dim : 768);
    throw Error(ErrorCategory::input, "UNKNOWN_BACKEND", "unknown encoder backend: " + name);
}

std::string embedding_cache_key(const EncoderBackend& backend, const std::string& text) {
    return sha256_hex(backend.name + "\n" + std::to_string(backend.dim) + "\n" + text);
}

namespace {

Embedding embed_impl(const std::string& text, const Encoder& encoder, EmbeddingCache& cache) {
    const EncoderBackend& b = encoder.backend();
    std::string key = embedding_cache_key(b, text);
    if (auto hit = cache.get(b.name, key, b.dim)) return *hit;
    Embedding vec = encoder.compute(text);
    for (float v : vec) {
        if (!std::isfinite(v))
            throw Error(ErrorCategory::input, "BAD_EMBEDDING", "non-finite embedding entry");
    }
    cache.put(b.name, key, vec);
    return vec;
}

}  // namespace

Embedding embed_code(const std::string& source_code, const Encoder& encoder, EmbeddingCache& cache) {
    return embed_impl(source_code, encoder, cache);
}

Embedding embed_task_text(const std::string& prompt_text, const Encoder& encoder,
                          EmbeddingCache& cache, std::vector<std::string>* warnings) {
    bool all_space = prompt_text.find_first_not_of(" \t\r\n") == std::string::npos;
    if (all_space && warnings) warnings->push_back("whitespace-only prompt text");
    return embed_impl(prompt_text, encoder, cache);
}

}  // namespace ptm
