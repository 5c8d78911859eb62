#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptm/errors.hpp"

namespace ptm {

using Embedding = std::vector<float>;

struct EncoderBackend {
    std::string name;
    int dim = 0;
    bool deterministic = true;
};

struct BackendUnavailable : Error {
    explicit BackendUnavailable(const std::string& backend)
        : Error(ErrorCategory::input, "BACKEND_UNAVAILABLE",
                "backend '" + backend +
                    "' has no local weights; precompute its vectors into the cache") {}
};

struct CacheCorrupt : Error {
    explicit CacheCorrupt(const std::string& path, const std::string& reason)
        : Error(ErrorCategory::input, "CACHE_CORRUPT", "cache file " + path + ": " + reason) {}
};

// Content-addressed on-disk store: <root>/<backend>/<first-2-hex>/<key>.vec
// holding packed little-endian float32, plus <root>/<backend>/index.tsv.
// Writes go through a temp file + rename so readers never see partial data.
// An empty root keeps the cache in memory only.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::string root);

    std::optional<Embedding> get(const std::string& backend, const std::string& key, int dim);
    void put(const std::string& backend, const std::string& key, const Embedding& vec);

    struct Stats {
        std::uint64_t hits = 0;
        std::uint64_t misses = 0;
    };
    const Stats& stats() const { return stats_; }

    const std::string& root() const { return root_; }

private:
    std::string root_;
    std::map<std::string, Embedding> memory_;
    Stats stats_;
};

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual const EncoderBackend& backend() const = 0;
    // Uncached embedding computation; callers normally go through
    // embed_code / embed_task_text.
    virtual Embedding compute(const std::string& text) const = 0;
};

// Dependency-free fallback: token 1..3-gram feature hashing with signed
// counts, L2-normalized. Inputs beyond 4096 tokens are truncated.
class HashingEncoder : public Encoder {
public:
    explicit HashingEncoder(int dim = 64);
    const EncoderBackend& backend() const override { return backend_; }
    Embedding compute(const std::string& text) const override;

private:
    EncoderBackend backend_;
};

// Stands in for pretrained encoders (mean-pooled, 512-token contract):
// vectors must have been precomputed into the cache; a miss means the
// backend is unavailable in this environment.
class PrecomputedEncoder : public Encoder {
public:
    PrecomputedEncoder(std::string name, int dim);
    const EncoderBackend& backend() const override { return backend_; }
    Embedding compute(const std::string& text) const override;

private:
    EncoderBackend backend_;
};

// Known names: "hashing" (dim defaults to 64) and the pretrained stand-ins
// "codebert" / "bert" (dim defaults to 768).
std::unique_ptr<Encoder> make_encoder(const std::string& name, int dim = 0);

std::string embedding_cache_key(const EncoderBackend& backend, const std::string& text);

Embedding embed_code(const std::string& source_code, const Encoder& encoder, EmbeddingCache& cache);
Embedding embed_task_text(const std::string& prompt_text, const Encoder& encoder,
                          EmbeddingCache& cache, std::vector<std::string>* warnings = nullptr);

}  // namespace ptm
