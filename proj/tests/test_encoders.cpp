#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ptm/encoders.hpp"
#include "ptm/hashutil.hpp"

namespace fs = std::filesystem;
using namespace ptm;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("ptm_enc_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double l2_norm(const Embedding& v) {
    double s = 0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("hashing encoder: shape, normalization, determinism") {
    HashingEncoder enc(32);
    CHECK(enc.backend().name == "hashing");
    CHECK(enc.backend().dim == 32);
    CHECK(enc.backend().deterministic);

    Embedding a = enc.compute("for i in range(10):\n    print(i)");
    REQUIRE(a.size() == 32);
    CHECK(l2_norm(a) == doctest::Approx(1.0));

    Embedding b = enc.compute("for i in range(10):\n    print(i)");
    CHECK(a == b);

    Embedding c = enc.compute("while not done:\n    step()");
    CHECK(a != c);

    // empty input still produces a valid (zero) vector
    Embedding z = enc.compute("");
    REQUIRE(z.size() == 32);
    CHECK(l2_norm(z) == doctest::Approx(0.0));
}

TEST_CASE("make_encoder knows its backends") {
    auto h = make_encoder("hashing");
    CHECK(h->backend().dim == 64);  // default width
    auto h2 = make_encoder("hashing", 16);
    CHECK(h2->backend().dim == 16);
    auto cb = make_encoder("codebert");
    CHECK(cb->backend().dim == 768);
    auto bert = make_encoder("bert", 256);
    CHECK(bert->backend().dim == 256);
    CHECK_THROWS_AS((void)make_encoder("word2vec"), Error);
}

TEST_CASE("precomputed encoders refuse to compute locally") {
    auto enc = make_encoder("codebert");
    CHECK_THROWS_AS((void)enc->compute("print(1)"), BackendUnavailable);
}

TEST_CASE("cache keys are content hashes, stable across runs") {
    HashingEncoder enc(8);
    std::string k1 = embedding_cache_key(enc.backend(), "text a");
    std::string k2 = embedding_cache_key(enc.backend(), "text a");
    std::string k3 = embedding_cache_key(enc.backend(), "text b");
    CHECK(k1 == k2);
    CHECK(k1 != k3);
    CHECK(k1 == sha256_hex("hashing\n8\ntext a"));

    // the key binds the backend identity, not just the text
    EncoderBackend other{"hashing", 16, true};
    CHECK(embedding_cache_key(other, "text a") != k1);
}

TEST_CASE("embedding cache round-trips through disk") {
    fs::path root = temp_dir("cache");
    Embedding vec = {0.5f, -1.25f, 3.0f};
    {
        EmbeddingCache cache(root.string());
        CHECK(!cache.get("hashing", "k1", 3).has_value());
        cache.put("hashing", "k1", vec);
        auto got = cache.get("hashing", "k1", 3);
        REQUIRE(got.has_value());
        CHECK(*got == vec);
        CHECK(cache.stats().hits == 1);
        CHECK(cache.stats().misses == 1);
    }
    {
        // a fresh instance reads what the first one wrote
        EmbeddingCache cache(root.string());
        auto got = cache.get("hashing", "k1", 3);
        REQUIRE(got.has_value());
        CHECK(*got == vec);
    }
    fs::remove_all(root);
}

TEST_CASE("embedding cache with an empty root stays in memory") {
    EmbeddingCache cache("");
    Embedding vec = {1.0f, 2.0f};
    CHECK(!cache.get("hashing", "k", 2).has_value());
    cache.put("hashing", "k", vec);
    auto got = cache.get("hashing", "k", 2);
    REQUIRE(got.has_value());
    CHECK(*got == vec);
}

TEST_CASE("corrupt cache entries are reported, not returned") {
    fs::path root = temp_dir("corrupt");
    {
        EmbeddingCache cache(root.string());
        cache.put("hashing", "bad", {1.0f, 2.0f, 3.0f});
    }
    // find the .vec file and truncate it
    fs::path vec_file;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.path().extension() == ".vec") vec_file = entry.path();
    REQUIRE(!vec_file.empty());
    std::ofstream(vec_file, std::ios::binary | std::ios::trunc) << "xx";

    EmbeddingCache cache(root.string());
    CHECK_THROWS_AS((void)cache.get("hashing", "bad", 3), CacheCorrupt);
    fs::remove_all(root);
}

TEST_CASE("embed_code computes once and then hits the cache") {
    fs::path root = temp_dir("embed");
    HashingEncoder enc(16);
    EmbeddingCache cache(root.string());
    Embedding a = embed_code("x = 1", enc, cache);
    REQUIRE(a.size() == 16);
    CHECK(cache.stats().misses == 1);
    Embedding b = embed_code("x = 1", enc, cache);
    CHECK(b == a);
    CHECK(cache.stats().hits >= 1);
    fs::remove_all(root);
}

TEST_CASE("precomputed backend works via a preseeded cache") {
    fs::path root = temp_dir("preseed");
    auto enc = make_encoder("codebert", 4);
    EmbeddingCache cache(root.string());
    Embedding vec = {0.1f, 0.2f, 0.3f, 0.4f};
    cache.put("codebert", embedding_cache_key(enc->backend(), "prompt text"), vec);

    Embedding got = embed_task_text("prompt text", *enc, cache);
    CHECK(got == vec);

    // a text missing from the cache cannot be computed locally
    CHECK_THROWS_AS((void)embed_task_text("other text", *enc, cache), BackendUnavailable);
    fs::remove_all(root);
}
