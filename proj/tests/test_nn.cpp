#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ptm/nn.hpp"
#include "ptm/rng.hpp"

using namespace ptm;
using namespace ptm::nn;

namespace {

std::vector<double> vals(const Tape& t, Var v) { return t.value(v); }

}  // namespace

TEST_CASE("elementwise and reduction ops compute the expected values") {
    ParamStore p;
    Tape t(p);
    Var a = t.constant({1.0, -2.0, 3.0});
    Var b = t.constant({0.5, 4.0, -1.0});

    CHECK(vals(t, t.add(a, b)) == std::vector<double>{1.5, 2.0, 2.0});
    CHECK(vals(t, t.sub(a, b)) == std::vector<double>{0.5, -6.0, 4.0});
    CHECK(vals(t, t.mul(a, b)) == std::vector<double>{0.5, -8.0, -3.0});
    CHECK(vals(t, t.affine(a, 2.0, 1.0)) == std::vector<double>{3.0, -3.0, 7.0});
    CHECK(t.scalar_value(t.dot(a, b)) == doctest::Approx(0.5 - 8.0 - 3.0));
    CHECK(t.scalar_value(t.sum(a)) == doctest::Approx(2.0));
    CHECK(t.scalar_value(t.mean(a)) == doctest::Approx(2.0 / 3.0));
    CHECK(vals(t, t.abs_(a)) == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(vals(t, t.relu(a)) == std::vector<double>{1.0, 0.0, 3.0});
    CHECK(vals(t, t.clamp(a, -1.5, 2.0)) == std::vector<double>{1.0, -1.5, 2.0});

    Var sp = t.softplus(t.constant({0.0}));
    CHECK(t.scalar_value(sp) == doctest::Approx(std::log(2.0)));
    CHECK(t.scalar_value(t.log_(t.constant({std::exp(1.0)}))) == doctest::Approx(1.0));
    CHECK(t.scalar_value(t.sigmoid(t.constant({0.0}))) == doctest::Approx(0.5));
    CHECK(t.scalar_value(t.tanh_(t.constant({0.0}))) == doctest::Approx(0.0));
}

TEST_CASE("shape ops: matvec, concat, slice, row, broadcast") {
    ParamStore p;
    Tape t(p);
    Var w = t.constant({1.0, 2.0, 3.0, 4.0}, 2, 2);  // [[1,2],[3,4]]
    Var x = t.constant({5.0, 6.0});
    CHECK(vals(t, t.matvec(w, x)) == std::vector<double>{17.0, 39.0});
    CHECK(vals(t, t.row(w, 0)) == std::vector<double>{1.0, 2.0});
    CHECK(vals(t, t.row(w, 1)) == std::vector<double>{3.0, 4.0});

    Var c = t.concat(t.constant({1.0, 2.0}), t.constant({3.0}));
    CHECK(vals(t, c) == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(t.rows(c) == 3);
    CHECK(vals(t, t.slice(c, 1, 2)) == std::vector<double>{2.0, 3.0});

    Var s = t.scalar(3.0);
    CHECK(vals(t, t.bmul(t.constant({1.0, 2.0}), s)) == std::vector<double>{3.0, 6.0});
    CHECK(vals(t, t.badd(t.constant({1.0, 2.0}), s)) == std::vector<double>{4.0, 5.0});
    CHECK(t.scalar_value(t.inv_sqrt(t.constant({4.0}), 0.0)) == doctest::Approx(0.5));
}

TEST_CASE("softmax is a probability vector") {
    ParamStore p;
    Tape t(p);
    auto sm = vals(t, t.softmax(t.constant({1.0, 1.0})));
    CHECK(sm[0] == doctest::Approx(0.5));
    CHECK(sm[1] == doctest::Approx(0.5));

    auto sm2 = vals(t, t.softmax(t.constant({0.0, 2.5, -1.0, 600.0})));
    double total = 0;
    for (double v : sm2) {
        CHECK(v >= 0.0);
        CHECK(std::isfinite(v));
        total += v;
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(sm2[3] == doctest::Approx(1.0));  // large logits stay stable
}

TEST_CASE("losses: bce clamps probabilities, mae averages") {
    ParamStore p;
    Tape t(p);
    CHECK(t.scalar_value(bce_loss(t, t.constant({0.8}), 1.0)) ==
          doctest::Approx(-std::log(0.8)));
    CHECK(t.scalar_value(bce_loss(t, t.constant({0.8}), 0.0)) ==
          doctest::Approx(-std::log(0.2)));

    // degenerate probabilities stay finite through the clamp
    double at_zero = t.scalar_value(bce_loss(t, t.constant({0.0}), 1.0));
    CHECK(std::isfinite(at_zero));
    CHECK(at_zero == doctest::Approx(-std::log(kBceEps)));
    CHECK(std::isfinite(t.scalar_value(bce_loss(t, t.constant({1.0}), 0.0))));

    CHECK(t.scalar_value(mae_loss(t, t.constant({0.5, 1.0}), {0.0, 0.0})) ==
          doctest::Approx(0.75));
    CHECK(t.scalar_value(mae_loss(t, t.constant({0.5}), {0.5})) == doctest::Approx(0.0));
}

TEST_CASE("backward exposes input gradients on constants") {
    ParamStore p;
    Tape t(p);
    Var x = t.constant({2.0, -3.0});
    Var loss = t.sum(t.mul(x, x));  // d/dx = 2x
    t.backward(loss);
    auto g = t.grad(x);
    CHECK(g[0] == doctest::Approx(4.0));
    CHECK(g[1] == doctest::Approx(-6.0));
}

TEST_CASE("param store: init modes, idempotent ensure, deterministic seeding") {
    ParamStore p1, p2;
    Rng r1(5), r2(5);
    Tensor& w1 = p1.ensure("w", 4, 3, r1);
    Tensor& w2 = p2.ensure("w", 4, 3, r2);
    CHECK(w1.value == w2.value);
    double bound = 1.0 / std::sqrt(3.0);
    for (double v : w1.value) {
        CHECK(v >= -bound);
        CHECK(v <= bound);
    }

    Tensor& z = p1.ensure("z", 2, 2, r1, 0.0);
    for (double v : z.value) CHECK(v == 0.0);
    Tensor& s = p1.ensure("s", 2, 2, r1, 0.25);
    for (double v : s.value) {
        CHECK(v >= -0.25);
        CHECK(v <= 0.25);
    }

    // a second ensure must not reinitialize
    std::vector<double> before = p1.at("w").value;
    p1.ensure("w", 4, 3, r1);
    CHECK(p1.at("w").value == before);

    CHECK(p1.param_count() == 4 * 3 + 2 * 2 + 2 * 2);
    auto names = p1.names();
    CHECK(names == std::vector<std::string>{"s", "w", "z"});
    CHECK(p1.has("w"));
    CHECK(!p1.has("nope"));
}

TEST_CASE("adam: first step moves each coordinate by about lr") {
    ParamStore p;
    Rng rng(1);
    p.ensure("w", 1, 1, rng, 0.0);
    p.at("w").value[0] = 1.0;

    p.zero_grad();
    {
        Tape t(p);
        t.backward(t.sum(t.param("w")));  // grad = 1
    }
    p.adam_step(0.01, 1.0);
    CHECK(p.at("w").value[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));

    // grad_scale rescales accumulated gradients before the update
    p.reset_optimizer();
    p.at("w").value[0] = 1.0;
    p.zero_grad();
    for (int i = 0; i < 4; ++i) {
        Tape t(p);
        t.backward(t.sum(t.param("w")));
    }
    CHECK(p.at("w").grad[0] == doctest::Approx(4.0));
    p.adam_step(0.01, 0.25);
    CHECK(p.at("w").value[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
}

TEST_CASE("gradient check: mlp, lstm, layer norm, attention ops") {
    ParamStore p;
    Rng rng(7);
    ensure_mlp(p, "m", 3, 5, 2, rng);
    ensure_lstm(p, "l", 3, 4, rng);
    ensure_layer_norm(p, "ln", 4, rng);
    ensure_linear(p, "out", 6, 1, rng);
    p.ensure("emb", 3, 4, rng);
    p.ensure("q", 4, 1, rng);

    std::vector<std::vector<double>> xs = {{0.3, -0.2, 0.8}, {-0.5, 0.1, 0.4}, {0.2, 0.9, -0.7}};

    auto loss_fn = [&]() {
        p.zero_grad();
        Tape t(p);
        std::vector<Var> seq;
        for (const auto& x : xs) seq.push_back(t.constant(x));
        Var h = layer_norm(t, "ln", lstm_sequence(t, "l", seq, 4));
        Var f = mlp(t, "m", seq[0]);

        // small attention block over embedding rows
        Var q = t.param("q");
        Var s0 = t.dot(t.row(t.param("emb"), 0), q);
        Var s1 = t.dot(t.row(t.param("emb"), 1), q);
        Var s2 = t.dot(t.row(t.param("emb"), 2), q);
        Var scores = t.softmax(t.concat(t.concat(s0, s1), s2));
        Var pooled = t.add(t.add(t.bmul(t.row(t.param("emb"), 0), t.slice(scores, 0, 1)),
                                 t.bmul(t.row(t.param("emb"), 1), t.slice(scores, 1, 1))),
                           t.bmul(t.row(t.param("emb"), 2), t.slice(scores, 2, 1)));

        Var joined = t.concat(h, f);
        Var prob = t.sigmoid(linear(t, "out", joined));
        Var loss = t.add(bce_loss(t, prob, 1.0),
                         t.add(t.mean(t.mul(pooled, pooled)),
                               t.mean(t.softplus(t.bmul(h, t.inv_sqrt(t.dot(q, q)))))));
        t.backward(loss);
        return t.scalar_value(loss);
    };

    Rng pick(99);
    double err = max_grad_rel_err(p, loss_fn, pick, 40, 1e-5);
    CHECK(err < 1e-3);
}

TEST_CASE("gradient check: bce near the clamp stays well defined") {
    ParamStore p;
    Rng rng(11);
    p.ensure("w", 2, 1, rng, 0.5);

    auto loss_fn = [&]() {
        p.zero_grad();
        Tape t(p);
        Var prob = t.sigmoid(t.sum(t.param("w")));
        Var loss = t.add(bce_loss(t, prob, 0.0), bce_loss(t, prob, 1.0));
        t.backward(loss);
        return t.scalar_value(loss);
    };
    Rng pick(3);
    CHECK(max_grad_rel_err(p, loss_fn, pick, 4, 1e-6) < 1e-3);
}

TEST_CASE("lstm sequence output is deterministic and shaped") {
    ParamStore p1, p2;
    Rng r1(21), r2(21);
    ensure_lstm(p1, "l", 2, 3, r1);
    ensure_lstm(p2, "l", 2, 3, r2);

    auto run = [](ParamStore& p) {
        Tape t(p);
        std::vector<Var> xs = {t.constant({0.1, 0.2}), t.constant({-0.4, 0.6})};
        Var h = lstm_sequence(t, "l", xs, 3);
        return t.value(h);
    };
    auto h1 = run(p1);
    auto h2 = run(p2);
    REQUIRE(h1.size() == 3);
    CHECK(h1 == h2);
    for (double v : h1) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);  // tanh-bounded cell output
    }

    // order matters
    Tape t(p1);
    std::vector<Var> rev = {t.constant({-0.4, 0.6}), t.constant({0.1, 0.2})};
    CHECK(t.value(lstm_sequence(t, "l", rev, 3)) != h1);
}

TEST_CASE("layer norm standardizes before scale and shift") {
    ParamStore p;
    Rng rng(4);
    ensure_layer_norm(p, "ln", 4, rng);  // gamma = 1, beta = 0
    Tape t(p);
    Var y = layer_norm(t, "ln", t.constant({1.0, 2.0, 3.0, 10.0}));
    auto v = vals(t, y);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= 4.0;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= 4.0;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps in inv_sqrt shrinks it slightly
}

TEST_CASE("linear and mlp builders wire the expected shapes") {
    ParamStore p;
    Rng rng(17);
    ensure_linear(p, "lin", 3, 2, rng);
    ensure_mlp(p, "mlp", 3, 8, 4, rng);
    Tape t(p);
    Var x = t.constant({0.5, -0.5, 1.0});
    CHECK(t.rows(linear(t, "lin", x)) == 2);
    CHECK(t.rows(mlp(t, "mlp", x)) == 4);
}
