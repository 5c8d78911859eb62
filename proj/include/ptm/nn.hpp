#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ptm/errors.hpp"
#include "ptm/rng.hpp"

namespace ptm::nn {

struct Tensor {
    int rows = 0;
    int cols = 1;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> m;  // Adam first moment
    std::vector<double> v;  // Adam second moment

    std::size_t size() const { return value.size(); }
};

// Named parameter tensors plus Adam state. Creation order is set by the
// model constructors, so initialization is deterministic under a fixed seed.
class ParamStore {
public:
    // init_scale < 0: U(-1/sqrt(cols), 1/sqrt(cols)); == 0: zeros;
    // > 0: U(-init_scale, init_scale).
    Tensor& ensure(const std::string& name, int rows, int cols, Rng& rng, double init_scale = -1.0);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<std::string> names() const;  // sorted
    std::size_t param_count() const;

    void zero_grad();
    // grad_scale multiplies accumulated gradients (e.g. 1/batch) before the
    // Adam update (beta1=0.9, beta2=0.999, eps=1e-8).
    void adam_step(double learning_rate, double grad_scale);
    void reset_optimizer();

    std::map<std::string, Tensor>& tensors() { return tensors_; }
    const std::map<std::string, Tensor>& tensors() const { return tensors_; }

private:
    std::map<std::string, Tensor> tensors_;
    std::int64_t step_ = 0;
};

struct Var {
    int id = -1;
};

// Reverse-mode autodiff over a flat, append-only node arena. Values are
// column vectors unless created as matrices (constants or parameters);
// matrices participate only through matvec / row.
class Tape {
public:
    explicit Tape(ParamStore& params);

    Var constant(const std::vector<double>& value, int rows = -1, int cols = 1);
    Var scalar(double value);
    Var param(const std::string& name);  // cached per tape

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var affine(Var a, double scale, double shift);
    Var matvec(Var w, Var x);
    Var dot(Var a, Var b);
    Var concat(Var a, Var b);
    Var slice(Var a, int start, int len);
    Var row(Var matrix, int index);
    Var sigmoid(Var a);
    Var tanh_(Var a);
    Var relu(Var a);
    Var softplus(Var a);
    Var log_(Var a);
    Var abs_(Var a);
    Var clamp(Var a, double lo, double hi);
    Var sum(Var a);
    Var mean(Var a);
    Var softmax(Var a);
    Var bmul(Var vec, Var scalar);  // vec * scalar (broadcast)
    Var badd(Var vec, Var scalar);
    Var inv_sqrt(Var scalar, double eps = 1e-5);

    // Seeds d(out)/d(out)=1, walks the arena in reverse, then adds parameter
    // node gradients into the store's grad fields.
    void backward(Var out);

    const std::vector<double>& value(Var v) const;
    // Valid after backward(); includes gradients of constant input nodes.
    const std::vector<double>& grad(Var v) const;
    double scalar_value(Var v) const;
    int rows(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        constant, param, add, sub, mul, affine, matvec, dot, concat, slice, row,
        sigmoid, tanh_, relu, softplus, log_, abs_, clamp, sum, mean, softmax,
        bmul, badd, inv_sqrt,
    };

    struct Node {
        Op op{};
        int a = -1;
        int b = -1;
        int rows = 0;
        int cols = 1;
        int i0 = 0;
        int i1 = 0;
        double c0 = 0;
        double c1 = 0;
        std::vector<double> val;
        std::vector<double> grad;
    };

    Var push(Node node);
    const Node& node(Var v) const;

    ParamStore& params_;
    std::vector<Node> nodes_;
    std::map<std::string, Var> param_cache_;
};

// Layer builders. ensure_* create the named tensors; the Var builders
// expect them to exist already.
void ensure_linear(ParamStore& p, const std::string& prefix, int in_dim, int out_dim, Rng& rng);
Var linear(Tape& t, const std::string& prefix, Var x);

void ensure_mlp(ParamStore& p, const std::string& prefix, int in_dim, int hidden_dim, int out_dim,
                Rng& rng);
Var mlp(Tape& t, const std::string& prefix, Var x);  // linear-relu-linear

void ensure_lstm(ParamStore& p, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng);
// Returns the final hidden state after consuming xs in order.
Var lstm_sequence(Tape& t, const std::string& prefix, const std::vector<Var>& xs, int hidden_dim);

Var layer_norm(Tape& t, const std::string& prefix, Var x);
void ensure_layer_norm(ParamStore& p, const std::string& prefix, int dim, Rng& rng);

// -(t*log(p) + (1-t)*log(1-p)) with p clamped to [1e-7, 1-1e-7].
inline constexpr double kBceEps = 1e-7;
Var bce_loss(Tape& t, Var prob, double label);
Var mae_loss(Tape& t, Var pred, const std::vector<double>& target);

// Runs loss_with_backward once for analytic gradients, then compares
// n_coords random parameter coordinates against central finite differences.
// Returns the maximum relative error (absolute error where both sides are
// tiny). loss_with_backward must zero grads, build a fresh graph over
// `params`, run backward, and return the loss value.
double max_grad_rel_err(ParamStore& params, const std::function<double()>& loss_with_backward,
                        Rng& rng, int n_coords, double step);

}  // namespace ptm::nn
