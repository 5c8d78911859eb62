#include "ptm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace ptm::nn {

namespace {

struct InternalError : Error {
    explicit InternalError(const std::string& msg)
        : Error(ErrorCategory::training, "INTERNAL", msg) {}
};

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor& ParamStore::ensure(const std::string& name, int rows, int cols, Rng& rng,
                           double init_scale) {
    auto it = tensors_.find(name);
    if (it != tensors_.end()) {
        if (it->second.rows != rows || it->second.cols != cols)
            throw InternalError("tensor " + name + " re-declared with different shape");
        return it->second;
    }
    Tensor t;
    t.rows = rows;
    t.cols = cols;
    std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    t.value.resize(n);
    t.grad.assign(n, 0.0);
    t.m.assign(n, 0.0);
    t.v.assign(n, 0.0);
    double r = init_scale < 0 ? 1.0 / std::sqrt(static_cast<double>(cols)) : init_scale;
    for (std::size_t i = 0; i < n; ++i) t.value[i] = r == 0 ? 0.0 : rng.uniform(-r, r);
    return tensors_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InternalError("unknown tensor: " + name);
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InternalError("unknown tensor: " + name);
    return it->second;
}

bool ParamStore::has(const std::string& name) const { return tensors_.count(name) > 0; }

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : tensors_) out.push_back(name);
    return out;
}

std::size_t ParamStore::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors_) n += t.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void ParamStore::adam_step(double learning_rate, double grad_scale) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step_;
    double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (auto& [name, t] : tensors_) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            double g = t.grad[i] * grad_scale;
            t.m[i] = b1 * t.m[i] + (1.0 - b1) * g;
            t.v[i] = b2 * t.v[i] + (1.0 - b2) * g * g;
            double mhat = t.m[i] / c1;
            double vhat = t.v[i] / c2;
            t.value[i] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void ParamStore::reset_optimizer() {
    step_ = 0;
    for (auto& [name, t] : tensors_) {
        std::fill(t.m.begin(), t.m.end(), 0.0);
        std::fill(t.v.begin(), t.v.end(), 0.0);
    }
}

Tape::Tape(ParamStore& params) : params_(params) {}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

Var Tape::constant(const std::vector<double>& value, int rows, int cols) {
    Node n;
    n.op = Op::constant;
    n.rows = rows < 0 ? static_cast<int>(value.size()) : rows;
    n.cols = cols;
    if (static_cast<std::size_t>(n.rows) * static_cast<std::size_t>(n.cols) != value.size())
        throw InternalError("constant shape mismatch");
    n.val = value;
    return push(std::move(n));
}

Var Tape::scalar(double value) { return constant({value}, 1, 1); }

Var Tape::param(const std::string& name) {
    auto it = param_cache_.find(name);
    if (it != param_cache_.end()) return it->second;
    Tensor& t = params_.at(name);
    Node n;
    n.op = Op::param;
    n.rows = t.rows;
    n.cols = t.cols;
    n.val = t.value;
    Var v = push(std::move(n));
    param_cache_.emplace(name, v);
    return v;
}

Var Tape::add(Var a, Var b) {
    const Node &na = node(a), &nb = node(b);
    if (na.val.size() != nb.val.size()) throw InternalError("add size mismatch");
    Node n;
    n.op = Op::add;
    n.a = a.id;
    n.b = b.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] + nb.val[i];
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    const Node &na = node(a), &nb = node(b);
    if (na.val.size() != nb.val.size()) throw InternalError("sub size mismatch");
    Node n;
    n.op = Op::sub;
    n.a = a.id;
    n.b = b.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] - nb.val[i];
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    const Node &na = node(a), &nb = node(b);
    if (na.val.size() != nb.val.size()) throw InternalError("mul size mismatch");
    Node n;
    n.op = Op::mul;
    n.a = a.id;
    n.b = b.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] * nb.val[i];
    return push(std::move(n));
}

Var Tape::affine(Var a, double scale, double shift) {
    const Node& na = node(a);
    Node n;
    n.op = Op::affine;
    n.a = a.id;
    n.rows = na.rows;
    n.c0 = scale;
    n.c1 = shift;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = scale * na.val[i] + shift;
    return push(std::move(n));
}

Var Tape::matvec(Var w, Var x) {
    const Node &nw = node(w), &nx = node(x);
    if (nw.cols != nx.rows || nx.cols != 1) throw InternalError("matvec shape mismatch");
    Node n;
    n.op = Op::matvec;
    n.a = w.id;
    n.b = x.id;
    n.rows = nw.rows;
    n.val.assign(static_cast<std::size_t>(nw.rows), 0.0);
    for (int i = 0; i < nw.rows; ++i) {
        double acc = 0;
        const double* wrow = nw.val.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(nw.cols);
        for (int j = 0; j < nw.cols; ++j) acc += wrow[j] * nx.val[static_cast<std::size_t>(j)];
        n.val[static_cast<std::size_t>(i)] = acc;
    }
    return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
    const Node &na = node(a), &nb = node(b);
    if (na.val.size() != nb.val.size()) throw InternalError("dot size mismatch");
    Node n;
    n.op = Op::dot;
    n.a = a.id;
    n.b = b.id;
    n.rows = 1;
    double acc = 0;
    for (std::size_t i = 0; i < na.val.size(); ++i) acc += na.val[i] * nb.val[i];
    n.val = {acc};
    return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
    const Node &na = node(a), &nb = node(b);
    Node n;
    n.op = Op::concat;
    n.a = a.id;
    n.b = b.id;
    n.rows = na.rows + nb.rows;
    n.i0 = na.rows;
    n.val = na.val;
    n.val.insert(n.val.end(), nb.val.begin(), nb.val.end());
    return push(std::move(n));
}

Var Tape::slice(Var a, int start, int len) {
    const Node& na = node(a);
    if (start < 0 || len <= 0 || start + len > na.rows) throw InternalError("slice out of range");
    Node n;
    n.op = Op::slice;
    n.a = a.id;
    n.rows = len;
    n.i0 = start;
    n.i1 = len;
    n.val.assign(na.val.begin() + start, na.val.begin() + start + len);
    return push(std::move(n));
}

Var Tape::row(Var matrix, int index) {
    const Node& na = node(matrix);
    if (index < 0 || index >= na.rows) throw InternalError("row out of range");
    Node n;
    n.op = Op::row;
    n.a = matrix.id;
    n.rows = na.cols;
    n.i0 = index;
    auto begin = na.val.begin() + static_cast<std::ptrdiff_t>(index) * na.cols;
    n.val.assign(begin, begin + na.cols);
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::sigmoid;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = stable_sigmoid(na.val[i]);
    return push(std::move(n));
}

Var Tape::tanh_(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::tanh_;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::tanh(na.val[i]);
    return push(std::move(n));
}

Var Tape::relu(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::relu;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] > 0 ? na.val[i] : 0.0;
    return push(std::move(n));
}

Var Tape::softplus(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::softplus;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) {
        double x = na.val[i];
        n.val[i] = x > 30 ? x : std::log1p(std::exp(x));
    }
    return push(std::move(n));
}

Var Tape::log_(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::log_;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::log(na.val[i]);
    return push(std::move(n));
}

Var Tape::abs_(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::abs_;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::fabs(na.val[i]);
    return push(std::move(n));
}

Var Tape::clamp(Var a, double lo, double hi) {
    const Node& na = node(a);
    Node n;
    n.op = Op::clamp;
    n.a = a.id;
    n.rows = na.rows;
    n.c0 = lo;
    n.c1 = hi;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::min(hi, std::max(lo, na.val[i]));
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::sum;
    n.a = a.id;
    n.rows = 1;
    double acc = 0;
    for (double v : na.val) acc += v;
    n.val = {acc};
    return push(std::move(n));
}

Var Tape::mean(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::mean;
    n.a = a.id;
    n.rows = 1;
    double acc = 0;
    for (double v : na.val) acc += v;
    n.val = {acc / static_cast<double>(na.val.size())};
    return push(std::move(n));
}

Var Tape::softmax(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::softmax;
    n.a = a.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    double mx = *std::max_element(na.val.begin(), na.val.end());
    double z = 0;
    for (std::size_t i = 0; i < n.val.size(); ++i) {
        n.val[i] = std::exp(na.val[i] - mx);
        z += n.val[i];
    }
    for (double& v : n.val) v /= z;
    return push(std::move(n));
}

Var Tape::bmul(Var vec, Var s) {
    const Node &na = node(vec), &ns = node(s);
    if (ns.val.size() != 1) throw InternalError("bmul scalar must be size 1");
    Node n;
    n.op = Op::bmul;
    n.a = vec.id;
    n.b = s.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] * ns.val[0];
    return push(std::move(n));
}

Var Tape::badd(Var vec, Var s) {
    const Node &na = node(vec), &ns = node(s);
    if (ns.val.size() != 1) throw InternalError("badd scalar must be size 1");
    Node n;
    n.op = Op::badd;
    n.a = vec.id;
    n.b = s.id;
    n.rows = na.rows;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] + ns.val[0];
    return push(std::move(n));
}

Var Tape::inv_sqrt(Var s, double eps) {
    const Node& ns = node(s);
    if (ns.val.size() != 1) throw InternalError("inv_sqrt expects a scalar");
    Node n;
    n.op = Op::inv_sqrt;
    n.a = s.id;
    n.rows = 1;
    n.c0 = eps;
    n.val = {1.0 / std::sqrt(ns.val[0] + eps)};
    return push(std::move(n));
}

void Tape::backward(Var out) {
    Node& o = nodes_[static_cast<std::size_t>(out.id)];
    if (o.val.size() != 1) throw InternalError("backward needs a scalar output");
    for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
    o.grad[0] = 1.0;

    for (int idx = static_cast<int>(nodes_.size()) - 1; idx >= 0; --idx) {
        Node& n = nodes_[static_cast<std::size_t>(idx)];
        bool any = false;
        for (double g : n.grad) {
            if (g != 0) {
                any = true;
                break;
            }
        }
        if (!any) continue;
        Node* pa = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
        Node* pb = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
        switch (n.op) {
            case Op::constant:
            case Op::param:
                break;
            case Op::add:
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    pa->grad[i] += n.grad[i];
                    pb->grad[i] += n.grad[i];
                }
                break;
            case Op::sub:
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    pa->grad[i] += n.grad[i];
                    pb->grad[i] -= n.grad[i];
                }
                break;
            case Op::mul:
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    pa->grad[i] += n.grad[i] * pb->val[i];
                    pb->grad[i] += n.grad[i] * pa->val[i];
                }
                break;
            case Op::affine:
                for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.c0 * n.grad[i];
                break;
            case Op::matvec: {
                int rows = pa->rows, cols = pa->cols;
                for (int i = 0; i < rows; ++i) {
                    double g = n.grad[static_cast<std::size_t>(i)];
                    if (g == 0) continue;
                    double* warow = pa->grad.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
                    const double* wrow = pa->val.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
                    for (int j = 0; j < cols; ++j) {
                        warow[j] += g * pb->val[static_cast<std::size_t>(j)];
                        pb->grad[static_cast<std::size_t>(j)] += g * wrow[j];
                    }
                }
                break;
            }
            case Op::dot:
                for (std::size_t i = 0; i < pa->val.size(); ++i) {
                    pa->grad[i] += n.grad[0] * pb->val[i];
                    pb->grad[i] += n.grad[0] * pa->val[i];
                }
                break;
            case Op::concat:
                for (std::size_t i = 0; i < static_cast<std::size_t>(n.i0); ++i) pa->grad[i] += n.grad[i];
                for (std::size_t i = static_cast<std::size_t>(n.i0); i < n.grad.size(); ++i)
                    pb->grad[i - static_cast<std::size_t>(n.i0)] += n.grad[i];
                break;
            case Op::slice:
                for (int i = 0; i < n.i1; ++i)
                    pa->grad[static_cast<std::size_t>(n.i0 + i)] += n.grad[static_cast<std::size_t>(i)];
                break;
            case Op::row: {
                double* garow = pa->grad.data() + static_cast<std::size_t>(n.i0) * static_cast<std::size_t>(pa->cols);
                for (int i = 0; i < pa->cols; ++i) garow[i] += n.grad[static_cast<std::size_t>(i)];
                break;
            }
            case Op::sigmoid:
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pa->grad[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
                break;
            case Op::tanh_:
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pa->grad[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
                break;
            case Op::relu:
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    if (pa->val[i] > 0) pa->grad[i] += n.grad[i];
                break;
            case Op::softplus:
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pa->grad[i] += n.grad[i] * stable_sigmoid(pa->val[i]);
                break;
            case Op::log_:
                for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] / pa->val[i];
                break;
            case Op::abs_:
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    double s = pa->val[i] > 0 ? 1.0 : (pa->val[i] < 0 ? -1.0 : 0.0);
                    pa->grad[i] += n.grad[i] * s;
                }
                break;
            case Op::clamp:
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    if (pa->val[i] > n.c0 && pa->val[i] < n.c1) pa->grad[i] += n.grad[i];
                break;
            case Op::sum:
                for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += n.grad[0];
                break;
            case Op::mean: {
                double g = n.grad[0] / static_cast<double>(pa->grad.size());
                for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g;
                break;
            }
            case Op::softmax: {
                double dotgy = 0;
                for (std::size_t i = 0; i < n.grad.size(); ++i) dotgy += n.grad[i] * n.val[i];
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pa->grad[i] += n.val[i] * (n.grad[i] - dotgy);
                break;
            }
            case Op::bmul:
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    pa->grad[i] += n.grad[i] * pb->val[0];
                    pb->grad[0] += n.grad[i] * pa->val[i];
                }
                break;
            case Op::badd:
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    pa->grad[i] += n.grad[i];
                    pb->grad[0] += n.grad[i];
                }
                break;
            case Op::inv_sqrt: {
                double y = n.val[0];
                pa->grad[0] += n.grad[0] * (-0.5) * y * y * y;
                break;
            }
        }
    }

    for (const auto& [name, var] : param_cache_) {
        Tensor& t = params_.at(name);
        const Node& n = nodes_[static_cast<std::size_t>(var.id)];
        for (std::size_t i = 0; i < t.size(); ++i) t.grad[i] += n.grad[i];
    }
}

const std::vector<double>& Tape::value(Var v) const { return node(v).val; }

const std::vector<double>& Tape::grad(Var v) const { return node(v).grad; }

double Tape::scalar_value(Var v) const {
    const Node& n = node(v);
    if (n.val.size() != 1) throw InternalError("scalar_value on non-scalar");
    return n.val[0];
}

int Tape::rows(Var v) const { return node(v).rows; }

void ensure_linear(ParamStore& p, const std::string& prefix, int in_dim, int out_dim, Rng& rng) {
    p.ensure(prefix + ".w", out_dim, in_dim, rng, -1.0);
    p.ensure(prefix + ".b", out_dim, 1, rng, 0.0);
}

Var linear(Tape& t, const std::string& prefix, Var x) {
    return t.add(t.matvec(t.param(prefix + ".w"), x), t.param(prefix + ".b"));
}

void ensure_mlp(ParamStore& p, const std::string& prefix, int in_dim, int hidden_dim, int out_dim,
                Rng& rng) {
    ensure_linear(p, prefix + ".l1", in_dim, hidden_dim, rng);
    ensure_linear(p, prefix + ".l2", hidden_dim, out_dim, rng);
}

// Softplus keeps every hidden unit differentiable; with narrow layers a
// relu here can start with the whole layer dead for near-constant inputs.
Var mlp(Tape& t, const std::string& prefix, Var x) {
    return linear(t, prefix + ".l2", t.softplus(linear(t, prefix + ".l1", x)));
}

void ensure_lstm(ParamStore& p, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng) {
    p.ensure(prefix + ".w_ih", 4 * hidden_dim, in_dim, rng, -1.0);
    p.ensure(prefix + ".w_hh", 4 * hidden_dim, hidden_dim, rng, -1.0);
    bool fresh = !p.has(prefix + ".b");
    Tensor& b = p.ensure(prefix + ".b", 4 * hidden_dim, 1, rng, 0.0);
    // Forget-gate bias starts at 1 so early training does not erase the cell
    // state; with stacked recurrences a zero start cuts gradient flow badly.
    if (fresh)
        for (int i = hidden_dim; i < 2 * hidden_dim; ++i) b.value[static_cast<std::size_t>(i)] = 1.0;
}

Var lstm_sequence(Tape& t, const std::string& prefix, const std::vector<Var>& xs, int hidden_dim) {
    Var w_ih = t.param(prefix + ".w_ih");
    Var w_hh = t.param(prefix + ".w_hh");
    Var b = t.param(prefix + ".b");
    Var h = t.constant(std::vector<double>(static_cast<std::size_t>(hidden_dim), 0.0));
    Var c = h;
    for (Var x : xs) {
        Var gates = t.add(t.add(t.matvec(w_ih, x), t.matvec(w_hh, h)), b);
        Var gi = t.sigmoid(t.slice(gates, 0, hidden_dim));
        Var gf = t.sigmoid(t.slice(gates, hidden_dim, hidden_dim));
        Var gg = t.tanh_(t.slice(gates, 2 * hidden_dim, hidden_dim));
        Var go = t.sigmoid(t.slice(gates, 3 * hidden_dim, hidden_dim));
        c = t.add(t.mul(gf, c), t.mul(gi, gg));
        h = t.mul(go, t.tanh_(c));
    }
    return h;
}

void ensure_layer_norm(ParamStore& p, const std::string& prefix, int dim, Rng& rng) {
    Tensor& g = p.ensure(prefix + ".gamma", dim, 1, rng, 0.0);
    std::fill(g.value.begin(), g.value.end(), 1.0);
    p.ensure(prefix + ".beta", dim, 1, rng, 0.0);
}

Var layer_norm(Tape& t, const std::string& prefix, Var x) {
    Var mu = t.mean(x);
    Var centered = t.badd(x, t.affine(mu, -1.0, 0.0));
    Var var = t.mean(t.mul(centered, centered));
    Var normed = t.bmul(centered, t.inv_sqrt(var));
    return t.add(t.mul(normed, t.param(prefix + ".gamma")), t.param(prefix + ".beta"));
}

Var bce_loss(Tape& t, Var prob, double label) {
    Var pc = t.clamp(prob, kBceEps, 1.0 - kBceEps);
    Var ll = label > 0.5 ? t.log_(pc) : t.log_(t.affine(pc, -1.0, 1.0));
    return t.affine(ll, -1.0, 0.0);
}

Var mae_loss(Tape& t, Var pred, const std::vector<double>& target) {
    return t.mean(t.abs_(t.sub(pred, t.constant(target))));
}

double max_grad_rel_err(ParamStore& params, const std::function<double()>& loss_with_backward,
                        Rng& rng, int n_coords, double step) {
    loss_with_backward();
    std::map<std::string, std::vector<double>> analytic;
    for (const auto& [name, t] : params.tensors()) analytic[name] = t.grad;

    std::vector<std::pair<std::string, std::size_t>> coords;
    for (const auto& [name, t] : params.tensors())
        for (std::size_t i = 0; i < t.size(); ++i) coords.push_back({name, i});

    double worst = 0;
    for (int k = 0; k < n_coords; ++k) {
        auto& [name, i] =
            coords[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(coords.size()) - 1))];
        Tensor& t = params.at(name);
        double orig = t.value[i];
        t.value[i] = orig + step;
        double lp = loss_with_backward();
        t.value[i] = orig - step;
        double lm = loss_with_backward();
        t.value[i] = orig;
        double fd = (lp - lm) / (2.0 * step);
        double an = analytic[name][i];
        double denom = std::max(std::fabs(an), std::fabs(fd));
        double err = denom > 1e-6 ? std::fabs(an - fd) / denom : std::fabs(an - fd);
        worst = std::max(worst, err);
    }
    // restore analytic gradients for the caller
    loss_with_backward();
    return worst;
}

}  // namespace ptm::nn
