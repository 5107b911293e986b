#include "gam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gam {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        fail(Errc::shape, std::string(op) + ": operand shapes differ");
    }
}

// Raw accumulate kernels; C is not cleared by the callee.
// C(m x n) += A(m x k) * B(k x n)
void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            if (av == 0.0) continue;
            const double* bl = b + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

// C(m x n) += A(m x k) * B(n x k)^T
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
            ci[j] += acc;
        }
    }
}

// C(m x n) += A(k x m)^T * B(k x n)
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t l = 0; l < k; ++l) {
        const double* al = a + l * m;
        const double* bl = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = al[i];
            if (av == 0.0) continue;
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

}  // namespace

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value.assign(shape_product(t.node_->shape), value);
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from_vector(std::vector<std::size_t> shape, std::vector<double> values,
                           bool requires_grad) {
    if (shape_product(shape) != values.size()) {
        fail(Errc::shape, "from_vector: data length does not match shape");
    }
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_vector({1}, {value}, requires_grad);
}

Tensor::Node& Tensor::node() {
    if (!node_) fail(Errc::shape, "use of undefined tensor");
    return *node_;
}

const Tensor::Node& Tensor::node() const {
    if (!node_) fail(Errc::shape, "use of undefined tensor");
    return *node_;
}

const std::vector<std::size_t>& Tensor::shape() const { return node().shape; }

std::size_t Tensor::size() const { return node().value.size(); }

std::size_t Tensor::rows() const {
    if (rank() != 2) fail(Errc::shape, "rows(): tensor is not 2-D");
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) fail(Errc::shape, "cols(): tensor is not 2-D");
    return shape()[1];
}

std::span<double> Tensor::data() { return node().value; }
std::span<const double> Tensor::data() const { return node().value; }

std::span<double> Tensor::grad() const {
    const Node& n = node();
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

bool Tensor::has_grad() const { return node().grad.size() == node().value.size(); }

double& Tensor::at(std::size_t i) {
    if (i >= size()) fail(Errc::range, "tensor index out of range");
    return node().value[i];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    if (i >= rows() || j >= cols()) fail(Errc::range, "tensor index out of range");
    return node().value[i * cols() + j];
}

double Tensor::get(std::size_t i) const {
    if (i >= size()) fail(Errc::range, "tensor index out of range");
    return node().value[i];
}

double Tensor::get(std::size_t i, std::size_t j) const {
    if (i >= rows() || j >= cols()) fail(Errc::range, "tensor index out of range");
    return node().value[i * cols() + j];
}

double Tensor::item() const {
    if (size() != 1) fail(Errc::shape, "item(): tensor is not scalar");
    return node().value[0];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

void Tensor::set_requires_grad(bool value) { node().requires_grad = value; }

void Tensor::zero_grad() {
    Node& n = node();
    n.grad.assign(n.value.size(), 0.0);
}

// ---- Tape -------------------------------------------------------------------

void Tape::record(Tensor output, std::function<void()> fn) {
    entries_.push_back({std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) fail(Errc::shape, "backward: loss must be scalar");
    // Op outputs hold transient adjoints; reset them so consumers start
    // from zero. Leaves keep whatever they have accumulated.
    for (Entry& e : entries_) e.output.zero_grad();
    loss.grad()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->fn();
}

void Tape::clear() { entries_.clear(); }

// ---- elementwise ops --------------------------------------------------------

namespace {

bool track(const Tensor& t) { return t.requires_grad(); }

Tensor make_output(std::vector<std::size_t> shape, std::vector<double> values, bool tracked) {
    return Tensor::from_vector(std::move(shape), std::move(values), tracked);
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    bool tracked = track(a) || track(b);
    Tensor c = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        tape.record(c, [a, b, c]() {
            auto g = c.grad();
            if (a.requires_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return c;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return add_scaled(tape, a, b, -1.0); }

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    bool tracked = track(a) || track(b);
    Tensor c = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        tape.record(c, [a, b, c]() {
            auto g = c.grad();
            if (a.requires_grad()) {
                auto ga = a.grad();
                auto bv2 = b.data();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad();
                auto av2 = a.data();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
            }
        });
    }
    return c;
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
    std::vector<double> out(a.size());
    auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
    bool tracked = track(a);
    Tensor r = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        tape.record(r, [a, r, c]() {
            auto g = r.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
        });
    }
    return r;
}

Tensor add_scaled(Tape& tape, const Tensor& a, const Tensor& b, double c) {
    require_same_shape(a, b, "add_scaled");
    std::vector<double> out(a.size());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c * bv[i];
    bool tracked = track(a) || track(b);
    Tensor r = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        tape.record(r, [a, b, r, c]() {
            auto g = r.grad();
            if (a.requires_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += c * g[i];
            }
        });
    }
    return r;
}

// ---- matrix ops -------------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        fail(Errc::shape, "matmul: incompatible shapes");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    gemm_nn_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
    bool tracked = track(a) || track(b);
    Tensor c = make_output({m, n}, std::move(out), tracked);
    if (tracked) {
        tape.record(c, [a, b, c, m, k, n]() {
            const double* g = c.grad().data();
            if (a.requires_grad()) {
                // dA += dC * B^T
                gemm_nt_acc(g, b.data().data(), a.grad().data(), m, n, k);
            }
            if (b.requires_grad()) {
                // dB += A^T * dC
                gemm_tn_acc(a.data().data(), g, b.grad().data(), k, m, n);
            }
        });
    }
    return c;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
        fail(Errc::shape, "matmul_nt: incompatible shapes");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    std::vector<double> out(m * n, 0.0);
    gemm_nt_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
    bool tracked = track(a) || track(b);
    Tensor c = make_output({m, n}, std::move(out), tracked);
    if (tracked) {
        tape.record(c, [a, b, c, m, k, n]() {
            const double* g = c.grad().data();
            if (a.requires_grad()) {
                // dA += dC * B
                gemm_nn_acc(g, b.data().data(), a.grad().data(), m, n, k);
            }
            if (b.requires_grad()) {
                // dB += dC^T * A
                gemm_tn_acc(g, a.data().data(), b.grad().data(), n, m, k);
            }
        });
    }
    return c;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) fail(Errc::shape, "concat_cols: no inputs");
    const std::size_t r = parts.front().rows();
    std::size_t total = 0;
    bool tracked = false;
    for (const Tensor& p : parts) {
        if (p.rows() != r) fail(Errc::shape, "concat_cols: row counts differ");
        total += p.cols();
        tracked = tracked || track(p);
    }
    std::vector<double> out(r * total);
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        const std::size_t pc = p.cols();
        auto pv = p.data();
        for (std::size_t i = 0; i < r; ++i) {
            std::copy_n(pv.data() + i * pc, pc, out.data() + i * total + off);
        }
        off += pc;
    }
    Tensor c = make_output({r, total}, std::move(out), tracked);
    if (tracked) {
        tape.record(c, [parts, c, r, total]() {
            auto g = c.grad();
            std::size_t off2 = 0;
            for (const Tensor& p : parts) {
                const std::size_t pc = p.cols();
                if (p.requires_grad()) {
                    auto gp = p.grad();
                    for (std::size_t i = 0; i < r; ++i) {
                        for (std::size_t j = 0; j < pc; ++j) {
                            gp[i * pc + j] += g[i * total + off2 + j];
                        }
                    }
                }
                off2 += pc;
            }
        });
    }
    return c;
}

Tensor add_row_broadcast(Tape& tape, const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || v.size() != m.cols()) {
        fail(Errc::shape, "add_row_broadcast: incompatible shapes");
    }
    const std::size_t r = m.rows(), c = m.cols();
    std::vector<double> out(r * c);
    auto mv = m.data(), vv = v.data();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] + vv[j];
    }
    bool tracked = track(m) || track(v);
    Tensor o = make_output({r, c}, std::move(out), tracked);
    if (tracked) {
        tape.record(o, [m, v, o, r, c]() {
            auto g = o.grad();
            if (m.requires_grad()) {
                auto gm = m.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
            }
            if (v.requires_grad()) {
                auto gv = v.grad();
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) gv[j] += g[i * c + j];
                }
            }
        });
    }
    return o;
}

// ---- softmax family ---------------------------------------------------------

Tensor softmax_rows(Tape& tape, const Tensor& m) {
    if (m.rank() != 2) fail(Errc::shape, "softmax_rows: input is not 2-D");
    const std::size_t r = m.rows(), c = m.cols();
    auto mv = m.data();
    for (double x : mv) {
        if (!std::isfinite(x)) fail(Errc::nonfinite, "softmax_rows: non-finite input");
    }
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = mv.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = std::exp(row[j] - mx);
            denom += out[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= denom;
    }
    bool tracked = track(m);
    Tensor o = make_output({r, c}, std::move(out), tracked);
    if (tracked) {
        tape.record(o, [m, o, r, c]() {
            auto g = o.grad();
            auto y = o.data();
            auto gm = m.grad();
            for (std::size_t i = 0; i < r; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
                for (std::size_t j = 0; j < c; ++j) {
                    gm[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
                }
            }
        });
    }
    return o;
}

Tensor log_softmax_rows(Tape& tape, const Tensor& m) {
    if (m.rank() != 2) fail(Errc::shape, "log_softmax_rows: input is not 2-D");
    const std::size_t r = m.rows(), c = m.cols();
    auto mv = m.data();
    for (double x : mv) {
        if (!std::isfinite(x)) fail(Errc::nonfinite, "log_softmax_rows: non-finite input");
    }
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = mv.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lse;
    }
    bool tracked = track(m);
    Tensor o = make_output({r, c}, std::move(out), tracked);
    if (tracked) {
        tape.record(o, [m, o, r, c]() {
            auto g = o.grad();
            auto y = o.data();
            auto gm = m.grad();
            for (std::size_t i = 0; i < r; ++i) {
                double gsum = 0.0;
                for (std::size_t j = 0; j < c; ++j) gsum += g[i * c + j];
                for (std::size_t j = 0; j < c; ++j) {
                    gm[i * c + j] += g[i * c + j] - std::exp(y[i * c + j]) * gsum;
                }
            }
        });
    }
    return o;
}

// ---- nonlinearity -----------------------------------------------------------

Tensor gelu(Tape& tape, const Tensor& a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    std::vector<double> out(a.size());
    auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] * inv_sqrt2));
    }
    bool tracked = track(a);
    Tensor o = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        tape.record(o, [a, o]() {
            auto g = o.grad();
            auto av2 = a.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = av2[i];
                const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
                const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
                ga[i] += g[i] * (cdf + x * pdf);
            }
        });
    }
    return o;
}

// ---- layer normalization ----------------------------------------------------

Tensor layer_norm_rows(Tape& tape, const Tensor& m, const Tensor& gain, const Tensor& bias,
                       double eps) {
    if (m.rank() != 2) fail(Errc::shape, "layer_norm_rows: input is not 2-D");
    const std::size_t r = m.rows(), c = m.cols();
    if (gain.rank() != 1 || bias.rank() != 1 || gain.size() != c || bias.size() != c) {
        fail(Errc::shape, "layer_norm_rows: gain/bias length mismatch");
    }
    auto mv = m.data();
    auto gv = gain.data();
    auto bv = bias.data();
    std::vector<double> out(r * c);
    std::vector<double> inv_std(r);
    std::vector<double> means(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = mv.data() + i * c;
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += row[j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double istd = 1.0 / std::sqrt(var + eps);
        means[i] = mean;
        inv_std[i] = istd;
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = gv[j] * (row[j] - mean) * istd + bv[j];
        }
    }
    bool tracked = track(m) || track(gain) || track(bias);
    Tensor o = make_output({r, c}, std::move(out), tracked);
    if (tracked) {
        tape.record(o, [m, gain, bias, o, r, c, means, inv_std]() {
            auto g = o.grad();
            auto mv2 = m.data();
            auto gv2 = gain.data();
            for (std::size_t i = 0; i < r; ++i) {
                const double* row = mv2.data() + i * c;
                const double* grow = g.data() + i * c;
                const double istd = inv_std[i];
                const double mean = means[i];
                if (gain.requires_grad() || bias.requires_grad()) {
                    auto gg = gain.grad();
                    auto gb = bias.grad();
                    for (std::size_t j = 0; j < c; ++j) {
                        const double xhat = (row[j] - mean) * istd;
                        if (gain.requires_grad()) gg[j] += grow[j] * xhat;
                        if (bias.requires_grad()) gb[j] += grow[j];
                    }
                }
                if (m.requires_grad()) {
                    auto gm = m.grad();
                    double sum_dy = 0.0, sum_dy_xhat = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dy = grow[j] * gv2[j];
                        const double xhat = (row[j] - mean) * istd;
                        sum_dy += dy;
                        sum_dy_xhat += dy * xhat;
                    }
                    const double n = static_cast<double>(c);
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dy = grow[j] * gv2[j];
                        const double xhat = (row[j] - mean) * istd;
                        gm[i * c + j] +=
                            istd * (dy - sum_dy / n - xhat * sum_dy_xhat / n);
                    }
                }
            }
        });
    }
    return o;
}

namespace {

// Shape-changing copy with identity gradient.
Tensor reshape_copy(Tape& tape, const Tensor& a, std::vector<std::size_t> shape) {
    if (shape_product(shape) != a.size()) fail(Errc::shape, "reshape: size mismatch");
    bool tracked = track(a);
    Tensor o = make_output(std::move(shape),
                           std::vector<double>(a.data().begin(), a.data().end()), tracked);
    if (tracked) {
        tape.record(o, [a, o]() {
            auto g = o.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return o;
}

}  // namespace

Tensor layer_norm(Tape& tape, const Tensor& v, const Tensor& gain, const Tensor& bias,
                  double eps) {
    if (v.rank() != 1) fail(Errc::shape, "layer_norm: input is not 1-D");
    if (gain.size() != v.size() || bias.size() != v.size()) {
        fail(Errc::shape, "layer_norm: gain/bias length mismatch");
    }
    Tensor row = reshape_copy(tape, v, {1, v.size()});
    Tensor normed = layer_norm_rows(tape, row, gain, bias, eps);
    return reshape_copy(tape, normed, {v.size()});
}

// ---- gather / pick / reductions ----------------------------------------------

Tensor gather_rows(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
    if (table.rank() != 2) fail(Errc::shape, "gather_rows: table is not 2-D");
    const std::size_t c = table.cols();
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
            fail(Errc::range, "gather_rows: id out of range");
        }
    }
    std::vector<double> out(ids.size() * c);
    auto tv = table.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * c, c, out.data() + i * c);
    }
    bool tracked = track(table);
    Tensor o = make_output({ids.size(), c}, std::move(out), tracked);
    if (tracked) {
        tape.record(o, [table, o, ids, c]() {
            auto g = o.grad();
            auto gt = table.grad();
            for (std::size_t i = 0; i < ids.size(); ++i) {
                double* dst = gt.data() + static_cast<std::size_t>(ids[i]) * c;
                const double* src = g.data() + i * c;
                for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
            }
        });
    }
    return o;
}

Tensor pick_rowwise(Tape& tape, const Tensor& m, const std::vector<int>& cols) {
    if (m.rank() != 2) fail(Errc::shape, "pick_rowwise: input is not 2-D");
    if (cols.size() != m.rows()) fail(Errc::shape, "pick_rowwise: one index per row required");
    const std::size_t c = m.cols();
    for (int j : cols) {
        if (j < 0 || static_cast<std::size_t>(j) >= c) {
            fail(Errc::range, "pick_rowwise: column index out of range");
        }
    }
    std::vector<double> out(cols.size());
    auto mv = m.data();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out[i] = mv[i * c + static_cast<std::size_t>(cols[i])];
    }
    bool tracked = track(m);
    Tensor o = make_output({cols.size()}, std::move(out), tracked);
    if (tracked) {
        tape.record(o, [m, o, cols, c]() {
            auto g = o.grad();
            auto gm = m.grad();
            for (std::size_t i = 0; i < cols.size(); ++i) {
                gm[i * c + static_cast<std::size_t>(cols[i])] += g[i];
            }
        });
    }
    return o;
}

Tensor sum(Tape& tape, const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    bool tracked = track(a);
    Tensor o = Tensor::scalar(s, tracked);
    if (tracked) {
        tape.record(o, [a, o]() {
            const double g = o.grad()[0];
            auto ga = a.grad();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        });
    }
    return o;
}

Tensor mean_all(Tape& tape, const Tensor& a) {
    return scale(tape, sum(tape, a), 1.0 / static_cast<double>(a.size()));
}

// ---- gradient check -----------------------------------------------------------

double grad_check(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& params,
                  double eps) {
    for (const Tensor& p : params) p.zero_grad();
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tensor loss = f(tape);
        tape.backward(loss);
    }
    analytic.reserve(params.size());
    for (const Tensor& p : params) {
        analytic.emplace_back(p.grad().begin(), p.grad().end());
    }

    auto eval = [&]() {
        Tape tape;
        return f(tape).item();
    };

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        auto values = p.data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double orig = values[i];
            values[i] = orig + eps;
            const double fplus = eval();
            values[i] = orig - eps;
            const double fminus = eval();
            values[i] = orig;
            const double numeric = (fplus - fminus) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace gam
