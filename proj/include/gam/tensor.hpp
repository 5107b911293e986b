#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gam/error.hpp"

namespace gam {

// Dense float64 tensor, row-major. A Tensor is a cheap shared handle; the
// value buffer is written once at creation and treated as immutable
// afterwards except for leaf parameters (optimizer updates) and the grad
// buffer. Gradients accumulate additively until zero_grad().
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
    static Tensor from_vector(std::vector<std::size_t> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size() const;
    // 2-D accessors; E_SHAPE when the tensor is not a matrix.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> data();
    std::span<const double> data() const;
    // Grad buffer is allocated lazily (zeros) on first access.
    std::span<double> grad() const;
    bool has_grad() const;

    double& at(std::size_t i);
    double& at(std::size_t i, std::size_t j);
    double get(std::size_t i) const;
    double get(std::size_t i, std::size_t j) const;
    // Scalar value; E_SHAPE unless size() == 1.
    double item() const;

    bool requires_grad() const;
    void set_requires_grad(bool value);
    void zero_grad();

    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

private:
    struct Node {
        std::vector<std::size_t> shape;
        std::vector<double> value;
        mutable std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Node> node_;

    Node& node();
    const Node& node() const;
};

// Record of differentiable operations in execution order. Reverse replay
// implements backpropagation; reverse order is a valid topological order
// because ops are appended as they run. A tape is owned by one forward
// pass / training step at a time.
class Tape {
public:
    // fn propagates output.grad() into the op's inputs' grads.
    void record(Tensor output, std::function<void()> fn);

    // Zeroes the grads of every recorded op output (leaf tensors are left
    // untouched), seeds d(loss)/d(loss) += 1 and replays the tape once in
    // reverse. Leaf gradients therefore accumulate across calls.
    // E_SHAPE when loss is not scalar.
    void backward(const Tensor& loss);

    std::size_t size() const { return entries_.size(); }
    void clear();

private:
    struct Entry {
        Tensor output;
        std::function<void()> fn;
    };
    std::vector<Entry> entries_;
};

// ---- primitive ops ---------------------------------------------------------
// Every op validates shapes (E_SHAPE) and records onto the tape when any
// input requires grad.

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double c);
// a + c * b
Tensor add_scaled(Tape& tape, const Tensor& a, const Tensor& b, double c);

// C = A(m x k) * B(k x n)
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// C = A(m x k) * B(n x k)^T
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);

// Concatenate matrices with equal row counts along columns.
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
// m(r x c) + row vector v(c) broadcast over rows.
Tensor add_row_broadcast(Tape& tape, const Tensor& m, const Tensor& v);

// Row-wise stable softmax. E_NONFINITE on non-finite input entries.
Tensor softmax_rows(Tape& tape, const Tensor& m);
Tensor log_softmax_rows(Tape& tape, const Tensor& m);

Tensor gelu(Tape& tape, const Tensor& a);

// Per-row layer normalization: gain * (x - mean) / sqrt(var + eps) + bias,
// population variance. gain/bias length must equal the row width.
Tensor layer_norm_rows(Tape& tape, const Tensor& m, const Tensor& gain, const Tensor& bias,
                       double eps);
// 1-D convenience form of the same operation.
Tensor layer_norm(Tape& tape, const Tensor& v, const Tensor& gain, const Tensor& bias, double eps);

// rows of `table` selected by ids; backward scatter-adds. E_RANGE on bad id.
Tensor gather_rows(Tape& tape, const Tensor& table, const std::vector<int>& ids);
// 1-D tensor of m[i, cols[i]].
Tensor pick_rowwise(Tape& tape, const Tensor& m, const std::vector<int>& cols);

Tensor sum(Tape& tape, const Tensor& a);
Tensor mean_all(Tape& tape, const Tensor& a);

// ---- verification ----------------------------------------------------------

// Central-difference gradient check. Runs f once on a fresh tape, backprops,
// then perturbs every entry of every param by +/-eps. Returns
// max |analytic - numeric| / max(1, |analytic|, |numeric|).
double grad_check(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& params,
                  double eps = 1e-5);

}  // namespace gam
