#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fognet {

namespace detail {

struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad; // allocated lazily during backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward;

    std::size_t size() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

} // namespace detail

/// Dense row-major tensor of 64-bit reals with reverse-mode differentiation.
///
/// A Tensor is a cheap handle onto a shared node. Operations on tensors that
/// require gradients record their parents and a backward closure; calling
/// backward() on a scalar result replays the recorded tape in reverse
/// topological order, accumulating into each node's grad buffer. The tape is
/// implicit in the result graph and is rebuilt by every forward pass.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
    static Tensor identity(std::size_t n);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const;
    std::size_t ndim() const { return shape().size(); }
    std::size_t size() const;
    std::size_t rows() const; // 2-D only
    std::size_t cols() const; // 2-D only

    const std::vector<double>& raw() const;
    std::vector<double>& raw(); // in-place mutation; meant for parameters
    double at(std::size_t i) const;
    double at(std::size_t r, std::size_t c) const;

    /// Value of a one-element tensor.
    double value() const;

    bool requires_grad() const;
    void set_requires_grad(bool rg); // leaves only
    bool has_grad() const;
    const std::vector<double>& grad() const;
    void zero_grad();

    /// Reverse-mode sweep from a scalar result. Seeds d(self)/d(self) = 1 and
    /// accumulates into the grad of every reachable node that requires grad.
    void backward() const;

    detail::TensorNode* node() const { return node_.get(); }

private:
    friend Tensor make_op_result(std::vector<std::size_t>, std::vector<double>,
                                 std::vector<Tensor>, std::function<void(detail::TensorNode&)>);
    std::shared_ptr<detail::TensorNode> node_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

// ---- primitive operations (all differentiable unless noted) ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double k);
/// Adds a [1,n] row vector to every row of x.
Tensor add_rowvec(const Tensor& x, const Tensor& row);
/// Multiplies x by a learnable one-element tensor.
Tensor mul_scalar(const Tensor& x, const Tensor& s);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Row-wise softmax, stabilized with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Row-wise log-softmax, stabilized with per-row max subtraction.
Tensor log_softmax_rows(const Tensor& x);
/// Stacks b's rows below a's. Equal column counts required.
Tensor concat_rows(const Tensor& a, const Tensor& b);
/// Splits an even-row tensor into top and bottom halves.
std::pair<Tensor, Tensor> chunk2(const Tensor& x);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, std::size_t first, std::size_t count);
/// out[i, j] = x[i, cols[j]]; gradients accumulate over repeated columns.
Tensor gather_columns(const Tensor& x, const std::vector<std::size_t>& cols);
/// Mean over rows -> [1, d].
Tensor mean_rows(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
/// Rows scaled to unit L2 norm. Rows with norm <= norm_floor raise.
Tensor l2_normalize_rows(const Tensor& x);
/// Entry (i, j) = cosine of a's row i and b's row j; values in [-1, 1].
Tensor cosine_sim_matrix(const Tensor& a, const Tensor& b);
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

/// Per-row argmax, ties broken by lowest index. Forward only.
std::vector<std::size_t> argmax_rows(const Tensor& x);

/// Stacks any number of row blocks with equal column counts.
Tensor vstack(const std::vector<Tensor>& blocks);

/// Norm threshold below which normalization and cosine ops treat a row as
/// degenerate and raise instead of silently clamping.
inline constexpr double kNormFloor = 1e-12;

} // namespace fognet
