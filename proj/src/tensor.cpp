#include "fognet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fognet/errors.hpp"

namespace fognet {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) n *= d;
    return n;
}

void require_2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2) {
        throw DimensionError(std::string(op) + ": expected 2-D tensor, got shape " + shape_str(t.shape()));
    }
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
}

} // namespace

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
    for (const std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor: zero dimension in shape " + shape_str(shape));
    }
    if (shape_product(shape) != data.size()) {
        throw DimensionError("tensor: shape " + shape_str(shape) + " expects " +
                             std::to_string(shape_product(shape)) + " values, got " +
                             std::to_string(data.size()));
    }
    node_ = std::make_shared<detail::TensorNode>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    const std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    const std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.raw()[i * n + i] = 1.0;
    return t;
}

const std::vector<std::size_t>& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
    require_2d(*this, "rows");
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    require_2d(*this, "cols");
    return node_->shape[1];
}

const std::vector<double>& Tensor::raw() const { return node_->data; }
std::vector<double>& Tensor::raw() { return node_->data; }

double Tensor::at(std::size_t i) const { return node_->data.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
    require_2d(*this, "at");
    return node_->data.at(r * node_->shape[1] + c);
}

double Tensor::value() const {
    if (size() != 1) {
        throw DimensionError("value: expected one-element tensor, got shape " + shape_str(shape()));
    }
    return node_->data[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool rg) {
    if (!node_->parents.empty()) {
        throw ParameterError("set_requires_grad: only leaf tensors may change grad mode");
    }
    node_->requires_grad = rg;
    if (!rg) node_->grad.clear();
}

bool Tensor::has_grad() const { return node_->grad.size() == node_->data.size(); }

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) throw EvaluationError("grad: no gradient recorded; run backward() first");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_->grad.empty()) return;
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
    if (size() != 1) {
        throw DimensionError("backward: loss must be a one-element tensor, got shape " + shape_str(shape()));
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS over grad-requiring ancestors.
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> visited;
    std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        bool descended = false;
        while (next_child < node->parents.size()) {
            detail::TensorNode* parent = node->parents[next_child++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
                descended = true;
                break;
            }
        }
        if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
            order.push_back(stack.back().first);
            stack.pop_back();
        }
    }

    for (detail::TensorNode* n : order) n->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) (*it)->backward(**it);
    }
}

/// Internal constructor for op results: wires parents and the backward
/// closure only when some parent requires grad.
Tensor make_op_result(std::vector<std::size_t> shape, std::vector<double> data,
                      std::vector<Tensor> parents, std::function<void(detail::TensorNode&)> backward) {
    bool rg = false;
    for (const Tensor& p : parents) rg = rg || p.requires_grad();
    Tensor out(std::move(shape), std::move(data), rg);
    if (rg) {
        out.node_->parents.reserve(parents.size());
        for (const Tensor& p : parents) out.node_->parents.push_back(p.node_);
        out.node_->backward = std::move(backward);
    }
    return out;
}

namespace {

detail::TensorNode& parent(detail::TensorNode& self, std::size_t i) { return *self.parents[i]; }

void accumulate(detail::TensorNode& target, std::size_t index, double v) {
    if (!target.requires_grad) return;
    target.ensure_grad();
    target.grad[index] += v;
}

// Fast path: parents that require grad get their buffer up-front.
std::vector<double>* grad_buffer(detail::TensorNode& target) {
    if (!target.requires_grad) return nullptr;
    target.ensure_grad();
    return &target.grad;
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    const auto& ad = a.raw();
    const auto& bd = b.raw();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ad[i * k + p];
            if (av == 0.0) continue;
            const double* brow = &bd[p * n];
            double* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return make_op_result({m, n}, std::move(out), {a, b}, [m, k, n](detail::TensorNode& self) {
        auto& pa = parent(self, 0);
        auto& pb = parent(self, 1);
        const auto& g = self.grad;
        if (auto* ga = grad_buffer(pa)) {
            // dA += G * B^T
            const auto& bd = pb.data;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double gv = g[i * n + j];
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) (*ga)[i * k + p] += gv * bd[p * n + j];
                }
        }
        if (auto* gb = grad_buffer(pb)) {
            // dB += A^T * G
            const auto& ad = pa.data;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = ad[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += av * g[i * n + j];
                }
        }
    });
}

Tensor transpose(const Tensor& x) {
    require_2d(x, "transpose");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.raw()[i * n + j];
    return make_op_result({n, m}, std::move(out), {x}, [m, n](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0))) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += self.grad[j * m + i];
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] + b.raw()[i];
    return make_op_result(a.shape(), std::move(out), {a, b}, [](detail::TensorNode& self) {
        for (std::size_t p = 0; p < 2; ++p)
            if (auto* g = grad_buffer(parent(self, p)))
                for (std::size_t i = 0; i < self.size(); ++i) (*g)[i] += self.grad[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] - b.raw()[i];
    return make_op_result(a.shape(), std::move(out), {a, b}, [](detail::TensorNode& self) {
        if (auto* ga = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i) (*ga)[i] += self.grad[i];
        if (auto* gb = grad_buffer(parent(self, 1)))
            for (std::size_t i = 0; i < self.size(); ++i) (*gb)[i] -= self.grad[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] * b.raw()[i];
    return make_op_result(a.shape(), std::move(out), {a, b}, [](detail::TensorNode& self) {
        auto& pa = parent(self, 0);
        auto& pb = parent(self, 1);
        if (auto* ga = grad_buffer(pa))
            for (std::size_t i = 0; i < self.size(); ++i) (*ga)[i] += self.grad[i] * pb.data[i];
        if (auto* gb = grad_buffer(pb))
            for (std::size_t i = 0; i < self.size(); ++i) (*gb)[i] += self.grad[i] * pa.data[i];
    });
}

Tensor scale(const Tensor& x, double k) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.raw()[i] * k;
    return make_op_result(x.shape(), std::move(out), {x}, [k](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[i] += self.grad[i] * k;
    });
}

Tensor add_rowvec(const Tensor& x, const Tensor& row) {
    require_2d(x, "add_rowvec");
    require_2d(row, "add_rowvec");
    if (row.rows() != 1 || row.cols() != x.cols()) shape_error("add_rowvec", x, row);
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.raw()[i * n + j] + row.raw()[j];
    return make_op_result({m, n}, std::move(out), {x, row}, [m, n](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < m * n; ++i) (*gx)[i] += self.grad[i];
        if (auto* gr = grad_buffer(parent(self, 1)))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) (*gr)[j] += self.grad[i * n + j];
    });
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
    if (s.size() != 1) {
        throw DimensionError("mul_scalar: scalar operand must have one element, got shape " +
                             shape_str(s.shape()));
    }
    const double sv = s.raw()[0];
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.raw()[i] * sv;
    return make_op_result(x.shape(), std::move(out), {x, s}, [](detail::TensorNode& self) {
        auto& px = parent(self, 0);
        auto& ps = parent(self, 1);
        const double sv = ps.data[0];
        if (auto* gx = grad_buffer(px))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[i] += self.grad[i] * sv;
        if (ps.requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.size(); ++i) acc += self.grad[i] * px.data[i];
            accumulate(ps, 0, acc);
        }
    });
}

Tensor exp(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x.raw()[i]);
    return make_op_result(x.shape(), std::move(out), {x}, [](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[i] += self.grad[i] * self.data[i];
    });
}

Tensor log(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(x.raw()[i] > 0.0)) {
            throw EvaluationError("log: non-positive input " + std::to_string(x.raw()[i]));
        }
        out[i] = std::log(x.raw()[i]);
    }
    return make_op_result(x.shape(), std::move(out), {x}, [](detail::TensorNode& self) {
        auto& px = parent(self, 0);
        if (auto* gx = grad_buffer(px))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[i] += self.grad[i] / px.data[i];
    });
}

Tensor tanh(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.raw()[i]);
    return make_op_result(x.shape(), std::move(out), {x}, [](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i)
                (*gx)[i] += self.grad[i] * (1.0 - self.data[i] * self.data[i]);
    });
}

Tensor softmax_rows(const Tensor& x) {
    require_2d(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &x.raw()[i * n];
        const double mx = *std::max_element(row, row + n);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = std::exp(row[j] - mx);
            denom += out[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
    }
    return make_op_result({m, n}, std::move(out), {x}, [m, n](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0))) {
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * self.data[i * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    (*gx)[i * n + j] += self.data[i * n + j] * (self.grad[i * n + j] - dot);
            }
        }
    });
}

Tensor log_softmax_rows(const Tensor& x) {
    require_2d(x, "log_softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &x.raw()[i * n];
        const double mx = *std::max_element(row, row + n);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) denom += std::exp(row[j] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
    }
    return make_op_result({m, n}, std::move(out), {x}, [m, n](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0))) {
            for (std::size_t i = 0; i < m; ++i) {
                double gsum = 0.0;
                for (std::size_t j = 0; j < n; ++j) gsum += self.grad[i * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    (*gx)[i * n + j] += self.grad[i * n + j] - std::exp(self.data[i * n + j]) * gsum;
            }
        }
    });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_2d(a, "concat_rows");
    require_2d(b, "concat_rows");
    if (a.cols() != b.cols()) shape_error("concat_rows", a, b);
    const std::size_t ma = a.rows(), mb = b.rows(), n = a.cols();
    std::vector<double> out;
    out.reserve((ma + mb) * n);
    out.insert(out.end(), a.raw().begin(), a.raw().end());
    out.insert(out.end(), b.raw().begin(), b.raw().end());
    return make_op_result({ma + mb, n}, std::move(out), {a, b}, [ma, n](detail::TensorNode& self) {
        if (auto* ga = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < ma * n; ++i) (*ga)[i] += self.grad[i];
        if (auto* gb = grad_buffer(parent(self, 1)))
            for (std::size_t i = ma * n; i < self.size(); ++i) (*gb)[i - ma * n] += self.grad[i];
    });
}

std::pair<Tensor, Tensor> chunk2(const Tensor& x) {
    require_2d(x, "chunk2");
    if (x.rows() % 2 != 0) {
        throw DimensionError("chunk2: expected an even row count, got shape " + shape_str(x.shape()));
    }
    const std::size_t half = x.rows() / 2, n = x.cols();
    std::vector<double> top(x.raw().begin(), x.raw().begin() + static_cast<std::ptrdiff_t>(half * n));
    std::vector<double> bottom(x.raw().begin() + static_cast<std::ptrdiff_t>(half * n), x.raw().end());
    Tensor first = make_op_result({half, n}, std::move(top), {x}, [](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[i] += self.grad[i];
    });
    Tensor second = make_op_result({half, n}, std::move(bottom), {x}, [half, n](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[half * n + i] += self.grad[i];
    });
    return {first, second};
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_2d(a, "concat_cols");
    require_2d(b, "concat_cols");
    if (a.rows() != b.rows()) shape_error("concat_cols", a, b);
    const std::size_t m = a.rows(), na = a.cols(), nb = b.cols();
    std::vector<double> out(m * (na + nb));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < na; ++j) out[i * (na + nb) + j] = a.raw()[i * na + j];
        for (std::size_t j = 0; j < nb; ++j) out[i * (na + nb) + na + j] = b.raw()[i * nb + j];
    }
    return make_op_result({m, na + nb}, std::move(out), {a, b}, [m, na, nb](detail::TensorNode& self) {
        const std::size_t n = na + nb;
        if (auto* ga = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < na; ++j) (*ga)[i * na + j] += self.grad[i * n + j];
        if (auto* gb = grad_buffer(parent(self, 1)))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < nb; ++j) (*gb)[i * nb + j] += self.grad[i * n + na + j];
    });
}

Tensor slice_cols(const Tensor& x, std::size_t first, std::size_t count) {
    require_2d(x, "slice_cols");
    if (count == 0 || first + count > x.cols()) {
        throw DimensionError("slice_cols: range [" + std::to_string(first) + "," +
                             std::to_string(first + count) + ") out of shape " + shape_str(x.shape()));
    }
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * count);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) out[i * count + j] = x.raw()[i * n + first + j];
    return make_op_result({m, count}, std::move(out), {x}, [m, n, first, count](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < count; ++j)
                    (*gx)[i * n + first + j] += self.grad[i * count + j];
    });
}

Tensor gather_columns(const Tensor& x, const std::vector<std::size_t>& cols) {
    require_2d(x, "gather_columns");
    const std::size_t m = x.rows(), n = x.cols(), p = cols.size();
    if (p == 0) throw DimensionError("gather_columns: empty column list");
    for (const std::size_t c : cols) {
        if (c >= n) {
            throw DimensionError("gather_columns: column " + std::to_string(c) +
                                 " out of shape " + shape_str(x.shape()));
        }
    }
    std::vector<double> out(m * p);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j) out[i * p + j] = x.raw()[i * n + cols[j]];
    return make_op_result({m, p}, std::move(out), {x}, [m, n, p, cols](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < p; ++j)
                    (*gx)[i * n + cols[j]] += self.grad[i * p + j];
    });
}

Tensor mean_rows(const Tensor& x) {
    require_2d(x, "mean_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x.raw()[i * n + j];
    for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
    return make_op_result({1, n}, std::move(out), {x}, [m, n](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    (*gx)[i * n + j] += self.grad[j] / static_cast<double>(m);
    });
}

Tensor sum_all(const Tensor& x) {
    double acc = 0.0;
    for (const double v : x.raw()) acc += v;
    return make_op_result({1, 1}, {acc}, {x}, [](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (double& g : *gx) g += self.grad[0];
    });
}

Tensor mean_all(const Tensor& x) {
    double acc = 0.0;
    for (const double v : x.raw()) acc += v;
    const double inv = 1.0 / static_cast<double>(x.size());
    return make_op_result({1, 1}, {acc * inv}, {x}, [inv](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (double& g : *gx) g += self.grad[0] * inv;
    });
}

Tensor l2_normalize_rows(const Tensor& x) {
    require_2d(x, "l2_normalize_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) sq += x.raw()[i * n + j] * x.raw()[i * n + j];
        norms[i] = std::sqrt(sq);
        if (!(norms[i] > kNormFloor)) {
            throw DegenerateInputError("l2_normalize_rows: row " + std::to_string(i) +
                                       " has norm " + std::to_string(norms[i]) +
                                       " below floor " + std::to_string(kNormFloor));
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.raw()[i * n + j] / norms[i];
    }
    return make_op_result({m, n}, std::move(out), {x}, [m, n, norms](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0))) {
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * self.data[i * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    (*gx)[i * n + j] += (self.grad[i * n + j] - self.data[i * n + j] * dot) / norms[i];
            }
        }
    });
}

Tensor cosine_sim_matrix(const Tensor& a, const Tensor& b) {
    require_2d(a, "cosine_sim_matrix");
    require_2d(b, "cosine_sim_matrix");
    if (a.cols() != b.cols()) shape_error("cosine_sim_matrix", a, b);
    return matmul(l2_normalize_rows(a), transpose(l2_normalize_rows(b)));
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
    if (shape_product(shape) != x.size()) {
        throw DimensionError("reshape: shape " + shape_str(shape) + " incompatible with " +
                             shape_str(x.shape()));
    }
    return make_op_result(std::move(shape), x.raw(), {x}, [](detail::TensorNode& self) {
        if (auto* gx = grad_buffer(parent(self, 0)))
            for (std::size_t i = 0; i < self.size(); ++i) (*gx)[i] += self.grad[i];
    });
}

std::vector<std::size_t> argmax_rows(const Tensor& x) {
    require_2d(x, "argmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<std::size_t> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j) {
            if (x.raw()[i * n + j] > x.raw()[i * n + best]) best = j;
        }
        out[i] = best;
    }
    return out;
}

Tensor vstack(const std::vector<Tensor>& blocks) {
    if (blocks.empty()) throw DimensionError("vstack: empty block list");
    Tensor out = blocks.front();
    for (std::size_t i = 1; i < blocks.size(); ++i) out = concat_rows(out, blocks[i]);
    return out;
}

} // namespace fognet
