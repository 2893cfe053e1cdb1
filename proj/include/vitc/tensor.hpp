#pragma once

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// A Tensor<T> is a shared handle to a node holding data, an optional
// gradient buffer, and (while a graph is being recorded) the parent
// handles plus a backward rule. Calling backward() on a scalar walks the
// recorded graph once in reverse topological order, accumulating
// gradients by summation at fan-out, then consumes the graph.
//
// T is float for training and double for verification; the dual
// instantiation exists so finite-difference tolerances are meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "vitc/common.hpp"

namespace vitc::core {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

inline void check_shape_valid(const Shape& s) {
    for (int64_t d : s)
        if (d <= 0) throw ShapeError("dimensions must be positive, got " + shape_str(s));
}

/// Thread-local switch for graph recording. Off inside NoGradGuard.
class GradMode {
public:
    static bool enabled() { return flag_(); }
    static void set(bool on) { flag_() = on; }

private:
    static bool& flag_() {
        thread_local bool f = true;
        return f;
    }
};

struct NoGradGuard {
    NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
    ~NoGradGuard() { GradMode::set(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

template <typename T>
class Tensor;

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // empty until first accumulation
    bool requires_grad = false;
    // graph record; cleared once backward consumes the node
    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    std::function<void(TensorNode<T>&)> backward_fn;

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
    }
};

template <typename T>
class Tensor {
public:
    using Node = TensorNode<T>;

    Tensor() = default;

    explicit Tensor(Shape shape) {
        check_shape_valid(shape);
        n_ = std::make_shared<Node>();
        n_->data.assign(static_cast<size_t>(shape_numel(shape)), T(0));
        n_->shape = std::move(shape);
    }

    Tensor(Shape shape, std::vector<T> data) {
        check_shape_valid(shape);
        if (static_cast<int64_t>(data.size()) != shape_numel(shape))
            throw ShapeError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        n_ = std::make_shared<Node>();
        n_->shape = std::move(shape);
        n_->data = std::move(data);
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, T value) {
        Tensor t(std::move(shape));
        std::fill(t.n_->data.begin(), t.n_->data.end(), value);
        return t;
    }

    static Tensor ones(Shape shape) { return full(std::move(shape), T(1)); }

    static Tensor scalar(T value) { return Tensor({1}, {value}); }

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    int ndim() const { return static_cast<int>(n_->shape.size()); }
    int64_t dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(n_->data.size()); }

    std::span<T> data() { return n_->data; }
    std::span<const T> data() const { return n_->data; }

    T& operator()(int64_t i) { return n_->data[static_cast<size_t>(i)]; }
    T operator()(int64_t i) const { return n_->data[static_cast<size_t>(i)]; }
    T& operator()(int64_t i, int64_t j) { return n_->data[static_cast<size_t>(i * dim(1) + j)]; }
    T operator()(int64_t i, int64_t j) const { return n_->data[static_cast<size_t>(i * dim(1) + j)]; }
    T& operator()(int64_t i, int64_t j, int64_t k) {
        return n_->data[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
    }
    T operator()(int64_t i, int64_t j, int64_t k) const {
        return n_->data[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
    }

    T item() const {
        if (numel() != 1) throw ValueError("item() requires a scalar tensor, shape is " + shape_str(shape()));
        return n_->data[0];
    }

    bool requires_grad() const { return n_->requires_grad; }
    Tensor& set_requires_grad(bool on) {
        n_->requires_grad = on;
        return *this;
    }

    bool has_grad() const { return !n_->grad.empty(); }
    std::span<T> grad() {
        n_->ensure_grad();
        return n_->grad;
    }
    std::span<const T> grad() const {
        if (n_->grad.empty()) throw ValueError("gradient not populated");
        return n_->grad;
    }
    void zero_grad() { n_->grad.clear(); }

    /// Deep copy, detached from any graph.
    Tensor clone() const {
        Tensor t;
        t.n_ = std::make_shared<Node>();
        t.n_->shape = n_->shape;
        t.n_->data = n_->data;
        t.n_->requires_grad = n_->requires_grad;
        return t;
    }

    bool all_finite() const {
        for (T v : n_->data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::shared_ptr<Node> node() const { return n_; }

    /// Reverse-mode sweep from a scalar. Populates grad on every reachable
    /// requires_grad node exactly once, then consumes the recorded graph.
    void backward() {
        if (numel() != 1) throw ValueError("backward() requires a scalar loss, shape is " + shape_str(shape()));
        // iterative DFS for topological order (graphs can be deep)
        std::vector<Node*> order;
        std::unordered_set<Node*> seen;
        struct Frame {
            Node* node;
            size_t next_parent;
        };
        std::vector<Frame> stack;
        stack.push_back({n_.get(), 0});
        seen.insert(n_.get());
        while (!stack.empty()) {
            Frame& fr = stack.back();
            if (fr.next_parent < fr.node->parents.size()) {
                Node* p = fr.node->parents[fr.next_parent++].get();
                if (seen.insert(p).second) stack.push_back({p, 0});
            } else {
                order.push_back(fr.node);
                stack.pop_back();
            }
        }
        n_->ensure_grad();
        n_->grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* node = *it;
            if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
        }
        // consume the graph: release parent links and rules
        for (Node* node : order) {
            node->parents.clear();
            node->backward_fn = nullptr;
        }
    }

private:
    std::shared_ptr<Node> n_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

namespace detail {

/// Whether an op with these inputs should record a graph node.
template <typename T>
bool track(std::initializer_list<const Tensor<T>*> inputs) {
    if (!GradMode::enabled()) return false;
    for (const Tensor<T>* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

template <typename T, typename Fn>
void attach(Tensor<T>& out, const std::vector<Tensor<T>>& parents, Fn&& fn) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::forward<Fn>(fn);
}

/// Accumulate a contribution into a parent's gradient (no-op for
/// non-tracked parents so constants never allocate grad buffers).
template <typename T>
void accumulate(TensorNode<T>& parent, const T* contrib, size_t n) {
    if (!parent.requires_grad && !parent.backward_fn) return;
    parent.ensure_grad();
    for (size_t i = 0; i < n; ++i) parent.grad[i] += contrib[i];
}

} // namespace detail

} // namespace vitc::core
