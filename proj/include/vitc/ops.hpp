#pragma once

// Operation library for the autodiff tensor. Every differentiable op
// records its backward rule on the output node when grad mode is on and
// an input is tracked. Broadcasting is restricted to leading batch
// dimensions (the right operand may omit leading dims); everything else
// is a hard shape error.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "vitc/tensor.hpp"

namespace vitc::core {

namespace detail {

// ----- raw row-major matmul kernels -----

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n, bool acc) {
    if (!acc)
        for (int64_t i = 0; i < m * n; ++i) c[i] = T(0);
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const T aip = arow[p];
            const T* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

// c[m,n] (+)= a[m,k] · b[n,k]ᵀ
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n, bool acc) {
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T s = 0;
            for (int64_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = acc ? crow[j] + s : s;
        }
    }
}

// c[k,n] (+)= a[m,k]ᵀ · b[m,n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n, bool acc) {
    if (!acc)
        for (int64_t i = 0; i < k * n; ++i) c[i] = T(0);
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        const T* brow = b + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const T aip = arow[p];
            T* crow = c + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

inline bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    for (size_t i = 0; i < small.size(); ++i)
        if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
    return true;
}

} // namespace detail

// ----- elementwise arithmetic -----

/// a + b. b may omit leading dimensions of a (bias-style broadcast).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (!detail::is_suffix(b.shape(), a.shape()))
        throw ShapeError("add: shape " + shape_str(b.shape()) + " does not broadcast over " + shape_str(a.shape()));
    const int64_t bn = b.numel();
    Tensor<T> out(a.shape());
    auto ad = a.data(), bd = b.data();
    auto od = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] + bd[i % bn];
    if (detail::track<T>({&a, &b})) {
        detail::attach(out, {a, b}, [bn](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            detail::accumulate(pa, self.grad.data(), self.grad.size());
            if (pb.requires_grad || pb.backward_fn) {
                pb.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i % bn] += self.grad[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    if (!detail::is_suffix(b.shape(), a.shape()))
        throw ShapeError("sub: shape " + shape_str(b.shape()) + " does not broadcast over " + shape_str(a.shape()));
    const int64_t bn = b.numel();
    Tensor<T> out(a.shape());
    auto ad = a.data(), bd = b.data();
    auto od = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] - bd[i % bn];
    if (detail::track<T>({&a, &b})) {
        detail::attach(out, {a, b}, [bn](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            detail::accumulate(pa, self.grad.data(), self.grad.size());
            if (pb.requires_grad || pb.backward_fn) {
                pb.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i % bn] -= self.grad[i];
            }
        });
    }
    return out;
}

/// Elementwise product; shapes must match exactly.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
    Tensor<T> out(a.shape());
    auto ad = a.data(), bd = b.data();
    auto od = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] * bd[i];
    if (detail::track<T>({&a, &b})) {
        detail::attach(out, {a, b}, [](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad || pa.backward_fn) {
                pa.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
            }
            if (pb.requires_grad || pb.backward_fn) {
                pb.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    Tensor<T> out(a.shape());
    auto ad = a.data();
    auto od = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] * c;
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [c](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (pa.requires_grad || pa.backward_fn) {
                pa.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * c;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
    return scale(a, T(-1));
}

// ----- matrix product -----

/// Matrix product with optional leading batch dimensions.
/// Supported forms: [m,k]·[k,n]; [b..,m,k]·[k,n] (b broadcast);
/// [b..,m,k]·[b..,k,n]. Anything else is a shape error naming both shapes.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    auto fail = [&] {
        throw ShapeError("matmul: incompatible shapes " + shape_str(as) + " and " + shape_str(bs));
    };
    if (as.size() < 2 || bs.size() < 2) fail();
    const int64_t m = as[as.size() - 2], k = as[as.size() - 1];
    const int64_t bk = bs[bs.size() - 2], n = bs[bs.size() - 1];
    if (k != bk) fail();

    bool b_broadcast;
    if (bs.size() == 2) {
        b_broadcast = true;
    } else if (bs.size() == as.size() &&
               std::equal(as.begin(), as.end() - 2, bs.begin())) {
        b_broadcast = false;
    } else {
        fail();
        b_broadcast = false; // unreachable
    }

    int64_t batch = 1;
    for (size_t i = 0; i + 2 < as.size(); ++i) batch *= as[i];

    Shape os(as.begin(), as.end() - 2);
    os.push_back(m);
    os.push_back(n);
    Tensor<T> out(os);

    const T* ad = a.data().data();
    const T* bd = b.data().data();
    T* od = out.data().data();
    for (int64_t g = 0; g < batch; ++g)
        detail::gemm_nn(ad + g * m * k, b_broadcast ? bd : bd + g * k * n, od + g * m * n, m, k, n, false);

    if (detail::track<T>({&a, &b})) {
        detail::attach(out, {a, b}, [m, k, n, batch, b_broadcast](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            const T* dC = self.grad.data();
            if (pa.requires_grad || pa.backward_fn) {
                pa.ensure_grad();
                for (int64_t g = 0; g < batch; ++g)
                    detail::gemm_nt(dC + g * m * n, b_broadcast ? pb.data.data() : pb.data.data() + g * k * n,
                                    pa.grad.data() + g * m * k, m, n, k, true);
            }
            if (pb.requires_grad || pb.backward_fn) {
                pb.ensure_grad();
                for (int64_t g = 0; g < batch; ++g)
                    detail::gemm_tn(pa.data.data() + g * m * k, dC + g * m * n,
                                    b_broadcast ? pb.grad.data() : pb.grad.data() + g * k * n, m, k, n, true);
            }
        });
    }
    return out;
}

/// 2-D transpose.
template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.ndim() != 2) throw ShapeError("transpose: expected a 2-D tensor, got " + shape_str(a.shape()));
    const int64_t r = a.dim(0), c = a.dim(1);
    Tensor<T> out({c, r});
    auto ad = a.data();
    auto od = out.data();
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) od[j * r + i] = ad[i * c + j];
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [r, c](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (pa.requires_grad || pa.backward_fn) {
                pa.ensure_grad();
                for (int64_t i = 0; i < r; ++i)
                    for (int64_t j = 0; j < c; ++j) pa.grad[i * c + j] += self.grad[j * r + i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    check_shape_valid(shape);
    if (shape_numel(shape) != a.numel())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    Tensor<T> out(std::move(shape), std::vector<T>(a.data().begin(), a.data().end()));
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            detail::accumulate(pa, self.grad.data(), self.grad.size());
        });
    }
    return out;
}

// ----- slicing / concatenation -----

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, int64_t start, int64_t len) {
    if (a.ndim() < 1) throw ShapeError("slice_rows: scalar input");
    const int64_t rows = a.dim(0);
    if (start < 0 || len <= 0 || start + len > rows)
        throw ShapeError("slice_rows: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                         ") out of " + std::to_string(rows) + " rows");
    const int64_t stride = a.numel() / rows;
    Shape os = a.shape();
    os[0] = len;
    Tensor<T> out(os);
    std::copy_n(a.data().data() + start * stride, len * stride, out.data().data());
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [start, stride](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (pa.requires_grad || pa.backward_fn) {
                pa.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i)
                    pa.grad[static_cast<size_t>(start * stride) + i] += self.grad[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, int64_t start, int64_t len) {
    if (a.ndim() != 2) throw ShapeError("slice_cols: expected a 2-D tensor, got " + shape_str(a.shape()));
    const int64_t r = a.dim(0), c = a.dim(1);
    if (start < 0 || len <= 0 || start + len > c)
        throw ShapeError("slice_cols: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                         ") out of " + std::to_string(c) + " columns");
    Tensor<T> out({r, len});
    auto ad = a.data();
    auto od = out.data();
    for (int64_t i = 0; i < r; ++i)
        std::copy_n(ad.data() + i * c + start, len, od.data() + i * len);
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [r, c, start, len](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (pa.requires_grad || pa.backward_fn) {
                pa.ensure_grad();
                for (int64_t i = 0; i < r; ++i)
                    for (int64_t j = 0; j < len; ++j) pa.grad[i * c + start + j] += self.grad[i * len + j];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ValueError("concat_rows: no inputs");
    Shape rest(parts[0].shape().begin() + 1, parts[0].shape().end());
    int64_t rows = 0;
    for (const auto& p : parts) {
        Shape prest(p.shape().begin() + 1, p.shape().end());
        if (prest != rest)
            throw ShapeError("concat_rows: trailing dims differ: " + shape_str(parts[0].shape()) + " vs " +
                             shape_str(p.shape()));
        rows += p.dim(0);
    }
    Shape os = parts[0].shape();
    os[0] = rows;
    Tensor<T> out(os);
    const int64_t stride = shape_numel(rest);
    int64_t off = 0;
    bool tracked = false;
    for (const auto& p : parts) {
        std::copy_n(p.data().data(), p.numel(), out.data().data() + off);
        off += p.numel();
        tracked = tracked || (GradMode::enabled() && p.requires_grad());
    }
    if (tracked) {
        std::vector<int64_t> lens;
        lens.reserve(parts.size());
        for (const auto& p : parts) lens.push_back(p.dim(0));
        detail::attach(out, parts, [lens, stride](TensorNode<T>& self) {
            int64_t off2 = 0;
            for (size_t pi = 0; pi < self.parents.size(); ++pi) {
                auto& pp = *self.parents[pi];
                const int64_t count = lens[pi] * stride;
                if (pp.requires_grad || pp.backward_fn) {
                    pp.ensure_grad();
                    for (int64_t i = 0; i < count; ++i) pp.grad[i] += self.grad[off2 + i];
                }
                off2 += count;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ValueError("concat_cols: no inputs");
    const int64_t r = parts[0].dim(0);
    int64_t cols = 0;
    for (const auto& p : parts) {
        if (p.ndim() != 2 || p.dim(0) != r)
            throw ShapeError("concat_cols: row counts differ: " + shape_str(parts[0].shape()) + " vs " +
                             shape_str(p.shape()));
        cols += p.dim(1);
    }
    Tensor<T> out({r, cols});
    auto od = out.data();
    int64_t coff = 0;
    bool tracked = false;
    for (const auto& p : parts) {
        const int64_t pc = p.dim(1);
        auto pd = p.data();
        for (int64_t i = 0; i < r; ++i) std::copy_n(pd.data() + i * pc, pc, od.data() + i * cols + coff);
        coff += pc;
        tracked = tracked || (GradMode::enabled() && p.requires_grad());
    }
    if (tracked) {
        std::vector<int64_t> lens;
        lens.reserve(parts.size());
        for (const auto& p : parts) lens.push_back(p.dim(1));
        detail::attach(out, parts, [lens, r, cols](TensorNode<T>& self) {
            int64_t coff2 = 0;
            for (size_t pi = 0; pi < self.parents.size(); ++pi) {
                auto& pp = *self.parents[pi];
                const int64_t pc = lens[pi];
                if (pp.requires_grad || pp.backward_fn) {
                    pp.ensure_grad();
                    for (int64_t i = 0; i < r; ++i)
                        for (int64_t j = 0; j < pc; ++j) pp.grad[i * pc + j] += self.grad[i * cols + coff2 + j];
                }
                coff2 += pc;
            }
        });
    }
    return out;
}

/// Stack 1-D tensors of equal length into a [B, K] matrix.
template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
    std::vector<Tensor<T>> views;
    views.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.ndim() != 1) throw ShapeError("stack_rows: expected 1-D tensors, got " + shape_str(r.shape()));
        views.push_back(reshape(r, {1, r.numel()}));
    }
    return concat_rows(views);
}

// ----- nonlinearities -----

/// Numerically stable softmax along `axis`; each slice sums to 1.
template <typename T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
    if (axis < 0 || axis >= a.ndim())
        throw ValueError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_str(a.shape()));
    const int64_t len = a.dim(axis);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.dim(i);
    for (int i = axis + 1; i < a.ndim(); ++i) inner *= a.dim(i);

    Tensor<T> out(a.shape());
    auto ad = a.data();
    auto od = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * len * inner + in;
            T mx = ad[base];
            for (int64_t j = 1; j < len; ++j) mx = std::max(mx, ad[base + j * inner]);
            double s = 0;
            for (int64_t j = 0; j < len; ++j) {
                const double e = std::exp(static_cast<double>(ad[base + j * inner] - mx));
                od[base + j * inner] = static_cast<T>(e);
                s += e;
            }
            const double inv = 1.0 / s;
            for (int64_t j = 0; j < len; ++j)
                od[base + j * inner] = static_cast<T>(static_cast<double>(od[base + j * inner]) * inv);
        }
    }
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [len, outer, inner](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (!(pa.requires_grad || pa.backward_fn)) return;
            pa.ensure_grad();
            for (int64_t o = 0; o < outer; ++o) {
                for (int64_t in = 0; in < inner; ++in) {
                    const int64_t base = o * len * inner + in;
                    double dot = 0;
                    for (int64_t j = 0; j < len; ++j)
                        dot += static_cast<double>(self.grad[base + j * inner]) * self.data[base + j * inner];
                    for (int64_t j = 0; j < len; ++j) {
                        const int64_t idx = base + j * inner;
                        pa.grad[idx] += static_cast<T>(self.data[idx] *
                                                       (static_cast<double>(self.grad[idx]) - dot));
                    }
                }
            }
        });
    }
    return out;
}

/// GELU in the exact form x·Φ(x) with Φ the standard normal CDF via erf.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    Tensor<T> out(a.shape());
    auto ad = a.data();
    auto od = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double x = static_cast<double>(ad[i]);
        od[i] = static_cast<T>(x * 0.5 * (1.0 + std::erf(x * inv_sqrt2)));
    }
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (!(pa.requires_grad || pa.backward_fn)) return;
            pa.ensure_grad();
            constexpr double inv_sqrt2pi = 0.3989422804014326779;
            for (size_t i = 0; i < self.grad.size(); ++i) {
                const double x = static_cast<double>(pa.data[i]);
                const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
                const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
                pa.grad[i] += static_cast<T>(static_cast<double>(self.grad[i]) * (cdf + x * pdf));
            }
        });
    }
    return out;
}

/// Layer normalization over the last dimension with population variance,
/// then the affine map gamma·x̂ + beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-6)) {
    if (x.ndim() < 1) throw ShapeError("layer_norm: scalar input");
    const int64_t d = x.dim(x.ndim() - 1);
    if (gamma.numel() != d || beta.numel() != d)
        throw ShapeError("layer_norm: gamma " + shape_str(gamma.shape()) + " / beta " + shape_str(beta.shape()) +
                         " do not match last dim of " + shape_str(x.shape()));
    const int64_t rows = x.numel() / d;

    Tensor<T> out(x.shape());
    auto xd = x.data();
    auto gd = gamma.data();
    auto bd = beta.data();
    auto od = out.data();
    std::vector<T> xhat(static_cast<size_t>(x.numel()));
    std::vector<T> inv_std(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const T* row = xd.data() + r * d;
        double mu = 0;
        for (int64_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0;
        for (int64_t j = 0; j < d; ++j) {
            const double c = row[j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
        inv_std[static_cast<size_t>(r)] = static_cast<T>(inv);
        for (int64_t j = 0; j < d; ++j) {
            const T h = static_cast<T>((row[j] - mu) * inv);
            xhat[static_cast<size_t>(r * d + j)] = h;
            od[r * d + j] = h * gd[j] + bd[j];
        }
    }
    if (detail::track<T>({&x, &gamma, &beta})) {
        detail::attach(out, {x, gamma, beta},
                       [d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode<T>& self) {
            auto& px = *self.parents[0];
            auto& pg = *self.parents[1];
            auto& pb = *self.parents[2];
            const bool wx = px.requires_grad || px.backward_fn;
            const bool wg = pg.requires_grad || pg.backward_fn;
            const bool wb = pb.requires_grad || pb.backward_fn;
            if (wx) px.ensure_grad();
            if (wg) pg.ensure_grad();
            if (wb) pb.ensure_grad();
            for (int64_t r = 0; r < rows; ++r) {
                const T* dy = self.grad.data() + r * d;
                const T* h = xhat.data() + r * d;
                if (wg || wb) {
                    for (int64_t j = 0; j < d; ++j) {
                        if (wg) pg.grad[j] += dy[j] * h[j];
                        if (wb) pb.grad[j] += dy[j];
                    }
                }
                if (wx) {
                    double m1 = 0, m2 = 0;
                    for (int64_t j = 0; j < d; ++j) {
                        const double dh = static_cast<double>(dy[j]) * pg.data[j];
                        m1 += dh;
                        m2 += dh * h[j];
                    }
                    m1 /= static_cast<double>(d);
                    m2 /= static_cast<double>(d);
                    const double inv = inv_std[static_cast<size_t>(r)];
                    for (int64_t j = 0; j < d; ++j) {
                        const double dh = static_cast<double>(dy[j]) * pg.data[j];
                        px.grad[r * d + j] += static_cast<T>(inv * (dh - m1 - h[j] * m2));
                    }
                }
            }
        });
    }
    return out;
}

/// Inverted dropout: kept entries scaled by 1/(1-rate). Identity at rate 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ValueError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (rate == 0.0) return a;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    std::vector<T> mask(static_cast<size_t>(a.numel()));
    for (auto& m : mask) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        m = (u < rate) ? T(0) : keep_scale;
    }
    Tensor<T> out(a.shape());
    auto ad = a.data();
    auto od = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] * mask[static_cast<size_t>(i)];
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [mask = std::move(mask)](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (!(pa.requires_grad || pa.backward_fn)) return;
            pa.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * mask[i];
        });
    }
    return out;
}

// ----- reductions -----

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    double s = 0;
    for (T v : a.data()) s += v;
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(s));
    if (detail::track<T>({&a})) {
        detail::attach(out, {a}, [](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            if (!(pa.requires_grad || pa.backward_fn)) return;
            pa.ensure_grad();
            const T g = self.grad[0];
            for (auto& v : pa.grad) v += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    const T inv = static_cast<T>(1.0 / static_cast<double>(a.numel()));
    return scale(sum(a), inv);
}

/// Mean cross-entropy of logits [B,K] against integer targets, computed
/// through the log-sum-exp stable form.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets) {
    if (logits.ndim() != 2)
        throw ShapeError("cross_entropy: expected [B,K] logits, got " + shape_str(logits.shape()));
    const int64_t b = logits.dim(0), k = logits.dim(1);
    if (static_cast<int64_t>(targets.size()) != b)
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for batch of " +
                         std::to_string(b));
    for (int t : targets)
        if (t < 0 || t >= k)
            throw ValueError("cross_entropy: target " + std::to_string(t) + " out of range [0," +
                             std::to_string(k) + ")");
    auto ld = logits.data();
    double total = 0;
    for (int64_t i = 0; i < b; ++i) {
        const T* row = ld.data() + i * k;
        double mx = row[0];
        for (int64_t j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double s = 0;
        for (int64_t j = 0; j < k; ++j) s += std::exp(static_cast<double>(row[j]) - mx);
        total += mx + std::log(s) - static_cast<double>(row[targets[static_cast<size_t>(i)]]);
    }
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(b)));
    if (detail::track<T>({&logits})) {
        detail::attach(out, {logits}, [b, k, targets](TensorNode<T>& self) {
            auto& pl = *self.parents[0];
            if (!(pl.requires_grad || pl.backward_fn)) return;
            pl.ensure_grad();
            const double g = static_cast<double>(self.grad[0]) / static_cast<double>(b);
            for (int64_t i = 0; i < b; ++i) {
                const T* row = pl.data.data() + i * k;
                double mx = row[0];
                for (int64_t j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
                double s = 0;
                for (int64_t j = 0; j < k; ++j) s += std::exp(static_cast<double>(row[j]) - mx);
                const double inv = 1.0 / s;
                for (int64_t j = 0; j < k; ++j) {
                    double p = std::exp(static_cast<double>(row[j]) - mx) * inv;
                    if (j == targets[static_cast<size_t>(i)]) p -= 1.0;
                    pl.grad[i * k + j] += static_cast<T>(p * g);
                }
            }
        });
    }
    return out;
}

// ----- non-differentiable helpers -----

/// Index of the largest value; ties break to the lowest index.
template <typename T>
int64_t argmax(std::span<const T> values) {
    int64_t best = 0;
    for (int64_t i = 1; i < static_cast<int64_t>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

} // namespace vitc::core
