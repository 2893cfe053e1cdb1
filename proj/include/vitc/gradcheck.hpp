#pragma once

// Central finite-difference verification of reverse-mode gradients.
// Runs in 64-bit so the h=1e-5 step leaves ~10 significant digits.

#include <algorithm>
#include <cmath>
#include <functional>

#include "vitc/ops.hpp"
#include "vitc/tensor.hpp"

namespace vitc::core {

/// Compares backward() output for scalar-valued f against central
/// differences (f(x+h)-f(x-h))/2h per coordinate. Returns the max
/// relative error with denominator max(|analytic|,|numeric|,1e-8).
/// Differences at or below 1e-9 count as agreement: central differences
/// at h=1e-5 carry ~1e-11 of rounding noise for unit-scale functions, so
/// smaller discrepancies are measurement noise, not gradient error
/// (near-zero gradients, e.g. attention key biases that softmax cancels
/// exactly, would otherwise turn noise into large ratios).
inline double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, Tensor<double> x,
                         double h = 1e-5) {
    x.set_requires_grad(true);
    x.zero_grad();
    Tensor<double> loss = f(x);
    if (loss.numel() != 1) throw ValueError("grad_check: f must be scalar-valued");
    loss.backward();
    std::vector<double> analytic(x.grad().begin(), x.grad().end());
    x.zero_grad();

    double max_rel = 0;
    {
        NoGradGuard ng;
        auto xd = x.data();
        for (int64_t i = 0; i < x.numel(); ++i) {
            const double orig = xd[i];
            xd[i] = orig + h;
            const double up = f(x).item();
            xd[i] = orig - h;
            const double down = f(x).item();
            xd[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[static_cast<size_t>(i)];
            const double diff = std::fabs(a - numeric);
            if (diff <= 1e-9) continue; // below finite-difference noise
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, diff / denom);
        }
    }
    return max_rel;
}

} // namespace vitc::core
