#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "crossalarm/tensor.hpp"

// Central finite-difference oracle for gradient checks. Stays independent of
// the tape: the loss function is re-evaluated with perturbed inputs outside
// any tape scope, so only forward values are compared against recorded
// gradients.

namespace gradcheck {

// Relative error between two gradient vectors: ||a - b|| / (||a|| + ||b||),
// 0 when both vanish.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) + std::sqrt(nb);
    if (denom < 1e-12) return 0.0;
    return std::sqrt(diff) / denom;
}

// Numerical d loss / d x for every entry of x, step h, loss evaluated with
// no tape active.
inline std::vector<double> finite_diff(crossalarm::Tensor& x,
                                       const std::function<double()>& loss,
                                       double h = 1e-5) {
    std::vector<double>& v = x.mutable_data();
    std::vector<double> grad(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double keep = v[i];
        v[i] = keep + h;
        const double up = loss();
        v[i] = keep - h;
        const double down = loss();
        v[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Runs `build_loss` under a fresh tape, backpropagates, and compares the
// recorded gradient on each tensor in `wrt` against central differences of
// the same loss. Returns the worst relative error across all tensors.
inline double check(std::vector<crossalarm::Tensor> wrt,
                    const std::function<crossalarm::Tensor()>& build_loss,
                    double h = 1e-5) {
    using namespace crossalarm;
    for (auto& t : wrt) t.zero_grad();
    {
        Tape tape;
        Tape::Scope scope(tape);
        Tensor loss = build_loss();
        tape.backward(loss);
    }
    double worst = 0.0;
    for (auto& t : wrt) {
        std::vector<double> analytic =
            t.has_grad() ? t.grad() : std::vector<double>(t.numel(), 0.0);
        std::vector<double> numeric =
            finite_diff(t, [&]() { return build_loss().item(); }, h);
        worst = std::max(worst, rel_error(analytic, numeric));
    }
    return worst;
}

} // namespace gradcheck
