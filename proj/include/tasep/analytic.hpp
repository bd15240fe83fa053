#pragma once

#include <cstddef>

namespace tasep::analytic {

struct SaddleResult {
    double argmax;
    double value;
    double tolerance;  // bracket width at termination
};

/// Half-filled stationary current as L -> infinity: (1/2) sqrt(1+w) / (1 + sqrt(1+w)).
[[nodiscard]] double currentClosedForm(double omega);

/// Rule-184 current with a blockage of intensity eps: (1-eps)/(2-eps).
[[nodiscard]] double blockageCurrentClosedForm(double epsilon);

/// log n(l), the log of trainCountTable(L, l). Exact below L = 30, log-gamma above.
[[nodiscard]] double logTrainCount(std::size_t L, std::size_t l);

/// E[l]/2L for the half-filled ring under pi ~ (1+omega)^l, evaluated by log-sum-exp.
[[nodiscard]] double currentFiniteL(std::size_t L, double omega);

/// Binary entropy -a ln a - (1-a) ln(1-a), zero at both endpoints.
[[nodiscard]] double entropy(double alpha);

/// f(a, a1) = (1-a1) I(a/(1-a1)) + I(a) + a ln(1+omega).
[[nodiscard]] double saddleObjectiveF(double alpha, double alpha1, double omega);

/// Maximises f(a, 0) over a in [0, 1].
[[nodiscard]] SaddleResult maximizeSaddleF(double omega);

/// (1-2x) ln eps + x ln(1-eps) - x ln(x/(1-x)) - (1-2x) ln((1-2x)/(1-x)).
[[nodiscard]] double blockageSaddleObjective(double x, double epsilon);

/// Maximises the blockage objective over x in [0, 1/2].
[[nodiscard]] SaddleResult maximizeBlockageSaddle(double epsilon);

/// R/L with R the (1-eps)^r eps^(L-2r) C(L-r, r) weighted mean of r over 1 <= r <= floor(L/2).
[[nodiscard]] double blockageRFiniteL(std::size_t L, double epsilon);

/// (1-eps)^r eps^(L-2r).
[[nodiscard]] double productFormWeight(std::size_t r, std::size_t L, double epsilon);

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
template <class F>
SaddleResult goldenSectionMaximize(F&& f, double lo, double hi, double tolerance = 1e-9) {
    constexpr double invPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invPhi * (b - a);
    double d = a + invPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tolerance) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invPhi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x), b - a};
}

}  // namespace tasep::analytic
