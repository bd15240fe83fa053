#include "tasep/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tasep/lattice.hpp"

namespace tasep::analytic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double xlogx(double x) { return x <= 0.0 ? 0.0 : x * std::log(x); }

double logBinomial(long n, long k) {
    if (n < 0 || k < 0 || k > n) return kNegInf;
    if (n <= 60) return std::log(binomial(n, k).convert_to<double>());
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
}

double logSumExp(const std::vector<double>& terms) {
    double top = kNegInf;
    for (double t : terms) top = std::max(top, t);
    if (top == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - top);
    return top + std::log(sum);
}

// Ratio sum_i v_i e^{a_i} / sum_i e^{a_i} for nonnegative v_i.
double weightedMean(const std::vector<double>& values, const std::vector<double>& logWeights) {
    std::vector<double> numerator;
    numerator.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        numerator.push_back(values[i] > 0.0 ? std::log(values[i]) + logWeights[i] : kNegInf);
    return std::exp(logSumExp(numerator) - logSumExp(logWeights));
}

void checkUnit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error(what);
}

void checkOpenUnit(double v, const char* what) {
    if (!(v > 0.0 && v < 1.0)) throw std::domain_error(what);
}

}  // namespace

double currentClosedForm(double omega) {
    if (!(omega > 0.0)) throw std::domain_error("omega must be positive");
    if (std::isinf(omega)) return 0.5;
    const double s = std::sqrt(1.0 + omega);
    return 0.5 * s / (1.0 + s);
}

double blockageCurrentClosedForm(double epsilon) {
    checkUnit(epsilon, "epsilon must lie in [0, 1]");
    return (1.0 - epsilon) / (2.0 - epsilon);
}

double logTrainCount(std::size_t L, std::size_t l) {
    if (L < 1 || l < 1 || l > L) throw std::invalid_argument("logTrainCount needs 1 <= l <= L");
    if (L < 30) return std::log(trainCountTable(L, l).convert_to<double>());
    if (l == 1) return std::log(2.0 * static_cast<double>(L));
    const long Ls = static_cast<long>(L);
    const long ls = static_cast<long>(l);
    std::vector<double> inner;
    inner.reserve(static_cast<std::size_t>(Ls - ls + 1));
    for (long l1 = 1; l1 <= Ls - ls + 1; ++l1)
        inner.push_back(std::log(static_cast<double>(l1)) + logBinomial(Ls - l1 - 1, ls - 2));
    return std::log(2.0) + logSumExp(inner) + logBinomial(Ls - 1, ls - 1);
}

double currentFiniteL(std::size_t L, double omega) {
    if (L < 2) throw std::invalid_argument("currentFiniteL needs L >= 2");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::domain_error("omega must be positive and finite");
    const double logGain = std::log1p(omega);
    std::vector<double> values, logWeights;
    for (std::size_t l = 1; l <= L; ++l) {
        values.push_back(static_cast<double>(l));
        logWeights.push_back(logTrainCount(L, l) + static_cast<double>(l) * logGain);
    }
    return weightedMean(values, logWeights) / (2.0 * static_cast<double>(L));
}

double entropy(double alpha) {
    checkUnit(alpha, "entropy argument must lie in [0, 1]");
    return -xlogx(alpha) - xlogx(1.0 - alpha);
}

double saddleObjectiveF(double alpha, double alpha1, double omega) {
    checkUnit(alpha, "alpha must lie in [0, 1]");
    if (!(alpha1 >= 0.0 && alpha1 <= 1.0 - alpha)) throw std::domain_error("alpha1 must lie in [0, 1 - alpha]");
    if (!(omega >= 0.0)) throw std::domain_error("omega must be nonnegative");
    const double rest = 1.0 - alpha1;
    const double trainTerm = rest > 0.0 ? rest * entropy(std::min(1.0, alpha / rest)) : 0.0;
    return trainTerm + entropy(alpha) + alpha * std::log1p(omega);
}

SaddleResult maximizeSaddleF(double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw std::domain_error("omega must be finite and nonnegative");
    return goldenSectionMaximize([omega](double a) { return saddleObjectiveF(a, 0.0, omega); }, 0.0, 1.0);
}

double blockageSaddleObjective(double x, double epsilon) {
    if (!(x >= 0.0 && x <= 0.5)) throw std::domain_error("x must lie in [0, 1/2]");
    checkOpenUnit(epsilon, "epsilon must lie in (0, 1)");
    const double hole = 1.0 - 2.0 * x;
    const double logRest = std::log1p(-x);
    // x ln(x/(1-x)) and (1-2x) ln((1-2x)/(1-x)), each vanishing at its singular endpoint.
    const double particleTerm = xlogx(x) - x * logRest;
    const double holeTerm = xlogx(hole) - hole * logRest;
    return hole * std::log(epsilon) + x * std::log1p(-epsilon) - particleTerm - holeTerm;
}

SaddleResult maximizeBlockageSaddle(double epsilon) {
    checkOpenUnit(epsilon, "epsilon must lie in (0, 1)");
    return goldenSectionMaximize([epsilon](double x) { return blockageSaddleObjective(x, epsilon); }, 0.0, 0.5);
}

double blockageRFiniteL(std::size_t L, double epsilon) {
    if (L < 2) throw std::invalid_argument("blockageRFiniteL needs L >= 2");
    checkOpenUnit(epsilon, "epsilon must lie in (0, 1)");
    const long Ls = static_cast<long>(L);
    std::vector<double> values, logWeights;
    for (long r = 1; 2 * r <= Ls; ++r) {
        values.push_back(static_cast<double>(r));
        logWeights.push_back(logBinomial(Ls - r, r) + static_cast<double>(r) * std::log1p(-epsilon) +
                             static_cast<double>(Ls - 2 * r) * std::log(epsilon));
    }
    return weightedMean(values, logWeights) / static_cast<double>(L);
}

double productFormWeight(std::size_t r, std::size_t L, double epsilon) {
    if (2 * r > L) throw std::domain_error("productFormWeight needs 2r <= L");
    checkOpenUnit(epsilon, "epsilon must lie in (0, 1)");
    return std::pow(1.0 - epsilon, static_cast<double>(r)) * std::pow(epsilon, static_cast<double>(L - 2 * r));
}

}  // namespace tasep::analytic
