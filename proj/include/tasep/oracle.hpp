#pragma once

#include <cstddef>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tasep/dynamics.hpp"
#include "tasep/lattice.hpp"

namespace tasep::oracle {

using Rational = boost::multiprecision::cpp_rational;

/// Largest ring the oracle will enumerate.
inline constexpr std::size_t kMaxSites = 24;
/// Rings up to this size are solved with a dense LU factorisation.
inline constexpr std::size_t kMaxDenseSites = 12;

class StateSpaceTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a chain has more than one closed communicating class.
class ReducibleChainError : public std::runtime_error {
public:
    ReducibleChainError(std::vector<std::vector<std::size_t>> classes);
    [[nodiscard]] const std::vector<std::vector<std::size_t>>& classes() const noexcept { return classes_; }

private:
    std::vector<std::vector<std::size_t>> classes_;
};

struct Transition {
    std::size_t target;
    double probability;
};

/**
 * @brief Full transition matrix of a small ring with a fixed particle number.
 *
 * States follow enumerateConfigurations order; rows are sparse and hold only
 * strictly positive entries.
 */
class ExactChain {
public:
    ExactChain(RingGeometry geometry, std::size_t particles, KernelParams params,
               std::vector<Configuration> states, std::vector<std::vector<Transition>> rows);

    [[nodiscard]] const RingGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] std::size_t particles() const noexcept { return particles_; }
    [[nodiscard]] const KernelParams& params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<Configuration>& states() const noexcept { return states_; }
    [[nodiscard]] const std::vector<std::vector<Transition>>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t size() const noexcept { return states_.size(); }

    /// Throws std::out_of_range if @p sigma is not a state of the chain.
    [[nodiscard]] std::size_t indexOf(const Configuration& sigma) const;
    [[nodiscard]] double probability(std::size_t from, std::size_t to) const;

private:
    RingGeometry geometry_;
    std::size_t particles_;
    KernelParams params_;
    std::vector<Configuration> states_;
    std::vector<std::vector<Transition>> rows_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Throws StateSpaceTooLarge above kMaxSites sites.
[[nodiscard]] ExactChain buildChain(const RingGeometry& geometry, std::size_t m, const KernelParams& params);

/// Largest |P_a(i,j) - P_b(i,j)| over two chains on the same state space.
[[nodiscard]] double maxEntryDifference(const ExactChain& a, const ExactChain& b);

struct BalanceReport {
    Rational maxViolation;  // max over sigma of |sum_tau w(sigma,tau) - sum_tau' w(tau',sigma)|
    std::size_t worstState;
    std::size_t stateCount;
};

/// Exact-rational check of outgoing against incoming weight for every state.
[[nodiscard]] BalanceReport checkGlobalBalance(const RingGeometry& geometry, std::size_t m,
                                               const Rational& omega, const Rational& epsilon = Rational(0));

/// Pairs "advance the engines of S" with "detach the cabooses of S" for every
/// subset S of trains and checks that the paired predecessors are exactly the
/// predecessors of sigma with matching weights. Requires siteCount <= kMaxSites.
[[nodiscard]] bool cabooseBijectionCheck(const Configuration& sigma);

/// Closed communicating classes, each sorted, ordered by smallest member.
[[nodiscard]] std::vector<std::vector<std::size_t>> closedClasses(const ExactChain& chain);

enum class SolveMethod { DenseLU, PowerIteration };

struct StationaryDistribution {
    std::vector<double> probabilities;     // over every state; transient states get 0
    double residual;                       // ||pi P - pi||_1
    std::vector<std::size_t> recurrentStates;
    SolveMethod method;
    double crossCheckGap;                  // ||pi_LU - pi_power||_1; 0 when only power iteration ran
};

/// Stationary law on the unique closed class. Throws ReducibleChainError otherwise.
[[nodiscard]] StationaryDistribution stationaryDistribution(const ExactChain& chain);

/// max_sigma |pi(sigma) - (1+omega)^l(sigma) / W| for the blockage-free chain.
[[nodiscard]] double verifyWeightStationarity(const RingGeometry& geometry, std::size_t m, double omega);

/// Recurrent class of the half-filled rule-184 chain with blockage eps.
[[nodiscard]] std::vector<Configuration> recurrentSupportRule184(const RingGeometry& geometry, double epsilon);

struct ExactCurrent {
    double engineFraction;          // E[l] / 2L
    double firstHalfFraction;       // E[r] / L, r = particles in sites 1..L
    double secondHalfFreeFraction;  // E[engines in sites L+1..2L] / L
};

[[nodiscard]] ExactCurrent exactCurrent(const ExactChain& chain, const StationaryDistribution& pi);

struct ProductFormComparison {
    double maxAbsError;  // between the two laws normalised over sigma_1 = 0 recurrent states
    std::size_t statesCompared;
};

/// Compares pi on recurrent states with sigma_1 = 0 against (1-eps)^r eps^(L-2r).
[[nodiscard]] ProductFormComparison compareProductForm(const ExactChain& chain, const StationaryDistribution& pi);

}  // namespace tasep::oracle
