#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tasep/lattice.hpp"

namespace tasep {

/**
 * How the blockage acts on the engine at site 2L for finite jump weight.
 *
 * BernoulliAttempt: the engine attempts with probability p and the attempt
 * succeeds with probability 1-eps, so it moves with p(1-eps).
 * RenormalizedWeight: transition probabilities are the eps-penalised weights
 * divided by their row sum, which moves the engine with
 * omega(1-eps) / (1 + omega(1-eps)).
 * The two coincide when eps = 0.
 */
enum class BlockageSemantics { BernoulliAttempt, RenormalizedWeight };

class KernelParams {
public:
    static KernelParams fromOmega(double omega, double epsilon = 0.0,
                                  BlockageSemantics semantics = BlockageSemantics::BernoulliAttempt);
    static KernelParams fromProbability(double p, double epsilon = 0.0,
                                        BlockageSemantics semantics = BlockageSemantics::BernoulliAttempt);
    /// omega -> infinity: every engine moves, the one at site 2L passes with probability 1-eps.
    static KernelParams rule184(double epsilon);

    [[nodiscard]] double p() const noexcept { return p_; }
    /// +infinity when p = 1.
    [[nodiscard]] double omega() const noexcept { return omega_; }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] BlockageSemantics semantics() const noexcept { return semantics_; }
    [[nodiscard]] bool limitKernel() const noexcept { return limit_; }

    /// Move probability of an engine away from the blockage.
    [[nodiscard]] double moveProbability() const noexcept { return p_; }
    /// Move probability of an engine at site 2L.
    [[nodiscard]] double blockageMoveProbability() const noexcept;

private:
    KernelParams(double p, double omega, double epsilon, BlockageSemantics semantics, bool limit);

    double p_;
    double omega_;
    double epsilon_;
    BlockageSemantics semantics_;
    bool limit_;
};

/**
 * @brief Reproducible random stream identified by (masterSeed, streamId).
 *
 * The engine is std::mt19937_64 seeded through std::seed_seq with the four
 * 32-bit halves {seed.lo, seed.hi, stream.lo, stream.hi}; both are fully
 * specified by the standard, so a stream is bit-identical across platforms
 * and independent of which thread consumes it.
 */
class RandomSource {
public:
    RandomSource(std::uint64_t masterSeed, std::uint64_t streamId);

    [[nodiscard]] std::uint64_t masterSeed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t streamId() const noexcept { return stream_; }

    std::uint64_t nextU64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// One draw, true with probability @p probability.
    bool bernoulli(double probability) { return uniform() < probability; }
    /// Unbiased integer in [0, bound).
    std::uint64_t uniformIndex(std::uint64_t bound);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

/// Packs a replica index under a base stream: (base << 32) | replica.
[[nodiscard]] constexpr std::uint64_t childStream(std::uint64_t base, std::uint64_t replica) noexcept {
    return (base << 32) | (replica & 0xffffffffULL);
}

/// Below this jump probability stepParallel samples geometric gaps between movers.
inline constexpr double kGeometricSkipBelow = 0.25;

/**
 * Synchronous parallel update. Engines are computed from sigma before any
 * move. Draw order for p >= kGeometricSkipBelow: ascending site index, one
 * uniform per engine, skipped for engines that move with probability exactly
 * 1 away from site 2L. For smaller p the engine at site 2L (if any) draws
 * first, then the other engines are visited in ascending order by geometric
 * gaps, one uniform per gap. Both schemes give every engine an independent
 * move with its own probability.
 */
[[nodiscard]] Configuration stepParallel(const Configuration& sigma, const KernelParams& params,
                                         RandomSource& rng);

/// Rule-184 update with the blockage decided by @p blockagePasses.
[[nodiscard]] Configuration applyRule184Blockage(const Configuration& sigma, bool blockagePasses);

/// Rule-184 with blockage; draws one coin only when site 2L holds an engine.
[[nodiscard]] Configuration stepRule184Blockage(const Configuration& sigma, double epsilon,
                                                RandomSource& rng);

/// Random-sequential update of a single uniformly chosen particle.
/// Throws std::invalid_argument on an empty ring.
[[nodiscard]] Configuration stepSerial(const Configuration& sigma, double epsilon, RandomSource& rng);

/// Set of particles that must move to turn sigma into tau, if tau is reachable.
[[nodiscard]] std::optional<Configuration> movedParticles(const Configuration& sigma,
                                                          const Configuration& tau);

/**
 * w(sigma, tau) = omega^n (1 - eps 1{sigma_2L = 1, tau_2L = 0}) when tau is
 * reached by advancing n engines, 0 otherwise. Works for double and exact
 * rational scalars.
 */
template <class Scalar>
[[nodiscard]] Scalar transitionWeight(const Configuration& sigma, const Configuration& tau,
                                      const Scalar& omega, const Scalar& epsilon) {
    if (!(sigma.geometry() == tau.geometry())) return Scalar(0);
    const auto moved = movedParticles(sigma, tau);
    if (!moved) return Scalar(0);
    Scalar w(1);
    const std::size_t n = popcount(*moved);
    for (std::size_t k = 0; k < n; ++k) w *= omega;
    if ((*moved)[sigma.geometry().blockageIndex()]) w *= Scalar(1) - epsilon;
    return w;
}

struct Successor {
    Configuration configuration;
    std::size_t movedCount;
    bool crossedBlockage;
};

/// All 2^l(sigma) successors, one per subset of engines. Subset bit k refers to
/// the k-th engine in ascending site order; successors are listed by subset value.
[[nodiscard]] std::vector<Successor> reachableSuccessors(const Configuration& sigma);

/// One-step probability of sigma -> tau under the kernel selected by @p params.
[[nodiscard]] double transitionProbability(const Configuration& sigma, const Configuration& tau,
                                           const KernelParams& params);

}  // namespace tasep
