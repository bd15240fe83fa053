#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "tasep/dynamics.hpp"
#include "tasep/lattice.hpp"

namespace tasep::mc {

enum class InitialState { HalfFilledAlternating, Queue, RandomHalfFilled };

[[nodiscard]] std::string_view toString(InitialState s) noexcept;
/// Accepts "alternating", "queue", "random".
[[nodiscard]] InitialState parseInitialState(std::string_view name);

/**
 * One Monte Carlo experiment: `replicas` independent trajectories of the
 * parallel kernel, each burnt in for `burnIn` steps and then sampled at
 * times burnIn, burnIn+1, ..., burnIn+measureSteps-1.
 *
 * Replica r draws from RandomSource(masterSeed, childStream(streamBase, r)).
 */
struct SimulationSpec {
    RingGeometry geometry;
    KernelParams params;
    std::uint64_t burnIn;
    std::uint64_t measureSteps = 100;
    std::size_t replicas = 100;
    std::uint64_t masterSeed = 0;
    InitialState initialState = InitialState::RandomHalfFilled;
    std::uint64_t streamBase = 0;
    std::size_t threads = 0;  // 0: hardware concurrency

    void validate() const;
};

/// ceil(2 (L/p) ln L).
[[nodiscard]] std::uint64_t defaultHorizon(std::size_t L, double p);

/// burnIn = defaultHorizon, 100 measured steps, 100 replicas, seed 0, random half-filled start.
[[nodiscard]] SimulationSpec defaultSpec(const RingGeometry& geometry, const KernelParams& params);

[[nodiscard]] Configuration initialConfiguration(const RingGeometry& geometry, InitialState kind,
                                                 RandomSource& rng);

struct CurrentEstimate {
    double mean;      // average of l(sigma_t)/2L over samples and replicas
    double stdError;  // across replica means; batch means when replicas == 1
    std::vector<double> replicaMeans;
    SimulationSpec spec;
};

[[nodiscard]] CurrentEstimate runCurrent(const SimulationSpec& spec);

enum class DensityMode { Snapshot, TimeReplicaAverage };

[[nodiscard]] std::string_view toString(DensityMode mode) noexcept;
/// Accepts "snapshot" and "average".
[[nodiscard]] DensityMode parseDensityMode(std::string_view name);

struct DensityProfile {
    std::size_t binWidth;
    DensityMode mode;
    std::vector<double> values;  // bin b covers indices [b*binWidth, (b+1)*binWidth)
};

/**
 * Snapshot: replica 0 at time burnIn. TimeReplicaAverage: mean over the
 * measured window of every replica. Throws if binWidth does not divide 2L.
 */
[[nodiscard]] DensityProfile densityProfile(const SimulationSpec& spec, std::size_t binWidth = 10,
                                            DensityMode mode = DensityMode::TimeReplicaAverage);

/// Settings shared by every cell of a sweep or threshold scan.
struct RunTemplate {
    RingGeometry geometry;
    BlockageSemantics semantics = BlockageSemantics::BernoulliAttempt;
    std::optional<std::uint64_t> burnIn;  // unset: defaultHorizon(L, p) per cell
    std::uint64_t measureSteps = 100;
    std::size_t replicas = 100;
    std::uint64_t masterSeed = 0;
    InitialState initialState = InitialState::RandomHalfFilled;
    std::size_t threads = 0;

    [[nodiscard]] SimulationSpec cell(double p, double epsilon, std::uint64_t streamBase) const;
};

struct SweepCell {
    double p;
    double epsilon;
    CurrentEstimate estimate;
};

/// p-major grid; cell k (0-based) uses streamBase k+1, so any row can be rerun alone.
[[nodiscard]] std::vector<SweepCell> sweep(const std::vector<double>& pGrid, const std::vector<double>& epsGrid,
                                           const RunTemplate& base);

struct ThresholdResult {
    double p;
    std::optional<double> epsStar;  // empty: deviation never exceeded on [0, 1]
    double tolerance;
    double noiseFloor;              // relative deviation resolvable at two standard errors
    double baselineCurrent;
};

/**
 * Smallest eps whose current deviates from the eps = 0 current by more than
 * `relativeTolerance` (relative). Coarse pass on a 0.05 grid, then bisection
 * down to `resolution`. A point only counts as deviating when the deviation
 * also exceeds the noise floor.
 */
[[nodiscard]] ThresholdResult thresholdScan(double p, double relativeTolerance, const RunTemplate& base,
                                            double resolution = 0.0025);

struct HittingTimeStats {
    std::vector<std::optional<std::uint64_t>> samples;  // empty entries are censored at the cap
    double mean;                                        // over uncensored samples
    std::uint64_t max;
    std::size_t censored;
};

/// First time the rule-184 blockage chain enters Omega-infinity, per replica.
[[nodiscard]] HittingTimeStats hittingTimeOmegaInf(const SimulationSpec& spec, std::uint64_t cap);

/// Runs body(0..count-1) on up to `threads` workers. Each index runs exactly once.
void parallelFor(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace tasep::mc
