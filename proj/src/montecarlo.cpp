#include "tasep/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace tasep::mc {

namespace {

struct ReplicaResult {
    double mean = 0.0;
    std::vector<double> samples;  // kept only when a single replica needs batch means
};

ReplicaResult runReplica(const SimulationSpec& spec, std::size_t replica, bool keepSamples) {
    RandomSource rng(spec.masterSeed, childStream(spec.streamBase, replica));
    Configuration sigma = initialConfiguration(spec.geometry, spec.initialState, rng);
    for (std::uint64_t t = 0; t < spec.burnIn; ++t) sigma = stepParallel(sigma, spec.params, rng);
    const double sites = static_cast<double>(spec.geometry.siteCount());
    ReplicaResult out;
    double sum = 0.0;
    for (std::uint64_t t = 0; t < spec.measureSteps; ++t) {
        const double current = static_cast<double>(engineCount(sigma)) / sites;
        sum += current;
        if (keepSamples) out.samples.push_back(current);
        if (t + 1 < spec.measureSteps) sigma = stepParallel(sigma, spec.params, rng);
    }
    out.mean = sum / static_cast<double>(spec.measureSteps);
    return out;
}

double standardError(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0) / n);
}

CurrentEstimate aggregate(const SimulationSpec& spec, std::vector<ReplicaResult> results) {
    CurrentEstimate est{0.0, 0.0, {}, spec};
    for (const ReplicaResult& r : results) est.replicaMeans.push_back(r.mean);
    est.mean = std::accumulate(est.replicaMeans.begin(), est.replicaMeans.end(), 0.0) /
               static_cast<double>(est.replicaMeans.size());
    if (results.size() >= 2) {
        est.stdError = standardError(est.replicaMeans);
    } else {
        // Batch means over ten contiguous blocks of the single trajectory.
        const std::vector<double>& s = results.front().samples;
        const std::size_t batches = std::min<std::size_t>(10, s.size());
        std::vector<double> means;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * s.size() / batches;
            const std::size_t hi = (b + 1) * s.size() / batches;
            means.push_back(std::accumulate(s.begin() + static_cast<long>(lo), s.begin() + static_cast<long>(hi), 0.0) /
                            static_cast<double>(hi - lo));
        }
        est.stdError = standardError(means);
    }
    return est;
}

}  // namespace

std::string_view toString(InitialState s) noexcept {
    switch (s) {
        case InitialState::HalfFilledAlternating: return "alternating";
        case InitialState::Queue: return "queue";
        case InitialState::RandomHalfFilled: return "random";
    }
    return "random";
}

InitialState parseInitialState(std::string_view name) {
    if (name == "alternating") return InitialState::HalfFilledAlternating;
    if (name == "queue") return InitialState::Queue;
    if (name == "random") return InitialState::RandomHalfFilled;
    throw std::invalid_argument("unknown initial state '" + std::string(name) + "'");
}

std::string_view toString(DensityMode mode) noexcept {
    return mode == DensityMode::Snapshot ? "snapshot" : "average";
}

DensityMode parseDensityMode(std::string_view name) {
    if (name == "snapshot") return DensityMode::Snapshot;
    if (name == "average") return DensityMode::TimeReplicaAverage;
    throw std::invalid_argument("unknown density mode '" + std::string(name) + "'");
}

void SimulationSpec::validate() const {
    if (measureSteps < 1) throw std::invalid_argument("measureSteps must be at least 1");
    if (replicas < 1) throw std::invalid_argument("replicas must be at least 1");
}

std::uint64_t defaultHorizon(std::size_t L, double p) {
    if (L < 2) throw std::invalid_argument("defaultHorizon needs L >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("defaultHorizon needs 0 < p <= 1");
    const double Ld = static_cast<double>(L);
    return static_cast<std::uint64_t>(std::ceil(2.0 * (Ld / p) * std::log(Ld)));
}

SimulationSpec defaultSpec(const RingGeometry& geometry, const KernelParams& params) {
    return SimulationSpec{geometry, params, defaultHorizon(geometry.halfSize(), params.p())};
}

Configuration initialConfiguration(const RingGeometry& geometry, InitialState kind, RandomSource& rng) {
    switch (kind) {
        case InitialState::HalfFilledAlternating: return alternatingConfiguration(geometry);
        case InitialState::Queue: return queueConfiguration(geometry);
        case InitialState::RandomHalfFilled: break;
    }
    // Fisher-Yates over the site order, first L shuffled sites occupied.
    std::vector<std::size_t> sites(geometry.siteCount());
    std::iota(sites.begin(), sites.end(), std::size_t{0});
    for (std::size_t i = sites.size() - 1; i > 0; --i) std::swap(sites[i], sites[rng.uniformIndex(i + 1)]);
    Configuration c{geometry};
    for (std::size_t k = 0; k < geometry.halfSize(); ++k) c.set(sites[k], true);
    return c;
}

CurrentEstimate runCurrent(const SimulationSpec& spec) {
    spec.validate();
    std::vector<ReplicaResult> results(spec.replicas);
    const bool keep = spec.replicas == 1;
    parallelFor(spec.replicas, spec.threads, [&](std::size_t r) { results[r] = runReplica(spec, r, keep); });
    return aggregate(spec, std::move(results));
}

DensityProfile densityProfile(const SimulationSpec& spec, std::size_t binWidth, DensityMode mode) {
    spec.validate();
    const std::size_t n = spec.geometry.siteCount();
    if (binWidth == 0 || n % binWidth != 0) throw std::invalid_argument("bin width must divide the site count");
    const std::size_t bins = n / binWidth;

    const std::size_t replicas = mode == DensityMode::Snapshot ? 1 : spec.replicas;
    const std::uint64_t window = mode == DensityMode::Snapshot ? 1 : spec.measureSteps;
    std::vector<std::vector<std::uint64_t>> counts(replicas, std::vector<std::uint64_t>(bins, 0));
    parallelFor(replicas, spec.threads, [&](std::size_t r) {
        RandomSource rng(spec.masterSeed, childStream(spec.streamBase, r));
        Configuration sigma = initialConfiguration(spec.geometry, spec.initialState, rng);
        for (std::uint64_t t = 0; t < spec.burnIn; ++t) sigma = stepParallel(sigma, spec.params, rng);
        for (std::uint64_t t = 0; t < window; ++t) {
            for (std::size_t i = 0; i < n; ++i) counts[r][i / binWidth] += sigma[i];
            if (t + 1 < window) sigma = stepParallel(sigma, spec.params, rng);
        }
    });
    DensityProfile out{binWidth, mode, std::vector<double>(bins, 0.0)};
    const double norm = static_cast<double>(binWidth) * static_cast<double>(window) * static_cast<double>(replicas);
    for (std::size_t b = 0; b < bins; ++b) {
        std::uint64_t total = 0;
        for (std::size_t r = 0; r < replicas; ++r) total += counts[r][b];
        out.values[b] = static_cast<double>(total) / norm;
    }
    return out;
}

SimulationSpec RunTemplate::cell(double p, double epsilon, std::uint64_t streamBase) const {
    SimulationSpec spec{geometry, KernelParams::fromProbability(p, epsilon, semantics),
                        burnIn.value_or(defaultHorizon(geometry.halfSize(), p))};
    spec.measureSteps = measureSteps;
    spec.replicas = replicas;
    spec.masterSeed = masterSeed;
    spec.initialState = initialState;
    spec.streamBase = streamBase;
    spec.threads = threads;
    return spec;
}

std::vector<SweepCell> sweep(const std::vector<double>& pGrid, const std::vector<double>& epsGrid,
                             const RunTemplate& base) {
    if (pGrid.empty() || epsGrid.empty()) throw std::invalid_argument("sweep grids must be nonempty");
    std::vector<SimulationSpec> specs;
    for (double p : pGrid)
        for (double eps : epsGrid) specs.push_back(base.cell(p, eps, specs.size() + 1));
    for (const SimulationSpec& s : specs) s.validate();

    // Flatten (cell, replica) so that slow cells spread across workers.
    const std::size_t replicas = base.replicas;
    std::vector<ReplicaResult> results(specs.size() * replicas);
    const bool keep = replicas == 1;
    parallelFor(results.size(), base.threads, [&](std::size_t k) {
        results[k] = runReplica(specs[k / replicas], k % replicas, keep);
    });

    std::vector<SweepCell> out;
    out.reserve(specs.size());
    for (std::size_t c = 0; c < specs.size(); ++c) {
        std::vector<ReplicaResult> cellResults(std::make_move_iterator(results.begin() + static_cast<long>(c * replicas)),
                                               std::make_move_iterator(results.begin() + static_cast<long>((c + 1) * replicas)));
        out.push_back({specs[c].params.p(), specs[c].params.epsilon(), aggregate(specs[c], std::move(cellResults))});
    }
    return out;
}

ThresholdResult thresholdScan(double p, double relativeTolerance, const RunTemplate& base, double resolution) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("thresholdScan needs 0 < p <= 1");
    if (!(relativeTolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    std::uint64_t stream = 1;
    const CurrentEstimate baseline = runCurrent(base.cell(p, 0.0, stream++));
    const double j0 = baseline.mean;

    double lastNoise = 0.0;
    auto deviates = [&](double eps) {
        const CurrentEstimate e = runCurrent(base.cell(p, eps, stream++));
        const double deviation = std::abs(e.mean - j0) / j0;
        lastNoise = 2.0 * std::hypot(baseline.stdError, e.stdError) / j0;
        return deviation > relativeTolerance && deviation > lastNoise;
    };

    ThresholdResult out{p, std::nullopt, relativeTolerance, 2.0 * std::sqrt(2.0) * baseline.stdError / j0, j0};
    constexpr int kCoarseSteps = 20;
    double lo = 0.0;
    std::optional<double> hi;
    for (int k = 1; k <= kCoarseSteps; ++k) {
        const double eps = static_cast<double>(k) / kCoarseSteps;
        if (deviates(eps)) {
            hi = eps;
            out.noiseFloor = lastNoise;
            break;
        }
        lo = eps;
    }
    if (!hi) return out;
    while (*hi - lo > resolution) {
        const double mid = 0.5 * (lo + *hi);
        if (deviates(mid)) {
            hi = mid;
            out.noiseFloor = lastNoise;
        } else {
            lo = mid;
        }
    }
    out.epsStar = *hi;
    return out;
}

HittingTimeStats hittingTimeOmegaInf(const SimulationSpec& spec, std::uint64_t cap) {
    spec.validate();
    if (spec.params.p() != 1.0) throw std::invalid_argument("hitting time of Omega-infinity needs p = 1");
    const double eps = spec.params.epsilon();
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("hitting time of Omega-infinity needs 0 < eps < 1");

    HittingTimeStats out{std::vector<std::optional<std::uint64_t>>(spec.replicas), 0.0, 0, 0};
    parallelFor(spec.replicas, spec.threads, [&](std::size_t r) {
        RandomSource rng(spec.masterSeed, childStream(spec.streamBase, r));
        Configuration sigma = initialConfiguration(spec.geometry, spec.initialState, rng);
        std::uint64_t t = 0;
        while (!isInOmegaInf(sigma)) {
            if (t == cap) return;
            sigma = stepRule184Blockage(sigma, eps, rng);
            ++t;
        }
        out.samples[r] = t;
    });
    double sum = 0.0;
    std::size_t hits = 0;
    for (const auto& s : out.samples) {
        if (!s) {
            ++out.censored;
            continue;
        }
        sum += static_cast<double>(*s);
        out.max = std::max(out.max, *s);
        ++hits;
    }
    out.mean = hits ? sum / static_cast<double>(hits) : 0.0;
    return out;
}

void parallelFor(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failureMutex;
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failureMutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace tasep::mc
