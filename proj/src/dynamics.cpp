#include "tasep/dynamics.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tasep {

namespace {

void checkEpsilon(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
}

template <class Visit>
void forEachSetBit(const Configuration& mask, Visit&& visit) {
    auto words = mask.words();
    for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits) {
            visit(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
            bits &= bits - 1;
        }
    }
}

}  // namespace

KernelParams::KernelParams(double p, double omega, double epsilon, BlockageSemantics semantics, bool limit)
    : p_(p), omega_(omega), epsilon_(epsilon), semantics_(semantics), limit_(limit) {}

KernelParams KernelParams::fromOmega(double omega, double epsilon, BlockageSemantics semantics) {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("omega must be positive and finite");
    checkEpsilon(epsilon);
    return KernelParams(omega / (1.0 + omega), omega, epsilon, semantics, false);
}

KernelParams KernelParams::fromProbability(double p, double epsilon, BlockageSemantics semantics) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
    checkEpsilon(epsilon);
    if (p == 1.0) {
        const bool limit = semantics == BlockageSemantics::BernoulliAttempt;
        return KernelParams(1.0, std::numeric_limits<double>::infinity(), epsilon, semantics, limit);
    }
    return KernelParams(p, p / (1.0 - p), epsilon, semantics, false);
}

KernelParams KernelParams::rule184(double epsilon) {
    checkEpsilon(epsilon);
    return KernelParams(1.0, std::numeric_limits<double>::infinity(), epsilon,
                        BlockageSemantics::BernoulliAttempt, true);
}

double KernelParams::blockageMoveProbability() const noexcept {
    if (limit_ || semantics_ == BlockageSemantics::BernoulliAttempt) return p_ * (1.0 - epsilon_);
    if (std::isinf(omega_)) return epsilon_ < 1.0 ? 1.0 : 0.0;
    const double penalised = omega_ * (1.0 - epsilon_);
    return penalised / (1.0 + penalised);
}

RandomSource::RandomSource(std::uint64_t masterSeed, std::uint64_t streamId)
    : seed_(masterSeed), stream_(streamId) {
    std::seed_seq seq{static_cast<std::uint32_t>(masterSeed), static_cast<std::uint32_t>(masterSeed >> 32),
                      static_cast<std::uint32_t>(streamId), static_cast<std::uint32_t>(streamId >> 32)};
    engine_.seed(seq);
}

std::uint64_t RandomSource::uniformIndex(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniformIndex bound must be positive");
    // Lemire's multiply-and-reject.
    unsigned __int128 product = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            product = static_cast<unsigned __int128>(engine_()) * bound;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

Configuration stepParallel(const Configuration& sigma, const KernelParams& params, RandomSource& rng) {
    Configuration moved = engineMask(sigma);
    const std::size_t blockage = sigma.geometry().blockageIndex();
    const double p = params.moveProbability();
    const double pBlock = params.blockageMoveProbability();
    if (p >= 1.0) {
        // Only the engine at the blockage needs a draw.
        if (moved[blockage] && !rng.bernoulli(pBlock)) moved.set(blockage, false);
        return advance(sigma, moved);
    }
    auto words = moved.words();
    if (p < kGeometricSkipBelow) {
        const std::size_t bw = blockage / 64;
        const std::uint64_t bbit = std::uint64_t{1} << (blockage % 64);
        const bool blockedEngine = (words[bw] & bbit) != 0;
        words[bw] &= ~bbit;
        const bool blockMoves = blockedEngine && rng.bernoulli(pBlock);
        // Failures before the next success; 1 - uniform() lies in (0, 1].
        const double logStay = std::log1p(-p);
        auto gap = [&] { return std::floor(std::log(1.0 - rng.uniform()) / logStay); };
        std::size_t total = 0;
        for (std::uint64_t word : words) total += static_cast<std::size_t>(std::popcount(word));
        double skip = gap();
        std::size_t w = 0;
        std::uint64_t keep = 0;
        while (skip < static_cast<double>(total)) {
            auto k = static_cast<std::size_t>(skip);
            total -= k + 1;
            // Walk k engines forward, then keep the next one.
            while (true) {
                const auto here = static_cast<std::size_t>(std::popcount(words[w]));
                if (k < here) break;
                k -= here;
                words[w] = keep;
                keep = 0;
                ++w;
            }
            std::uint64_t bits = words[w];
            for (; k > 0; --k) bits &= bits - 1;
            const std::uint64_t lowest = bits & (0 - bits);
            keep |= lowest;
            words[w] = bits & ~lowest & ~(lowest - 1);
            skip = gap();
        }
        for (; w < words.size(); ++w) {
            words[w] = keep;
            keep = 0;
        }
        if (blockMoves) words[bw] |= bbit;
        return advance(sigma, moved);
    }
    for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        std::uint64_t keep = 0;
        while (bits) {
            const int b = std::countr_zero(bits);
            const std::size_t site = w * 64 + static_cast<std::size_t>(b);
            if (rng.bernoulli(site == blockage ? pBlock : p)) keep |= std::uint64_t{1} << b;
            bits &= bits - 1;
        }
        words[w] = keep;
    }
    return advance(sigma, moved);
}

Configuration applyRule184Blockage(const Configuration& sigma, bool blockagePasses) {
    Configuration moved = engineMask(sigma);
    if (!blockagePasses) moved.set(sigma.geometry().blockageIndex(), false);
    return advance(sigma, moved);
}

Configuration stepRule184Blockage(const Configuration& sigma, double epsilon, RandomSource& rng) {
    checkEpsilon(epsilon);
    Configuration moved = engineMask(sigma);
    const std::size_t blockage = sigma.geometry().blockageIndex();
    if (moved[blockage] && !rng.bernoulli(1.0 - epsilon)) moved.set(blockage, false);
    return advance(sigma, moved);
}

Configuration stepSerial(const Configuration& sigma, double epsilon, RandomSource& rng) {
    checkEpsilon(epsilon);
    const std::size_t m = particleCount(sigma);
    if (m == 0) throw std::invalid_argument("serial step needs at least one particle");
    std::size_t target = rng.uniformIndex(m);
    std::size_t site = 0;
    forEachSetBit(sigma, [&](std::size_t i) {
        if (target == 0) site = i;
        --target;
    });
    const RingGeometry& g = sigma.geometry();
    if (sigma[g.next(site)]) return sigma;
    if (site == g.blockageIndex() && !rng.bernoulli(1.0 - epsilon)) return sigma;
    Configuration tau = sigma;
    tau.set(site, false);
    tau.set(g.next(site), true);
    return tau;
}

std::optional<Configuration> movedParticles(const Configuration& sigma, const Configuration& tau) {
    if (!(sigma.geometry() == tau.geometry())) return std::nullopt;
    Configuration engines = engineMask(sigma);
    Configuration moved{sigma.geometry()};
    auto m = moved.words();
    auto s = sigma.words();
    auto t = tau.words();
    auto e = engines.words();
    for (std::size_t w = 0; w < m.size(); ++w) {
        m[w] = s[w] & ~t[w];
        if (m[w] & ~e[w]) return std::nullopt;
    }
    if (advance(sigma, moved) != tau) return std::nullopt;
    return moved;
}

std::vector<Successor> reachableSuccessors(const Configuration& sigma) {
    std::vector<std::size_t> engines;
    forEachSetBit(engineMask(sigma), [&](std::size_t i) { engines.push_back(i); });
    if (engines.size() > 30) throw std::invalid_argument("too many engines to enumerate successors");
    const std::size_t blockage = sigma.geometry().blockageIndex();
    std::vector<Successor> out;
    out.reserve(std::size_t{1} << engines.size());
    for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << engines.size()); ++subset) {
        Configuration moved{sigma.geometry()};
        bool crossed = false;
        for (std::size_t k = 0; k < engines.size(); ++k) {
            if ((subset >> k) & 1u) {
                moved.set(engines[k], true);
                crossed = crossed || engines[k] == blockage;
            }
        }
        out.push_back({advance(sigma, moved), static_cast<std::size_t>(std::popcount(subset)), crossed});
    }
    return out;
}

double transitionProbability(const Configuration& sigma, const Configuration& tau, const KernelParams& params) {
    const auto moved = movedParticles(sigma, tau);
    if (!moved) return 0.0;
    const std::size_t blockage = sigma.geometry().blockageIndex();
    const double p = params.moveProbability();
    const double pBlock = params.blockageMoveProbability();
    double prob = 1.0;
    forEachSetBit(engineMask(sigma), [&](std::size_t i) {
        const double q = i == blockage ? pBlock : p;
        prob *= (*moved)[i] ? q : 1.0 - q;
    });
    return prob;
}

}  // namespace tasep
