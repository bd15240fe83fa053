#include "tasep/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "tasep/analytic.hpp"

namespace tasep::oracle {

namespace {

constexpr std::size_t kMaxTransitions = 50'000'000;

std::string describeClasses(const std::vector<std::vector<std::size_t>>& classes) {
    return "chain has " + std::to_string(classes.size()) + " closed classes";
}

std::vector<double> applyChain(const ExactChain& chain, const std::vector<double>& pi) {
    std::vector<double> next(chain.size(), 0.0);
    for (std::size_t i = 0; i < chain.size(); ++i)
        for (const Transition& t : chain.rows()[i]) next[t.target] += pi[i] * t.probability;
    return next;
}

double l1Distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

// Lazy power iteration on (P + I)/2, which shares P's stationary law and is aperiodic.
std::vector<double> powerIteration(const ExactChain& chain, const std::vector<std::size_t>& support) {
    std::vector<double> pi(chain.size(), 0.0);
    for (std::size_t i : support) pi[i] = 1.0 / static_cast<double>(support.size());
    constexpr int kMaxIterations = 2'000'000;
    for (int it = 0; it < kMaxIterations; ++it) {
        std::vector<double> next = applyChain(chain, pi);
        for (std::size_t i = 0; i < next.size(); ++i) next[i] = 0.5 * (next[i] + pi[i]);
        const double change = l1Distance(next, pi);
        pi = std::move(next);
        if (change < 1e-15) break;
    }
    return pi;
}

std::vector<double> denseSolve(const ExactChain& chain, const std::vector<std::size_t>& support) {
    const auto k = static_cast<Eigen::Index>(support.size());
    std::vector<Eigen::Index> local(chain.size(), -1);
    for (Eigen::Index a = 0; a < k; ++a) local[support[static_cast<std::size_t>(a)]] = a;
    // Rows of A are the balance equations sum_i pi_i P(i,j) - pi_j = 0; the last is replaced by normalisation.
    Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (const Transition& t : chain.rows()[support[static_cast<std::size_t>(a)]])
            if (local[t.target] >= 0) A(local[t.target], a) += t.probability;
    A.row(k - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    const Eigen::VectorXd x = A.fullPivLu().solve(b);
    std::vector<double> pi(chain.size(), 0.0);
    double total = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) total += std::max(0.0, x(a));
    for (Eigen::Index a = 0; a < k; ++a) pi[support[static_cast<std::size_t>(a)]] = std::max(0.0, x(a)) / total;
    return pi;
}

}  // namespace

ReducibleChainError::ReducibleChainError(std::vector<std::vector<std::size_t>> classes)
    : std::runtime_error(describeClasses(classes)), classes_(std::move(classes)) {}

ExactChain::ExactChain(RingGeometry geometry, std::size_t particles, KernelParams params,
                       std::vector<Configuration> states, std::vector<std::vector<Transition>> rows)
    : geometry_(geometry), particles_(particles), params_(params), states_(std::move(states)), rows_(std::move(rows)) {
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i].lowMask(), i);
}

std::size_t ExactChain::indexOf(const Configuration& sigma) const {
    if (!(sigma.geometry() == geometry_)) throw std::out_of_range("configuration has a different geometry");
    const auto it = index_.find(sigma.lowMask());
    if (it == index_.end()) throw std::out_of_range("configuration is not a state of the chain");
    return it->second;
}

double ExactChain::probability(std::size_t from, std::size_t to) const {
    for (const Transition& t : rows_.at(from))
        if (t.target == to) return t.probability;
    return 0.0;
}

ExactChain buildChain(const RingGeometry& geometry, std::size_t m, const KernelParams& params) {
    if (geometry.siteCount() > kMaxSites)
        throw StateSpaceTooLarge("state space too large: " + std::to_string(geometry.siteCount()) +
                                 " sites exceeds the oracle limit of " + std::to_string(kMaxSites));
    std::vector<Configuration> states = enumerateConfigurations(geometry, m);
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < states.size(); ++i) index.emplace(states[i].lowMask(), i);

    const double p = params.moveProbability();
    const double pBlock = params.blockageMoveProbability();
    const std::size_t blockage = geometry.blockageIndex();
    std::vector<std::vector<Transition>> rows(states.size());
    std::size_t transitions = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const Configuration& sigma = states[i];
        const std::size_t engines = engineCount(sigma);
        transitions += std::size_t{1} << std::min<std::size_t>(engines, 40);
        if (transitions > kMaxTransitions)
            throw StateSpaceTooLarge("state space too large: more than " + std::to_string(kMaxTransitions) +
                                     " transitions");
        const bool blockEngine = engineMask(sigma)[blockage];
        const std::size_t free = engines - (blockEngine ? 1 : 0);
        for (const Successor& s : reachableSuccessors(sigma)) {
            const std::size_t movedFree = s.movedCount - (s.crossedBlockage ? 1 : 0);
            double prob = std::pow(p, static_cast<double>(movedFree)) *
                          std::pow(1.0 - p, static_cast<double>(free - movedFree));
            if (blockEngine) prob *= s.crossedBlockage ? pBlock : 1.0 - pBlock;
            if (prob > 0.0) rows[i].push_back({index.at(s.configuration.lowMask()), prob});
        }
        std::sort(rows[i].begin(), rows[i].end(), [](const Transition& a, const Transition& b) { return a.target < b.target; });
    }
    return ExactChain(geometry, m, params, std::move(states), std::move(rows));
}

double maxEntryDifference(const ExactChain& a, const ExactChain& b) {
    if (a.size() != b.size() || !(a.geometry() == b.geometry()))
        throw std::invalid_argument("chains live on different state spaces");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<double> row(a.size(), 0.0);
        for (const Transition& t : a.rows()[i]) row[t.target] += t.probability;
        for (const Transition& t : b.rows()[i]) row[t.target] -= t.probability;
        for (double v : row) worst = std::max(worst, std::abs(v));
    }
    return worst;
}

BalanceReport checkGlobalBalance(const RingGeometry& geometry, std::size_t m, const Rational& omega,
                                 const Rational& epsilon) {
    if (geometry.siteCount() > kMaxSites) throw StateSpaceTooLarge("state space too large for balance check");
    const std::vector<Configuration> states = enumerateConfigurations(geometry, m);
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < states.size(); ++i) index.emplace(states[i].lowMask(), i);

    std::vector<Rational> outgoing(states.size()), incoming(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (const Successor& s : reachableSuccessors(states[i])) {
            Rational w(1);
            for (std::size_t k = 0; k < s.movedCount; ++k) w *= omega;
            if (s.crossedBlockage) w *= Rational(1) - epsilon;
            outgoing[i] += w;
            incoming[index.at(s.configuration.lowMask())] += w;
        }
    }
    BalanceReport report{Rational(0), 0, states.size()};
    for (std::size_t i = 0; i < states.size(); ++i) {
        const Rational gap = abs(outgoing[i] - incoming[i]);
        if (gap > report.maxViolation) {
            report.maxViolation = gap;
            report.worstState = i;
        }
    }
    return report;
}

bool cabooseBijectionCheck(const Configuration& sigma) {
    const RingGeometry& g = sigma.geometry();
    if (g.siteCount() > kMaxSites) throw StateSpaceTooLarge("state space too large for bijection check");
    const TrainDecomposition decomposition = trains(sigma);
    const std::size_t k = decomposition.trains.size();
    if (k > 20) throw std::invalid_argument("too many trains");

    std::set<std::string> forward, backward;
    std::multiset<std::size_t> pairedExponents;
    for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << k); ++subset) {
        Configuration engines{g};
        Configuration detached = sigma;
        std::size_t size = 0;
        for (std::size_t t = 0; t < k; ++t) {
            if (!((subset >> t) & 1u)) continue;
            const Train& train = decomposition.trains[t];
            std::size_t engine = train.caboose;
            for (std::size_t step = 1; step < train.length; ++step) engine = g.next(engine);
            engines.set(engine, true);
            detached.set(train.caboose, false);
            detached.set(g.previous(train.caboose), true);
            ++size;
        }
        const Configuration tau = advance(sigma, engines);
        const auto out = movedParticles(sigma, tau);
        const auto in = movedParticles(detached, sigma);
        if (!out || !in || popcount(*out) != size || popcount(*in) != size) return false;
        forward.insert(tau.toString());
        backward.insert(detached.toString());
        pairedExponents.insert(size);
    }
    const std::size_t images = std::size_t{1} << k;
    if (forward.size() != images || backward.size() != images) return false;

    // Independent route: every predecessor found by exhaustive search.
    std::set<std::string> predecessors;
    std::multiset<std::size_t> incomingExponents;
    forEachConfiguration(g, particleCount(sigma), [&](const Configuration& candidate) {
        if (const auto moved = movedParticles(candidate, sigma)) {
            predecessors.insert(candidate.toString());
            incomingExponents.insert(popcount(*moved));
        }
    });
    return predecessors == backward && incomingExponents == pairedExponents;
}

std::vector<std::vector<std::size_t>> closedClasses(const ExactChain& chain) {
    // Iterative Tarjan.
    const std::size_t n = chain.size();
    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> order(n, kUnvisited), low(n, 0), component(n, kUnvisited);
    std::vector<bool> onStack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    std::size_t counter = 0;

    struct Frame {
        std::size_t node;
        std::size_t edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (order[root] != kUnvisited) continue;
        std::vector<Frame> frames{{root, 0}};
        order[root] = low[root] = counter++;
        stack.push_back(root);
        onStack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            const auto& row = chain.rows()[f.node];
            if (f.edge < row.size()) {
                const std::size_t next = row[f.edge++].target;
                if (order[next] == kUnvisited) {
                    order[next] = low[next] = counter++;
                    stack.push_back(next);
                    onStack[next] = true;
                    frames.push_back({next, 0});
                } else if (onStack[next]) {
                    low[f.node] = std::min(low[f.node], order[next]);
                }
                continue;
            }
            const std::size_t node = f.node;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[node]);
            if (low[node] == order[node]) {
                std::vector<std::size_t> members;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    onStack[w] = false;
                    component[w] = components.size();
                    members.push_back(w);
                } while (w != node);
                components.push_back(std::move(members));
            }
        }
    }

    std::vector<std::vector<std::size_t>> closed;
    for (std::size_t c = 0; c < components.size(); ++c) {
        bool leaks = false;
        for (std::size_t i : components[c])
            for (const Transition& t : chain.rows()[i]) leaks = leaks || component[t.target] != c;
        if (leaks) continue;
        std::vector<std::size_t> members = components[c];
        std::sort(members.begin(), members.end());
        closed.push_back(std::move(members));
    }
    std::sort(closed.begin(), closed.end());
    return closed;
}

StationaryDistribution stationaryDistribution(const ExactChain& chain) {
    std::vector<std::vector<std::size_t>> classes = closedClasses(chain);
    if (classes.size() != 1) throw ReducibleChainError(std::move(classes));
    StationaryDistribution out;
    out.recurrentStates = classes.front();
    if (chain.geometry().siteCount() <= kMaxDenseSites) {
        out.probabilities = denseSolve(chain, out.recurrentStates);
        out.method = SolveMethod::DenseLU;
        out.crossCheckGap = l1Distance(out.probabilities, powerIteration(chain, out.recurrentStates));
    } else {
        out.probabilities = powerIteration(chain, out.recurrentStates);
        out.method = SolveMethod::PowerIteration;
        out.crossCheckGap = 0.0;
    }
    out.residual = l1Distance(applyChain(chain, out.probabilities), out.probabilities);
    return out;
}

double verifyWeightStationarity(const RingGeometry& geometry, std::size_t m, double omega) {
    const ExactChain chain = buildChain(geometry, m, KernelParams::fromOmega(omega));
    const StationaryDistribution pi = stationaryDistribution(chain);
    std::vector<double> weights;
    double total = 0.0;
    for (const Configuration& sigma : chain.states()) {
        weights.push_back(std::pow(1.0 + omega, static_cast<double>(engineCount(sigma))));
        total += weights.back();
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i)
        worst = std::max(worst, std::abs(pi.probabilities[i] - weights[i] / total));
    return worst;
}

std::vector<Configuration> recurrentSupportRule184(const RingGeometry& geometry, double epsilon) {
    const ExactChain chain = buildChain(geometry, geometry.halfSize(), KernelParams::rule184(epsilon));
    std::vector<std::vector<std::size_t>> classes = closedClasses(chain);
    if (classes.size() != 1) throw ReducibleChainError(std::move(classes));
    std::vector<Configuration> out;
    for (std::size_t i : classes.front()) out.push_back(chain.states()[i]);
    return out;
}

ExactCurrent exactCurrent(const ExactChain& chain, const StationaryDistribution& pi) {
    const RingGeometry& g = chain.geometry();
    const auto L = static_cast<double>(g.halfSize());
    ExactCurrent out{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const double w = pi.probabilities[i];
        if (w == 0.0) continue;
        const Configuration& sigma = chain.states()[i];
        const Configuration engines = engineMask(sigma);
        std::size_t secondHalfEngines = 0;
        for (std::size_t s = g.halfSize(); s < g.siteCount(); ++s) secondHalfEngines += engines[s];
        out.engineFraction += w * static_cast<double>(popcount(engines));
        out.firstHalfFraction += w * static_cast<double>(firstHalfCount(sigma));
        out.secondHalfFreeFraction += w * static_cast<double>(secondHalfEngines);
    }
    out.engineFraction /= 2.0 * L;
    out.firstHalfFraction /= L;
    out.secondHalfFreeFraction /= L;
    return out;
}

ProductFormComparison compareProductForm(const ExactChain& chain, const StationaryDistribution& pi) {
    const double eps = chain.params().epsilon();
    const std::size_t L = chain.geometry().halfSize();
    std::vector<double> observed, predicted;
    for (std::size_t i : pi.recurrentStates) {
        const Configuration& sigma = chain.states()[i];
        if (sigma[0]) continue;
        observed.push_back(pi.probabilities[i]);
        predicted.push_back(analytic::productFormWeight(firstHalfCount(sigma), L, eps));
    }
    double so = 0.0, sp = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        so += observed[k];
        sp += predicted[k];
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k)
        worst = std::max(worst, std::abs(observed[k] / so - predicted[k] / sp));
    return {worst, observed.size()};
}

}  // namespace tasep::oracle
