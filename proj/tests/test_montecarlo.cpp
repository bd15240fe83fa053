#include <doctest.h>

#include <cmath>
#include <numeric>

#include "tasep/analytic.hpp"
#include "tasep/montecarlo.hpp"

using namespace tasep;
using namespace tasep::mc;

namespace {

SimulationSpec smallSpec(std::size_t L, double p, double eps) {
    SimulationSpec s = defaultSpec(RingGeometry(L), KernelParams::fromProbability(p, eps));
    s.replicas = 4;
    s.measureSteps = 50;
    return s;
}

}  // namespace

TEST_CASE("default horizon") {
    CHECK(defaultHorizon(500, 1.0) == 6215);
    CHECK(defaultHorizon(2, 1.0) == 3);
    CHECK(defaultHorizon(500, 0.001) == 6214609);
    CHECK_THROWS(defaultHorizon(500, 0.0));
}

TEST_CASE("initial states") {
    RandomSource rng(0, 0);
    const RingGeometry g(50);
    CHECK(initialConfiguration(g, InitialState::Queue, rng) == queueConfiguration(g));
    CHECK(initialConfiguration(g, InitialState::HalfFilledAlternating, rng) == alternatingConfiguration(g));
    for (int i = 0; i < 20; ++i) CHECK(particleCount(initialConfiguration(g, InitialState::RandomHalfFilled, rng)) == 50);
    CHECK((parseInitialState("queue") == InitialState::Queue));
    CHECK(std::string(toString(InitialState::RandomHalfFilled)) == "random");
    CHECK_THROWS(parseInitialState("full"));
}

TEST_CASE("alternating start at full speed carries the maximal current") {
    SimulationSpec s = defaultSpec(RingGeometry(500), KernelParams::fromProbability(1.0));
    s.initialState = InitialState::HalfFilledAlternating;
    s.replicas = 2;
    s.measureSteps = 20;
    const CurrentEstimate e = runCurrent(s);
    CHECK(e.mean == 0.5);
    CHECK(e.stdError == 0.0);
}

TEST_CASE("estimates are reproducible and independent of the thread count") {
    SimulationSpec s = smallSpec(40, 0.5, 0.3);
    s.threads = 1;
    const CurrentEstimate a = runCurrent(s);
    s.threads = 3;
    const CurrentEstimate b = runCurrent(s);
    CHECK(a.replicaMeans == b.replicaMeans);
    CHECK(a.mean == b.mean);
    s.masterSeed = 1;
    CHECK(runCurrent(s).replicaMeans != a.replicaMeans);
}

TEST_CASE("single replica falls back to batch means") {
    SimulationSpec s = smallSpec(40, 0.5, 0.0);
    s.replicas = 1;
    s.measureSteps = 200;
    const CurrentEstimate e = runCurrent(s);
    CHECK(e.stdError > 0.0);
    CHECK(std::isfinite(e.stdError));
}

TEST_CASE("Monte Carlo current near the closed form") {
    SimulationSpec s = smallSpec(200, 0.5, 0.0);
    s.replicas = 8;
    const CurrentEstimate e = runCurrent(s);
    CHECK(std::abs(e.mean - analytic::currentFiniteL(200, 1.0)) < 0.01);
}

TEST_CASE("invalid simulation settings are rejected") {
    SimulationSpec s = smallSpec(10, 0.5, 0.0);
    s.replicas = 0;
    CHECK_THROWS(runCurrent(s));
}

TEST_CASE("sweep is p-major and every cell reruns alone") {
    RunTemplate t{RingGeometry(20), BlockageSemantics::BernoulliAttempt, std::nullopt};
    t.replicas = 2;
    t.measureSteps = 20;
    const std::vector<double> ps{0.5, 1.0}, es{0.0, 0.5, 1.0};
    const auto cells = sweep(ps, es, t);
    REQUIRE(cells.size() == 6);
    CHECK(cells[1].p == 0.5);
    CHECK(cells[1].epsilon == 0.5);
    CHECK(cells[3].p == 1.0);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const CurrentEstimate alone = runCurrent(t.cell(cells[k].p, cells[k].epsilon, k + 1));
        CHECK(alone.replicaMeans == cells[k].estimate.replicaMeans);
    }
    // A total blockage leaves one stuck engine at the head of the queue.
    CHECK(cells[5].estimate.mean == doctest::Approx(1.0 / 40.0).epsilon(1e-12));
}

TEST_CASE("density profiles") {
    SimulationSpec s = smallSpec(50, 1.0, 1.0);
    s.params = KernelParams::rule184(1.0);
    const DensityProfile avg = densityProfile(s, 10, DensityMode::TimeReplicaAverage);
    REQUIRE(avg.values.size() == 10);
    for (std::size_t b = 0; b < 5; ++b) CHECK(avg.values[b] == 0.0);
    for (std::size_t b = 5; b < 10; ++b) CHECK(avg.values[b] == 1.0);
    const DensityProfile snap = densityProfile(s, 25, DensityMode::Snapshot);
    CHECK(snap.values == std::vector<double>{0.0, 0.0, 1.0, 1.0});
    CHECK_THROWS(densityProfile(s, 7));
    const double mean = std::accumulate(avg.values.begin(), avg.values.end(), 0.0) / 10.0;
    CHECK(mean == 0.5);
}

TEST_CASE("hitting time of the recurrent set") {
    SimulationSpec s = smallSpec(30, 1.0, 0.4);
    s.params = KernelParams::rule184(0.4);
    s.replicas = 10;
    const HittingTimeStats h = hittingTimeOmegaInf(s, 100000);
    CHECK(h.samples.size() == 10);
    CHECK(h.censored == 0);
    CHECK(h.mean > 0.0);
    CHECK(h.max >= h.mean);
    s.params = KernelParams::fromProbability(0.5, 0.4);
    CHECK_THROWS(hittingTimeOmegaInf(s, 100));
}

TEST_CASE("threshold scan at full speed") {
    RunTemplate t{RingGeometry(100), BlockageSemantics::BernoulliAttempt, std::nullopt};
    t.replicas = 4;
    t.initialState = InitialState::HalfFilledAlternating;
    const ThresholdResult r = thresholdScan(1.0, 0.01, t);
    REQUIRE(r.epsStar.has_value());
    CHECK(std::abs(*r.epsStar - 0.0198) < 0.01);
    CHECK(r.baselineCurrent == 0.5);
}

TEST_CASE("parallelFor runs every index once and forwards errors") {
    std::vector<int> hits(100, 0);
    parallelFor(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallelFor(10, 2, [](std::size_t i) {
                        if (i == 5) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}
