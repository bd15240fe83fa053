#include "tasep/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tasep/analytic.hpp"
#include "tasep/dynamics.hpp"
#include "tasep/lattice.hpp"
#include "tasep/montecarlo.hpp"
#include "tasep/oracle.hpp"

namespace tasep::cli {

namespace {

using nlohmann::json;

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string num(double v) { return fmt::format("{:.12g}", v); }

std::string utcTimestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

BlockageSemantics parseSemantics(const std::string& name) {
    if (name == "bernoulli") return BlockageSemantics::BernoulliAttempt;
    if (name == "renormalized") return BlockageSemantics::RenormalizedWeight;
    throw ArgumentError("unknown semantics '" + name + "' (expected bernoulli or renormalized)");
}

// p = 0 in a grid stands for the slowest rate used in practice, 1/(2L).
std::vector<double> probabilityGrid(const std::string& text, std::size_t L) {
    std::vector<double> grid = parseGrid(text);
    for (double& p : grid) {
        if (p == 0.0) p = 1.0 / (2.0 * static_cast<double>(L));
        if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("p values must lie in (0, 1]");
    }
    return grid;
}

std::vector<double> epsilonGrid(const std::string& text) {
    std::vector<double> grid = parseGrid(text);
    for (double e : grid)
        if (!(e >= 0.0 && e <= 1.0)) throw ArgumentError("eps values must lie in [0, 1]");
    return grid;
}

double parseNumber(std::string_view text) {
    const std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ArgumentError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw ArgumentError("not a number: '" + s + "'");
    return v;
}

struct SimOptions {
    std::size_t L = 0;
    std::string p = "1";
    std::string eps = "0";
    std::optional<std::uint64_t> burnin;
    std::uint64_t measure = 100;
    std::size_t replicas = 100;
    std::uint64_t seed = 0;
    std::string init = "random";
    std::string semantics = "bernoulli";
    std::size_t threads = 0;
    std::size_t bin = 10;
    std::string mode = "average";
    std::string heatmap;
    double tolerance = 0.01;
    double resolution = 0.0025;
    std::uint64_t cap = 1'000'000;

    mc::RunTemplate runTemplate() const {
        if (L < 2) throw ArgumentError("--L must be at least 2");
        mc::RunTemplate t{RingGeometry(L), BlockageSemantics::BernoulliAttempt, std::nullopt};
        t.semantics = parseSemantics(semantics);
        t.burnIn = burnin;
        t.measureSteps = measure;
        t.replicas = replicas;
        t.masterSeed = seed;
        t.initialState = mc::parseInitialState(init);
        t.threads = threads;
        return t;
    }

    json describe() const {
        return json{{"L", L},          {"p", p},         {"eps", eps},         {"burnin", burnin ? json(*burnin) : json("default")},
                    {"measure", measure}, {"replicas", replicas}, {"seed", seed}, {"init", init},
                    {"semantics", semantics}};
    }
};

struct OracleOptions {
    std::size_t sites = 0;
    std::size_t particles = 0;
    std::optional<double> omega;
    std::optional<double> p;
    bool rule184 = false;
    double eps = 0.0;
    std::string semantics = "bernoulli";
};

struct ExactOptions {
    std::optional<double> omega;
    std::optional<double> p;
    std::optional<double> eps;
    std::size_t L = 0;
};

double resolveOmega(const ExactOptions& o) {
    if (o.omega) return *o.omega;
    if (o.p) {
        if (!(*o.p > 0.0 && *o.p < 1.0)) throw ArgumentError("--p must lie in (0, 1) to define a finite omega");
        return *o.p / (1.0 - *o.p);
    }
    throw ArgumentError("one of --omega or --p is required");
}

std::string csvSimulate(const std::vector<mc::SweepCell>& cells) {
    std::string s = "p,eps,L,burnin,measure_steps,replicas,seed,current_mean,current_stderr\n";
    for (const mc::SweepCell& c : cells) {
        const mc::SimulationSpec& spec = c.estimate.spec;
        s += fmt::format("{},{},{},{},{},{},{},{},{}\n", num(c.p), num(c.epsilon), spec.geometry.halfSize(), spec.burnIn,
                         spec.measureSteps, spec.replicas, spec.masterSeed, num(c.estimate.mean), num(c.estimate.stdError));
    }
    return s;
}

struct CommandResult {
    std::string payload;
    json parameters = json::object();
    json summary = json::object();
    std::string heatmapPath;
    std::string heatmap;
};

CommandResult runExact(const std::string& which, const ExactOptions& o) {
    CommandResult r;
    r.parameters = {{"subcommand", which}};
    if (which == "current") {
        const double w = resolveOmega(o);
        r.parameters["omega"] = w;
        r.payload = num(analytic::currentClosedForm(w)) + "\n";
    } else if (which == "blockage-current") {
        if (!o.eps) throw ArgumentError("--eps is required");
        r.parameters["eps"] = *o.eps;
        r.payload = num(analytic::blockageCurrentClosedForm(*o.eps)) + "\n";
    } else if (which == "finite-current") {
        const double w = resolveOmega(o);
        r.parameters["omega"] = w;
        r.parameters["L"] = o.L;
        r.payload = num(analytic::currentFiniteL(o.L, w)) + "\n";
    } else if (which == "finite-blockage") {
        if (!o.eps) throw ArgumentError("--eps is required");
        r.parameters["eps"] = *o.eps;
        r.parameters["L"] = o.L;
        r.payload = num(analytic::blockageRFiniteL(o.L, *o.eps)) + "\n";
    } else if (which == "nl") {
        if (o.L < 1) throw ArgumentError("--L must be positive");
        r.parameters["L"] = o.L;
        r.payload = "l,count\n";
        for (std::size_t l = 1; l <= o.L; ++l) r.payload += fmt::format("{},{}\n", l, trainCountTable(o.L, l).str());
    } else if (which == "saddle") {
        r.payload = "argmax,value,closed_form\n";
        if (o.eps) {
            r.parameters["eps"] = *o.eps;
            const analytic::SaddleResult s = analytic::maximizeBlockageSaddle(*o.eps);
            r.payload += fmt::format("{},{},{}\n", num(s.argmax), num(s.value), num(analytic::blockageCurrentClosedForm(*o.eps)));
        } else {
            const double w = resolveOmega(o);
            r.parameters["omega"] = w;
            const analytic::SaddleResult s = analytic::maximizeSaddleF(w);
            const double root = std::sqrt(1.0 + w);
            r.payload += fmt::format("{},{},{}\n", num(s.argmax), num(s.value), num(root / (1.0 + root)));
        }
    }
    return r;
}

CommandResult runOracle(const OracleOptions& o) {
    if (o.sites < 4 || o.sites % 2 != 0) throw ArgumentError("--sites must be even and at least 4");
    if (o.particles > o.sites) throw ArgumentError("--particles cannot exceed --sites");
    if (o.sites > oracle::kMaxDenseSites)
        throw oracle::StateSpaceTooLarge("state space too large: the oracle report solves densely up to " +
                                         std::to_string(oracle::kMaxDenseSites) + " sites");
    const BlockageSemantics sem = parseSemantics(o.semantics);
    const int chosen = (o.rule184 ? 1 : 0) + (o.omega ? 1 : 0) + (o.p ? 1 : 0);
    if (chosen != 1) throw ArgumentError("exactly one of --omega, --p, --rule184 is required");
    const KernelParams params = o.rule184 ? KernelParams::rule184(o.eps)
                                : o.omega  ? KernelParams::fromOmega(*o.omega, o.eps, sem)
                                           : KernelParams::fromProbability(*o.p, o.eps, sem);
    const RingGeometry g(o.sites / 2);
    const oracle::ExactChain chain = oracle::buildChain(g, o.particles, params);
    const oracle::StationaryDistribution pi = oracle::stationaryDistribution(chain);
    const oracle::ExactCurrent current = oracle::exactCurrent(chain, pi);

    CommandResult r;
    r.parameters = {{"sites", o.sites},       {"particles", o.particles}, {"omega", o.omega ? json(*o.omega) : json(nullptr)},
                    {"p", o.p ? json(*o.p) : json(nullptr)}, {"rule184", o.rule184}, {"eps", o.eps},
                    {"semantics", o.semantics}};
    r.summary["states"] = chain.size();
    r.summary["recurrent_class_size"] = pi.recurrentStates.size();
    r.summary["residual"] = pi.residual;
    r.summary["engine_fraction"] = current.engineFraction;
    r.summary["first_half_fraction"] = current.firstHalfFraction;
    if (!o.rule184 && std::isfinite(params.omega())) {
        const oracle::BalanceReport balance =
            oracle::checkGlobalBalance(g, o.particles, oracle::Rational(params.omega()), oracle::Rational(o.eps));
        r.summary["balance_violation"] = balance.maxViolation.convert_to<double>();
        if (o.eps == 0.0) r.summary["max_weight_error"] = oracle::verifyWeightStationarity(g, o.particles, params.omega());
    }
    r.payload = "state_index,bitstring,engine_count,stationary_prob,in_ph,in_omega_inf\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Configuration& sigma = chain.states()[i];
        r.payload += fmt::format("{},{},{},{},{},{}\n", i, sigma.toString(), engineCount(sigma), num(pi.probabilities[i]),
                                 isPhSymmetric(sigma) ? 1 : 0, isInOmegaInf(sigma) ? 1 : 0);
    }
    return r;
}

std::string pgm(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::string s = fmt::format("P2\n{} {}\n255\n", cols, rows.size());
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            const long level = std::lround(255.0 * (1.0 - std::clamp(row[c], 0.0, 1.0)));
            s += fmt::format("{}{}", c ? " " : "", level);
        }
        s += "\n";
    }
    return s;
}

CommandResult runSimulation(const std::string& command, const SimOptions& o) {
    const mc::RunTemplate base = o.runTemplate();
    CommandResult r;
    r.parameters = o.describe();
    if (command == "simulate") {
        const double p = parseNumber(o.p);
        const double eps = parseNumber(o.eps);
        if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("--p must lie in (0, 1]");
        const mc::SimulationSpec spec = base.cell(p, eps, 0);
        const mc::CurrentEstimate e = mc::runCurrent(spec);
        r.payload = csvSimulate({{p, eps, e}});
        r.summary["current_mean"] = e.mean;
    } else if (command == "sweep") {
        const auto cells = mc::sweep(probabilityGrid(o.p, o.L), epsilonGrid(o.eps), base);
        r.payload = csvSimulate(cells);
        r.summary["cells"] = cells.size();
    } else if (command == "density") {
        const double p = parseNumber(o.p);
        if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("--p must lie in (0, 1]");
        const mc::DensityMode mode = mc::parseDensityMode(o.mode);
        const std::vector<double> epsGrid = epsilonGrid(o.eps);
        r.payload = "p,eps,L,mode,bin_index,site_lo,site_hi,density\n";
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < epsGrid.size(); ++k) {
            const mc::DensityProfile profile = mc::densityProfile(base.cell(p, epsGrid[k], k + 1), o.bin, mode);
            for (std::size_t b = 0; b < profile.values.size(); ++b)
                r.payload += fmt::format("{},{},{},{},{},{},{},{}\n", num(p), num(epsGrid[k]), o.L, mc::toString(mode), b,
                                         b * o.bin + 1, (b + 1) * o.bin, num(profile.values[b]));
            rows.push_back(profile.values);
        }
        if (!o.heatmap.empty()) {
            r.heatmapPath = o.heatmap;
            r.heatmap = pgm(rows);
        }
    } else if (command == "threshold") {
        r.payload = "p,eps_star,tolerance,noise_floor\n";
        for (double p : probabilityGrid(o.p, o.L)) {
            const mc::ThresholdResult t = mc::thresholdScan(p, o.tolerance, base, o.resolution);
            r.payload += fmt::format("{},{},{},{}\n", num(p), t.epsStar ? num(*t.epsStar) : std::string("none"),
                                     num(t.tolerance), num(t.noiseFloor));
        }
    } else if (command == "hitting") {
        const double eps = parseNumber(o.eps);
        mc::SimulationSpec spec = base.cell(1.0, eps, 0);
        spec.params = KernelParams::rule184(eps);
        const mc::HittingTimeStats h = mc::hittingTimeOmegaInf(spec, o.cap);
        r.payload = "replica,hitting_time,censored\n";
        for (std::size_t i = 0; i < h.samples.size(); ++i)
            r.payload += h.samples[i] ? fmt::format("{},{},0\n", i, *h.samples[i]) : fmt::format("{},{},1\n", i, o.cap);
        r.summary["mean"] = h.mean;
        r.summary["max"] = h.max;
        r.summary["censored"] = h.censored;
    }
    return r;
}

void writeFile(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << contents;
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<std::string> replayArguments(const std::string& manifestPath, const std::string& out) {
    std::ifstream f(manifestPath);
    if (!f) throw ArgumentError("cannot read manifest '" + manifestPath + "'");
    json manifest;
    try {
        f >> manifest;
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("malformed manifest: ") + e.what());
    }
    if (!manifest.contains("argv") || !manifest["argv"].is_array()) throw ArgumentError("manifest has no argv");
    std::vector<std::string> recorded = manifest["argv"].get<std::vector<std::string>>();
    std::vector<std::string> args;
    for (std::size_t i = 0; i < recorded.size(); ++i) {
        const std::string& a = recorded[i];
        if (a == "--out" || a == "--manifest") {
            ++i;
            continue;
        }
        if (a.rfind("--out=", 0) == 0 || a.rfind("--manifest=", 0) == 0) continue;
        args.push_back(a);
    }
    if (!out.empty()) {
        args.push_back("--out");
        args.push_back(out);
    }
    return args;
}

}  // namespace

std::vector<double> parseGrid(std::string_view text) {
    std::vector<double> values;
    if (text.find(':') != std::string_view::npos) {
        std::vector<double> parts;
        std::size_t start = 0;
        while (true) {
            const std::size_t colon = text.find(':', start);
            parts.push_back(parseNumber(text.substr(start, colon - start)));
            if (colon == std::string_view::npos) break;
            start = colon + 1;
        }
        if (parts.size() != 3) throw ArgumentError("grid must look like start:stop:step");
        const double lo = parts[0], hi = parts[1], step = parts[2];
        if (!(step > 0.0) || hi < lo) throw ArgumentError("grid needs step > 0 and stop >= start");
        const auto count = static_cast<long>(std::floor((hi - lo) / step + 0.5));
        for (long k = 0; k <= count; ++k) {
            // Rounded to 12 decimals so 0.05*3 prints as 0.15.
            values.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
        }
        return values;
    }
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        values.push_back(parseNumber(text.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Parallel TASEP on a ring with a single-site blockage", "tasep"};
    app.require_subcommand(1);
    std::string outPath, manifestPath;

    ExactOptions exact;
    CLI::App* exactCmd = app.add_subcommand("exact", "closed-form and finite-L formulas");
    exactCmd->require_subcommand(1);
    std::string exactWhich;
    for (const char* name : {"current", "blockage-current", "finite-current", "finite-blockage", "nl", "saddle"}) {
        CLI::App* sub = exactCmd->add_subcommand(name);
        sub->add_option("--omega", exact.omega, "jump weight omega");
        sub->add_option("--p", exact.p, "jump probability p = omega/(1+omega)");
        sub->add_option("--eps", exact.eps, "blockage intensity");
        sub->add_option("--L", exact.L, "half ring size");
        sub->add_option("--out", outPath);
        sub->add_option("--manifest", manifestPath);
        sub->callback([&exactWhich, name] { exactWhich = name; });
    }

    OracleOptions oracleOpts;
    CLI::App* oracleCmd = app.add_subcommand("oracle", "exact small-ring stationary analysis");
    oracleCmd->add_option("--sites", oracleOpts.sites, "ring size 2L")->required();
    oracleCmd->add_option("--particles", oracleOpts.particles, "particle number m")->required();
    oracleCmd->add_option("--omega", oracleOpts.omega);
    oracleCmd->add_option("--p", oracleOpts.p);
    oracleCmd->add_flag("--rule184", oracleOpts.rule184, "omega -> infinity kernel");
    oracleCmd->add_option("--eps", oracleOpts.eps);
    oracleCmd->add_option("--semantics", oracleOpts.semantics, "bernoulli | renormalized");
    oracleCmd->add_option("--out", outPath);
    oracleCmd->add_option("--manifest", manifestPath);

    SimOptions sim;
    std::string simCommand;
    auto addSim = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--L", sim.L, "half ring size")->required();
        sub->add_option("--p", sim.p, "jump probability (value or grid)");
        sub->add_option("--eps", sim.eps, "blockage intensity (value or grid)");
        sub->add_option("--burnin", sim.burnin, "burn-in steps (default 2 (L/p) ln L)");
        sub->add_option("--measure", sim.measure, "measured steps");
        sub->add_option("--replicas", sim.replicas);
        sub->add_option("--seed", sim.seed);
        sub->add_option("--init", sim.init, "random | alternating | queue");
        sub->add_option("--semantics", sim.semantics, "bernoulli | renormalized");
        sub->add_option("--threads", sim.threads, "worker threads (0 = all cores)");
        sub->add_option("--out", outPath);
        sub->add_option("--manifest", manifestPath);
        sub->callback([&simCommand, name] { simCommand = name; });
        return sub;
    };
    addSim("simulate", "Monte Carlo current at one (p, eps)");
    CLI::App* sweepCmd = addSim("sweep", "current over a (p, eps) grid");
    CLI::App* densityCmd = addSim("density", "coarse-grained density profiles");
    densityCmd->add_option("--bin", sim.bin, "bin width in sites");
    densityCmd->add_option("--mode", sim.mode, "snapshot | average");
    densityCmd->add_option("--heatmap", sim.heatmap, "write a plain PGM heatmap");
    CLI::App* thresholdCmd = addSim("threshold", "blockage intensity at which the current drops by a tolerance");
    thresholdCmd->add_option("--tolerance", sim.tolerance);
    thresholdCmd->add_option("--resolution", sim.resolution);
    CLI::App* hittingCmd = addSim("hitting", "hitting time of Omega-infinity for rule 184");
    hittingCmd->add_option("--cap", sim.cap);

    std::string replayManifest;
    CLI::App* replayCmd = app.add_subcommand("replay", "re-run a command from its manifest");
    replayCmd->add_option("--manifest", replayManifest)->required();
    replayCmd->add_option("--out", outPath);

    // Defaults that differ per command.
    sweepCmd->preparse_callback([&](std::size_t) {
        sim.p = "0:1:0.05";
        sim.eps = "0:1:0.05";
    });
    densityCmd->preparse_callback([&](std::size_t) { sim.eps = "0,0.2,0.4,0.6,0.8,1"; });
    thresholdCmd->preparse_callback([&](std::size_t) { sim.p = "0.2:1:0.2"; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kArgumentError;
    }

    try {
        if (replayCmd->parsed()) {
            std::vector<std::string> again = replayArguments(replayManifest, outPath);
            again.insert(again.begin(), args.empty() ? std::string("tasep") : args.front());
            return run(again, out, err);
        }
        CommandResult result;
        std::string command;
        if (exactCmd->parsed()) {
            command = "exact";
            result = runExact(exactWhich, exact);
        } else if (oracleCmd->parsed()) {
            command = "oracle";
            result = runOracle(oracleOpts);
        } else {
            command = simCommand;
            result = runSimulation(simCommand, sim);
        }

        if (outPath.empty())
            out << result.payload;
        else
            writeFile(outPath, result.payload);
        if (!result.heatmapPath.empty()) writeFile(result.heatmapPath, result.heatmap);
        for (const auto& [key, value] : result.summary.items()) err << key << "=" << value.dump() << "\n";

        if (manifestPath.empty() && !outPath.empty()) manifestPath = outPath + ".manifest.json";
        if (!manifestPath.empty()) {
            json manifest{{"tool", "tasep"},
                          {"version", std::string(kToolVersion)},
                          {"timestamp", utcTimestamp()},
                          {"command", command},
                          {"argv", std::vector<std::string>(args.begin() + (args.empty() ? 0 : 1), args.end())},
                          {"parameters", result.parameters},
                          {"summary", result.summary}};
            if (command != "exact" && command != "oracle") manifest["seed"] = sim.seed;
            writeFile(manifestPath, manifest.dump(2) + "\n");
        }
        return kSuccess;
    } catch (const oracle::StateSpaceTooLarge& e) {
        err << "error: " << e.what() << "\n";
        return kResourceGuard;
    } catch (const oracle::ReducibleChainError& e) {
        err << "error: " << e.what() << "; closed class sizes:";
        for (const auto& c : e.classes()) err << " " << c.size();
        err << "\n";
        return kFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kArgumentError;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kArgumentError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace tasep::cli
