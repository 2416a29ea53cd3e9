// lpmfe: batch front end for the occupation-measure MFG solver.
//
//   lpmfe validate   --config run.ini
//   lpmfe solve      --preset inventory-default --out out/
//   lpmfe crosscheck --config run.ini --artifacts out/
//   lpmfe all        --config run.ini
//
// Exit codes: 0 success, 1 error (or failed cross-check), 2 equilibrium not converged.

#include "lpmfe/lpmfe.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace lpmfe;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNotConverged = 2;

struct Args {
    std::string config;
    std::string preset;
    std::string out;
    std::string artifacts;
    std::optional<std::uint64_t> seed;
    bool override_cfl = false;
};

fs::path preset_dir() {
    if (const char* env = std::getenv("LPMFE_PRESET_DIR")) return env;
#ifdef LPMFE_PRESET_DIR
    return LPMFE_PRESET_DIR;
#else
    return "presets";
#endif
}

RunConfig load(const Args& a) {
    if (a.config.empty() == a.preset.empty()) throw ConfigError("give exactly one of --config or --preset");
    RunConfig c = load_config(a.config.empty() ? preset_dir() / (a.preset + ".ini") : fs::path(a.config));
    if (a.seed) c.simulation.seed = *a.seed;
    c.equilibrium.assemble.override_cfl = a.override_cfl;
    if (!a.out.empty())
        c.output_dir = a.out;
    else if (const char* env = std::getenv("LPMFE_OUT_DIR"))
        c.output_dir = env;
    return c;
}

fs::path out_dir(const RunConfig& c) {
    fs::path p = c.output_dir;
    fs::create_directories(p);
    return p;
}

int validate(const RunConfig& c) {
    const auto model = c.model();
    const auto grid = c.grid();
    const auto rep = validate_model(model, grid);
    const auto& b = rep.bounds;
    std::cout << "model " << model.name << " on [" << grid.domain.lo << ", " << grid.domain.hi << "], T = " << grid.horizon
              << ", N = " << grid.N << ", M = " << grid.M << ", actions = " << grid.num_actions() << "\n";
    std::cout << "bounds: |b| " << b.drift << ", sigma^2 " << b.diffusion2 << ", |beta| " << b.jump << ", lambda "
              << b.intensity << ", |f| " << b.running_cost << ", |h| " << b.boundary_cost << ", |g| " << b.terminal_cost
              << "\n";
    std::cout << "boundary mass bound " << boundary_mass_bound(b, grid.domain, grid.horizon) << "\n";
    for (const auto& v : rep.violations) std::cout << "violation: " << v.what << "\n";

    const auto flow = MeanFieldFlow::constant(model.initial.on_grid(grid), grid.num_times());
    const auto cfl = cfl_report(model, grid, flow_stats(model, grid, flow));
    std::cout << "CFL number " << cfl.number << (cfl.stable() ? "" : " (> 1)") << "\n";
    if (!rep.admissible()) return kError;
    if (!cfl.stable() && !c.equilibrium.assemble.override_cfl) {
        std::cerr << "error: CFL number exceeds 1; refine N or pass --override-cfl\n";
        return kError;
    }
    return kOk;
}

// The effective config plus one section per command; a crosscheck after a solve
// in the same directory appends to the solve's file.
void write_metadata(const fs::path& dir, const RunConfig& c, const std::string& section, bool append) {
    const auto p = dir / "metadata.ini";
    if (append && fs::exists(p)) {
        std::ofstream os(p, std::ios::app);
        if (!os) throw Error("cannot write " + p.string());
        os << "\n" << section;
        return;
    }
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    os << "; lpmfe " << lpmfe::version << "\n";
    write_config(os, c);
    os << "\n" << section;
}

struct Solved {
    MeanFieldFlow flow;
    OccupationTriple triple;
    bool converged = true;
};

Solved solve(const RunConfig& c, bool write) {
    const auto model = c.model();
    const auto grid = c.grid();
    const auto rep = solve_equilibrium(model, grid, c.equilibrium);
    std::cout << "equilibrium " << (rep.converged ? "converged" : "NOT converged") << " after " << rep.iterations
              << " iterations: residual " << rep.residual << ", exploitability " << rep.exploitability << ", cost "
              << rep.cost << " (" << rep.seconds << " s)\n";
    if (write) {
        const auto dir = out_dir(c);
        {
            std::ofstream os(dir / "flow.csv");
            write_flow_csv(os, rep.flow, grid);
        }
        write_triple(dir, rep.triple, grid);
        {
            std::ofstream os(dir / "trace.csv");
            write_trace_csv(os, rep.trace);
        }
        const auto cfl = cfl_report(model, grid, flow_stats(model, grid, rep.flow));
        std::ostringstream run;
        run << "[run]\nversion = " << lpmfe::version << "\ncommand = solve\ncfl = " << fmt17(cfl.number)
            << "\nconverged = " << rep.converged
            << "\niterations = " << rep.iterations << "\nresidual = " << fmt17(rep.residual)
            << "\nexploitability = " << fmt17(rep.exploitability) << "\ncost = " << fmt17(rep.cost)
            << "\nlp_pivots = " << rep.lp_pivots << "\nseconds = " << fmt17(rep.seconds) << "\n";
        write_metadata(dir, c, run.str(), false);
        std::cout << "artifacts in " << dir.string() << "\n";
    }
    return {rep.flow, rep.triple, rep.converged};
}

Solved obtain(const RunConfig& c, const Args& a) {
    if (a.artifacts.empty()) return solve(c, false);
    const auto grid = c.grid();
    const fs::path dir = a.artifacts;
    auto is = std::ifstream(dir / "flow.csv");
    if (!is) throw InvalidArgument("missing artifact " + (dir / "flow.csv").string());
    Solved s;
    s.flow = read_flow_csv(is, grid);
    s.flow.check(grid);
    s.triple = read_triple(dir, grid);
    return s;
}

/// Simulates the kernel of `s` under its flow; returns the comparison when asked.
int simulate_and_compare(const RunConfig& c, const Solved& s, bool compare) {
    const auto model = c.model();
    const auto grid = c.grid();
    const auto& sp = c.simulation;
    const auto kernel = extract_kernel(s.triple, grid);
    const auto est = simulate(model, grid, kernel, s.flow, sp.paths, sp.substeps, sp.seed);
    const auto dir = out_dir(c);
    write_simulation(dir, est, grid);
    std::cout << "simulated " << est.n_paths << " paths (seed " << est.seed << ", " << est.substeps
              << " substeps): cost " << est.cost << " +- " << est.cost_se << "\n";
    if (!compare) return kOk;

    const double j_lp = lp_cost(s.triple, model, grid, flow_stats(model, grid, s.flow));
    const auto r = compare_lp_vs_sim(s.triple, j_lp, est, grid, sp.eps_disc(j_lp));
    {
        std::ofstream os(dir / "comparison.csv");
        write_comparison_csv(os, r);
    }
    std::ostringstream txt;
    txt << "J_LP = " << fmt17(r.lp_cost) << "\nJ_sim = " << fmt17(r.sim_cost) << " (se " << fmt17(r.sim_cost_se)
        << ")\n|J_sim - J_LP| = " << fmt17(r.cost_gap) << "\neps_disc = " << fmt17(r.eps_disc)
        << "\ncost ratio = " << fmt17(r.cost_ratio) << " (pass <= 1)\nW1(nu_sim, nu_LP) = " << fmt17(r.w1)
        << " (bound " << fmt17(sp.w1_bound) << ")\nmax TV of state marginals = " << fmt17(r.max_tv)
        << "\nboundary mass LP / sim = " << fmt17(r.lp_boundary) << " / " << fmt17(r.sim_boundary) << "\n";
    {
        std::ofstream os(dir / "comparison.txt");
        os << txt.str();
    }
    std::cout << txt.str();
    const bool ok = r.passes(sp.w1_bound);
    std::cout << "crosscheck " << (ok ? "passed" : "FAILED") << "\n";
    std::ostringstream run;
    run << "[crosscheck]\npaths = " << est.n_paths << "\nseed = " << est.seed << "\nsubsteps = " << est.substeps
        << "\ncost_ratio = " << fmt17(r.cost_ratio) << "\nw1 = " << fmt17(r.w1) << "\npassed = " << ok << "\n";
    write_metadata(dir, c, run.str(), true);
    return ok ? kOk : kError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Occupation-measure LP solver for reflected jump-diffusion mean field games"};
    app.set_version_flag("--version", std::string(lpmfe::version));
    app.require_subcommand(1);
    app.fallthrough();

    Args a;
    app.add_option("--config", a.config, "run configuration (INI)");
    app.add_option("--preset", a.preset, "name of a shipped preset, e.g. inventory-default");
    app.add_option("--out", a.out, "output directory (overrides config and LPMFE_OUT_DIR)");
    app.add_option("--artifacts", a.artifacts, "directory with solved flow/triple CSVs (simulate, crosscheck)");
    app.add_option("--seed", a.seed, "simulation seed (overrides config)");
    app.add_flag("--override-cfl", a.override_cfl, "assemble even when the CFL number exceeds 1");

    auto* v = app.add_subcommand("validate", "check the model coefficients and the CFL number");
    auto* s = app.add_subcommand("solve", "compute the equilibrium and write artifacts");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo run under the solved control kernel");
    auto* cc = app.add_subcommand("crosscheck", "simulate and compare against the LP solution");
    auto* all = app.add_subcommand("all", "validate, solve, simulate and compare");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kError;
    }

    try {
        const RunConfig c = load(a);
        if (v->parsed()) return validate(c);
        if (s->parsed()) return solve(c, true).converged ? kOk : kNotConverged;
        if (sim->parsed()) return simulate_and_compare(c, obtain(c, a), false);
        if (cc->parsed()) return simulate_and_compare(c, obtain(c, a), true);
        if (all->parsed()) {
            if (validate(c) != kOk) return kError;
            const auto solved = solve(c, true);
            const int rc = simulate_and_compare(c, solved, true);
            if (rc != kOk) return rc;
            return solved.converged ? kOk : kNotConverged;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
