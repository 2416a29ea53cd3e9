#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/flow.hpp"
#include "lpmfe/generator.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/kernel.hpp"
#include "lpmfe/lp.hpp"
#include "lpmfe/model.hpp"
#include "lpmfe/stencil.hpp"

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

namespace lpmfe {

/// Everything the LP needs for one frozen flow.
struct FrozenProblem {
    FlowStats stats;
    JumpStencil stencil;
    GeneratorTensors gen;
    LpProblem lp;
};

inline FrozenProblem freeze(const MfgModel& model, const DiscreteGrid& grid, const MeanFieldFlow& flow,
                            AssembleOptions opts = {}) {
    FrozenProblem p;
    p.stats = flow_stats(model, grid, flow);
    p.stencil = jump_stencil(model, grid, p.stats);
    p.gen = assemble_generator(model, grid, p.stats, p.stencil);
    p.lp = assemble_lp(model, grid, p.gen, p.stats, opts);
    return p;
}

struct BestResponse {
    OccupationTriple triple;
    double cost = 0.0;
    std::vector<int> basis;
    SolverStats stats;
};

inline BestResponse best_response(const FrozenProblem& p, SolverOptions opts = {}) {
    auto r = solve_lp(p.lp, std::move(opts));
    return {std::move(r.triple), r.objective, std::move(r.basis), r.stats};
}

/// Minimizing triple for the frozen flow.
inline BestResponse best_response(const MfgModel& model, const DiscreteGrid& grid, const MeanFieldFlow& flow,
                                  AssembleOptions assemble = {}, SolverOptions opts = {}) {
    return best_response(freeze(model, grid, flow, assemble), std::move(opts));
}

/// State marginals of a triple: rho[n] = sum_k m[n, ., k] / dt for n < N, rho[N] = nu.
inline MeanFieldFlow marginal_flow(const OccupationTriple& t, const DiscreteGrid& grid) {
    if (!t.matches(grid)) throw InvalidArgument("marginal_flow: triple does not match the grid");
    MeanFieldFlow f;
    f.rho.assign(grid.num_times(), std::vector<double>(t.S, 0.0));
    for (std::size_t n = 0; n < t.N; ++n)
        for (std::size_t i = 0; i < t.S; ++i) f.rho[n][i] = t.state_mass(n, i) / grid.dt;
    f.rho[t.N] = t.nu;
    return f;
}

/// Cost gap between a candidate and the LP optimum for the same frozen flow.
/// Throws InvalidArgument naming the worst row when the candidate violates the
/// flow's constraints by more than `feasibility_tol`.
inline double exploitability(const FrozenProblem& p, const MfgModel& model, const DiscreteGrid& grid,
                             const OccupationTriple& candidate, double optimum, double feasibility_tol = 1e-8) {
    if (!candidate.matches(grid)) throw InvalidArgument("exploitability: candidate does not match the grid");
    const auto worst = worst_row_violation(p.lp, candidate);
    if (worst.value > feasibility_tol)
        throw InvalidArgument("candidate infeasible for this flow: row " + worst.name + " violated by " +
                              std::to_string(worst.value));
    double min_entry = 0.0;
    for (double v : candidate.m) min_entry = std::min(min_entry, v);
    for (double v : candidate.lambda_b) min_entry = std::min(min_entry, v);
    for (double v : candidate.nu) min_entry = std::min(min_entry, v);
    if (min_entry < -feasibility_tol)
        throw InvalidArgument("candidate infeasible for this flow: negative entry " + std::to_string(min_entry));
    return lp_cost(candidate, model, grid, p.stats) - optimum;
}

inline double exploitability(const MfgModel& model, const DiscreteGrid& grid, const MeanFieldFlow& flow,
                             const OccupationTriple& candidate, AssembleOptions assemble = {}) {
    const auto p = freeze(model, grid, flow, assemble);
    const auto br = best_response(p);
    return exploitability(p, model, grid, candidate, br.cost);
}

enum class InitialFlow { FrozenInitial, UncontrolledRollforward };

inline const char* to_string(InitialFlow f) {
    return f == InitialFlow::FrozenInitial ? "frozen-m0" : "uncontrolled-rollforward";
}

struct FixedPointParams {
    double damping = 0.5;
    std::size_t max_iters = 200;
    double flow_tolerance = 1e-6;
    double exploitability_tolerance = 1e-6;
    InitialFlow initial = InitialFlow::FrozenInitial;
    AssembleOptions assemble;
    SolverOptions solver;

    void check() const {
        if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
        if (max_iters == 0) throw InvalidArgument("max_iters must be positive");
        if (!(flow_tolerance > 0.0)) throw InvalidArgument("flow_tolerance must be positive");
        if (!(exploitability_tolerance > 0.0)) throw InvalidArgument("exploitability_tolerance must be positive");
    }
};

struct IterationRecord {
    std::size_t iter = 0;
    double residual = 0.0;       // sup TV(candidate, marginal of its best response)
    double exploitability = 0.0; // gain from deviating off the played policy under the candidate
    double cost = 0.0;
    double flow_gap = 0.0;       // sup TV(current flow, candidate)
};

struct EquilibriumReport {
    MeanFieldFlow flow;
    OccupationTriple triple;
    double cost = 0.0;
    double residual = 0.0;
    double exploitability = 0.0;
    std::vector<IterationRecord> trace;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t lp_pivots = 0;
    double seconds = 0.0;
};

/// Flow of the chain that always plays the default action, with coefficients fed
/// by its own marginals. Each time cell only reads statistics at its own start,
/// so N + 1 sweeps reach the exact fixed point; most models settle sooner.
inline MeanFieldFlow uncontrolled_flow(const MfgModel& model, const DiscreteGrid& grid, AssembleOptions opts = {}) {
    const auto m0 = model.initial.on_grid(grid);
    auto flow = MeanFieldFlow::constant(m0, grid.num_times());
    const auto kernel = ControlKernel::constant(grid, MfgModel::default_action());
    for (std::size_t sweep = 0; sweep <= grid.N; ++sweep) {
        const auto stats = flow_stats(model, grid, flow);
        const auto stencil = jump_stencil(model, grid, stats);
        const auto gen = assemble_generator(model, grid, stats, stencil);
        const auto cfl = cfl_report(model, grid, stats);
        if (!cfl.stable() && !opts.override_cfl)
            throw CflError("uncontrolled rollforward: CFL number " + std::to_string(cfl.number) + " exceeds 1");
        auto next = marginal_flow(rollout(kernel, gen, m0, grid), grid);
        const bool same = next.rho == flow.rho;
        flow = std::move(next);
        if (same) break;
    }
    return flow;
}

/// Damped fixed-point iteration on the flow.
///
/// Iteration j solves the best response BR_j to flow_j and forms the candidate
/// c_j = marginal(BR_j). The candidate is then frozen and solved once more: the
/// residual is sup TV(c_j, marginal(BR(c_j))) and the exploitability is the cost
/// of playing BR_j's kernel under c_j minus the optimum for c_j. Both small means
/// (c_j, BR(c_j)) is reported. Otherwise flow_{j+1} = (1 - w) flow_j + w c_j.
inline EquilibriumReport solve_equilibrium(const MfgModel& model, const DiscreteGrid& grid,
                                           const FixedPointParams& params) {
    params.check();
    const auto t0 = std::chrono::steady_clock::now();
    const auto m0 = model.initial.on_grid(grid);
    MeanFieldFlow flow = params.initial == InitialFlow::FrozenInitial
                             ? MeanFieldFlow::constant(m0, grid.num_times())
                             : uncontrolled_flow(model, grid, params.assemble);

    EquilibriumReport rep;
    std::vector<int> warm;
    auto solve = [&](const FrozenProblem& p, std::size_t j) {
        SolverOptions o = params.solver;
        if (!warm.empty()) o.initial_basis = warm;
        try {
            auto br = best_response(p, std::move(o));
            warm = br.basis;
            rep.lp_pivots += br.stats.iterations;
            return br;
        } catch (const Error& e) {
            throw SolverError("equilibrium iteration " + std::to_string(j) + ": " + e.what());
        }
    };
    auto frozen = [&](const MeanFieldFlow& f, std::size_t j) {
        try {
            return freeze(model, grid, f, params.assemble);
        } catch (const CflError& e) {
            throw CflError("equilibrium iteration " + std::to_string(j) + ": " + e.what());
        }
    };

    for (std::size_t j = 1; j <= params.max_iters; ++j) {
        const auto br = solve(frozen(flow, j), j);
        auto candidate = marginal_flow(br.triple, grid);
        const auto cp = frozen(candidate, j);
        auto check = solve(cp, j);

        IterationRecord rec;
        rec.iter = j;
        rec.flow_gap = sup_tv(flow, candidate);
        rec.residual = sup_tv(candidate, marginal_flow(check.triple, grid));
        const auto played = rollout(extract_kernel(br.triple, grid), cp.gen, m0, grid);
        rec.exploitability = exploitability(cp, model, grid, played, check.cost, 1e-7);
        rec.cost = check.cost;
        rep.trace.push_back(rec);

        rep.iterations = j;
        rep.residual = rec.residual;
        rep.exploitability = rec.exploitability;
        rep.cost = check.cost;
        rep.converged = rec.residual <= params.flow_tolerance && rec.exploitability <= params.exploitability_tolerance;
        if (rep.converged || j == params.max_iters) {
            rep.flow = std::move(candidate);
            rep.triple = std::move(check.triple);
            break;
        }
        flow = blend(flow, candidate, params.damping);
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace lpmfe
