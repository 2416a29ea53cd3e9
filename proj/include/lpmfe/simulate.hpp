#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/flow.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/kernel.hpp"
#include "lpmfe/lp.hpp"
#include "lpmfe/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lpmfe {

struct SimulationEstimate {
    std::size_t N = 0, S = 0, A = 0, F = 0;
    std::vector<double> nu;       // terminal histogram on the state nodes
    std::vector<double> nu_se;    // binomial standard error per bin
    std::vector<double> m;        // (n, i, k) occupation time
    std::vector<double> lambda_b; // (n, face) mean reflection push
    double cost = 0.0;
    double cost_se = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::size_t substeps = 0;

    [[nodiscard]] double occ(std::size_t n, std::size_t i, std::size_t k) const { return m[(n * S + i) * A + k]; }
    [[nodiscard]] double boundary(std::size_t n, std::size_t f) const { return lambda_b[n * F + f]; }
    [[nodiscard]] double boundary_total() const {
        double s = 0.0;
        for (double v : lambda_b) s += v;
        return s;
    }
    [[nodiscard]] double occupation_total() const {
        double s = 0.0;
        for (double v : m) s += v;
        return s;
    }
    [[nodiscard]] bool matches(const DiscreteGrid& g) const {
        return N == g.N && S == g.num_states() && A == g.num_actions() && F == g.num_faces();
    }
};

namespace detail {

/// Independent stream for one path: a mt19937_64 seeded from (seed, path) through seed_seq.
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    return std::mt19937_64(seq);
}

} // namespace detail

/// Euler scheme for the reflected jump-diffusion under a frozen flow and a
/// relaxed feedback kernel. Coefficients in cell n use the flow statistics of
/// time node n. Reflection is the projection onto [lo, hi]; the projected
/// distance is the push R.
inline SimulationEstimate simulate(const MfgModel& model, const DiscreteGrid& grid, const ControlKernel& kernel,
                                   const MeanFieldFlow& flow, std::size_t n_paths, std::size_t substeps,
                                   std::uint64_t seed) {
    if (!kernel.matches(grid)) throw InvalidArgument("simulate: kernel does not match the grid");
    if (n_paths == 0) throw InvalidArgument("simulate: n_paths must be positive");
    if (substeps == 0) throw InvalidArgument("simulate: substeps must be >= 1");
    kernel.check(1e-8);
    const auto stats = flow_stats(model, grid, flow);

    const std::size_t N = grid.N, S = grid.num_states(), A = grid.num_actions(), F = grid.num_faces();
    const double h = grid.dt / static_cast<double>(substeps);
    const double sqrt_h = std::sqrt(h);
    const double lo = grid.domain.lo, hi = grid.domain.hi;

    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t s = 0; s < substeps; ++s) {
            const double t = grid.t_nodes[n] + static_cast<double>(s) * h;
            const double p = model.intensity(t) * h;
            if (p > 0.5)
                throw InvalidArgument("simulate: jump probability per substep " + std::to_string(p) +
                                      " exceeds 0.5; increase substeps");
        }

    SimulationEstimate est;
    est.N = N;
    est.S = S;
    est.A = A;
    est.F = F;
    est.nu.assign(S, 0.0);
    est.m.assign(N * S * A, 0.0);
    est.lambda_b.assign(N * F, 0.0);
    est.n_paths = n_paths;
    est.seed = seed;
    est.substeps = substeps;

    std::vector<double> cdf(A);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t path = 0; path < n_paths; ++path) {
        auto rng = detail::path_stream(seed, path);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);

        double x = model.initial.sample(grid.domain, unif(rng));
        double cost = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const auto& zb = stats.drift[n];
            const auto& zs = stats.diffusion[n];
            const auto& zj = stats.jump[n];
            const auto& zc = stats.cost[n];
            for (std::size_t s = 0; s < substeps; ++s) {
                const double t = grid.t_nodes[n] + static_cast<double>(s) * h;
                const std::size_t i = grid.nearest_node(x);
                std::size_t k = 0;
                if (A > 1) {
                    const double u = unif(rng);
                    double c = 0.0;
                    k = A - 1;
                    for (std::size_t q = 0; q < A; ++q) {
                        c += kernel.at(n, i, q);
                        if (u < c) {
                            k = q;
                            break;
                        }
                    }
                }
                const double a = grid.a_nodes[k];
                est.m[(n * S + i) * A + k] += h;
                cost += model.running_cost(t, x, zc, a) * h;

                const double lam = model.intensity(t);
                const double beta = model.jump(t, x, zj, a);
                const double sig = model.diffusion(t, x, zs, a);
                double y = x + (model.drift(t, x, zb, a) - lam * beta) * h;
                if (sig != 0.0) y += sig * sqrt_h * normal(rng);
                if (lam > 0.0 && unif(rng) < lam * h) y += beta;

                if (y < lo) {
                    const double push = lo - y;
                    est.lambda_b[n * F + 0] += push;
                    cost += model.boundary_cost(t, lo) * push;
                    y = lo;
                } else if (y > hi) {
                    const double push = y - hi;
                    est.lambda_b[n * F + 1] += push;
                    cost += model.boundary_cost(t, hi) * push;
                    y = hi;
                }
                x = y;
            }
        }
        est.nu[grid.nearest_node(x)] += 1.0;
        cost += model.terminal_cost(x, stats.terminal);
        sum += cost;
        sum2 += cost * cost;
    }

    const double np = static_cast<double>(n_paths);
    for (auto& v : est.nu) v /= np;
    for (auto& v : est.m) v /= np;
    for (auto& v : est.lambda_b) v /= np;
    est.nu_se.resize(S);
    for (std::size_t i = 0; i < S; ++i) est.nu_se[i] = std::sqrt(est.nu[i] * (1.0 - est.nu[i]) / np);
    est.cost = sum / np;
    const double var = n_paths > 1 ? std::max(0.0, (sum2 - np * est.cost * est.cost) / (np - 1.0)) : 0.0;
    est.cost_se = std::sqrt(var / np);
    return est;
}

/// 1-Wasserstein distance between two histograms on the state nodes.
inline double wasserstein1(const std::vector<double>& p, const std::vector<double>& q, const DiscreteGrid& grid) {
    if (p.size() != grid.num_states() || q.size() != grid.num_states())
        throw InvalidArgument("wasserstein1: histogram length does not match the grid");
    double cp = 0.0, cq = 0.0, w = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        cp += p[i];
        cq += q[i];
        w += std::abs(cp - cq) * (grid.x_nodes[i + 1] - grid.x_nodes[i]);
    }
    return w;
}

struct ComparisonReport {
    double lp_cost = 0.0;
    double sim_cost = 0.0;
    double sim_cost_se = 0.0;
    double cost_gap = 0.0;
    double eps_disc = 0.0;
    double cost_ratio = 0.0; // cost_gap / (3 se + eps_disc)
    double w1 = 0.0;
    std::vector<double> tv; // per time cell, state marginals of m-hat against the LP
    double max_tv = 0.0;
    double lp_boundary = 0.0;
    double sim_boundary = 0.0;

    [[nodiscard]] bool passes(double w1_bound) const { return cost_ratio <= 1.0 && w1 <= w1_bound; }
};

inline ComparisonReport compare_lp_vs_sim(const OccupationTriple& triple, double lp_cost, const SimulationEstimate& est,
                                          const DiscreteGrid& grid, double eps_disc) {
    if (!triple.matches(grid)) throw InvalidArgument("compare: LP triple does not match the grid");
    if (!est.matches(grid)) throw InvalidArgument("compare: simulation estimate does not match the grid");
    if (!(eps_disc >= 0.0)) throw InvalidArgument("compare: eps_disc must be >= 0");
    ComparisonReport r;
    r.lp_cost = lp_cost;
    r.sim_cost = est.cost;
    r.sim_cost_se = est.cost_se;
    r.cost_gap = std::abs(est.cost - lp_cost);
    r.eps_disc = eps_disc;
    const double allowance = 3.0 * est.cost_se + eps_disc;
    r.cost_ratio = allowance > 0.0 ? r.cost_gap / allowance : (r.cost_gap == 0.0 ? 0.0 : INFINITY);
    r.w1 = wasserstein1(est.nu, triple.nu, grid);
    r.tv.resize(grid.N);
    std::vector<double> p(grid.num_states()), q(grid.num_states());
    for (std::size_t n = 0; n < grid.N; ++n) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = 0.0;
            q[i] = 0.0;
            for (std::size_t k = 0; k < grid.num_actions(); ++k) {
                p[i] += est.occ(n, i, k) / grid.dt;
                q[i] += triple.occ(n, i, k) / grid.dt;
            }
        }
        r.tv[n] = tv_distance(p, q);
        r.max_tv = std::max(r.max_tv, r.tv[n]);
    }
    r.lp_boundary = triple.boundary_total();
    r.sim_boundary = est.boundary_total();
    return r;
}

} // namespace lpmfe
