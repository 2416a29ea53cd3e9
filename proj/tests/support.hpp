#pragma once

#include "lpmfe/lpmfe.hpp"

#include <cmath>
#include <vector>

namespace lpmfe::oracle {

/// Reflected Brownian motion on [0, 1] from 0.3: f = x, h = 1, g = x^2.
inline MfgModel single_action_diffusion(double T = 1.0) {
    DiffusionParams p;
    p.sigma = 0.1;
    p.running_state = 1.0;
    p.boundary_cost = 1.0;
    p.terminal_quadratic = 1.0;
    return diffusion_model(p, {0.0, 1.0}, T, InitialLaw::point_mass(0.3));
}

inline MfgModel zero_dynamics(InitialLaw m0 = InitialLaw::point_mass(0.5)) {
    DiffusionParams p;
    p.terminal_linear = 1.0;
    return diffusion_model(p, {0.0, 1.0}, 1.0, std::move(m0));
}

inline MfgModel inventory(double competition = 0.3) {
    InventoryParams p;
    p.competition = competition;
    return inventory_model(p, 0.5, InitialLaw::uniform());
}

inline MeanFieldFlow frozen_initial(const MfgModel& m, const DiscreteGrid& g) {
    return MeanFieldFlow::constant(m.initial.on_grid(g), g.num_times());
}

inline double mean(const std::vector<double>& p, const DiscreteGrid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * g.x_nodes[i];
    return s;
}

/// Dense copy of a sparse row-major matrix.
inline std::vector<std::vector<double>> dense(const SparseRowMatrix& A) {
    std::vector<std::vector<double>> d(static_cast<std::size_t>(A.rows()),
                                       std::vector<double>(static_cast<std::size_t>(A.cols()), 0.0));
    for (Eigen::Index r = 0; r < A.outerSize(); ++r)
        for (SparseRowMatrix::InnerIterator it(A, r); it; ++it)
            d[static_cast<std::size_t>(r)][static_cast<std::size_t>(it.col())] = it.value();
    return d;
}

/// Backward induction over the explicit chain I + dt G(n, k): per-step cost
/// f dt plus h times the local time accrued at a face, terminal cost g.
/// Returns the optimal expected cost from the initial law.
inline double dynamic_programming_value(const MfgModel& model, const DiscreteGrid& grid, const FrozenProblem& p) {
    const std::size_t S = grid.num_states(), A = grid.num_actions();
    std::vector<double> V(S);
    for (std::size_t i = 0; i < S; ++i) V[i] = model.terminal_cost(grid.x_nodes[i], p.stats.terminal);
    for (std::size_t n = grid.N; n-- > 0;) {
        const double t = grid.t_nodes[n];
        std::vector<double> W(S, INFINITY);
        for (std::size_t k = 0; k < A; ++k) {
            const auto G = dense(p.gen.at(n, k));
            const double a = grid.a_nodes[k];
            for (std::size_t i = 0; i < S; ++i) {
                double q = model.running_cost(t, grid.x_nodes[i], p.stats.cost[n], a) * grid.dt;
                for (std::size_t f = 0; f < grid.num_faces(); ++f)
                    if (grid.boundary_index[f] == i)
                        q += model.boundary_cost(t, grid.x_nodes[i]) * p.gen.local_time(n, k, f) * grid.dt;
                double ev = V[i];
                for (std::size_t j = 0; j < S; ++j) ev += grid.dt * G[i][j] * V[j];
                W[i] = std::min(W[i], q + ev);
            }
        }
        V = W;
    }
    const auto m0 = model.initial.on_grid(grid);
    double v = 0.0;
    for (std::size_t i = 0; i < S; ++i) v += m0[i] * V[i];
    return v;
}

} // namespace lpmfe::oracle
