#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace lpmfe {

/// Population state marginals at the time nodes: rho[n] is a probability vector
/// over state nodes for n = 0..N.
struct MeanFieldFlow {
    std::vector<std::vector<double>> rho;

    [[nodiscard]] std::size_t num_times() const { return rho.size(); }

    static MeanFieldFlow constant(const std::vector<double>& slice, std::size_t num_times) {
        return {std::vector<std::vector<double>>(num_times, slice)};
    }

    /// Throws InvalidArgument unless every slice is a nonnegative vector summing to 1.
    void check(const DiscreteGrid& g, double tol = 1e-8) const {
        if (rho.size() != g.num_times())
            throw InvalidArgument("flow has " + std::to_string(rho.size()) + " slices, grid needs " +
                                  std::to_string(g.num_times()));
        for (std::size_t n = 0; n < rho.size(); ++n) {
            if (rho[n].size() != g.num_states())
                throw InvalidArgument("flow slice " + std::to_string(n) + " has wrong length");
            double s = 0.0;
            for (double v : rho[n]) {
                if (!(v >= -tol)) throw InvalidArgument("flow slice " + std::to_string(n) + " has a negative entry");
                s += v;
            }
            if (std::abs(s - 1.0) > tol)
                throw InvalidArgument("flow slice " + std::to_string(n) + " sums to " + std::to_string(s));
        }
    }
};

/// Total variation distance, 0.5 * L1.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

/// sup over time nodes of the slice-wise TV distance.
inline double sup_tv(const MeanFieldFlow& a, const MeanFieldFlow& b) {
    double r = 0.0;
    for (std::size_t n = 0; n < a.rho.size(); ++n) r = std::max(r, tv_distance(a.rho[n], b.rho[n]));
    return r;
}

/// (1 - w) a + w b, slice by slice.
inline MeanFieldFlow blend(const MeanFieldFlow& a, const MeanFieldFlow& b, double w) {
    MeanFieldFlow out = a;
    for (std::size_t n = 0; n < out.rho.size(); ++n)
        for (std::size_t i = 0; i < out.rho[n].size(); ++i) out.rho[n][i] = (1.0 - w) * a.rho[n][i] + w * b.rho[n][i];
    return out;
}

/// Integrated statistics z_*[n] = sum_i stat(t_n, x_i) mu_n[i], one vector per time node.
struct FlowStats {
    std::size_t n_stat = 0;
    std::vector<std::vector<double>> drift;
    std::vector<std::vector<double>> diffusion;
    std::vector<std::vector<double>> jump;
    std::vector<std::vector<double>> cost;
    std::vector<double> terminal;
};

inline FlowStats flow_stats(const MfgModel& model, const DiscreteGrid& grid, const MeanFieldFlow& flow) {
    flow.check(grid);
    FlowStats st;
    st.n_stat = model.n_stat;
    const std::size_t T = grid.num_times();
    auto integrate = [&](const StatisticFn& fn, std::size_t n) {
        std::vector<double> z(model.n_stat, 0.0);
        for (std::size_t i = 0; i < grid.num_states(); ++i) {
            const double w = flow.rho[n][i];
            if (w == 0.0) continue;
            auto v = detail::eval_stat(fn, model.n_stat, grid.t_nodes[n], grid.x_nodes[i]);
            for (std::size_t s = 0; s < model.n_stat; ++s) z[s] += w * v[s];
        }
        return z;
    };
    st.drift.resize(T);
    st.diffusion.resize(T);
    st.jump.resize(T);
    st.cost.resize(T);
    for (std::size_t n = 0; n < T; ++n) {
        st.drift[n] = integrate(model.drift_stat, n);
        st.diffusion[n] = integrate(model.diffusion_stat, n);
        st.jump[n] = integrate(model.jump_stat, n);
        st.cost[n] = integrate(model.cost_stat, n);
    }
    st.terminal.assign(model.n_stat, 0.0);
    if (model.terminal_stat && model.n_stat > 0) {
        for (std::size_t i = 0; i < grid.num_states(); ++i) {
            const double w = flow.rho[grid.N][i];
            if (w == 0.0) continue;
            auto v = model.terminal_stat(grid.x_nodes[i]);
            if (v.size() != model.n_stat) throw ModelError("terminal statistic has wrong length");
            for (std::size_t s = 0; s < model.n_stat; ++s) st.terminal[s] += w * v[s];
        }
    }
    return st;
}

} // namespace lpmfe
