#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/flow.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

namespace lpmfe {

/// Linear interpolation of each jump destination x_i + beta(t_n, x_i, z_n, a_k)
/// onto its two bracketing nodes, for every time cell n < N.
struct JumpStencil {
    struct Entry {
        std::size_t lo = 0;
        std::size_t hi = 0;
        double w_lo = 1.0;
        double w_hi = 0.0;
    };

    std::size_t N = 0, S = 0, A = 0;
    std::vector<Entry> entries;

    [[nodiscard]] std::size_t index(std::size_t n, std::size_t i, std::size_t k) const { return (n * S + i) * A + k; }
    [[nodiscard]] const Entry& at(std::size_t n, std::size_t i, std::size_t k) const { return entries[index(n, i, k)]; }
};

namespace detail {
inline JumpStencil::Entry interpolate_node(const DiscreteGrid& g, double dest) {
    const double s = (dest - g.domain.lo) / g.dx;
    double fl = std::floor(s);
    if (fl < 0.0) fl = 0.0;
    if (fl > static_cast<double>(g.M)) fl = static_cast<double>(g.M);
    auto j = static_cast<std::size_t>(fl);
    double frac = s - fl;
    if (j >= g.M) {
        j = g.M;
        frac = 0.0;
    }
    constexpr double snap = 1e-12;
    if (frac < snap) return {j, j, 1.0, 0.0};
    if (frac > 1.0 - snap) return {j + 1, j + 1, 1.0, 0.0};
    return {j, j + 1, 1.0 - frac, frac};
}
} // namespace detail

inline JumpStencil jump_stencil(const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats) {
    JumpStencil st;
    st.N = grid.N;
    st.S = grid.num_states();
    st.A = grid.num_actions();
    st.entries.resize(st.N * st.S * st.A);
    const double tol = 1e-12 * grid.domain.length();
    for (std::size_t n = 0; n < grid.N; ++n) {
        const double t = grid.t_nodes[n];
        for (std::size_t i = 0; i < st.S; ++i) {
            const double x = grid.x_nodes[i];
            for (std::size_t k = 0; k < st.A; ++k) {
                const double a = grid.a_nodes[k];
                const double beta = detail::checked(model.jump(t, x, stats.jump[n], a), "jump size", t, x, a);
                double dest = x + beta;
                if (!grid.domain.contains(dest, tol)) {
                    std::ostringstream os;
                    os << "jump destination " << dest << " leaves [" << grid.domain.lo << ", " << grid.domain.hi
                       << "] at " << detail::sample_name(t, x, a);
                    throw ModelError(os.str());
                }
                dest = std::clamp(dest, grid.domain.lo, grid.domain.hi);
                st.entries[st.index(n, i, k)] = detail::interpolate_node(grid, dest);
            }
        }
    }
    return st;
}

struct CflReport {
    double number = 0.0;
    std::size_t n = 0, i = 0, k = 0; // location of the maximum
    [[nodiscard]] bool stable() const { return number <= 1.0; }
};

/// max over (n, i, k) of dt * (|b - lambda beta| / dx + sigma^2 / dx^2 + lambda).
///
/// This bounds the outflow rate of the explicit chain I + dt G, so a number <= 1
/// keeps every transition weight nonnegative.
inline CflReport cfl_report(const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats) {
    CflReport rep;
    rep.number = -1.0;
    for (std::size_t n = 0; n < grid.N; ++n) {
        const double t = grid.t_nodes[n];
        const double lam = model.intensity(t);
        for (std::size_t i = 0; i < grid.num_states(); ++i) {
            const double x = grid.x_nodes[i];
            for (std::size_t k = 0; k < grid.num_actions(); ++k) {
                const double a = grid.a_nodes[k];
                const double b = model.drift(t, x, stats.drift[n], a);
                const double s = model.diffusion(t, x, stats.diffusion[n], a);
                const double beta = model.jump(t, x, stats.jump[n], a);
                const double c =
                    grid.dt * (std::abs(b - lam * beta) / grid.dx + s * s / (grid.dx * grid.dx) + std::abs(lam));
                if (c > rep.number) rep = {c, n, i, k};
            }
        }
    }
    return rep;
}

} // namespace lpmfe
