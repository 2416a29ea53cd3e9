#pragma once

#include "lpmfe/error.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace lpmfe {

/// Axis-aligned state box. Only the 1-D case [lo, hi] is supported.
struct StateDomain {
    double lo = 0.0;
    double hi = 1.0;

    StateDomain() = default;
    StateDomain(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi))
            throw InvalidArgument("StateDomain: need finite lo < hi, got [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
    }

    [[nodiscard]] double length() const { return hi - lo; }
    [[nodiscard]] bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

struct ActionRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Uniform time/state/action discretization of [0,T] x [lo,hi] x A.
///
/// Time cells are [t_n, t_{n+1}) for n < N; state nodes include both faces, so
/// in 1-D the boundary index set is {0, M}. With K = 0 there is a single action
/// node at action range lo.
struct DiscreteGrid {
    StateDomain domain;
    double horizon = 1.0;
    std::size_t N = 1;
    std::size_t M = 1;
    std::size_t K = 0;
    double dt = 1.0;
    double dx = 1.0;
    std::vector<double> t_nodes;
    std::vector<double> x_nodes;
    std::vector<double> a_nodes;
    std::vector<std::size_t> boundary_index;

    [[nodiscard]] std::size_t num_times() const { return N + 1; }
    [[nodiscard]] std::size_t num_cells() const { return N; }
    [[nodiscard]] std::size_t num_states() const { return M + 1; }
    [[nodiscard]] std::size_t num_actions() const { return K + 1; }
    [[nodiscard]] std::size_t num_faces() const { return boundary_index.size(); }

    /// Index of the state node closest to x (ties go to the lower node).
    [[nodiscard]] std::size_t nearest_node(double x) const {
        double s = (x - domain.lo) / dx;
        if (!(s > 0.0)) return 0;
        if (s >= static_cast<double>(M)) return M;
        auto i = static_cast<std::size_t>(std::floor(s));
        return (s - static_cast<double>(i) > 0.5) ? i + 1 : i;
    }

    /// Time cell containing t, clamped into [0, N-1].
    [[nodiscard]] std::size_t cell_of(double t) const {
        double s = t / dt;
        if (!(s > 0.0)) return 0;
        auto n = static_cast<std::size_t>(std::floor(s));
        return n >= N ? N - 1 : n;
    }

    [[nodiscard]] bool same_shape(const DiscreteGrid& o) const {
        return N == o.N && M == o.M && K == o.K && horizon == o.horizon && domain.lo == o.domain.lo &&
               domain.hi == o.domain.hi && a_nodes == o.a_nodes;
    }
};

namespace detail {
inline std::vector<double> uniform_nodes(double lo, double hi, std::size_t cells) {
    std::vector<double> out(cells + 1);
    const double h = (hi - lo) / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) out[i] = lo + static_cast<double>(i) * h;
    out[cells] = hi;
    return out;
}
} // namespace detail

inline DiscreteGrid build_grid(const StateDomain& domain, double horizon, std::size_t N, std::size_t M, std::size_t K,
                               ActionRange actions) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidArgument("grid: horizon T must be positive, got " + std::to_string(horizon));
    if (N < 1) throw InvalidArgument("grid: N (time cells) must be >= 1");
    if (M < 1) throw InvalidArgument("grid: M (state cells) must be >= 1");
    if (!std::isfinite(actions.lo) || !std::isfinite(actions.hi))
        throw InvalidArgument("grid: action range must be finite");
    if (K >= 1 && !(actions.lo < actions.hi))
        throw InvalidArgument("grid: action range has zero length with K = " + std::to_string(K));
    if (!(domain.lo < domain.hi)) throw InvalidArgument("grid: state domain has zero length");

    DiscreteGrid g;
    g.domain = domain;
    g.horizon = horizon;
    g.N = N;
    g.M = M;
    g.K = K;
    g.dt = horizon / static_cast<double>(N);
    g.dx = domain.length() / static_cast<double>(M);
    g.t_nodes = detail::uniform_nodes(0.0, horizon, N);
    g.x_nodes = detail::uniform_nodes(domain.lo, domain.hi, M);
    g.a_nodes = K == 0 ? std::vector<double>{actions.lo} : detail::uniform_nodes(actions.lo, actions.hi, K);
    g.boundary_index = {0, M};
    return g;
}

} // namespace lpmfe
