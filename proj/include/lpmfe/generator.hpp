#pragma once

#include "lpmfe/flow.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/model.hpp"
#include "lpmfe/stencil.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

namespace lpmfe {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Discrete generators for one frozen flow.
///
/// G(n, k) is the generator of the reflected controlled chain on the state
/// nodes for time cell n and action k: upwind drift on the compensated drift
/// b - lambda beta, centered diffusion, and the interpolated jump. At a face the
/// outward part of the motion is held at the node; the displacement it would
/// have produced is the local time, whose rate per unit occupation is
/// local_time(n, k, face). Every row sums to zero and off-diagonals are >= 0.
///
/// B holds the boundary operator m(x) du/dx at the face rows (one-sided first
/// difference, inward normal +1 at lo and -1 at hi).
struct GeneratorTensors {
    std::size_t N = 0, S = 0, A = 0, F = 0;
    std::vector<SparseRowMatrix> G;
    std::vector<double> local_rate;
    std::vector<signed char> upwind; // +1 forward difference, -1 backward, per (n, k, i)
    SparseRowMatrix B;
    std::vector<std::size_t> faces;

    [[nodiscard]] const SparseRowMatrix& at(std::size_t n, std::size_t k) const { return G[n * A + k]; }
    [[nodiscard]] double local_time(std::size_t n, std::size_t k, std::size_t face) const {
        return local_rate[(n * A + k) * F + face];
    }
    [[nodiscard]] signed char direction(std::size_t n, std::size_t k, std::size_t i) const {
        return upwind[(n * A + k) * S + i];
    }
};

inline SparseRowMatrix boundary_operator(const DiscreteGrid& grid) {
    const auto S = static_cast<Eigen::Index>(grid.num_states());
    const auto M = static_cast<Eigen::Index>(grid.M);
    const double inv = 1.0 / grid.dx;
    std::vector<Eigen::Triplet<double, Eigen::Index>> trip{{0, 0, -inv}, {0, 1, inv}, {M, M, -inv}, {M, M - 1, inv}};
    SparseRowMatrix B(S, S);
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

/// Values of B u at the boundary nodes, in face order (lo, hi).
inline std::vector<double> apply_boundary(const SparseRowMatrix& B, std::span<const double> u,
                                          const std::vector<std::size_t>& faces) {
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::VectorXd bu = B * uv;
    std::vector<double> out;
    out.reserve(faces.size());
    for (auto f : faces) out.push_back(bu[static_cast<Eigen::Index>(f)]);
    return out;
}

inline GeneratorTensors assemble_generator(const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats,
                                           const JumpStencil& stencil) {
    GeneratorTensors T;
    T.N = grid.N;
    T.S = grid.num_states();
    T.A = grid.num_actions();
    T.faces = grid.boundary_index;
    T.F = T.faces.size();
    T.G.resize(T.N * T.A);
    T.local_rate.assign(T.N * T.A * T.F, 0.0);
    T.upwind.assign(T.N * T.A * T.S, 1);
    T.B = boundary_operator(grid);

    const std::size_t M = grid.M;
    const double dx = grid.dx, inv_dx = 1.0 / dx, inv_dx2 = 1.0 / (dx * dx);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t n = 0; n < T.N; ++n) {
        const double t = grid.t_nodes[n];
        const double lam = detail::checked(model.intensity(t), "intensity", t, 0.0, 0.0);
        for (std::size_t k = 0; k < T.A; ++k) {
            const double a = grid.a_nodes[k];
            trip.clear();
            double* rate = &T.local_rate[(n * T.A + k) * T.F];
            auto add = [&](std::size_t r, std::size_t c, double v) {
                trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
            };
            for (std::size_t i = 0; i <= M; ++i) {
                const double x = grid.x_nodes[i];
                const double b = detail::checked(model.drift(t, x, stats.drift[n], a), "drift", t, x, a);
                const double s = detail::checked(model.diffusion(t, x, stats.diffusion[n], a), "diffusion", t, x, a);
                const double beta = detail::checked(model.jump(t, x, stats.jump[n], a), "jump size", t, x, a);
                const double beff = b - lam * beta;

                // drift, upwinded on the compensated velocity
                const bool forward = beff >= 0.0;
                T.upwind[(n * T.A + k) * T.S + i] = forward ? 1 : -1;
                if (forward) {
                    if (i < M) {
                        add(i, i + 1, beff * inv_dx);
                        add(i, i, -beff * inv_dx);
                    } else {
                        rate[1] += beff;
                    }
                } else {
                    if (i > 0) {
                        add(i, i - 1, -beff * inv_dx);
                        add(i, i, beff * inv_dx);
                    } else {
                        rate[0] += -beff;
                    }
                }

                // diffusion; faces mirror the ghost node back inside
                const double d = s * s;
                if (d > 0.0) {
                    if (i == 0) {
                        add(0, 1, d * inv_dx2);
                        add(0, 0, -d * inv_dx2);
                        rate[0] += d * inv_dx;
                    } else if (i == M) {
                        add(M, M - 1, d * inv_dx2);
                        add(M, M, -d * inv_dx2);
                        rate[1] += d * inv_dx;
                    } else {
                        add(i, i - 1, 0.5 * d * inv_dx2);
                        add(i, i + 1, 0.5 * d * inv_dx2);
                        add(i, i, -d * inv_dx2);
                    }
                }

                // jump: lambda (W - I); the compensator already sits in beff
                if (lam != 0.0) {
                    const auto& e = stencil.at(n, i, k);
                    add(i, e.lo, lam * e.w_lo);
                    if (e.w_hi != 0.0) add(i, e.hi, lam * e.w_hi);
                    add(i, i, -lam);
                }
            }
            SparseRowMatrix G(static_cast<Eigen::Index>(T.S), static_cast<Eigen::Index>(T.S));
            G.setFromTriplets(trip.begin(), trip.end());
            G.prune(0.0);
            T.G[n * T.A + k] = std::move(G);
        }
    }
    return T;
}

/// The compensated jump bracket lambda (u(x + beta) - u(x) - beta du/dx) as a
/// matrix, with du/dx taken on the same upwind stencil as the drift of G(n, k).
/// Faces whose upwind neighbour is missing use the inward one-sided difference.
inline SparseRowMatrix jump_bracket(const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats,
                                    const JumpStencil& stencil, const GeneratorTensors& T, std::size_t n,
                                    std::size_t k) {
    const std::size_t M = grid.M;
    const double t = grid.t_nodes[n], a = grid.a_nodes[k];
    const double lam = model.intensity(t);
    const double inv_dx = 1.0 / grid.dx;
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i <= M; ++i) {
        const double x = grid.x_nodes[i];
        const double beta = model.jump(t, x, stats.jump[n], a);
        const auto& e = stencil.at(n, i, k);
        auto add = [&](std::size_t c, double v) {
            trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c), v);
        };
        add(e.lo, lam * e.w_lo);
        if (e.w_hi != 0.0) add(e.hi, lam * e.w_hi);
        add(i, -lam);
        bool forward = T.direction(n, k, i) > 0;
        if (forward && i == M) forward = false;
        if (!forward && i == 0) forward = true;
        const double c = lam * beta * inv_dx;
        if (forward) {
            add(i + 1, -c);
            add(i, c);
        } else {
            add(i, -c);
            add(i - 1, c);
        }
    }
    SparseRowMatrix J(static_cast<Eigen::Index>(grid.num_states()), static_cast<Eigen::Index>(grid.num_states()));
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

/// Coordinate-list dump ("row col value" per line) for external inspection.
inline void write_coo(std::ostream& os, const SparseRowMatrix& A) {
    os.precision(17);
    os << "% " << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
    for (Eigen::Index r = 0; r < A.outerSize(); ++r)
        for (SparseRowMatrix::InnerIterator it(A, r); it; ++it) os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

} // namespace lpmfe
