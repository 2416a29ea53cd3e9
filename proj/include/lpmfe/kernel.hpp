#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/generator.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/lp.hpp"
#include "lpmfe/model.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace lpmfe {

/// Relaxed feedback control: v[n, i, .] is a probability vector over action nodes
/// for time cell n and state node i.
struct ControlKernel {
    std::size_t N = 0, S = 0, A = 0;
    std::vector<double> v;

    [[nodiscard]] double at(std::size_t n, std::size_t i, std::size_t k) const { return v[(n * S + i) * A + k]; }
    [[nodiscard]] double& at(std::size_t n, std::size_t i, std::size_t k) { return v[(n * S + i) * A + k]; }

    static ControlKernel constant(const DiscreteGrid& g, std::size_t k) {
        ControlKernel c{g.N, g.num_states(), g.num_actions(), {}};
        c.v.assign(c.N * c.S * c.A, 0.0);
        for (std::size_t n = 0; n < c.N; ++n)
            for (std::size_t i = 0; i < c.S; ++i) c.at(n, i, k) = 1.0;
        return c;
    }

    [[nodiscard]] bool matches(const DiscreteGrid& g) const {
        return N == g.N && S == g.num_states() && A == g.num_actions() && v.size() == N * S * A;
    }

    void check(double tol = 1e-10) const {
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t i = 0; i < S; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < A; ++k) {
                    if (at(n, i, k) < 0.0)
                        throw InvalidArgument("kernel entry (" + std::to_string(n) + ", " + std::to_string(i) +
                                              ") is negative");
                    s += at(n, i, k);
                }
                if (std::abs(s - 1.0) > tol)
                    throw InvalidArgument("kernel row (" + std::to_string(n) + ", " + std::to_string(i) +
                                          ") sums to " + std::to_string(s));
            }
    }
};

/// Disintegrates m into a kernel over actions. States without occupation get the
/// point mass at the default action.
inline ControlKernel extract_kernel(const OccupationTriple& t, const DiscreteGrid& grid) {
    if (!t.matches(grid)) throw InvalidArgument("extract_kernel: triple does not match the grid");
    ControlKernel c{t.N, t.S, t.A, std::vector<double>(t.m.size(), 0.0)};
    for (std::size_t n = 0; n < t.N; ++n)
        for (std::size_t i = 0; i < t.S; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < t.A; ++k) s += std::max(0.0, t.occ(n, i, k));
            if (s > 0.0) {
                for (std::size_t k = 0; k < t.A; ++k) c.at(n, i, k) = std::max(0.0, t.occ(n, i, k)) / s;
            } else {
                c.at(n, i, MfgModel::default_action()) = 1.0;
            }
        }
    return c;
}

/// Occupation triple of the chain that starts at m0 and plays `kernel` under the
/// generators `gen`. Feasible for the LP built from the same generators.
inline OccupationTriple rollout(const ControlKernel& kernel, const GeneratorTensors& gen,
                                const std::vector<double>& m0, const DiscreteGrid& grid) {
    if (!kernel.matches(grid)) throw InvalidArgument("rollout: kernel does not match the grid");
    if (m0.size() != grid.num_states()) throw InvalidArgument("rollout: initial law has wrong length");
    OccupationTriple t = OccupationTriple::zeros(grid);
    const std::size_t S = t.S;
    std::vector<double> rho = m0, next(S);
    for (std::size_t n = 0; n < t.N; ++n) {
        next = rho;
        for (std::size_t k = 0; k < t.A; ++k) {
            const auto& G = gen.at(n, k);
            for (std::size_t i = 0; i < S; ++i) {
                const double mass = grid.dt * rho[i] * kernel.at(n, i, k);
                t.occ(n, i, k) = mass;
                if (mass == 0.0) continue;
                for (SparseRowMatrix::InnerIterator it(G, static_cast<Eigen::Index>(i)); it; ++it)
                    next[static_cast<std::size_t>(it.col())] += mass * it.value();
            }
            for (std::size_t f = 0; f < t.F; ++f) t.boundary(n, f) += gen.local_time(n, k, f) * t.occ(n, gen.faces[f], k);
        }
        rho.swap(next);
    }
    t.nu = rho;
    return t;
}

} // namespace lpmfe
