#pragma once

#include "lpmfe/error.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace lpmfe {

using SparseColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// min c^T x  subject to  A x = b,  x >= 0.
struct LpStandardForm {
    SparseColMatrix A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    /// Optional elimination-order keys (one per row / column). When present the
    /// basis is factored with rows and columns sorted by key and no fill-reducing
    /// reordering; a problem whose bases are near-triangular in that order (a
    /// time-stepped chain) then factors with little fill.
    std::vector<long long> row_key;
    std::vector<long long> col_key;
};

enum class Pricing {
    Dantzig, // most negative reduced cost; Bland's rule takes over during degenerate stalls
    Bland,   // lowest-index entering and leaving variable throughout
};

struct SolverOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    std::size_t max_iterations = 5'000'000;
    std::size_t refactor_interval = 100;
    std::size_t degenerate_switch = 30;
    /// Relative magnitude a diagonal entry needs to be kept as pivot under keyed ordering.
    double diagonal_pivot_threshold = 0.01;
    Pricing pricing = Pricing::Dantzig;
    /// Optional starting basis (one column per row). Used when it is
    /// nonsingular and primal feasible; otherwise `fallback_basis` is tried, and
    /// failing both Phase 1 starts from artificials.
    std::vector<int> initial_basis;
    std::vector<int> fallback_basis;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

struct SolverStats {
    std::size_t iterations = 0;
    std::size_t phase1_iterations = 0;
    std::size_t degenerate_pivots = 0;
    std::size_t bland_pivots = 0;
    std::size_t refactorizations = 0;
    bool crash_basis_used = false;
    double seconds = 0.0;
};

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    Eigen::VectorXd x;
    Eigen::VectorXd duals;
    double objective = 0.0;
    std::vector<int> basis;
    SolverStats stats;
    int worst_row = -1; // infeasible: row carrying the largest artificial
    double worst_violation = 0.0;
};

class LpSolver {
public:
    virtual ~LpSolver() = default;
    [[nodiscard]] virtual LpSolution solve(const LpStandardForm& lp, const SolverOptions& opts) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

/// Sparse revised simplex (two-phase, product-form updates over an LU of the basis).
///
/// Deterministic for fixed inputs: ties are broken by index, and no randomized
/// perturbation is used. Artificial columns sit after the structural ones.
class RevisedSimplex final : public LpSolver {
public:
    [[nodiscard]] std::string name() const override { return "revised-simplex"; }

    [[nodiscard]] LpSolution solve(const LpStandardForm& lp, const SolverOptions& opts) const override {
        Engine e(lp, opts);
        return e.run();
    }

private:
    struct Eta {
        int r;
        double pivot;
        std::vector<int> idx;
        std::vector<double> val;
    };

    class Engine {
    public:
        Engine(const LpStandardForm& lp, const SolverOptions& opts) : opts_(opts), m_(static_cast<int>(lp.A.rows())), n_(static_cast<int>(lp.A.cols())) {
            if (lp.b.size() != m_ || lp.c.size() != n_) throw SolverError("simplex: dimension mismatch");
            A_ = lp.A;
            A_.makeCompressed();
            b_ = lp.b;
            c_ = lp.c;
            sign_.assign(static_cast<std::size_t>(m_), 1.0);
            for (int i = 0; i < m_; ++i)
                if (b_[i] < 0.0) sign_[static_cast<std::size_t>(i)] = -1.0;
            for (int j = 0; j < n_; ++j)
                for (SparseColMatrix::InnerIterator it(A_, j); it; ++it) it.valueRef() *= sign_[static_cast<std::size_t>(it.row())];
            for (int i = 0; i < m_; ++i) b_[i] *= sign_[static_cast<std::size_t>(i)];
            pos_.assign(static_cast<std::size_t>(n_ + m_), -1);
            keyed_ = static_cast<int>(lp.row_key.size()) == m_ && static_cast<int>(lp.col_key.size()) == n_;
            if (keyed_) {
                row_key_ = lp.row_key;
                col_key_ = lp.col_key;
                std::vector<int> order(static_cast<std::size_t>(m_));
                for (int i = 0; i < m_; ++i) order[static_cast<std::size_t>(i)] = i;
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                    return row_key_[static_cast<std::size_t>(a)] < row_key_[static_cast<std::size_t>(b)];
                });
                row_rank_.assign(static_cast<std::size_t>(m_), 0);
                for (int r = 0; r < m_; ++r) row_rank_[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
                keyed_lu_.setPivotThreshold(opts_.diagonal_pivot_threshold);
            }
        }

        LpSolution run() {
            const auto t0 = std::chrono::steady_clock::now();
            LpSolution sol;
            if (m_ == 0) {
                sol.x = Eigen::VectorXd::Zero(n_);
                sol.duals.resize(0);
                finish(sol, t0);
                return sol;
            }

            bool phase2_ready = false;
            for (const auto* start : {&opts_.initial_basis, &opts_.fallback_basis}) {
                if (static_cast<int>(start->size()) == m_ && try_crash(*start)) {
                    phase2_ready = true;
                    stats_.crash_basis_used = true;
                    break;
                }
            }
            if (!phase2_ready) {
                head_.resize(static_cast<std::size_t>(m_));
                std::fill(pos_.begin(), pos_.end(), -1);
                for (int i = 0; i < m_; ++i) {
                    head_[static_cast<std::size_t>(i)] = n_ + i;
                    pos_[static_cast<std::size_t>(n_ + i)] = i;
                }
                refactor();
                // Phase 1: minimize the sum of artificials.
                const auto st = iterate(true);
                stats_.phase1_iterations = stats_.iterations;
                if (st == LpStatus::IterationLimit) {
                    sol.status = st;
                    return fill(sol, t0);
                }
                double infeas = 0.0;
                int worst = -1;
                double worst_val = 0.0;
                for (int i = 0; i < m_; ++i) {
                    const int j = head_[static_cast<std::size_t>(i)];
                    if (j >= n_ && xB_[i] > 0.0) {
                        infeas += xB_[i];
                        if (xB_[i] > worst_val) {
                            worst_val = xB_[i];
                            worst = j - n_;
                        }
                    }
                }
                if (infeas > opts_.feasibility_tol * std::max(1.0, b_.lpNorm<Eigen::Infinity>())) {
                    sol.status = LpStatus::Infeasible;
                    sol.worst_row = worst;
                    sol.worst_violation = worst_val;
                    return fill(sol, t0);
                }
            }
            const auto st = iterate(false);
            sol.status = st;
            return fill(sol, t0);
        }

    private:
        const SolverOptions& opts_;
        int m_, n_;
        SparseColMatrix A_;
        Eigen::VectorXd b_, c_;
        std::vector<double> sign_;
        std::vector<long long> row_key_, col_key_;
        std::vector<int> head_;
        std::vector<int> pos_;
        Eigen::VectorXd xB_;
        Eigen::SparseLU<SparseColMatrix, Eigen::COLAMDOrdering<int>> lu_;
        Eigen::SparseLU<SparseColMatrix, Eigen::NaturalOrdering<int>> keyed_lu_;
        bool keyed_ = false;
        std::vector<int> row_rank_;  // keyed: row -> position in the factored matrix
        std::vector<int> col_slot_;  // keyed: basis position -> column in the factored matrix
        std::vector<Eta> etas_;
        SolverStats stats_;
        bool factored_ = false;

        [[nodiscard]] bool artificial(int j) const { return j >= n_; }

        [[nodiscard]] long long key_of(int j) const {
            // artificials sit at the rank of their own row
            if (artificial(j)) return row_key_[static_cast<std::size_t>(j - n_)];
            return col_key_[static_cast<std::size_t>(j)];
        }

        void refactor() {
            std::vector<Eigen::Triplet<double, int>> trip;
            trip.reserve(static_cast<std::size_t>(m_) * 4);
            std::vector<int> slot(static_cast<std::size_t>(m_));
            for (int p = 0; p < m_; ++p) slot[static_cast<std::size_t>(p)] = p;
            if (keyed_) {
                std::vector<int> order = slot;
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                    const int ja = head_[static_cast<std::size_t>(a)], jb = head_[static_cast<std::size_t>(b)];
                    const long long ka = key_of(ja), kb = key_of(jb);
                    return ka != kb ? ka < kb : ja < jb;
                });
                for (int s = 0; s < m_; ++s) slot[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])] = s;
                col_slot_ = slot;
            }
            auto row_of = [&](int r) { return keyed_ ? row_rank_[static_cast<std::size_t>(r)] : r; };
            for (int p = 0; p < m_; ++p) {
                const int j = head_[static_cast<std::size_t>(p)];
                const int cpos = slot[static_cast<std::size_t>(p)];
                if (artificial(j)) {
                    trip.emplace_back(row_of(j - n_), cpos, 1.0);
                } else {
                    for (SparseColMatrix::InnerIterator it(A_, j); it; ++it)
                        trip.emplace_back(row_of(static_cast<int>(it.row())), cpos, it.value());
                }
            }
            SparseColMatrix B(m_, m_);
            B.setFromTriplets(trip.begin(), trip.end());
            B.makeCompressed();
            bool ok;
            if (keyed_) {
                keyed_lu_.analyzePattern(B);
                keyed_lu_.factorize(B);
                ok = keyed_lu_.info() == Eigen::Success;
            } else {
                lu_.analyzePattern(B);
                lu_.factorize(B);
                ok = lu_.info() == Eigen::Success;
            }
            if (!ok) throw SolverError("simplex: basis factorization failed (singular basis)");
            factored_ = true;
            etas_.clear();
            ++stats_.refactorizations;
            xB_ = ftran_dense(b_);
        }

        /// Solve B0 w = rhs with the current factorization.
        Eigen::VectorXd lu_solve(const Eigen::VectorXd& rhs) const {
            if (!keyed_) return lu_.solve(rhs);
            Eigen::VectorXd pr(m_);
            for (int r = 0; r < m_; ++r) pr[row_rank_[static_cast<std::size_t>(r)]] = rhs[r];
            const Eigen::VectorXd z = keyed_lu_.solve(pr);
            Eigen::VectorXd w(m_);
            for (int p = 0; p < m_; ++p) w[p] = z[col_slot_[static_cast<std::size_t>(p)]];
            return w;
        }

        /// Solve B0^T y = rhs.
        Eigen::VectorXd lu_solve_transposed(const Eigen::VectorXd& rhs) {
            if (!keyed_) return lu_.transpose().solve(rhs);
            Eigen::VectorXd pc(m_);
            for (int p = 0; p < m_; ++p) pc[col_slot_[static_cast<std::size_t>(p)]] = rhs[p];
            const Eigen::VectorXd v = keyed_lu_.transpose().solve(pc);
            Eigen::VectorXd y(m_);
            for (int r = 0; r < m_; ++r) y[r] = v[row_rank_[static_cast<std::size_t>(r)]];
            return y;
        }

        Eigen::VectorXd ftran_dense(const Eigen::VectorXd& rhs) {
            Eigen::VectorXd w = lu_solve(rhs);
            for (const auto& e : etas_) {
                const double wr = w[e.r] / e.pivot;
                if (wr != 0.0)
                    for (std::size_t t = 0; t < e.idx.size(); ++t) w[e.idx[t]] -= e.val[t] * wr;
                w[e.r] = wr;
            }
            return w;
        }

        Eigen::VectorXd btran_dense(Eigen::VectorXd v) {
            for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
                double s = v[it->r];
                for (std::size_t t = 0; t < it->idx.size(); ++t) s -= it->val[t] * v[it->idx[t]];
                v[it->r] = s / it->pivot;
            }
            return lu_solve_transposed(v);
        }

        Eigen::VectorXd column(int j) const {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
            if (artificial(j)) {
                a[j - n_] = 1.0;
            } else {
                for (SparseColMatrix::InnerIterator it(A_, j); it; ++it) a[it.row()] = it.value();
            }
            return a;
        }

        bool try_crash(const std::vector<int>& basis) {
            std::fill(pos_.begin(), pos_.end(), -1);
            head_ = basis;
            for (int p = 0; p < m_; ++p) {
                const int j = head_[static_cast<std::size_t>(p)];
                if (j < 0 || j >= n_ || pos_[static_cast<std::size_t>(j)] >= 0) return false;
                pos_[static_cast<std::size_t>(j)] = p;
            }
            try {
                refactor();
            } catch (const SolverError&) {
                return false;
            }
            if (!xB_.allFinite()) return false;
            for (int i = 0; i < m_; ++i) {
                if (xB_[i] < -opts_.feasibility_tol) return false;
            }
            for (int i = 0; i < m_; ++i) xB_[i] = std::max(0.0, xB_[i]);
            return true;
        }

        double cost(int j, bool phase1) const {
            if (phase1) return artificial(j) ? 1.0 : 0.0;
            return artificial(j) ? 0.0 : c_[j];
        }

        LpStatus iterate(bool phase1) {
            std::size_t degenerate_run = 0;
            bool bland = opts_.pricing == Pricing::Bland;
            Eigen::VectorXd cB(m_);
            while (true) {
                if (stats_.iterations >= opts_.max_iterations) return LpStatus::IterationLimit;
                for (int p = 0; p < m_; ++p) cB[p] = cost(head_[static_cast<std::size_t>(p)], phase1);
                const Eigen::VectorXd y = btran_dense(cB);

                // pricing over structural nonbasic columns
                int q = -1;
                double best = -opts_.optimality_tol;
                for (int j = 0; j < n_; ++j) {
                    if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
                    double d = phase1 ? 0.0 : c_[j];
                    for (SparseColMatrix::InnerIterator it(A_, j); it; ++it) d -= y[it.row()] * it.value();
                    if (bland) {
                        if (d < -opts_.optimality_tol) {
                            q = j;
                            break;
                        }
                    } else if (d < best) {
                        best = d;
                        q = j;
                    }
                }
                if (q < 0) return LpStatus::Optimal;

                const Eigen::VectorXd alpha = ftran_dense(column(q));
                int r = -1;
                double theta = std::numeric_limits<double>::infinity();
                double r_alpha = 0.0;
                for (int i = 0; i < m_; ++i) {
                    const double ai = alpha[i];
                    const int hi = head_[static_cast<std::size_t>(i)];
                    double ratio;
                    if (ai > opts_.pivot_tol) {
                        ratio = std::max(0.0, xB_[i]) / ai;
                    } else if (!phase1 && artificial(hi) && ai < -opts_.pivot_tol) {
                        ratio = 0.0; // a zero artificial must not become positive
                    } else {
                        continue;
                    }
                    bool take = false;
                    if (r < 0 || ratio < theta - 1e-12 * std::max(1.0, theta)) {
                        take = true;
                    } else if (ratio <= theta + 1e-12 * std::max(1.0, theta)) {
                        if (bland)
                            take = hi < head_[static_cast<std::size_t>(r)];
                        else
                            take = std::abs(ai) > std::abs(r_alpha);
                    }
                    if (take) {
                        theta = ratio;
                        r = i;
                        r_alpha = ai;
                    }
                }
                if (r < 0) return LpStatus::Unbounded;

                ++stats_.iterations;
                if (bland) ++stats_.bland_pivots;
                if (theta <= 1e-12) {
                    ++stats_.degenerate_pivots;
                    if (++degenerate_run >= opts_.degenerate_switch) bland = true;
                } else {
                    degenerate_run = 0;
                    if (opts_.pricing == Pricing::Dantzig) bland = false;
                }

                if (theta != 0.0) xB_ -= theta * alpha;
                xB_[r] = theta;
                for (int i = 0; i < m_; ++i)
                    if (xB_[i] < 0.0 && xB_[i] > -opts_.feasibility_tol) xB_[i] = 0.0;

                const int leaving = head_[static_cast<std::size_t>(r)];
                pos_[static_cast<std::size_t>(leaving)] = -1;
                head_[static_cast<std::size_t>(r)] = q;
                pos_[static_cast<std::size_t>(q)] = r;

                Eta e;
                e.r = r;
                e.pivot = alpha[r];
                for (int i = 0; i < m_; ++i)
                    if (i != r && alpha[i] != 0.0) {
                        e.idx.push_back(i);
                        e.val.push_back(alpha[i]);
                    }
                etas_.push_back(std::move(e));
                if (etas_.size() >= opts_.refactor_interval) refactor();
            }
        }

        LpSolution& fill(LpSolution& sol, std::chrono::steady_clock::time_point t0) {
            sol.x = Eigen::VectorXd::Zero(n_);
            for (int p = 0; p < m_; ++p) {
                const int j = head_[static_cast<std::size_t>(p)];
                if (!artificial(j)) sol.x[j] = std::max(0.0, xB_[p]);
            }
            Eigen::VectorXd cB(m_);
            for (int p = 0; p < m_; ++p) cB[p] = cost(head_[static_cast<std::size_t>(p)], false);
            if (m_ > 0 && factored_) {
                sol.duals = btran_dense(cB);
                for (int i = 0; i < m_; ++i) sol.duals[i] *= sign_[static_cast<std::size_t>(i)];
            }
            sol.basis = head_;
            finish(sol, t0);
            return sol;
        }

        void finish(LpSolution& sol, std::chrono::steady_clock::time_point t0) {
            sol.objective = c_.dot(sol.x);
            sol.stats = stats_;
            sol.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
};

} // namespace lpmfe
