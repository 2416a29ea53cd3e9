#include "lpmfe/simplex.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

using namespace lpmfe;

namespace {

LpStandardForm dense_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    LpStandardForm f;
    f.A = A.sparseView();
    f.A.makeCompressed();
    f.b = b;
    f.c = c;
    return f;
}

/// Minimum of c x over the vertices of {A x = b, x >= 0} by enumerating bases.
double vertex_minimum(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c, bool& found) {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    std::vector<int> pick(static_cast<std::size_t>(m));
    double best = INFINITY;
    found = false;
    std::vector<bool> mask(static_cast<std::size_t>(n), false);
    std::fill(mask.begin(), mask.begin() + m, true);
    do {
        int p = 0;
        for (int j = 0; j < n; ++j)
            if (mask[static_cast<std::size_t>(j)]) pick[static_cast<std::size_t>(p++)] = j;
        Eigen::MatrixXd B(m, m);
        for (int q = 0; q < m; ++q) B.col(q) = A.col(pick[static_cast<std::size_t>(q)]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd xb = lu.solve(b);
        if (xb.minCoeff() < -1e-10) continue;
        double v = 0.0;
        for (int q = 0; q < m; ++q) v += c[pick[static_cast<std::size_t>(q)]] * xb[q];
        best = std::min(best, v);
        found = true;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

} // namespace

TEST(Simplex, SmallKnownOptimum) {
    // min -x1 - 2 x2  s.t. x1 + x2 + s1 = 4, x2 + s2 = 3
    Eigen::MatrixXd A(2, 4);
    A << 1, 1, 1, 0, 0, 1, 0, 1;
    const auto sol = RevisedSimplex{}.solve(dense_form(A, Eigen::Vector2d(4, 3), Eigen::Vector4d(-1, -2, 0, 0)), {});
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.objective, -7.0, 1e-12);
    EXPECT_NEAR(sol.x[0], 1.0, 1e-12);
    EXPECT_NEAR(sol.x[1], 3.0, 1e-12);
    // duals certify optimality: c - A^T y >= 0 and b^T y equals the objective
    const Eigen::VectorXd red = Eigen::Vector4d(-1, -2, 0, 0) - A.transpose() * sol.duals;
    EXPECT_GE(red.minCoeff(), -1e-12);
    EXPECT_NEAR(Eigen::Vector2d(4, 3).dot(sol.duals), -7.0, 1e-12);
}

TEST(Simplex, NegativeRightHandSide) {
    // -x1 - x2 = -2 with x1 cheaper
    Eigen::MatrixXd A(1, 2);
    A << -1, -1;
    const auto sol = RevisedSimplex{}.solve(dense_form(A, Eigen::VectorXd::Constant(1, -2), Eigen::Vector2d(1, 3)), {});
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.objective, 2.0, 1e-12);
    EXPECT_NEAR(sol.duals[0], -1.0, 1e-12);
}

TEST(Simplex, Infeasible) {
    // x1 + x2 = 1 and x1 + x2 = 2
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, 1, 1;
    const auto sol = RevisedSimplex{}.solve(dense_form(A, Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0)), {});
    EXPECT_EQ(sol.status, LpStatus::Infeasible);
    EXPECT_GE(sol.worst_row, 0);
    EXPECT_GT(sol.worst_violation, 0.0);
}

TEST(Simplex, Unbounded) {
    // x1 - x2 = 0, minimize -x1
    Eigen::MatrixXd A(1, 2);
    A << 1, -1;
    const auto sol = RevisedSimplex{}.solve(dense_form(A, Eigen::VectorXd::Zero(1), Eigen::Vector2d(-1, 0)), {});
    EXPECT_EQ(sol.status, LpStatus::Unbounded);
}

TEST(Simplex, RedundantRowsAreHarmless) {
    Eigen::MatrixXd A(3, 3);
    A << 1, 1, 1, 2, 2, 2, 1, 0, 0;
    const auto sol =
        RevisedSimplex{}.solve(dense_form(A, Eigen::Vector3d(1, 2, 0.25), Eigen::Vector3d(3, 1, 2)), {});
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.objective, 0.75 + 0.75, 1e-12);
}

TEST(Simplex, BealeCyclingExampleTerminates) {
    // Beale's example cycles under textbook Dantzig pricing without anti-cycling.
    Eigen::MatrixXd A(3, 7);
    A << 0.25, -8, -1, 9, 1, 0, 0, 0.5, -12, -0.5, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    const Eigen::VectorXd b = Eigen::Vector3d(0, 0, 1);
    Eigen::VectorXd c(7);
    c << -0.75, 20, -0.5, 6, 0, 0, 0;
    for (auto pricing : {Pricing::Dantzig, Pricing::Bland}) {
        SolverOptions o;
        o.pricing = pricing;
        o.degenerate_switch = 2;
        const auto sol = RevisedSimplex{}.solve(dense_form(A, b, c), o);
        ASSERT_EQ(sol.status, LpStatus::Optimal);
        EXPECT_NEAR(sol.objective, -1.25, 1e-12);
    }
}

TEST(Simplex, RandomProblemsMatchVertexEnumeration) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int solved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int m = 3, n = 7;
        Eigen::MatrixXd A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = U(rng);
        // bounded feasible set: b from a positive point, plus a row bounding the sum
        A.row(m - 1).setConstant(1.0);
        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0[j] = 0.5 + 0.5 * U(rng);
        const Eigen::VectorXd b = A * x0;
        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) c[j] = U(rng);
        bool found = false;
        const double want = vertex_minimum(A, b, c, found);
        ASSERT_TRUE(found);
        for (auto pricing : {Pricing::Dantzig, Pricing::Bland}) {
            SolverOptions o;
            o.pricing = pricing;
            const auto sol = RevisedSimplex{}.solve(dense_form(A, b, c), o);
            ASSERT_EQ(sol.status, LpStatus::Optimal) << "trial " << trial;
            EXPECT_NEAR(sol.objective, want, 1e-9) << "trial " << trial;
            EXPECT_LE((A * sol.x - b).lpNorm<Eigen::Infinity>(), 1e-9);
            EXPECT_GE(sol.x.minCoeff(), 0.0);
        }
        ++solved;
    }
    EXPECT_EQ(solved, 60);
}

TEST(Simplex, KeyedFactorizationAgrees) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int m = 5, n = 12;
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = U(rng);
    A.row(m - 1).setConstant(1.0);
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, 0.7);
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) c[j] = U(rng);
    auto plain = dense_form(A, A * x0, c);
    auto keyed = plain;
    for (int i = 0; i < m; ++i) keyed.row_key.push_back(m - i);
    for (int j = 0; j < n; ++j) keyed.col_key.push_back(j % 3);
    const auto a = RevisedSimplex{}.solve(plain, {});
    const auto b = RevisedSimplex{}.solve(keyed, {});
    ASSERT_EQ(a.status, LpStatus::Optimal);
    ASSERT_EQ(b.status, LpStatus::Optimal);
    EXPECT_NEAR(a.objective, b.objective, 1e-10);
    EXPECT_LE((a.duals - b.duals).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Simplex, CrashBasisSkipsPhaseOne) {
    Eigen::MatrixXd A(2, 4);
    A << 1, 1, 1, 0, 0, 1, 0, 1;
    SolverOptions o;
    o.initial_basis = {2, 3}; // slacks: feasible
    const auto sol = RevisedSimplex{}.solve(dense_form(A, Eigen::Vector2d(4, 3), Eigen::Vector4d(-1, -2, 0, 0)), o);
    EXPECT_TRUE(sol.stats.crash_basis_used);
    EXPECT_EQ(sol.stats.phase1_iterations, 0u);
    EXPECT_NEAR(sol.objective, -7.0, 1e-12);
}

TEST(Simplex, InfeasibleCrashFallsBack) {
    Eigen::MatrixXd A(2, 4);
    A << 1, 1, 1, 0, 0, 1, 0, 1;
    SolverOptions o;
    o.initial_basis = {1, 3}; // x2 = 4 forces s2 = -1
    o.fallback_basis = {2, 3};
    const auto sol = RevisedSimplex{}.solve(dense_form(A, Eigen::Vector2d(4, 3), Eigen::Vector4d(-1, -2, 0, 0)), o);
    EXPECT_TRUE(sol.stats.crash_basis_used);
    EXPECT_NEAR(sol.objective, -7.0, 1e-12);
}

TEST(Simplex, Deterministic) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Eigen::MatrixXd A(4, 9);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 9; ++j) A(i, j) = U(rng);
    const Eigen::VectorXd b = A * Eigen::VectorXd::Ones(9);
    Eigen::VectorXd c(9);
    for (int j = 0; j < 9; ++j) c[j] = U(rng) - 0.5;
    const auto f = dense_form(A, b, c);
    const auto s1 = RevisedSimplex{}.solve(f, {});
    const auto s2 = RevisedSimplex{}.solve(f, {});
    EXPECT_EQ(s1.basis, s2.basis);
    EXPECT_EQ(s1.objective, s2.objective);
}

TEST(Simplex, EmptyProblem) {
    LpStandardForm f;
    f.A.resize(0, 3);
    f.b.resize(0);
    f.c = Eigen::Vector3d(1, 2, 3);
    const auto sol = RevisedSimplex{}.solve(f, {});
    EXPECT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_EQ(sol.objective, 0.0);
}
