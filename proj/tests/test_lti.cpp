#include <cstdlib>

#include <gtest/gtest.h>

#include "hnamor/hnamor.hpp"
#include "support/oracles.hpp"

using namespace hnamor;

namespace
{

StateSpaceSystem scalar(double a, double b, double c, double d)
{
    return StateSpaceSystem(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                            Matrix::Constant(1, 1, c), Matrix::Constant(1, 1, d));
}

double rel_diff(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / std::max(1e-300, b.norm());
}

} // namespace

// ---- transfer functions -----------------------------------------------------

TEST(EvalTransfer, ScalarAtZero)
{
    EXPECT_NEAR(std::abs(eval_transfer(scalar(-1, 1, 1, 0), 0.0)(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(EvalTransfer, ScalarWithFeedthrough)
{
    const Complex g = eval_transfer(scalar(-1, 1, 1, 2), 1.0)(0, 0);
    EXPECT_NEAR(std::abs(g - 2.5), 0.0, 1e-15);
}

TEST(EvalTransfer, MatchesModalExpansion)
{
    Rng rng(3);
    const auto sys = random_stable_system(5, 2, 3, rng, true);
    const Complex z(0.0, 1.0);
    EXPECT_LT(rel_diff(eval_transfer(sys, z), oracle::transfer_modal(sys, z)), 1e-12);
}

TEST(EvalTransfer, TriangularPathMatchesDense)
{
    Rng rng(4);
    Matrix A = random_complex(7, 7, rng);
    A        = Matrix(A.triangularView<Eigen::Lower>());
    A.diagonal().array() -= 4.0;
    const StateSpaceSystem sys(A, random_complex(7, 2, rng),
                               random_complex(1, 7, rng), Matrix::Zero(1, 2));
    const Complex z(0.0, 0.7);
    EXPECT_LT(rel_diff(eval_transfer(sys, z), oracle::transfer_modal(sys, z)), 1e-12);
    EXPECT_LT(rel_diff(eval_transfer(sys.dual(), z),
                       oracle::transfer_modal(sys.dual(), z)),
              1e-12);
}

TEST(EvalTransfer, ResolventSingularAtEigenvalue)
{
    const StateSpaceSystem sys(Matrix::Constant(1, 1, Complex(0.0, 2.0)),
                               Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                               Matrix::Zero(1, 1));
    EXPECT_THROW(eval_transfer(sys, Complex(0.0, 2.0)), SingularResolvent);
}

TEST(EvalTransfer, EmptySystemIsFeedthrough)
{
    const auto sys = StateSpaceSystem::static_gain(Matrix::Constant(2, 1, 3.0));
    EXPECT_EQ(eval_transfer(sys, Complex(0.0, 5.0)), sys.D);
}

TEST(StateSpaceSystem, RejectsBadDimensions)
{
    EXPECT_THROW(StateSpaceSystem(Matrix::Zero(2, 2), Matrix::Zero(3, 1),
                                  Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
                 std::invalid_argument);
}

// ---- Lyapunov ---------------------------------------------------------------

TEST(Lyapunov, Scalar)
{
    const Matrix P = solve_lyapunov(Matrix::Constant(1, 1, -1.0), Matrix::Ones(1, 1));
    EXPECT_NEAR(P(0, 0).real(), 0.5, 1e-15);
}

TEST(Lyapunov, Decoupled)
{
    const Matrix P = solve_lyapunov(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    EXPECT_LT((P - Matrix::Identity(2, 2) / 2.0).norm(), 1e-15);
}

TEST(Lyapunov, RandomResidualAndKroneckerOracle)
{
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial)
    {
        const auto sys = random_stable_system(6, 2, 2, rng);
        const Matrix W = sys.B * sys.B.adjoint();
        const Matrix P = solve_lyapunov(sys.A, W);
        EXPECT_LE((sys.A * P + P * sys.A.adjoint() + W).norm() / W.norm(), 1e-10);
        EXPECT_LT(rel_diff(P, oracle::lyapunov_kron(sys.A, W)), 1e-10);
        EXPECT_LT((P - P.adjoint()).norm(), 1e-14 * P.norm());
    }
}

TEST(Lyapunov, TriangularFastPath)
{
    Rng rng(6);
    Matrix A = random_complex(5, 5, rng);
    A        = Matrix(A.triangularView<Eigen::Upper>());
    A.diagonal() = -(A.diagonal().cwiseAbs().array() + 0.5).matrix().cast<Complex>();
    const Matrix W = Matrix::Identity(5, 5);
    EXPECT_LT(rel_diff(solve_lyapunov(A, W), oracle::lyapunov_kron(A, W)), 1e-11);
}

TEST(Lyapunov, UnstableThrows)
{
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0)  = -1.0;
    A(1, 1)  = 0.5;
    EXPECT_THROW(solve_lyapunov(A, Matrix::Identity(2, 2)), UnstableA);
}

// ---- Gramians and Hankel singular values ------------------------------------

TEST(Gramians, Scalar)
{
    const auto [P, Q] = gramians(scalar(-1, 1, 1, 0));
    EXPECT_NEAR(P(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(Q(0, 0).real(), 0.5, 1e-15);
}

TEST(Gramians, ZeroInputMap)
{
    Rng rng(7);
    auto sys = random_stable_system(4, 1, 1, rng);
    sys.B.setZero();
    EXPECT_EQ(gramians(sys).first.norm(), 0.0);
}

TEST(Gramians, MatchTimeDomainQuadrature)
{
    Rng rng(8);
    const auto sys = random_stable_system(8, 2, 2, rng);
    Eigen::ComplexEigenSolver<Matrix> eig(sys.A);
    double slowest = -1e300;
    for (Index i = 0; i < 8; ++i)
    {
        slowest = std::max(slowest, eig.eigenvalues()(i).real());
    }
    const double T    = 40.0 / std::abs(slowest);
    const auto [P, Q] = gramians(sys);
    const Matrix Pq   = oracle::gramian_quadrature(sys.A, sys.B, T, 40000);
    const Matrix Qq =
        oracle::gramian_quadrature(sys.A.adjoint(), sys.C.adjoint(), T, 40000);
    EXPECT_LT(rel_diff(P, Pq), 1e-6);
    EXPECT_LT(rel_diff(Q, Qq), 1e-6);
}

TEST(GramianFactors, ReproduceGramians)
{
    Rng rng(9);
    for (const Index m : {1, 3, 9})
    {
        const auto sys      = random_stable_system(6, 2, m, rng);
        const auto [P, Q]   = gramians(sys);
        const auto [LP, LQ] = gramian_factors(sys);
        EXPECT_LT(rel_diff(LP * LP.adjoint(), P), 1e-12);
        EXPECT_LT(rel_diff(LQ * LQ.adjoint(), Q), 1e-12);
    }
}

TEST(HankelSingularValues, Scalar)
{
    const RealVector s = hankel_singular_values(scalar(-1, 1, 1, 0));
    ASSERT_EQ(s.size(), 1);
    EXPECT_NEAR(s(0), 0.5, 1e-15);
}

TEST(HankelSingularValues, UncontrollableModeGivesZero)
{
    Matrix A = Matrix::Zero(3, 3);
    A.diagonal() << -1.0, -2.0, -3.0;
    Matrix B(3, 1);
    B << 1.0, 0.0, 1.0;
    const StateSpaceSystem sys(A, B, Matrix::Ones(1, 3), Matrix::Zero(1, 1));
    const RealVector s = hankel_singular_values(sys);
    EXPECT_LE(s(2), 1e-14 * s(0));
}

TEST(HankelSingularValues, MatchDenseEigenOracle)
{
    Rng rng(10);
    for (int trial = 0; trial < 5; ++trial)
    {
        const auto sys = random_stable_system(6, 1 + trial % 2, 2, rng);
        const RealVector s  = hankel_singular_values(sys);
        const RealVector so = oracle::hsv_dense(sys);
        EXPECT_LT((s - so).cwiseAbs().maxCoeff() / so(0), 1e-10);
    }
}

TEST(HankelSingularValues, InvariantUnderSimilarityAndDuality)
{
    Rng rng(11);
    const auto sys = random_stable_system(7, 2, 1, rng);
    const Matrix T = Matrix::Identity(7, 7) + 0.2 * random_complex(7, 7, rng);
    const Matrix Ti = T.inverse();
    const StateSpaceSystem moved(Ti * sys.A * T, Ti * sys.B, sys.C * T, sys.D);
    const RealVector s = hankel_singular_values(sys);
    EXPECT_LT((hankel_singular_values(moved) - s).cwiseAbs().maxCoeff(), 1e-10 * s(0));
    EXPECT_LT((hankel_singular_values(sys.dual()) - s).cwiseAbs().maxCoeff(), 1e-12 * s(0));
}

// ---- balanced realization ---------------------------------------------------

TEST(BalancedRealization, AlreadyBalancedDiagonal)
{
    // Decoupled modes with B = C = diag(b) and a_i = -b_i^2 / (2 sigma_i)
    // have P = Q = diag(sigma).
    RealVector sigma(3);
    sigma << 0.9, 0.4, 0.1;
    Matrix A = Matrix::Zero(3, 3);
    Matrix B = Matrix::Zero(3, 3);
    B.diagonal() << 1.0, 0.5, 0.3;
    for (Index i = 0; i < 3; ++i)
    {
        A(i, i) = -std::norm(B(i, i)) / (2.0 * sigma(i));
    }
    const StateSpaceSystem sys(A, B, B, Matrix::Zero(3, 3));
    const BalancedSystem bal = balanced_realization(sys);
    EXPECT_LT((bal.sigma - sigma).cwiseAbs().maxCoeff(), 1e-14);
    for (const auto& z : sample_moebius_uniform(32))
    {
        EXPECT_LT(rel_diff(eval_transfer(bal.sys, z), eval_transfer(sys, z)), 1e-13);
    }
}

TEST(BalancedRealization, Scalar)
{
    const auto sys = scalar(-1, 1, 1, 0);
    const auto bal = balanced_realization(sys);
    EXPECT_NEAR(bal.sigma(0), 0.5, 1e-15);
    EXPECT_LT(std::abs(eval_transfer(bal.sys, Complex(0, 0.3))(0, 0) -
                       eval_transfer(sys, Complex(0, 0.3))(0, 0)),
              1e-15);
}

TEST(BalancedRealization, ClusterMovedLast)
{
    Rng rng(12);
    const auto sys      = random_stable_system(8, 1, 1, rng);
    const RealVector s  = hankel_singular_values(sys);
    const auto bal      = balanced_realization(sys, ClusterRange{3, 4});
    const std::vector<Index> order{0, 1, 4, 5, 6, 7, 2, 3};
    for (Index i = 0; i < 8; ++i)
    {
        EXPECT_NEAR(bal.sigma(i), s(order[static_cast<std::size_t>(i)]), 1e-10 * s(0));
    }
    const auto [rp, rq] = balanced_residuals(bal);
    EXPECT_LE(rp, 1e-8);
    EXPECT_LE(rq, 1e-8);
    const auto [P, Q] = gramians(bal.sys);
    EXPECT_LT((P - diag_matrix(bal.sigma)).norm(), 1e-8 * s(0));
    EXPECT_LT((Q - diag_matrix(bal.sigma)).norm(), 1e-8 * s(0));
}

TEST(BalancedRealization, TransferFunctionPreserved)
{
    Rng rng(13);
    const auto sys = random_stable_system(9, 2, 2, rng, true);
    const auto bal = balanced_realization(sys);
    for (const auto& z : sample_moebius_uniform(16))
    {
        EXPECT_LT(rel_diff(eval_transfer(bal.sys, z), eval_transfer(sys, z)), 1e-10);
    }
}

TEST(ClusterToTail, Permutation)
{
    const auto perm = cluster_to_tail(6, ClusterRange{2, 3});
    EXPECT_EQ(perm, (std::vector<Index>{0, 3, 4, 5, 1, 2}));
}

// ---- norms on grids ---------------------------------------------------------

TEST(HinfNormGrid, FirstOrderLowPass)
{
    const auto f = [](Complex z) { return Matrix::Constant(1, 1, 1.0 / (z + 1.0)).eval(); };
    const std::vector<Complex> grid{Complex(0, -2), Complex(0, 0), Complex(0, 3)};
    const GridMax g = hinf_norm_grid(f, grid);
    EXPECT_NEAR(g.value, 1.0, 1e-15);
    EXPECT_EQ(g.point, Complex(0, 0));
}

TEST(HinfNormGrid, ConstantMatrix)
{
    Matrix M(2, 2);
    M << 3.0, 0.0, 0.0, Complex(0, 4);
    const GridMax g =
        hinf_norm_grid([&](Complex) { return M; }, sample_moebius_uniform(8));
    EXPECT_NEAR(g.value, 4.0, 1e-14);
}

TEST(HinfNormGrid, ScalarAllPassError)
{
    // G = 1/(z+1) against its zero-rank Hankel approximation.
    const auto sys = scalar(-1, 1, 1, 0);
    const auto hna = hna_reduce(balanced_realization(sys), 0, 0.0, 0.0);
    const auto f   = [&](Complex z) {
        return Matrix(eval_transfer(sys, z) - eval_transfer(hna.sys, z));
    };
    for (const auto& z : sample_moebius_uniform(64))
    {
        EXPECT_NEAR(norm2(f(z)), 0.5, 1e-14);
    }
    EXPECT_NEAR(hinf_norm_grid(f, sample_moebius_uniform(64)).value, 0.5, 1e-14);
}

TEST(HinfNormGrid, WrapsEvaluationFailure)
{
    const StateSpaceSystem sys(Matrix::Constant(1, 1, Complex(0.0, 1.0)),
                               Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                               Matrix::Zero(1, 1));
    const std::vector<Complex> grid{Complex(0, 0.5), Complex(0, 1.0)};
    try
    {
        hinf_norm_grid([&](Complex z) { return eval_transfer(sys, z); }, grid);
        FAIL() << "expected EvaluationFailure";
    }
    catch (const EvaluationFailure& e)
    {
        EXPECT_EQ(e.point(), Complex(0, 1.0));
    }
}

TEST(HinfNormRefined, NeverBelowCoarseGrid)
{
    Rng rng(14);
    const auto sys  = random_stable_system(6, 1, 1, rng);
    const auto f    = [&](Complex z) { return eval_transfer(sys, z); };
    const auto grid = sample_moebius_uniform(32);
    EXPECT_GE(hinf_norm_refined(f, grid).value, hinf_norm_grid(f, grid).value);
}

// ---- Hankel error -----------------------------------------------------------

TEST(HankelError, IdenticalSystems)
{
    Rng rng(15);
    const auto sys = random_stable_system(5, 1, 1, rng);
    EXPECT_LE(hankel_error(sys, sys), 1e-12 * hankel_singular_values(sys)(0));
}

TEST(HankelError, AgainstZeroSystem)
{
    Rng rng(16);
    const auto sys = random_stable_system(5, 2, 1, rng);
    const auto zero = StateSpaceSystem::static_gain(Matrix::Zero(2, 1));
    EXPECT_NEAR(hankel_error(sys, zero), hankel_singular_values(sys)(0),
                1e-12 * hankel_singular_values(sys)(0));
}

TEST(HankelError, OptimalRankTwoApproximation)
{
    Rng rng(17);
    const auto sys = random_stable_system(6, 1, 1, rng);
    const auto bal = balanced_realization(sys);
    const auto hna = hna_reduce(bal, 2, 0.0, 0.0);
    const auto stable = split_stable(hna.sys).stable;
    EXPECT_EQ(stable.n(), 2);
    EXPECT_NEAR(hankel_error(sys, stable) / bal.sigma(2), 1.0, 1e-6);
}

// ---- parallel maps ----------------------------------------------------------

TEST(IndexMap, ThreadedMatchesSequentialAndRethrowsLowest)
{
    const auto fn = [](std::size_t i) {
        if (i == 7 || i == 11)
        {
            throw std::runtime_error("bad " + std::to_string(i));
        }
        return static_cast<double>(i * i);
    };
    const auto ok = [](std::size_t i) { return static_cast<double>(i) * 0.5; };
    ::setenv("MOR_NUM_THREADS", "4", 1);
    const auto threaded = index_map<double>(40, ok);
    std::string msg;
    try
    {
        index_map<double>(20, fn);
    }
    catch (const std::runtime_error& e)
    {
        msg = e.what();
    }
    ::unsetenv("MOR_NUM_THREADS");
    EXPECT_EQ(threaded, index_map<double>(40, ok));
    EXPECT_EQ(msg, "bad 7");
}
