///
/// \file lti.hpp
///
/// Transfer-function evaluation, Lyapunov equations, Gramians, Hankel
/// singular values, balanced realizations and grid norm estimates.
///

#ifndef HNAMOR_LTI_HPP
#define HNAMOR_LTI_HPP

#include <cmath>
#include <optional>
#include <utility>

#include "hnamor/core.hpp"

namespace hnamor
{

namespace detail
{

inline bool is_upper_triangular(const Matrix& A)
{
    for (Index j = 0; j < A.cols(); ++j)
    {
        for (Index i = j + 1; i < A.rows(); ++i)
        {
            if (A(i, j) != Complex(0.0))
            {
                return false;
            }
        }
    }
    return true;
}

inline bool is_lower_triangular(const Matrix& A)
{
    for (Index j = 1; j < A.cols(); ++j)
    {
        for (Index i = 0; i < j && i < A.rows(); ++i)
        {
            if (A(i, j) != Complex(0.0))
            {
                return false;
            }
        }
    }
    return true;
}

inline Matrix reversal(Index n)
{
    Matrix J = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
    {
        J(i, n - 1 - i) = 1.0;
    }
    return J;
}

} // namespace detail

/// G(z) = D + C (zI - A)^{-1} B, using one LU solve (a substitution when A
/// is triangular).
inline Matrix eval_transfer(const StateSpaceSystem& sys, Complex z)
{
    const Index n = sys.n();
    if (n == 0)
    {
        return sys.D;
    }
    Matrix M = -sys.A;
    M.diagonal().array() += z;
    const double anorm = std::max(sys.A.cwiseAbs().colwise().sum().maxCoeff(),
                                  std::numeric_limits<double>::min());
    const bool lower = detail::is_lower_triangular(sys.A);
    if (lower || detail::is_upper_triangular(sys.A))
    {
        if (!(M.diagonal().cwiseAbs().minCoeff() >
              static_cast<double>(n) * machine_eps * anorm))
        {
            throw SingularResolvent("zI - A is singular to working precision");
        }
        const Matrix X = lower
                             ? Matrix(M.triangularView<Eigen::Lower>().solve(sys.B))
                             : Matrix(M.triangularView<Eigen::Upper>().solve(sys.B));
        return sys.D + sys.C * X;
    }
    Eigen::PartialPivLU<Matrix> lu(M);
    const double mnorm = M.cwiseAbs().colwise().sum().maxCoeff();
    // rcond is a 1-norm estimate of 1/kappa, so rcond*|M|_1 ~ sigma_min.
    const double smin_est = lu.rcond() * mnorm;
    if (!(smin_est > static_cast<double>(n) * machine_eps * anorm))
    {
        throw SingularResolvent("zI - A is singular to working precision");
    }
    return sys.D + sys.C * lu.solve(sys.B);
}

/// Evaluates the transfer function on every grid point (optionally threaded).
inline std::vector<Matrix> eval_transfer_grid(const StateSpaceSystem& sys,
                                              const std::vector<Complex>& grid)
{
    return grid_map<Matrix>(grid,
                            [&](Complex z) { return eval_transfer(sys, z); });
}


/// Solves A P + P A* + W = 0 by the complex Bartels-Stewart method.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& W)
{
    const Index n = A.rows();
    if (A.cols() != n || W.rows() != n || W.cols() != n)
    {
        throw std::invalid_argument("solve_lyapunov: dimension mismatch");
    }
    if (n == 0)
    {
        return Matrix(0, 0);
    }

    Matrix T;
    Matrix Q;
    if (detail::is_upper_triangular(A))
    {
        T = A;
        Q = Matrix::Identity(n, n);
    }
    else if (detail::is_upper_triangular(A.transpose()))
    {
        Q = detail::reversal(n);
        T = Q * A * Q;
    }
    else
    {
        Eigen::ComplexSchur<Matrix> schur(A);
        T = schur.matrixT();
        Q = schur.matrixU();
    }

    const double atol = axis_tolerance(A);
    for (Index i = 0; i < n; ++i)
    {
        if (T(i, i).real() >= -atol)
        {
            throw UnstableA("solve_lyapunov: A has an eigenvalue with "
                            "nonnegative real part");
        }
    }

    const Matrix C = Q.adjoint() * W * Q;
    Matrix Y       = Matrix::Zero(n, n);
    for (Index j = n - 1; j >= 0; --j)
    {
        const Index tail = n - 1 - j;
        Vector rhs       = -C.col(j);
        if (tail > 0)
        {
            rhs -= Y.rightCols(tail) * T.row(j).tail(tail).adjoint();
        }
        Matrix S = T;
        S.diagonal().array() += std::conj(T(j, j));
        Y.col(j) = S.triangularView<Eigen::Upper>().solve(rhs);
    }

    Matrix P = Q * Y * Q.adjoint();
    return (P + P.adjoint()) / 2.0;
}

/// Controllability and observability Gramians.
inline std::pair<Matrix, Matrix> gramians(const StateSpaceSystem& sys)
{
    Matrix P = solve_lyapunov(sys.A, sys.B * sys.B.adjoint());
    Matrix Q = solve_lyapunov(sys.A.adjoint(), sys.C.adjoint() * sys.C);
    return {std::move(P), std::move(Q)};
}

/// L with L L* = P for Hermitian PSD P; negative eigenvalue noise is clamped.
inline Matrix psd_factor(const Matrix& P)
{
    if (P.rows() == 0)
    {
        return P;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
    RealVector mu = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * diag_matrix(mu);
}

namespace detail
{

/// Upper-triangular U with T (U U*) + (U U*) T* + B B* = 0 for upper
/// triangular stable T (Hammarling's recursion, peeling the last state).
inline Matrix hammarling_triangular(const Matrix& T, Matrix B)
{
    const Index n = T.rows();
    if (B.cols() > n)
    {
        // Same B B* with n columns.
        Eigen::HouseholderQR<Matrix> qr(B.adjoint());
        B = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>().toDenseMatrix().adjoint();
    }
    Matrix U = Matrix::Zero(n, n);
    for (Index j = n - 1; j >= 0; --j)
    {
        const double re_tau = T(j, j).real();
        const double bn     = B.row(j).norm();
        if (bn == 0.0)
        {
            continue;
        }
        const double ups = bn / std::sqrt(-2.0 * re_tau);
        U(j, j)          = ups;
        if (j == 0)
        {
            break;
        }
        const Vector b_row = B.row(j).transpose(); // entries of row j
        Vector rhs = -T.col(j).head(j) * ups -
                     B.topRows(j) * b_row.conjugate() / ups;
        Matrix S = T.topLeftCorner(j, j);
        S.diagonal().array() += std::conj(T(j, j));
        const Vector u  = S.triangularView<Eigen::Upper>().solve(rhs);
        U.col(j).head(j) = u;
        B.topRows(j) -= u * b_row.transpose() / ups;
    }
    return U;
}

} // namespace detail

/// Factors L_P, L_Q with P = L_P L_P* and Q = L_Q L_Q*, computed directly
/// from one Schur decomposition of A.
inline std::pair<Matrix, Matrix> gramian_factors(const StateSpaceSystem& sys)
{
    const Index n = sys.n();
    if (n == 0)
    {
        return {Matrix(0, 0), Matrix(0, 0)};
    }
    Eigen::ComplexSchur<Matrix> schur(sys.A);
    const Matrix& T = schur.matrixT();
    const Matrix& Z = schur.matrixU();
    const double atol = axis_tolerance(sys.A);
    for (Index i = 0; i < n; ++i)
    {
        if (T(i, i).real() >= -atol)
        {
            throw UnstableA("gramian_factors: A has an eigenvalue with "
                            "nonnegative real part");
        }
    }
    const Matrix LP = Z * detail::hammarling_triangular(T, Z.adjoint() * sys.B);
    // A* = (Z J) (J T* J) (Z J)* with J the reversal, and J T* J is upper
    // triangular.
    const Matrix J  = detail::reversal(n);
    const Matrix ZJ = Z * J;
    const Matrix LQ = ZJ * detail::hammarling_triangular(
                               J * T.adjoint() * J, ZJ.adjoint() * sys.C.adjoint());
    return {LP, LQ};
}

/// sqrt(eig(PQ)) in descending order, via the singular values of L_Q* L_P.
inline RealVector hankel_singular_values(const StateSpaceSystem& sys)
{
    if (sys.n() == 0)
    {
        return RealVector(0);
    }
    auto [LP, LQ]  = gramian_factors(sys);
    const Matrix H = LQ.adjoint() * LP;
    if (H.rows() > 64)
    {
        Eigen::BDCSVD<Matrix> svd(H);
        return svd.singularValues();
    }
    Eigen::JacobiSVD<Matrix> svd(H);
    return svd.singularValues();
}

/// Balanced system with Gramians P = Q = diag(sigma).
struct BalancedSystem
{
    StateSpaceSystem sys;
    RealVector sigma;
    /// States dropped because their Hankel singular value was negligible.
    Index truncated = 0;
};

/// 1-based inclusive index range into the descending singular values.
struct ClusterRange
{
    Index j1;
    Index j2;
};

/// Permutation that moves the 1-based range [j1, j2] of 0..K-1 to the end.
inline std::vector<Index> cluster_to_tail(Index K, ClusterRange range)
{
    std::vector<Index> perm;
    perm.reserve(static_cast<std::size_t>(K));
    for (Index i = 0; i < range.j1 - 1; ++i)
    {
        perm.push_back(i);
    }
    for (Index i = range.j2; i < K; ++i)
    {
        perm.push_back(i);
    }
    for (Index i = range.j1 - 1; i < range.j2; ++i)
    {
        perm.push_back(i);
    }
    return perm;
}

/// Square-root balanced realization. The optional cluster (1-based indices
/// into the descending singular values after truncation) is moved last.
inline BalancedSystem balanced_realization(
    const StateSpaceSystem& sys, std::optional<ClusterRange> cluster = {})
{
    const Index n = sys.n();
    BalancedSystem out;
    if (n == 0)
    {
        out.sys   = sys;
        out.sigma = RealVector(0);
        return out;
    }

    auto [LP, LQ] = gramian_factors(sys);
    Eigen::JacobiSVD<Matrix> svd(LQ.adjoint() * LP,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealVector& s = svd.singularValues();

    const double thresh = static_cast<double>(n) * machine_eps * s(0);
    Index keep          = 0;
    while (keep < n && s(keep) > thresh)
    {
        ++keep;
    }
    out.truncated = n - keep;
    if (2 * out.truncated > n)
    {
        throw NearSingularGramian(
            "balanced_realization: more than half of the Hankel singular "
            "values are negligible");
    }

    const RealVector isq = s.head(keep).cwiseSqrt().cwiseInverse();
    const Matrix T    = diag_matrix(isq) * svd.matrixU().leftCols(keep).adjoint() *
                     LQ.adjoint();
    const Matrix Tinv = LP * svd.matrixV().leftCols(keep) * diag_matrix(isq);

    out.sys   = StateSpaceSystem(T * sys.A * Tinv, T * sys.B, sys.C * Tinv,
                                 sys.D);
    out.sigma = s.head(keep);

    if (cluster)
    {
        if (cluster->j1 < 1 || cluster->j2 < cluster->j1 ||
            cluster->j2 > keep)
        {
            throw std::invalid_argument(
                "balanced_realization: cluster range out of bounds");
        }
        const auto perm = cluster_to_tail(keep, *cluster);
        out.sys         = permute_states(out.sys, perm);
        out.sigma       = RealVector(out.sigma(perm));
    }
    return out;
}

/// Relative residuals of the two Lyapunov equations for diag(sigma).
inline std::pair<double, double> balanced_residuals(const BalancedSystem& bal)
{
    const auto& s  = bal.sys;
    const Matrix S = diag_matrix(bal.sigma);
    const double an = norm2(s.A) * bal.sigma.norm();
    const double rp = (s.A * S + S * s.A.adjoint() + s.B * s.B.adjoint()).norm();
    const double rq = (s.A.adjoint() * S + S * s.A + s.C.adjoint() * s.C).norm();
    const double bn = norm2(s.B);
    const double cn = norm2(s.C);
    return {rp / std::max(an + bn * bn, std::numeric_limits<double>::min()),
            rq / std::max(an + cn * cn, std::numeric_limits<double>::min())};
}

/// Result of a grid maximization.
struct GridMax
{
    double value  = 0.0;
    Complex point = 0.0;
};

/// max over grid of the spectral norm of f(z); first maximizer wins.
template <typename Fn>
GridMax hinf_norm_grid(Fn&& f, const std::vector<Complex>& grid)
{
    if (grid.empty())
    {
        throw std::invalid_argument("hinf_norm_grid: empty grid");
    }
    const auto vals = grid_map<double>(grid, [&](Complex z) {
        try
        {
            return norm2(f(z));
        }
        catch (const EvaluationFailure&)
        {
            throw;
        }
        catch (const NumericalError& e)
        {
            throw EvaluationFailure(z, e.what());
        }
    });
    GridMax best{vals[0], grid[0]};
    for (std::size_t i = 1; i < vals.size(); ++i)
    {
        if (vals[i] > best.value)
        {
            best = {vals[i], grid[i]};
        }
    }
    return best;
}

/// Grid maximum with local refinement: each round inserts Chebyshev points
/// between the neighbours of the current maximizer.
template <typename Fn>
GridMax hinf_norm_refined(Fn&& f, const std::vector<Complex>& grid,
                          int rounds = 3, int points = 8)
{
    GridMax best = hinf_norm_grid(f, grid);
    std::vector<double> w;
    w.reserve(grid.size());
    for (const auto& z : grid)
    {
        w.push_back(z.imag());
    }
    std::sort(w.begin(), w.end());
    for (int round = 0; round < rounds && w.size() >= 2; ++round)
    {
        const auto it  = std::lower_bound(w.begin(), w.end(), best.point.imag());
        const auto pos = static_cast<std::size_t>(it - w.begin());
        const double lo = w[pos == 0 ? 0 : pos - 1];
        const double hi = w[std::min(pos + 1, w.size() - 1)];
        std::vector<Complex> extra;
        for (int k = 0; k < points; ++k)
        {
            const double c = std::cos((2.0 * k + 1.0) * M_PI / (2.0 * points));
            extra.emplace_back(0.0, 0.5 * (lo + hi) + 0.5 * (hi - lo) * c);
        }
        const GridMax local = hinf_norm_grid(f, extra);
        if (local.value > best.value)
        {
            best = local;
        }
        for (const auto& z : extra)
        {
            w.insert(std::upper_bound(w.begin(), w.end(), z.imag()), z.imag());
        }
    }
    return best;
}

/// Difference system G_a - G_b.
inline StateSpaceSystem difference_system(const StateSpaceSystem& a,
                                          const StateSpaceSystem& b)
{
    StateSpaceSystem neg_b(b.A, b.B, -b.C, -b.D);
    return parallel_sum(a, neg_b);
}

/// Hankel norm of G_a - G_b for stable systems.
inline double hankel_error(const StateSpaceSystem& a, const StateSpaceSystem& b)
{
    const StateSpaceSystem diff = difference_system(a, b);
    if (diff.n() == 0)
    {
        return 0.0;
    }
    return hankel_singular_values(diff)(0);
}

} // namespace hnamor

#endif // HNAMOR_LTI_HPP
