///
/// \file sampling.hpp
///
/// Built-in examples and synthetic system generators.
///

#ifndef HNAMOR_SAMPLING_HPP
#define HNAMOR_SAMPLING_HPP

#include <random>

#include "hnamor/grids.hpp"
#include "hnamor/lti.hpp"

namespace hnamor
{

/// Samples of a matrix-valued function on the given points.
template <typename Fn>
SampleSet sample_function(Fn&& f, const std::vector<Complex>& grid)
{
    SampleSet s;
    s.points = grid;
    s.values = grid_map<Matrix>(grid, [&](Complex z) { return Matrix(f(z)); });
    return s;
}

inline SampleSet sample_system(const StateSpaceSystem& sys,
                               const std::vector<Complex>& grid)
{
    return sample_function([&](Complex z) { return eval_transfer(sys, z); },
                           grid);
}

/// sum_{j=1}^{terms} s^j / j with s = (1 - z)/(1 + z).
inline Complex hilbert_example(Complex z, int terms = 500)
{
    if (z == Complex(-1.0, 0.0))
    {
        throw PoleAtMinusOne("hilbert_example: pole at z = -1");
    }
    const Complex s = (1.0 - z) / (1.0 + z);
    Complex acc     = 1.0 / static_cast<double>(terms);
    for (int j = terms - 1; j >= 1; --j)
    {
        acc = 1.0 / static_cast<double>(j) + s * acc;
    }
    return s * acc;
}

inline SampleSet hilbert_samples(const std::vector<Complex>& grid,
                                 int terms = 500)
{
    return sample_function(
        [&](Complex z) { return Matrix::Constant(1, 1, hilbert_example(z, terms)); },
        grid);
}

/// Exact state space of the truncated series: a chain of `terms` copies of
/// the all-pass section (1 - z)/(1 + z) with output taps 1/j. The
/// controllability Gramian of the chain is the identity.
inline StateSpaceSystem hilbert_system(int terms = 500)
{
    const Index n = terms;
    Matrix A      = Matrix::Zero(n, n);
    Matrix B(n, 1);
    const double r2 = std::sqrt(2.0);
    for (Index k = 0; k < n; ++k)
    {
        A(k, k) = -1.0;
        for (Index i = 0; i < k; ++i)
        {
            A(k, i) = ((k - 1 - i) % 2 == 0) ? 2.0 : -2.0;
        }
        B(k, 0) = (k % 2 == 0) ? r2 : -r2;
    }
    // Output of section k: y_k = sqrt2 x_k - y_{k-1}, y_0 = u.
    Matrix C = Matrix::Zero(1, n);
    Complex D = 0.0;
    for (Index j = 0; j < n; ++j)
    {
        const double c = 1.0 / static_cast<double>(j + 1);
        for (Index i = 0; i <= j; ++i)
        {
            C(0, i) += c * r2 * (((j - i) % 2 == 0) ? 1.0 : -1.0);
        }
        D += c * (((j + 1) % 2 == 0) ? 1.0 : -1.0);
    }
    return StateSpaceSystem(std::move(A), std::move(B), std::move(C),
                            Matrix::Constant(1, 1, D));
}

using Rng = std::mt19937_64;

inline Matrix random_complex(Index rows, Index cols, Rng& rng)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
    {
        for (Index i = 0; i < rows; ++i)
        {
            const double re = nd(rng);
            const double im = nd(rng);
            M(i, j)         = Complex(re, im) / std::sqrt(2.0);
        }
    }
    return M;
}

inline Matrix random_real(Index rows, Index cols, Rng& rng)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
    {
        for (Index i = 0; i < rows; ++i)
        {
            M(i, j) = nd(rng);
        }
    }
    return M;
}

/// Random stable system with poles -(0.1 + U[0,2]) + i U[-3,3] and a mildly
/// non-normal eigenvector basis.
inline StateSpaceSystem random_stable_system(Index n, Index p, Index m,
                                             Rng& rng, bool with_d = false)
{
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    Vector lam(n);
    for (Index i = 0; i < n; ++i)
    {
        lam(i) = Complex(-(0.1 + 2.0 * ud(rng)), 6.0 * ud(rng) - 3.0);
    }
    const Matrix V =
        Matrix::Identity(n, n) +
        0.3 / std::sqrt(static_cast<double>(std::max<Index>(n, 1))) *
            random_complex(n, n, rng);
    const Matrix A = V * lam.asDiagonal() * V.inverse();
    Matrix D       = with_d ? random_complex(p, m, rng) : Matrix::Zero(p, m);
    return StateSpaceSystem(A, random_complex(n, m, rng),
                            random_complex(p, n, rng), std::move(D));
}

/// Random real stable system with real or conjugate-pair poles.
inline StateSpaceSystem random_real_stable_system(Index n, Index p, Index m,
                                                  Rng& rng)
{
    Matrix M = random_real(n, n, rng);
    Eigen::ComplexEigenSolver<Matrix> eig(M, false);
    double amax = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
    {
        amax = std::max(amax, eig.eigenvalues()(i).real());
    }
    M.diagonal().array() -= (amax + 0.5);
    return StateSpaceSystem(M, random_real(n, m, rng), random_real(p, n, rng),
                            Matrix::Zero(p, m));
}

/// Random antistable system (all poles in the right half-plane).
inline StateSpaceSystem random_antistable_system(Index n, Index p, Index m,
                                                 Rng& rng)
{
    StateSpaceSystem s = random_stable_system(n, p, m, rng);
    s.A                = -s.A;
    return s;
}

/// Options for random_balanced_system.
struct BalancedSpec
{
    /// Hankel singular values, any order, all positive.
    RealVector sigma;
    Index p = 1;
    Index m = 1;
    /// 0-based half-open range of states treated as a cluster: there the
    /// output map is aligned with the input map so the Lyapunov equations
    /// stay well conditioned for nearly equal singular values.
    Index cluster_begin = 0;
    Index cluster_end   = 0;
    /// Size of the random misalignment inside the cluster.
    double misalignment = 0.0;
    /// Make the cluster block of A Hermitian (needs misalignment = 0).
    bool hermitian_cluster = false;
};

/// A balanced system with Gramians P = Q = diag(sigma) built by solving the
/// two Lyapunov equations for the entries of A.
inline BalancedSystem random_balanced_system(const BalancedSpec& spec, Rng& rng)
{
    if (spec.p < spec.m)
    {
        BalancedSpec dual = spec;
        std::swap(dual.p, dual.m);
        BalancedSystem bal = random_balanced_system(dual, rng);
        bal.sys            = bal.sys.dual();
        return bal;
    }
    const Index K = spec.sigma.size();
    const Index p = spec.p;
    const Index m = spec.m;
    const RealVector& s = spec.sigma;
    auto in_cluster = [&](Index i) {
        return i >= spec.cluster_begin && i < spec.cluster_end;
    };

    const Matrix B = random_complex(K, m, rng);
    Matrix C       = random_complex(p, K, rng);
    if (spec.cluster_end > spec.cluster_begin)
    {
        // Orthonormal V (p x m) so that C2 = V B2* reproduces B2 B2*.
        Eigen::HouseholderQR<Matrix> qr(random_complex(p, m, rng));
        const Matrix V = qr.householderQ() * Matrix::Identity(p, m);
        const Index r  = spec.cluster_end - spec.cluster_begin;
        C.middleCols(spec.cluster_begin, r) =
            V * B.middleRows(spec.cluster_begin, r).adjoint() +
            spec.misalignment * random_complex(p, r, rng);
    }
    for (Index i = 0; i < K; ++i)
    {
        C.col(i) *= B.row(i).norm() / C.col(i).norm();
    }

    const Matrix X = B * B.adjoint();
    const Matrix Y = C.adjoint() * C;
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    Matrix A(K, K);
    for (Index i = 0; i < K; ++i)
    {
        const bool herm = spec.hermitian_cluster && in_cluster(i);
        A(i, i) = Complex(-X(i, i).real() / (2.0 * s(i)), herm ? 0.0 : ud(rng));
        for (Index j = i + 1; j < K; ++j)
        {
            // x = a_ij, y = conj(a_ji):
            //   s_j x + s_i y = -X_ij,  s_i x + s_j y = -Y_ij.
            Complex x;
            Complex y;
            if (s(i) == s(j))
            {
                // Equal values pin the symmetric part, so both Gramian
                // equations only agree when the blocks of X and Y match.
                if (std::abs(X(i, j) - Y(i, j)) >
                    1e-12 * std::max(1.0, std::abs(X(i, j))))
                {
                    throw std::invalid_argument(
                        "random_balanced_system: equal singular values need "
                        "zero misalignment");
                }
                const bool hij = spec.hermitian_cluster && in_cluster(i) &&
                                 in_cluster(j);
                const Complex t = hij ? Complex(0.0)
                                      : Complex(ud(rng), ud(rng)) * 0.5;
                const Complex sum = -0.5 * (X(i, j) + Y(i, j)) / s(i);
                x                 = 0.5 * (sum + t);
                y                 = 0.5 * (sum - t);
            }
            else
            {
                // Written around the aligned solution -X/(s_i + s_j) so that
                // close values only amplify the misalignment Y - X.
                const bool hij = spec.hermitian_cluster && in_cluster(i) &&
                                 in_cluster(j);
                const double det  = s(j) * s(j) - s(i) * s(i);
                const Complex gap = hij ? Complex(0.0) : Y(i, j) - X(i, j);
                const Complex base = -X(i, j) / (s(i) + s(j));
                x = base + s(i) * gap / det;
                y = base - s(j) * gap / det;
            }
            A(i, j) = x;
            A(j, i) = std::conj(y);
        }
    }
    BalancedSystem bal;
    bal.sys   = StateSpaceSystem(std::move(A), B, std::move(C),
                                 random_complex(p, m, rng));
    bal.sigma = s;
    return bal;
}

/// Random stable system with prescribed Hankel singular values, returned
/// in a non-balanced realization obtained by a random similarity
/// I + spread/sqrt(n) * randn.
inline StateSpaceSystem random_system_with_hsv(const RealVector& sigma,
                                               Index p, Index m, Rng& rng,
                                               double spread = 0.3)
{
    BalancedSpec spec;
    spec.sigma               = sigma;
    spec.p                   = p;
    spec.m                   = m;
    const BalancedSystem bal = random_balanced_system(spec, rng);
    const Index n            = sigma.size();
    const Matrix T = Matrix::Identity(n, n) +
                     spread / std::sqrt(static_cast<double>(n)) *
                         random_complex(n, n, rng);
    const Eigen::PartialPivLU<Matrix> lu(T);
    return StateSpaceSystem(lu.solve(bal.sys.A * T), lu.solve(bal.sys.B),
                            bal.sys.C * T, bal.sys.D);
}

/// The 16-state example with Hermitian negative definite A and prescribed
/// Gramians P = Q = diag(0.1, ..., 0.4, 0.5-delta, 0.5-eps, 0.5-eps/2, 0.5,
/// 0.5+eps/2, 0.5+eps, 0.5+delta, 0.6, ..., 1).
inline RealVector hermitian_test_gramian(double epsilon, double delta)
{
    RealVector g(16);
    g << 0.1, 0.2, 0.3, 0.4, 0.5 - delta, 0.5 - epsilon, 0.5 - epsilon / 2.0,
        0.5, 0.5 + epsilon / 2.0, 0.5 + epsilon, 0.5 + delta, 0.6, 0.7, 0.8,
        0.9, 1.0;
    return g;
}

namespace detail
{

/// L with L L* = W for a Hermitian W that must be PSD up to rounding.
inline Matrix checked_psd_factor(const Matrix& W)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(W);
    const double tol = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -tol)
    {
        throw CholeskyFailure("matrix is indefinite beyond tolerance; try "
                              "another seed");
    }
    return eig.eigenvectors() *
           diag_matrix(eig.eigenvalues().cwiseMax(0.0).cwiseSqrt());
}

} // namespace detail

inline StateSpaceSystem hermitian_test_system(double epsilon, double delta,
                                              std::uint64_t seed)
{
    constexpr Index n = 16;
    Rng rng(seed);
    const Matrix M = random_complex(n, n, rng) * std::sqrt(2.0);
    Matrix A       = -(M * M.adjoint());
    A.diagonal().array() -= static_cast<double>(n);
    A = (A + A.adjoint()) / 2.0;

    const Matrix P = diag_matrix(hermitian_test_gramian(epsilon, delta));
    Matrix WB      = -A * P - P * A.adjoint();
    Matrix WC      = -A.adjoint() * P - P * A;
    WB             = (WB + WB.adjoint()) / 2.0;
    WC             = (WC + WC.adjoint()) / 2.0;
    const Matrix B = detail::checked_psd_factor(WB);
    const Matrix C = detail::checked_psd_factor(WC).adjoint();
    return StateSpaceSystem(A, B, C, Matrix::Zero(n, n));
}

/// The example above as a balanced system (its Gramians are diagonal).
inline BalancedSystem hermitian_test_balanced(double epsilon, double delta,
                                              std::uint64_t seed)
{
    BalancedSystem bal;
    bal.sys   = hermitian_test_system(epsilon, delta, seed);
    bal.sigma = hermitian_test_gramian(epsilon, delta);
    return bal;
}

} // namespace hnamor

#endif // HNAMOR_SAMPLING_HPP
