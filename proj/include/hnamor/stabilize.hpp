///
/// \file stabilize.hpp
///
/// Modal splitting of a diagonalizable system into its stable and
/// antistable parts.
///

#ifndef HNAMOR_STABILIZE_HPP
#define HNAMOR_STABILIZE_HPP

#include "hnamor/lti.hpp"

namespace hnamor
{

struct StabilizationResult
{
    StateSpaceSystem stable;
    StateSpaceSystem antistable;
    /// Condition number of the eigenvector matrix.
    double kappa = 1.0;
};

class ImaginaryAxisEigenvalueAt : public ImaginaryAxisEigenvalue
{
public:
    ImaginaryAxisEigenvalueAt(Complex lambda, const std::string& what)
        : ImaginaryAxisEigenvalue(what), m_lambda(lambda)
    {
    }
    Complex eigenvalue() const noexcept { return m_lambda; }

private:
    Complex m_lambda;
};

/// G = G_s + G_u with G_s stable (carrying D) and G_u antistable (D = 0).
/// Both parts are returned in modal coordinates, sorted by (imag, real).
inline StabilizationResult split_stable(const StateSpaceSystem& sys)
{
    const Index n = sys.n();
    StabilizationResult out;
    if (n == 0)
    {
        out.stable     = sys;
        out.antistable = StateSpaceSystem(Matrix(0, 0), Matrix(0, sys.m()),
                                          Matrix(sys.p(), 0),
                                          Matrix::Zero(sys.p(), sys.m()));
        return out;
    }

    Eigen::ComplexEigenSolver<Matrix> eig(sys.A);
    if (eig.info() != Eigen::Success)
    {
        throw DefectiveA("split_stable: eigendecomposition did not converge");
    }
    const Vector& lam = eig.eigenvalues();
    const Matrix& X   = eig.eigenvectors();
    out.kappa         = condition_number(X);
    if (!(out.kappa <= 1e12))
    {
        throw DefectiveA("split_stable: eigenvector matrix is numerically "
                         "singular (kappa = " +
                         std::to_string(out.kappa) + ")");
    }
    const double atol = axis_tolerance(sys.A);
    for (Index i = 0; i < n; ++i)
    {
        if (std::abs(lam(i).real()) <= atol)
        {
            throw ImaginaryAxisEigenvalueAt(
                lam(i), "split_stable: eigenvalue on the imaginary axis (" +
                            std::to_string(lam(i).real()) + " + " +
                            std::to_string(lam(i).imag()) + "i)");
        }
    }

    const Matrix Bm = X.fullPivLu().solve(sys.B);
    const Matrix Cm = sys.C * X;

    std::vector<Index> left;
    std::vector<Index> right;
    for (Index i = 0; i < n; ++i)
    {
        (lam(i).real() < 0.0 ? left : right).push_back(i);
    }
    auto by_position = [&](Index a, Index b) {
        if (lam(a).imag() != lam(b).imag())
        {
            return lam(a).imag() < lam(b).imag();
        }
        return lam(a).real() < lam(b).real();
    };
    std::stable_sort(left.begin(), left.end(), by_position);
    std::stable_sort(right.begin(), right.end(), by_position);

    auto part = [&](const std::vector<Index>& idx, const Matrix& D) {
        const Vector l = lam(idx);
        return StateSpaceSystem(l.asDiagonal(), Bm(idx, Eigen::all),
                                Cm(Eigen::all, idx), D);
    };
    out.stable     = part(left, sys.D);
    out.antistable = part(right, Matrix::Zero(sys.p(), sys.m()));
    return out;
}

} // namespace hnamor

#endif // HNAMOR_STABILIZE_HPP
