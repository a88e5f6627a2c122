///
/// \file core.hpp
///
/// Basic types shared by every stage: dense complex matrices, state-space
/// systems, transfer-function sample sets and the numerical error hierarchy.
///

#ifndef HNAMOR_CORE_HPP
#define HNAMOR_CORE_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace hnamor
{

using Complex    = std::complex<double>;
using Matrix     = Eigen::MatrixXcd;
using Vector     = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index      = Eigen::Index;

inline constexpr double machine_eps = std::numeric_limits<double>::epsilon();

//
// Error hierarchy. Every failure a numerical stage can report derives from
// NumericalError and carries a stable name used by the CLI on stderr.
//
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
    virtual const char* name() const noexcept { return "NumericalError"; }
};

#define HNAMOR_DEFINE_ERROR(ErrorName)                                         \
    class ErrorName : public NumericalError                                    \
    {                                                                          \
    public:                                                                    \
        using NumericalError::NumericalError;                                  \
        const char* name() const noexcept override { return #ErrorName; }     \
    }

HNAMOR_DEFINE_ERROR(SingularResolvent);
HNAMOR_DEFINE_ERROR(UnstableA);
HNAMOR_DEFINE_ERROR(NearSingularGramian);
HNAMOR_DEFINE_ERROR(SingularLeftFactor);
HNAMOR_DEFINE_ERROR(DegenerateNormalEquations);
HNAMOR_DEFINE_ERROR(VerificationFailed);
HNAMOR_DEFINE_ERROR(ImaginaryAxisEigenvalue);
HNAMOR_DEFINE_ERROR(DefectiveA);
HNAMOR_DEFINE_ERROR(ClusterTouchesTop);
HNAMOR_DEFINE_ERROR(DeltaTooSmall);
HNAMOR_DEFINE_ERROR(OrderingMismatch);
HNAMOR_DEFINE_ERROR(AllSingularValuesBelowGamma);
HNAMOR_DEFINE_ERROR(SingularX);
HNAMOR_DEFINE_ERROR(CholeskyFailure);
HNAMOR_DEFINE_ERROR(PoleAtMinusOne);

#undef HNAMOR_DEFINE_ERROR

/// A failure while evaluating a function at one grid point.
class EvaluationFailure : public NumericalError
{
public:
    EvaluationFailure(Complex point, const std::string& what)
        : NumericalError("evaluation failed at z = (" +
                         std::to_string(point.real()) + ", " +
                         std::to_string(point.imag()) + "): " + what),
          m_point(point)
    {
    }
    const char* name() const noexcept override { return "EvaluationFailure"; }
    Complex point() const noexcept { return m_point; }

private:
    Complex m_point;
};

/// Continuous-time LTI system x' = Ax + Bu, y = Cx + Du with complex data.
struct StateSpaceSystem
{
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    StateSpaceSystem() = default;

    StateSpaceSystem(Matrix a, Matrix b, Matrix c, Matrix d)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d))
    {
        if (A.rows() != A.cols() || B.rows() != A.rows() ||
            C.cols() != A.rows() || D.rows() != C.rows() ||
            D.cols() != B.cols())
        {
            throw std::invalid_argument(
                "StateSpaceSystem: incompatible dimensions");
        }
    }

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }

    /// A system with no states and the given feedthrough.
    static StateSpaceSystem static_gain(const Matrix& d)
    {
        return StateSpaceSystem(Matrix(0, 0), Matrix(0, d.cols()),
                                Matrix(d.rows(), 0), d);
    }

    /// The dual system (A*, C*, B*, D*).
    StateSpaceSystem dual() const
    {
        return StateSpaceSystem(A.adjoint(), C.adjoint(), B.adjoint(),
                                D.adjoint());
    }
};

/// Transfer-function samples {(z_i, G(z_i))} on the imaginary axis.
struct SampleSet
{
    std::vector<Complex> points;
    std::vector<Matrix> values;

    std::size_t size() const { return points.size(); }
    Index p() const { return values.empty() ? 0 : values.front().rows(); }
    Index m() const { return values.empty() ? 0 : values.front().cols(); }

    /// Checks the sample-set invariants; throws std::invalid_argument.
    void validate() const
    {
        if (points.size() != values.size())
        {
            throw std::invalid_argument("SampleSet: points/values mismatch");
        }
        double zmax = 0.0;
        for (const auto& z : points)
        {
            zmax = std::max(zmax, std::abs(z));
        }
        const double atol = 1e-12 * zmax;
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            if (std::abs(points[i].real()) > atol)
            {
                throw std::invalid_argument(
                    "SampleSet: point off the imaginary axis");
            }
            if (values[i].rows() != p() || values[i].cols() != m())
            {
                throw std::invalid_argument("SampleSet: ragged values");
            }
            if (!values[i].allFinite())
            {
                throw std::invalid_argument("SampleSet: non-finite value");
            }
        }
        std::vector<Complex> sorted(points);
        std::sort(sorted.begin(), sorted.end(),
                  [](Complex a, Complex b) { return a.imag() < b.imag(); });
        for (std::size_t i = 1; i < sorted.size(); ++i)
        {
            if (sorted[i] == sorted[i - 1])
            {
                throw std::invalid_argument("SampleSet: repeated point");
            }
        }
    }
};

//
// Norm helpers
//
inline double norm2(const Matrix& M)
{
    if (M.size() == 0)
    {
        return 0.0;
    }
    if (M.rows() == 1 || M.cols() == 1)
    {
        return M.norm();
    }
    if (std::min(M.rows(), M.cols()) > 32)
    {
        Eigen::BDCSVD<Matrix> svd(M);
        return svd.singularValues()(0);
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

inline double smallest_singular_value(const Matrix& M)
{
    if (M.size() == 0)
    {
        return std::numeric_limits<double>::infinity();
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

inline double condition_number(const Matrix& M)
{
    if (M.size() == 0)
    {
        return 1.0;
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

/// Eigenvalue λ of A counts as "on the imaginary axis" below this distance.
inline double axis_tolerance(const Matrix& A)
{
    return 1e-10 * std::max(1.0, norm2(A));
}

inline Matrix diag_matrix(const RealVector& d)
{
    return d.cast<Complex>().asDiagonal();
}

/// Block-diagonal sum of two systems: transfer functions add.
inline StateSpaceSystem parallel_sum(const StateSpaceSystem& a,
                                     const StateSpaceSystem& b)
{
    if (a.p() != b.p() || a.m() != b.m())
    {
        throw std::invalid_argument("parallel_sum: io dimensions differ");
    }
    const Index n = a.n() + b.n();
    Matrix A      = Matrix::Zero(n, n);
    A.topLeftCorner(a.n(), a.n())         = a.A;
    A.bottomRightCorner(b.n(), b.n())     = b.A;
    Matrix B(n, a.m());
    B << a.B, b.B;
    Matrix C(a.p(), n);
    C << a.C, b.C;
    return StateSpaceSystem(std::move(A), std::move(B), std::move(C),
                            a.D + b.D);
}

/// Reorders states: new state i is old state perm[i].
inline StateSpaceSystem permute_states(const StateSpaceSystem& sys,
                                       const std::vector<Index>& perm)
{
    return StateSpaceSystem(sys.A(perm, perm), sys.B(perm, Eigen::all),
                            sys.C(Eigen::all, perm), sys.D);
}

//
// Grid evaluation with an optional thread cap taken from MOR_NUM_THREADS.
// Results land in point order so reductions stay deterministic.
//
inline unsigned num_threads_from_env()
{
    const char* env = std::getenv("MOR_NUM_THREADS");
    if (env == nullptr)
    {
        return 0;
    }
    char* end     = nullptr;
    const long nt = std::strtol(env, &end, 10);
    return (end == env || nt < 0) ? 0U : static_cast<unsigned>(nt);
}

/// out[i] = fn(i) for i < count; exceptions are rethrown lowest index first.
template <typename T, typename Fn>
std::vector<T> index_map(std::size_t count, Fn&& fn)
{
    std::vector<T> out(count);
    const unsigned nt = num_threads_from_env();
    if (nt <= 1 || count < 2)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            out[i] = fn(i);
        }
        return out;
    }
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(nt, count);
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers)
            {
                try
                {
                    out[i] = fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
    {
        t.join();
    }
    for (const auto& e : errors)
    {
        if (e)
        {
            std::rethrow_exception(e);
        }
    }
    return out;
}

template <typename T, typename Fn>
std::vector<T> grid_map(const std::vector<Complex>& grid, Fn&& fn)
{
    return index_map<T>(grid.size(),
                        [&](std::size_t i) { return fn(grid[i]); });
}

} // namespace hnamor

#endif // HNAMOR_CORE_HPP
