///
/// \file aaa.hpp
///
/// Block-AAA: greedy barycentric rational fitting of matrix-valued samples
/// with Tikhonov-regularized weights, state-space realization and tuning of
/// the regularization parameter.
///

#ifndef HNAMOR_AAA_HPP
#define HNAMOR_AAA_HPP

#include <cmath>
#include <optional>

#include "hnamor/grids.hpp"
#include "hnamor/lti.hpp"

namespace hnamor
{

/// R(z) = (I + sum_j W_j/(z - z_j))^{-1} (sum_j W_j G_j/(z - z_j)).
struct BarycentricRational
{
    std::vector<Complex> support;
    std::vector<std::size_t> support_indices;
    std::vector<Matrix> weights; // p x p
    std::vector<Matrix> values;  // p x m
    double lambda = 0.0;

    std::size_t degree() const { return support.size(); }
    Index p() const { return values.empty() ? 0 : values.front().rows(); }
    Index m() const { return values.empty() ? 0 : values.front().cols(); }
};

inline Matrix eval_barycentric(const BarycentricRational& R, Complex z)
{
    const std::size_t d = R.degree();
    const Index p       = R.p();
    const Index m       = R.m();
    double scale        = 1.0;
    for (const auto& s : R.support)
    {
        scale = std::max(scale, std::abs(s));
    }
    for (std::size_t j = 0; j < d; ++j)
    {
        if (std::abs(z - R.support[j]) <= 1e-13 * scale)
        {
            return R.values[j];
        }
    }
    Matrix left  = Matrix::Identity(p, p);
    Matrix right = Matrix::Zero(p, m);
    for (std::size_t j = 0; j < d; ++j)
    {
        const Complex c = 1.0 / (z - R.support[j]);
        left += c * R.weights[j];
        right += c * (R.weights[j] * R.values[j]);
    }
    Eigen::PartialPivLU<Matrix> lu(left);
    if (!(lu.rcond() > static_cast<double>(p) * machine_eps))
    {
        throw SingularLeftFactor("barycentric left factor is singular");
    }
    return lu.solve(right);
}

/// Regularized least-squares weights for the given support (sample indices).
/// Minimizes |G + W M|_F^2 + lambda |W|_F^2 through the augmented system
/// [M*; sqrt(lambda) I] W* = [-G*; 0].
inline std::vector<Matrix> solve_weights(const SampleSet& samples,
                                         const std::vector<std::size_t>& support,
                                         double lambda)
{
    const std::size_t N = samples.size();
    const std::size_t d = support.size();
    if (d == 0 || d >= N)
    {
        throw std::invalid_argument(
            "solve_weights: support must be a nonempty strict subset");
    }
    if (lambda < 0.0)
    {
        throw std::invalid_argument("solve_weights: lambda must be >= 0");
    }
    const Index p = samples.p();
    const Index m = samples.m();

    std::vector<bool> in_support(N, false);
    for (auto j : support)
    {
        in_support.at(j) = true;
    }
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < N; ++k)
    {
        if (!in_support[k])
        {
            rest.push_back(k);
        }
    }

    const Index rows_m = m * static_cast<Index>(rest.size());
    const Index unk    = p * static_cast<Index>(d);
    const bool reg     = lambda > 0.0;
    Matrix lhs         = Matrix::Zero(rows_m + (reg ? unk : 0), unk);
    Matrix rhs         = Matrix::Zero(lhs.rows(), p);
    for (std::size_t r = 0; r < rest.size(); ++r)
    {
        const std::size_t k = rest[r];
        const Index row     = m * static_cast<Index>(r);
        for (std::size_t j = 0; j < d; ++j)
        {
            const std::size_t s = support[j];
            lhs.block(row, p * static_cast<Index>(j), m, p) =
                ((samples.values[k] - samples.values[s]) /
                 (samples.points[k] - samples.points[s]))
                    .adjoint();
        }
        rhs.block(row, 0, m, p) = -samples.values[k].adjoint();
    }
    if (reg)
    {
        lhs.bottomRows(unk).diagonal().setConstant(std::sqrt(lambda));
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(lhs);
    if (!reg && qr.rank() < unk)
    {
        throw DegenerateNormalEquations(
            "solve_weights: divided-difference matrix is rank deficient and "
            "lambda = 0");
    }
    const Matrix X = qr.solve(rhs);
    std::vector<Matrix> W(d);
    for (std::size_t j = 0; j < d; ++j)
    {
        W[j] = X.middleRows(p * static_cast<Index>(j), p).adjoint();
    }
    return W;
}

/// Least-squares objective |G + W M|_F^2 for given weights (no penalty).
inline double weights_misfit(const SampleSet& samples,
                             const std::vector<std::size_t>& support,
                             const std::vector<Matrix>& W)
{
    std::vector<bool> in_support(samples.size(), false);
    for (auto j : support)
    {
        in_support[j] = true;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k)
    {
        if (in_support[k])
        {
            continue;
        }
        Matrix res = samples.values[k];
        for (std::size_t j = 0; j < support.size(); ++j)
        {
            const std::size_t s = support[j];
            res += W[j] * (samples.values[k] - samples.values[s]) /
                   (samples.points[k] - samples.points[s]);
        }
        total += res.squaredNorm();
    }
    return total;
}

struct AaaOptions
{
    std::size_t d_max = 60;
    double tol        = 1e-8;
    /// Empty means automatic tuning.
    std::optional<double> lambda = 0.0;
    std::vector<std::size_t> seed_support;
    /// Consecutive non-improving steps before giving up; 0 disables.
    int stall_limit = 5;
};

struct AaaResult
{
    BarycentricRational rational;
    /// Relative error after each degree: max_i |R(z_i) - G_i|_F / max_i |G_i|_F
    /// over non-support samples.
    std::vector<double> history;
    /// Relative error of the returned rational.
    double error_rel = 0.0;
    /// Absolute spectral-norm error max_i |R(z_i) - G_i|_2 of the result.
    double error_abs = 0.0;
    bool no_progress = false;
};

namespace detail
{

inline double sample_scale(const SampleSet& samples)
{
    double s = 0.0;
    for (const auto& v : samples.values)
    {
        s = std::max(s, v.norm());
    }
    return s > 0.0 ? s : 1.0;
}

/// Frobenius errors at all samples (support samples get 0; spurious poles
/// count as infinite). Also returns the spectral max over non-support samples.
inline std::vector<double> fit_errors(const SampleSet& samples,
                                      const BarycentricRational& R,
                                      const std::vector<bool>& in_support,
                                      double* spectral_max)
{
    const auto diffs = index_map<std::pair<double, double>>(
        samples.size(), [&](std::size_t i) -> std::pair<double, double> {
            if (in_support[i])
            {
                return {0.0, 0.0};
            }
            try
            {
                const Matrix e =
                    eval_barycentric(R, samples.points[i]) - samples.values[i];
                return {e.norm(), norm2(e)};
            }
            catch (const SingularLeftFactor&)
            {
                const double inf = std::numeric_limits<double>::infinity();
                return {inf, inf};
            }
        });
    std::vector<double> out(diffs.size());
    double smax = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
    {
        out[i] = diffs[i].first;
        smax   = std::max(smax, diffs[i].second);
    }
    if (spectral_max != nullptr)
    {
        *spectral_max = smax;
    }
    return out;
}

inline BarycentricRational make_rational(const SampleSet& samples,
                                         const std::vector<std::size_t>& support,
                                         std::vector<Matrix> weights,
                                         double lambda)
{
    BarycentricRational R;
    R.support_indices = support;
    for (auto s : support)
    {
        R.support.push_back(samples.points[s]);
        R.values.push_back(samples.values[s]);
    }
    R.weights = std::move(weights);
    R.lambda  = lambda;
    return R;
}

} // namespace detail

struct LambdaTuning
{
    double lambda = 0.0;
    /// log10(E1) - log10(E2) at the returned lambda.
    double gap = 0.0;
    double e1  = 0.0;
    double e2  = 0.0;
};

inline LambdaTuning tune_lambda(const SampleSet& samples, std::size_t d);

/// Greedy block-AAA.
inline AaaResult aaa_fit(const SampleSet& samples, const AaaOptions& opts)
{
    samples.validate();
    const std::size_t N = samples.size();
    if (opts.d_max < 1 || !(opts.tol >= 0.0))
    {
        throw std::invalid_argument("aaa_fit: need d_max >= 1 and tol >= 0");
    }
    if (N <= opts.d_max)
    {
        throw std::invalid_argument("aaa_fit: need more samples than d_max");
    }
    const double lambda =
        opts.lambda ? *opts.lambda : tune_lambda(samples, opts.d_max).lambda;

    const double scale = detail::sample_scale(samples);
    std::vector<bool> in_support(N, false);
    std::vector<std::size_t> support;

    // R_0 = 0, so the current errors are the sample norms.
    std::vector<double> err(N);
    for (std::size_t i = 0; i < N; ++i)
    {
        err[i] = samples.values[i].norm();
    }

    AaaResult result;
    AaaResult best;
    best.error_rel = std::numeric_limits<double>::infinity();
    int stalled    = 0;
    std::size_t seed_pos = 0;

    while (support.size() < opts.d_max)
    {
        std::size_t pick = N;
        while (seed_pos < opts.seed_support.size())
        {
            const std::size_t s = opts.seed_support[seed_pos++];
            if (s < N && !in_support[s])
            {
                pick = s;
                break;
            }
        }
        if (pick == N)
        {
            double worst = -1.0;
            for (std::size_t i = 0; i < N; ++i)
            {
                if (!in_support[i] && err[i] > worst)
                {
                    worst = err[i];
                    pick  = i;
                }
            }
        }
        support.push_back(pick);
        in_support[pick] = true;

        auto W = solve_weights(samples, support, lambda);
        result.rational =
            detail::make_rational(samples, support, std::move(W), lambda);
        double smax = 0.0;
        err = detail::fit_errors(samples, result.rational, in_support, &smax);
        const double e1 = *std::max_element(err.begin(), err.end()) / scale;
        result.history.push_back(e1);
        result.error_rel = e1;
        result.error_abs = smax;

        if (e1 < best.error_rel)
        {
            best.rational  = result.rational;
            best.error_rel = e1;
            best.error_abs = smax;
            stalled        = 0;
        }
        else if (opts.stall_limit > 0 && ++stalled >= opts.stall_limit)
        {
            // Give up and fall back to the best fit seen so far.
            best.history     = std::move(result.history);
            best.no_progress = true;
            return best;
        }
        if (opts.tol > 0.0 && e1 <= opts.tol)
        {
            break;
        }
    }
    return result;
}

/// Fixed-degree fit: exactly d greedy steps, no stall exit.
inline AaaResult aaa_fit_degree(const SampleSet& samples, std::size_t d,
                                double lambda)
{
    AaaOptions opts;
    opts.d_max       = d;
    opts.tol         = 0.0;
    opts.lambda      = lambda;
    opts.stall_limit = 0;
    return aaa_fit(samples, opts);
}

/// Max relative mismatch between a realization and its barycentric form.
struct Mismatch
{
    double value  = 0.0;
    Complex point = 0.0;
    std::size_t checked = 0;
};

inline Mismatch realization_mismatch(const BarycentricRational& R,
                                     const StateSpaceSystem& sys,
                                     const std::vector<Complex>& grid)
{
    double scale = 1.0;
    for (const auto& s : R.support)
    {
        scale = std::max(scale, std::abs(s));
    }
    const auto rel = grid_map<double>(grid, [&](Complex z) -> double {
        for (const auto& s : R.support)
        {
            if (std::abs(z - s) <= 1e-10 * scale)
            {
                return -1.0;
            }
        }
        try
        {
            const Matrix r = eval_barycentric(R, z);
            const Matrix t = eval_transfer(sys, z);
            return norm2(t - r) / std::max(1.0, norm2(r));
        }
        catch (const NumericalError&)
        {
            return -1.0;
        }
    });
    Mismatch out;
    for (std::size_t i = 0; i < rel.size(); ++i)
    {
        if (rel[i] < 0.0)
        {
            continue;
        }
        ++out.checked;
        if (rel[i] > out.value || !std::isfinite(rel[i]))
        {
            out.value = rel[i];
            out.point = grid[i];
        }
    }
    return out;
}

/// State-space realization (A, B, C, 0) of a barycentric rational with
/// A = diag(z_j I_p) - 1 (x) [W_1 ... W_d], B = [G_1; ...; G_d], C = [W_1 ... W_d].
inline StateSpaceSystem realize(const BarycentricRational& R, bool verify = true)
{
    const std::size_t d = R.degree();
    if (d == 0)
    {
        throw std::invalid_argument("realize: empty rational");
    }
    const Index p = R.p();
    const Index m = R.m();
    const Index n = p * static_cast<Index>(d);
    Matrix C(p, n);
    Matrix B(n, m);
    for (std::size_t j = 0; j < d; ++j)
    {
        C.middleCols(p * static_cast<Index>(j), p) = R.weights[j];
        B.middleRows(p * static_cast<Index>(j), p) = R.values[j];
    }
    Matrix A(n, n);
    for (std::size_t j = 0; j < d; ++j)
    {
        A.middleRows(p * static_cast<Index>(j), p) = -C;
        A.block(p * static_cast<Index>(j), p * static_cast<Index>(j), p, p)
            .diagonal()
            .array() += R.support[j];
    }
    StateSpaceSystem sys(std::move(A), std::move(B), std::move(C),
                         Matrix::Zero(p, m));
    if (verify)
    {
        const Mismatch mm =
            realization_mismatch(R, sys, sample_moebius_uniform(64));
        if (mm.value > 1e-8 || !std::isfinite(mm.value))
        {
            throw VerificationFailed(
                "realize: realization deviates from the barycentric form by " +
                std::to_string(mm.value) + " at z = " +
                std::to_string(mm.point.imag()) +
                "i; consider a larger lambda");
        }
    }
    return sys;
}

/// Balances the fit error E1 against the realization mismatch E2 by
/// bisection on log10(lambda) in [-16, 0].
inline LambdaTuning tune_lambda(const SampleSet& samples, std::size_t d)
{
    const double scale = detail::sample_scale(samples);
    constexpr double floor_val = 1e-18;
    auto probe = [&](double log_lambda) {
        LambdaTuning t;
        t.lambda = std::pow(10.0, log_lambda);
        AaaResult fit;
        try
        {
            fit = aaa_fit_degree(samples, d, t.lambda);
        }
        catch (const NumericalError&)
        {
            t.e1  = std::numeric_limits<double>::infinity();
            t.e2  = floor_val;
            t.gap = std::numeric_limits<double>::infinity();
            return t;
        }
        t.e1 = fit.error_rel;
        const StateSpaceSystem sys = realize(fit.rational, false);
        std::vector<Complex> pts;
        std::vector<bool> in_support(samples.size(), false);
        for (auto s : fit.rational.support_indices)
        {
            in_support[s] = true;
        }
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            if (!in_support[i])
            {
                pts.push_back(samples.points[i]);
            }
        }
        const auto mism = grid_map<double>(pts, [&](Complex z) -> double {
            try
            {
                return (eval_barycentric(fit.rational, z) -
                        eval_transfer(sys, z))
                           .norm() /
                       scale;
            }
            catch (const NumericalError&)
            {
                return std::numeric_limits<double>::infinity();
            }
        });
        t.e2 = floor_val;
        for (double v : mism)
        {
            t.e2 = std::max(t.e2, v);
        }
        t.gap = std::log10(std::max(t.e1, floor_val)) - std::log10(t.e2);
        return t;
    };

    LambdaTuning best = probe(-16.0);
    if (std::abs(best.gap) <= 1.0)
    {
        return best;
    }
    double lo                = -16.0;
    double hi                = 0.0;
    const double gap_lo      = best.gap;
    LambdaTuning at_hi       = probe(hi);
    if (std::abs(at_hi.gap) < std::abs(best.gap))
    {
        best = at_hi;
    }
    if (std::abs(at_hi.gap) <= 1.0 || (gap_lo > 0.0) == (at_hi.gap > 0.0))
    {
        return best;
    }
    for (int step = 0; step < 20; ++step)
    {
        const double mid     = 0.5 * (lo + hi);
        const LambdaTuning t = probe(mid);
        if (std::abs(t.gap) < std::abs(best.gap))
        {
            best = t;
        }
        if (std::abs(t.gap) <= 1.0)
        {
            return t;
        }
        // E1 grows and E2 shrinks with lambda, so the gap is increasing.
        if ((t.gap > 0.0) == (gap_lo > 0.0))
        {
            lo = mid;
        }
        else
        {
            hi = mid;
        }
    }
    return best;
}

/// Two fits with different regularization; the second fits the residual of
/// the first. Returns the sum of both realizations.
inline StateSpaceSystem aaa_two_pass(const SampleSet& samples, std::size_t d1,
                                     double lambda1, std::size_t d2,
                                     double lambda2)
{
    if (d1 + d2 > samples.size() - 1)
    {
        throw std::invalid_argument("aaa_two_pass: d1 + d2 exceeds N - 1");
    }
    const AaaResult first = aaa_fit_degree(samples, d1, lambda1);
    SampleSet residual;
    residual.points = samples.points;
    residual.values.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        residual.values.push_back(
            samples.values[i] - eval_barycentric(first.rational, samples.points[i]));
    }
    const AaaResult second = aaa_fit_degree(residual, d2, lambda2);
    return parallel_sum(realize(first.rational), realize(second.rational));
}

} // namespace hnamor

#endif // HNAMOR_AAA_HPP
