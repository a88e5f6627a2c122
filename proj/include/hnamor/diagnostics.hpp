///
/// \file diagnostics.hpp
///
/// Numerical checks for a Hankel norm approximation: algebraic identities
/// between the blocks, rank criteria via pseudospectral margins, the X(z)
/// conditioning probe and the bounds on Q_E and Q_U.
///

#ifndef HNAMOR_DIAGNOSTICS_HPP
#define HNAMOR_DIAGNOSTICS_HPP

#include <map>

#include <json.hpp>

#include "hnamor/grids.hpp"
#include "hnamor/hna.hpp"

namespace hnamor
{

using LemmaResiduals = std::map<std::string, double>;

namespace detail
{

inline double rel_residual(const Matrix& lhs, const Matrix& rhs)
{
    return (lhs - rhs).norm() / (1.0 + rhs.norm());
}

} // namespace detail

/// Relative residuals ||LHS - RHS||_F / (1 + ||RHS||_F) of the identities
/// linking the balanced blocks, U and the dilation (Ahat, Bhat, Chat, Dhat).
inline LemmaResiduals lemma_residuals(const HnaPartition& part,
                                      double sigma_hat, const Matrix& U,
                                      const StateSpaceSystem& hat)
{
    const Index h = part.Sigma1.size();
    const Index r = part.Sigma2.size();
    const Index p = U.rows();
    const Index m = U.cols();
    const double sh = sigma_hat;

    const Matrix S1      = diag_matrix(part.Sigma1);
    const Matrix S2      = diag_matrix(part.Sigma2);
    const RealVector phi = part.Sigma1.array().square() - sh * sh;
    const Matrix Phi     = diag_matrix(phi);
    const Matrix Phi_inv = diag_matrix(phi.cwiseInverse());
    const Matrix Ir      = Matrix::Identity(r, r);
    const Matrix D1      = part.B2 + part.C2.adjoint() * U;
    const Matrix D2      = Matrix::Identity(p, p) - U * U.adjoint();
    const Matrix S2m     = S2 - sh * Ir;

    LemmaResiduals res;
    res["b2_u_identity"] = detail::rel_residual(
        part.B2 * U.adjoint(),
        D1 * U.adjoint() + part.C2.adjoint() * D2 - part.C2.adjoint());

    if (h > 0)
    {
        res["a11_ahat_sum"] = detail::rel_residual(
            part.A11 + hat.A.adjoint() + part.B1 * hat.B.adjoint(),
            Matrix::Zero(h, h));
        res["a21_bhat"] = detail::rel_residual(
            part.A21 + part.B2 * hat.B.adjoint(),
            (sh * S2m * part.A21 - S2m * part.A12.adjoint() * S1 +
             sh * D1 * U.adjoint() * part.C1 +
             sh * part.C2.adjoint() * D2 * part.C1) *
                Phi_inv);
        res["ahat_gramian"] = detail::rel_residual(
            hat.A * S1 * Phi_inv + S1 * Phi_inv * hat.A.adjoint() +
                hat.B * hat.B.adjoint(),
            -sh * sh * Phi_inv * part.C1.adjoint() * D2 * part.C1 * Phi_inv);
        res["a11_phi_ahat"] = detail::rel_residual(
            part.A11.adjoint() * Phi + Phi * hat.A +
                part.C1.adjoint() * hat.C,
            Matrix::Zero(h, h));
        res["a12_phi_chat"] = detail::rel_residual(
            part.A12.adjoint() * Phi + part.C2.adjoint() * hat.C,
            sh * S2m * part.A12.adjoint() - S2m * part.A21 * S1 +
                sh * D1 * part.B1.adjoint());
    }

    // Augmented error system and its candidate Gramian.
    const Index ne = 2 * h + r;
    Matrix Be(ne, m);
    Be << part.B1, part.B2, hat.B;
    Matrix Ce(p, ne);
    Ce << part.C1, part.C2, -hat.C;
    const Matrix De = part.D - hat.D;
    Matrix Pe       = Matrix::Zero(ne, ne);
    Pe.topLeftCorner(h, h)                 = S1;
    Pe.block(h, h, r, r)                   = sh * Ir;
    Pe.topRightCorner(h, h)                = Matrix::Identity(h, h);
    Pe.bottomLeftCorner(h, h)              = Matrix::Identity(h, h);
    Pe.bottomRightCorner(h, h)             = S1 * Phi_inv;
    Matrix rhs = Matrix::Zero(p, ne);
    rhs.middleCols(h, r) = sh * (U * D1.adjoint() + D2.adjoint() * part.C2);
    rhs.rightCols(h)     = -sh * sh * D2 * part.C1 * Phi_inv;
    res["augmented_output"] = detail::rel_residual(De * Be.adjoint() + Ce * Pe,
                                                   rhs);
    return res;
}

/// Counts of eigenvalues with negative, (numerically) zero and positive real
/// part.
struct Inertia
{
    Index negative = 0;
    Index zero     = 0;
    Index positive = 0;

    bool operator==(const Inertia&) const = default;
};

inline Inertia inertia(const Matrix& A)
{
    Inertia in;
    if (A.rows() == 0)
    {
        return in;
    }
    const double atol = axis_tolerance(A);
    Eigen::ComplexEigenSolver<Matrix> eig(A, false);
    for (Index i = 0; i < A.rows(); ++i)
    {
        const double re = eig.eigenvalues()(i).real();
        if (re < -atol)
        {
            ++in.negative;
        }
        else if (re > atol)
        {
            ++in.positive;
        }
        else
        {
            ++in.zero;
        }
    }
    return in;
}

/// min over the grid of sigma_min(zI - M); +inf for an empty M.
inline double axis_margin(const Matrix& M, const std::vector<Complex>& grid)
{
    if (M.rows() == 0)
    {
        return std::numeric_limits<double>::infinity();
    }
    const auto vals = grid_map<double>(grid, [&](Complex z) {
        Matrix S = -M;
        S.diagonal().array() += z;
        return smallest_singular_value(S);
    });
    return *std::min_element(vals.begin(), vals.end());
}

struct RankCriteria
{
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;
    double margin_hat   = 0.0; // Ahat
    double margin_a11   = 0.0;
    double margin_full  = 0.0; // full balanced A
    bool pass_a = false;
    bool pass_b = false;
    bool pass_c = false;
};

inline RankCriteria rank_criteria(const HnaPartition& part,
                                  const StateSpaceSystem& hat,
                                  const Matrix& A_full, double Q_E,
                                  double Q_U, double delta, double epsilon,
                                  const std::vector<Complex>& grid)
{
    RankCriteria rc;
    const double c1 = norm2(part.C1);
    const double b1 = norm2(part.B1);
    rc.rho1         = c1 * c1 * Q_U / (2.0 * delta);
    rc.rho2 = rc.rho1 + b1 * std::sqrt(c1 * c1 * Q_U / (delta * delta) +
                                       2.0 * rc.rho1 / delta);
    rc.rho3 = 2.0 * rc.rho2 +
              (epsilon * norm2(part.A21) + epsilon * norm2(part.A12) +
               Q_E * std::sqrt(1.0 + Q_U) * c1 +
               c1 * norm2(part.C2) * Q_U) /
                  delta;
    rc.margin_hat  = axis_margin(hat.A, grid);
    rc.margin_a11  = axis_margin(part.A11, grid);
    rc.margin_full = axis_margin(A_full, grid);
    rc.pass_a      = rc.margin_hat > rc.rho1;
    rc.pass_b      = rc.margin_a11 > rc.rho2;
    rc.pass_c      = rc.margin_full > rc.rho3;
    return rc;
}

/// X(z) = -z Phi - sigma_hat^2 A11 + Sigma1 A11* Sigma1 - sigma_hat B1 U* C1.
inline Matrix x_matrix(const HnaPartition& part, double sigma_hat,
                       const Matrix& U, Complex z)
{
    const RealVector phi =
        part.Sigma1.array().square() - sigma_hat * sigma_hat;
    const Matrix S1 = diag_matrix(part.Sigma1);
    return -z * diag_matrix(phi) - sigma_hat * sigma_hat * part.A11 +
           S1 * part.A11.adjoint() * S1 -
           sigma_hat * part.B1 * U.adjoint() * part.C1;
}

struct XzProbe
{
    double sup   = 0.0;
    Complex point = 0.0;
};

class SingularXAt : public SingularX
{
public:
    SingularXAt(Complex z, const std::string& what) : SingularX(what), m_z(z) {}
    Complex point() const noexcept { return m_z; }

private:
    Complex m_z;
};

/// sup over the grid of ||X(z)^{-1}||_2.
inline XzProbe xz_probe(const HnaPartition& part, double sigma_hat,
                        const Matrix& U, const std::vector<Complex>& grid)
{
    if (part.Sigma1.size() == 0)
    {
        throw std::invalid_argument("xz_probe: needs K - r >= 1");
    }
    const auto vals = grid_map<double>(grid, [&](Complex z) {
        const Matrix X = x_matrix(part, sigma_hat, U, z);
        Eigen::JacobiSVD<Matrix> svd(X);
        const RealVector& s = svd.singularValues();
        const double smin   = s(s.size() - 1);
        if (!(smin > static_cast<double>(X.rows()) * machine_eps * s(0)))
        {
            throw SingularXAt(z, "xz_probe: X(z) is singular at z = " +
                                     std::to_string(z.imag()) + "i");
        }
        return 1.0 / smin;
    });
    XzProbe out{vals[0], grid[0]};
    for (std::size_t i = 1; i < vals.size(); ++i)
    {
        if (vals[i] > out.sup)
        {
            out = {vals[i], grid[i]};
        }
    }
    return out;
}

struct BoundCheck
{
    double measured = 0.0;
    double bound    = 0.0;
    bool applicable = true;
    bool pass       = true;
};

struct QeQuBounds
{
    double Q1 = 0.0;
    double Q2 = 0.0;
    BoundCheck qe;
    BoundCheck qu;
    bool hermitian_a22 = false;
};

inline bool is_hermitian(const Matrix& M, double rtol = 1e-12)
{
    return (M - M.adjoint()).norm() <= rtol * std::max(1.0, M.norm());
}

/// Upper bounds on Q_E and Q_U for the SVD-based U. `s` holds the singular
/// values of C2 (padded with zeros) and q the number kept.
inline QeQuBounds qequ_bounds(const HnaPartition& part, double epsilon,
                              double gamma, Index q, const RealVector& s,
                              const Matrix& U)
{
    constexpr double slack = 1e-10;
    QeQuBounds out;
    const Index r      = part.Sigma2.size();
    const double a22   = norm2(part.A22);
    const double a22f  = part.A22.norm();
    out.hermitian_a22  = is_hermitian(part.A22);
    const QeQu measured = qe_qu(part.B2, part.C2, U);

    out.Q1 = (q == r) ? 0.0
                      : gamma + std::sqrt(gamma * gamma + 4.0 * epsilon * a22);
    const double sq  = q >= 1 && q <= s.size() ? s(q - 1) : 0.0;
    const double sq1 = q < s.size() ? s(q) : 0.0;
    const double nu  = sq - sq1;
    const double den = nu - 4.0 * epsilon * a22f;
    out.qe.measured  = measured.Q_E;
    if (q == r || out.hermitian_a22)
    {
        out.Q2 = 0.0;
    }
    else if (den > 0.0)
    {
        out.Q2 = 4.0 * std::sqrt(2.0) * epsilon * a22f / den * norm2(part.B2);
    }
    else
    {
        out.qe.applicable = false;
    }
    out.qe.bound = out.Q1 + out.Q2;
    out.qe.pass  = !out.qe.applicable || out.qe.measured <= out.qe.bound + slack;

    out.qu.measured = measured.Q_U;
    out.qu.bound    = sq > 0.0 ? 4.0 * epsilon * a22 / (sq * sq)
                               : std::numeric_limits<double>::infinity();
    out.qu.pass     = out.qu.measured <= out.qu.bound + slack;
    return out;
}

struct HnaDiagnostics
{
    double Q_E = 0.0;
    double Q_U = 0.0;
    double delta     = 0.0;
    double epsilon   = 0.0;
    double sigma_hat = 0.0;
    Index j1 = 0;
    Index j2 = 0;
    Index r  = 0;
    Index k  = 0;
    Index q  = 0;
    RankCriteria rank;
    LemmaResiduals lemma;
    std::optional<XzProbe> xz;
    std::string xz_error;
    std::optional<QeQuBounds> bounds;
    Inertia inertia_hat;
    Inertia inertia_expected;
};

/// All checks for one hna_reduce result, evaluated in its working frame.
/// `gamma` is only used for the bounds of the SVD-based construction.
inline HnaDiagnostics diagnose(const AllPassDilation& hna, double gamma,
                               const std::vector<Complex>& grid =
                                   sample_moebius_uniform(512))
{
    HnaDiagnostics d;
    const auto& sel = hna.selection;
    d.Q_E       = hna.Q_E;
    d.Q_U       = hna.Q_U;
    d.delta     = sel.delta;
    d.epsilon   = sel.epsilon;
    d.sigma_hat = sel.sigma_hat;
    d.j1        = sel.j1;
    d.j2        = sel.j2;
    d.r         = sel.r;
    d.k         = hna.k;
    d.q         = hna.q;

    d.lemma = lemma_residuals(hna.part, sel.sigma_hat, hna.U_work, hna.hat_work);
    d.rank  = rank_criteria(hna.part, hna.hat_work, hna.balanced_work.sys.A,
                            hna.Q_E, hna.Q_U, sel.delta, sel.epsilon, grid);
    if (hna.part.Sigma1.size() > 0)
    {
        try
        {
            d.xz = xz_probe(hna.part, sel.sigma_hat, hna.U_work, grid);
        }
        catch (const SingularX& e)
        {
            d.xz_error = e.what();
        }
    }
    if (hna.c2_singular_values.size() > 0)
    {
        d.bounds = qequ_bounds(hna.part, sel.epsilon, gamma, hna.q,
                               hna.c2_singular_values, hna.U_work);
    }
    d.inertia_hat = inertia(hna.hat_work.A);
    const Index K = hna.balanced_work.sigma.size();
    d.inertia_expected = {sel.j1 - 1, 0, K - sel.r - (sel.j1 - 1)};
    return d;
}

inline nlohmann::json to_json(const HnaDiagnostics& d)
{
    nlohmann::json j;
    j["Q_E"]       = d.Q_E;
    j["Q_U"]       = d.Q_U;
    j["delta"]     = d.delta;
    j["epsilon"]   = d.epsilon;
    j["sigma_hat"] = d.sigma_hat;
    j["cluster"]   = {{"j1", d.j1}, {"j2", d.j2}, {"r", d.r}};
    j["k"]         = d.k;
    j["q"]         = d.q;
    j["rank_criteria"] = {
        {"rho1", d.rank.rho1},           {"rho2", d.rank.rho2},
        {"rho3", d.rank.rho3},           {"margin_hat", d.rank.margin_hat},
        {"margin_a11", d.rank.margin_a11}, {"margin_full", d.rank.margin_full},
        {"pass_a", d.rank.pass_a},       {"pass_b", d.rank.pass_b},
        {"pass_c", d.rank.pass_c}};
    // JSON has no infinity; empty blocks report a null margin.
    for (const char* key : {"margin_hat", "margin_a11", "margin_full"})
    {
        if (!std::isfinite(j["rank_criteria"][key].get<double>()))
        {
            j["rank_criteria"][key] = nullptr;
        }
    }
    j["lemma_residuals"] = d.lemma;
    if (d.xz)
    {
        j["xz_inv_sup"]   = d.xz->sup;
        j["xz_argmax_im"] = d.xz->point.imag();
    }
    else
    {
        j["xz_inv_sup"] = nullptr;
        if (!d.xz_error.empty())
        {
            j["xz_error"] = d.xz_error;
        }
    }
    if (d.bounds)
    {
        auto check = [](const BoundCheck& c) {
            nlohmann::json b = {{"measured", c.measured},
                                {"applicable", c.applicable},
                                {"pass", c.pass}};
            b["bound"] = std::isfinite(c.bound) ? nlohmann::json(c.bound)
                                                : nlohmann::json(nullptr);
            return b;
        };
        j["bounds"] = {{"Q1", d.bounds->Q1},
                       {"Q2", d.bounds->Q2},
                       {"hermitian_a22", d.bounds->hermitian_a22},
                       {"Q_E", check(d.bounds->qe)},
                       {"Q_U", check(d.bounds->qu)}};
    }
    auto in = [](const Inertia& x) {
        return nlohmann::json::array({x.negative, x.zero, x.positive});
    };
    j["inertia_hat"]      = in(d.inertia_hat);
    j["inertia_expected"] = in(d.inertia_expected);
    return j;
}

} // namespace hnamor

#endif // HNAMOR_DIAGNOSTICS_HPP
