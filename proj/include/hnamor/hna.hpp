///
/// \file hna.hpp
///
/// Hankel norm approximation with a tolerance for clustered singular values.
/// Builds the all-pass dilation (Ahat, Bhat, Chat, Dhat) of a balanced system
/// whose cluster of singular values around sigma_{k+1} is moved last.
///

#ifndef HNAMOR_HNA_HPP
#define HNAMOR_HNA_HPP

#include "hnamor/lti.hpp"

namespace hnamor
{

struct ClusterSelection
{
    Index j1 = 0; // 1-based, inclusive
    Index j2 = 0;
    Index r  = 0;
    double sigma_hat = 0.0;
    double epsilon   = 0.0;
    double delta     = 0.0;
};

/// Maximal range [j1, j2] around k+1 with |sigma_j - sigma_{k+1}| <= epsilon.
inline ClusterSelection select_cluster(const RealVector& sigma, Index k,
                                       double epsilon)
{
    const Index K = sigma.size();
    if (k < 0 || k >= K)
    {
        throw std::invalid_argument("select_cluster: need 0 <= k < K");
    }
    if (!(epsilon >= 0.0))
    {
        throw std::invalid_argument("select_cluster: need epsilon >= 0");
    }
    for (Index i = 1; i < K; ++i)
    {
        if (sigma(i) > sigma(i - 1))
        {
            throw std::invalid_argument("select_cluster: sigma not descending");
        }
    }
    ClusterSelection sel;
    sel.epsilon   = epsilon;
    sel.sigma_hat = sigma(k);
    Index lo      = k;
    while (lo > 0 && std::abs(sigma(lo - 1) - sel.sigma_hat) <= epsilon)
    {
        --lo;
    }
    Index hi = k;
    while (hi + 1 < K && std::abs(sigma(hi + 1) - sel.sigma_hat) <= epsilon)
    {
        ++hi;
    }
    sel.j1 = lo + 1;
    sel.j2 = hi + 1;
    sel.r  = sel.j2 - sel.j1 + 1;

    if (sel.j1 == 1 && k >= 1)
    {
        throw ClusterTouchesTop("select_cluster: the cluster around "
                                "sigma_{k+1} contains sigma_1");
    }
    const bool has_above = sel.j1 > 1;
    const bool has_below = sel.j2 < K;
    if (has_above && has_below)
    {
        sel.delta = std::min(sigma(sel.j1 - 2) - sel.sigma_hat,
                             sel.sigma_hat - sigma(sel.j2));
    }
    else if (has_above)
    {
        sel.delta = sigma(sel.j1 - 2) - sel.sigma_hat;
    }
    else if (has_below)
    {
        sel.delta = sel.sigma_hat - sigma(sel.j2);
    }
    else
    {
        sel.delta = sel.sigma_hat;
    }
    if (!(sel.delta > epsilon))
    {
        throw DeltaTooSmall("select_cluster: gap to the cluster (" +
                            std::to_string(sel.delta) +
                            ") does not exceed epsilon");
    }
    return sel;
}

/// Blocks of a balanced realization whose last r states are the cluster.
struct HnaPartition
{
    Matrix A11, A12, A21, A22;
    Matrix B1, B2;
    Matrix C1, C2;
    Matrix D;
    RealVector Sigma1;
    RealVector Sigma2;
};

inline HnaPartition partition(const BalancedSystem& bal,
                              const ClusterSelection& sel)
{
    const Index K = bal.sigma.size();
    const Index r = sel.r;
    if (r < 1 || r > K)
    {
        throw OrderingMismatch("partition: cluster size out of range");
    }
    const Index h    = K - r;
    const double tol = sel.epsilon + 4.0 * machine_eps *
                                         (K > 0 ? bal.sigma.maxCoeff() : 0.0);
    for (Index i = 0; i < K; ++i)
    {
        const bool inside = std::abs(bal.sigma(i) - sel.sigma_hat) <= tol;
        if (inside != (i >= h))
        {
            throw OrderingMismatch(
                "partition: the tail of sigma is not the selected cluster");
        }
    }
    const auto& s = bal.sys;
    HnaPartition part;
    part.A11    = s.A.topLeftCorner(h, h);
    part.A12    = s.A.topRightCorner(h, r);
    part.A21    = s.A.bottomLeftCorner(r, h);
    part.A22    = s.A.bottomRightCorner(r, r);
    part.B1     = s.B.topRows(h);
    part.B2     = s.B.bottomRows(r);
    part.C1     = s.C.leftCols(h);
    part.C2     = s.C.rightCols(r);
    part.D      = s.D;
    part.Sigma1 = bal.sigma.head(h);
    part.Sigma2 = bal.sigma.tail(r);
    return part;
}

/// Moore-Penrose pseudoinverse with relative truncation tolerance.
inline Matrix pinv(const Matrix& M, double rtol = 1e-12)
{
    if (M.size() == 0)
    {
        return Matrix::Zero(M.cols(), M.rows());
    }
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    const double cut    = rtol * s(0);
    RealVector inv      = RealVector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
    {
        if (s(i) > cut && s(i) > 0.0)
        {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * diag_matrix(inv) * svd.matrixU().adjoint();
}

/// Classical choice U = -C2 pinv(B2*).
inline Matrix glover_U(const Matrix& B2, const Matrix& C2)
{
    return -C2 * pinv(B2.adjoint());
}

struct UConstruction
{
    Matrix U;
    Index q = 0;
    /// Singular values of C2* padded with zeros to length r.
    RealVector s;
};

namespace detail
{

/// Extends the columns of V (m x q) by `extra` orthonormal columns that are
/// orthogonal to span(V). Candidates are canonical vectors ordered by the
/// size of their projection onto the complement.
inline Matrix complete_orthogonal(const Matrix& V, Index extra)
{
    const Index m = V.rows();
    Matrix basis(m, 0);
    if (V.cols() > 0 && V.norm() > 0.0)
    {
        Eigen::JacobiSVD<Matrix> svd(V, Eigen::ComputeThinU);
        const RealVector& s = svd.singularValues();
        Index rank          = 0;
        while (rank < s.size() &&
               s(rank) > static_cast<double>(m) * machine_eps * s(0))
        {
            ++rank;
        }
        basis = svd.matrixU().leftCols(rank);
    }
    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < m; ++i)
    {
        Vector e = Vector::Zero(m);
        e(i)     = 1.0;
        order.emplace_back((e - basis * (basis.adjoint() * e)).norm(), i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    Matrix out(m, extra);
    Index found = 0;
    for (const auto& [mag, i] : order)
    {
        if (found == extra)
        {
            break;
        }
        Vector v = Vector::Zero(m);
        v(i)     = 1.0;
        for (int pass = 0; pass < 2; ++pass)
        {
            v -= basis * (basis.adjoint() * v);
            v -= out.leftCols(found) * (out.leftCols(found).adjoint() * v);
        }
        const double nv = v.norm();
        if (nv > 1e-8)
        {
            out.col(found++) = v / nv;
        }
    }
    if (found < extra)
    {
        throw std::logic_error("complete_orthogonal: complement too small");
    }
    return out;
}

} // namespace detail

/// U = V_C V_B* from the SVD of C2*, keeping the q singular values above
/// gamma. Requires p <= m.
inline UConstruction build_U(const Matrix& B2, const Matrix& C2, double gamma)
{
    const Index r = B2.rows();
    const Index m = B2.cols();
    const Index p = C2.rows();
    if (C2.cols() != r)
    {
        throw std::invalid_argument("build_U: B2 and C2 disagree on r");
    }
    if (p > m)
    {
        throw std::invalid_argument("build_U: need p <= m (dualize first)");
    }
    Eigen::JacobiSVD<Matrix> svd(C2.adjoint(),
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    UConstruction out;
    out.s = RealVector::Zero(r);
    out.s.head(svd.singularValues().size()) = svd.singularValues();

    Index q = 0;
    while (q < svd.singularValues().size() && out.s(q) > gamma)
    {
        ++q;
    }
    if (q == 0)
    {
        if (svd.singularValues().size() == 0 || !(out.s(0) > 0.0))
        {
            throw AllSingularValuesBelowGamma(
                "build_U: the cluster block of C is zero");
        }
        q = 1;
    }
    out.q = q;

    const Matrix UC1 = svd.matrixU().leftCols(q);
    const RealVector s1inv = out.s.head(q).cwiseInverse();
    const Matrix VB1 = (-(diag_matrix(s1inv) * UC1.adjoint() * B2)).adjoint();
    Matrix VB(m, p);
    VB.leftCols(q)      = VB1;
    VB.rightCols(p - q) = detail::complete_orthogonal(VB1, p - q);
    out.U               = svd.matrixV() * VB.adjoint();
    return out;
}

/// Spectral norms of Delta1 = B2 + C2* U and Delta2 = I - U U*.
struct QeQu
{
    double Q_E = 0.0;
    double Q_U = 0.0;
};

inline QeQu qe_qu(const Matrix& B2, const Matrix& C2, const Matrix& U)
{
    const Matrix d1 = B2 + C2.adjoint() * U;
    const Matrix d2 = Matrix::Identity(U.rows(), U.rows()) - U * U.adjoint();
    return {norm2(d1), norm2(d2)};
}

enum class UMode
{
    glover,
    modified
};

/// Output of hna_reduce. `sys` and `U` are in the caller's frame. The
/// partition, U_work and hat_work live in the frame the formulas were applied
/// in, which is the dual one when p > m.
struct AllPassDilation
{
    StateSpaceSystem sys;
    Matrix U;
    ClusterSelection selection;
    HnaPartition part;
    Matrix U_work;
    StateSpaceSystem hat_work;
    /// Balanced system in the working frame, cluster last.
    BalancedSystem balanced_work;
    Index q = 0;
    RealVector c2_singular_values;
    double Q_E = 0.0;
    double Q_U = 0.0;
    bool dualized = false;
    Index k = 0;
};

/// Glover's formulas with Phi = Sigma1^2 - sigma_hat^2 I.
inline StateSpaceSystem glover_dilation(const HnaPartition& part,
                                        double sigma_hat, const Matrix& U)
{
    const RealVector phi =
        part.Sigma1.array().square() - sigma_hat * sigma_hat;
    const Matrix phi_inv = diag_matrix(phi.cwiseInverse());
    const Matrix S1      = diag_matrix(part.Sigma1);
    const double s2      = sigma_hat * sigma_hat;

    Matrix Ahat = phi_inv * (s2 * part.A11.adjoint() + S1 * part.A11 * S1 -
                             sigma_hat * part.C1.adjoint() * U *
                                 part.B1.adjoint());
    Matrix Bhat = phi_inv * (S1 * part.B1 + sigma_hat * part.C1.adjoint() * U);
    Matrix Chat = part.C1 * S1 + sigma_hat * U * part.B1.adjoint();
    Matrix Dhat = part.D - sigma_hat * U;
    return StateSpaceSystem(std::move(Ahat), std::move(Bhat), std::move(Chat),
                            std::move(Dhat));
}

/// Hankel norm approximation of target rank k. The balanced input may be in
/// any state order; it is sorted descending and the cluster around
/// sigma_{k+1} is moved last before the formulas are applied.
inline AllPassDilation hna_reduce(const BalancedSystem& bal, Index k,
                                  double epsilon, double gamma,
                                  UMode mode = UMode::modified)
{
    const Index K = bal.sigma.size();
    if (K == 0)
    {
        throw std::invalid_argument("hna_reduce: empty system");
    }
    AllPassDilation out;
    out.k        = k;
    out.dualized = bal.sys.p() > bal.sys.m();

    BalancedSystem work = bal;
    if (out.dualized)
    {
        work.sys = bal.sys.dual();
    }

    std::vector<Index> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return work.sigma(a) > work.sigma(b);
    });
    work.sys   = permute_states(work.sys, order);
    work.sigma = RealVector(work.sigma(order));

    out.selection = select_cluster(work.sigma, k, epsilon);
    if (K - out.selection.r < k)
    {
        throw std::invalid_argument("hna_reduce: need K - r >= k");
    }
    const auto tail =
        cluster_to_tail(K, ClusterRange{out.selection.j1, out.selection.j2});
    work.sys   = permute_states(work.sys, tail);
    work.sigma = RealVector(work.sigma(tail));

    out.part = partition(work, out.selection);
    if (mode == UMode::glover)
    {
        out.U_work = glover_U(out.part.B2, out.part.C2);
        out.q      = out.selection.r;
    }
    else
    {
        UConstruction uc           = build_U(out.part.B2, out.part.C2, gamma);
        out.U_work                 = std::move(uc.U);
        out.q                      = uc.q;
        out.c2_singular_values     = std::move(uc.s);
    }
    const QeQu qq = qe_qu(out.part.B2, out.part.C2, out.U_work);
    out.Q_E       = qq.Q_E;
    out.Q_U       = qq.Q_U;

    out.hat_work      = glover_dilation(out.part, out.selection.sigma_hat,
                                        out.U_work);
    out.balanced_work = std::move(work);
    out.sys = out.dualized ? out.hat_work.dual() : out.hat_work;
    out.U   = out.dualized ? Matrix(out.U_work.adjoint()) : out.U_work;
    return out;
}

} // namespace hnamor

#endif // HNAMOR_HNA_HPP
