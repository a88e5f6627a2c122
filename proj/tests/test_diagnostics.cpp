#include <gtest/gtest.h>

#include "hnamor/hnamor.hpp"
#include "support/suites.hpp"

using namespace hnamor;

namespace
{

StateSpaceSystem scalar(double a, double b, double c, double d)
{
    return StateSpaceSystem(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                            Matrix::Constant(1, 1, c), Matrix::Constant(1, 1, d));
}

double worst(const LemmaResiduals& res)
{
    double w = 0.0;
    for (const auto& [name, v] : res)
    {
        w = std::max(w, v);
    }
    return w;
}

BalancedSystem six_state(Rng& rng)
{
    BalancedSpec spec;
    spec.sigma.resize(6);
    spec.sigma << 1.0, 0.5, 0.3, 0.2, 0.1, 0.05;
    spec.p = 2;
    spec.m = 2;
    return random_balanced_system(spec, rng);
}

} // namespace

TEST(QeQu, UnitaryHasNoCoisometryDefect)
{
    Rng rng(51);
    const Matrix Q = random_complex(3, 3, rng).householderQr().householderQ();
    const auto qq  = qe_qu(Matrix::Zero(2, 3), Matrix::Zero(3, 2), Q);
    EXPECT_LE(qq.Q_U, 1e-14);
    EXPECT_EQ(qq.Q_E, 0.0);
}

TEST(QeQu, SpectralNorms)
{
    const Matrix B2 = Matrix::Constant(1, 1, 3.0);
    const Matrix C2 = Matrix::Constant(1, 1, 2.0);
    const Matrix U  = Matrix::Constant(1, 1, -0.5);
    const auto qq   = qe_qu(B2, C2, U);
    EXPECT_DOUBLE_EQ(qq.Q_E, 2.0);
    EXPECT_DOUBLE_EQ(qq.Q_U, 0.75);
}

// ---- identities -------------------------------------------------------------

TEST(LemmaResiduals, SixStateBalanced)
{
    Rng rng(52);
    const auto bal = six_state(rng);
    const auto out = hna_reduce(bal, 2, 1e-6, 1e-10);
    const auto res = lemma_residuals(out.part, out.selection.sigma_hat, out.U_work,
                                     out.hat_work);
    EXPECT_EQ(res.size(), 7U);
    EXPECT_LE(worst(res), 1e-10);
}

TEST(LemmaResiduals, ScalarCase)
{
    const auto out = hna_reduce(balanced_realization(scalar(-1, 1, 1, 0)), 0, 0.0, 1e-8);
    const auto res = lemma_residuals(out.part, out.selection.sigma_hat, out.U_work,
                                     out.hat_work);
    EXPECT_EQ(res.count("a11_ahat_sum"), 0U);
    ASSERT_EQ(res.count("b2_u_identity"), 1U);
    ASSERT_EQ(res.count("augmented_output"), 1U);
    EXPECT_LE(worst(res), 1e-14);
}

TEST(LemmaResiduals, DetectsCorruptedOutputMap)
{
    Rng rng(53);
    const auto out = hna_reduce(six_state(rng), 2, 1e-6, 1e-10);
    StateSpaceSystem bad = out.hat_work;
    bad.C.array() += 1e-3;
    const auto res = lemma_residuals(out.part, out.selection.sigma_hat, out.U_work, bad);
    const double scale = std::abs(out.part.Sigma1(0) * out.part.Sigma1(0) -
                                  out.selection.sigma_hat * out.selection.sigma_hat);
    EXPECT_GT(res.at("a11_phi_ahat"), 1e-5 * scale);
    EXPECT_LT(res.at("a11_ahat_sum"), 1e-10);
}

TEST(LemmaResiduals, ClusterSuiteProperty)
{
    Rng rng(54);
    for (int t = 0; t < 40; ++t)
    {
        const auto tr  = suite::cluster_trial(t, rng);
        const auto out = hna_reduce(tr.bal, tr.k, tr.epsilon, 1e-10);
        const auto res = lemma_residuals(out.part, out.selection.sigma_hat, out.U_work,
                                         out.hat_work);
        EXPECT_LE(worst(res), 1e-8) << "trial " << t;
    }
}

// ---- rank criteria ----------------------------------------------------------

TEST(RankCriteria, ZeroCoisometryDefectCollapses)
{
    Rng rng(55);
    const auto out = hna_reduce(six_state(rng), 2, 0.0, 1e-10);
    const auto rc  = rank_criteria(out.part, out.hat_work, out.balanced_work.sys.A,
                                   out.Q_E, 0.0, out.selection.delta, 0.0,
                                   sample_moebius_uniform(128));
    EXPECT_EQ(rc.rho1, 0.0);
    EXPECT_EQ(rc.rho2, 0.0);
    EXPECT_TRUE(rc.pass_a);
    EXPECT_TRUE(rc.pass_b);
}

TEST(RankCriteria, HermitianClusterInertia)
{
    const auto out = hna_reduce(hermitian_test_balanced(1e-8, 1e-2, 7), 8, 1.01e-8, 1e-10);
    const auto d   = diagnose(out, 1e-10);
    EXPECT_TRUE(d.rank.pass_a);
    EXPECT_EQ(d.j1, 7);
    // Stable rank is j1 - 1 since the cluster already begins above k + 1.
    EXPECT_EQ(d.inertia_hat.negative, d.j1 - 1);
    const Inertia expected{6, 0, 5};
    EXPECT_EQ(d.inertia_hat, expected);
    EXPECT_EQ(inertia(split_stable(out.sys).stable.A).negative, 6);
}

TEST(RankCriteria, PassImpliesInertiaAcrossEpsilonLadder)
{
    Rng rng(56);
    int passes = 0;
    for (const double eps : {1e-9, 1e-7, 1e-5, 1e-3, 1e-2})
    {
        for (int trial = 0; trial < 4; ++trial)
        {
            BalancedSpec spec;
            spec.sigma.resize(7);
            spec.sigma << 1.0, 0.7, 0.5, 0.5 - 0.5 * eps, 0.5 - 0.9 * eps, 0.2, 0.1;
            spec.p             = 2;
            spec.m             = 2;
            spec.cluster_begin = 2;
            spec.cluster_end   = 5;
            spec.misalignment  = 1e-2;
            const auto bal = random_balanced_system(spec, rng);
            const auto out = hna_reduce(bal, 2, eps, 1e-10);
            const auto d   = diagnose(out, 1e-10, sample_moebius_uniform(256));
            if (d.rank.pass_a)
            {
                ++passes;
                const Inertia expected{2, 0, 2};
                EXPECT_EQ(d.inertia_hat, expected) << eps;
            }
        }
    }
    EXPECT_GT(passes, 0);
}

// ---- X(z) probe -------------------------------------------------------------

TEST(XzProbe, ScalarClosedForm)
{
    Rng rng(57);
    const auto bal = balanced_realization(random_stable_system(2, 1, 1, rng));
    const auto out = hna_reduce(bal, 1, 0.0, 1e-10);
    const auto& P  = out.part;
    ASSERT_EQ(P.Sigma1.size(), 1);
    const double s1 = P.Sigma1(0);
    const double sh = out.selection.sigma_hat;
    const Complex a = P.A11(0, 0);
    const Complex u = out.U_work(0, 0);
    const std::vector<Complex> grid{Complex(0, 0.1), Complex(0, 2.0), Complex(0, -7.0)};
    double expected = 0.0;
    for (const auto& z : grid)
    {
        const Complex x = -z * (s1 * s1 - sh * sh) - sh * sh * a + s1 * std::conj(a) * s1 -
                          sh * P.B1(0, 0) * std::conj(u) * P.C1(0, 0);
        expected = std::max(expected, 1.0 / std::abs(x));
    }
    EXPECT_NEAR(xz_probe(P, sh, out.U_work, grid).sup, expected, 1e-12 * expected);
}

TEST(XzProbe, DecaysAtLargeFrequency)
{
    Rng rng(58);
    const auto out = hna_reduce(six_state(rng), 2, 0.0, 1e-10);
    const auto inv_norm = [&](Complex z) {
        return 1.0 / smallest_singular_value(
                         x_matrix(out.part, out.selection.sigma_hat, out.U_work, z));
    };
    EXPECT_LT(inv_norm(Complex(0, 1e4)), inv_norm(Complex(0, 1.0)));
    EXPECT_LT(inv_norm(Complex(0, -1e4)), inv_norm(Complex(0, 1.0)));
    EXPECT_LT(inv_norm(Complex(0, 1e6)), 1e-4);
}

TEST(XzProbe, SingularPointReported)
{
    // x(z) = -3z - 5i t with t = 0.6 vanishes at z = -i.
    HnaPartition P;
    P.Sigma1 = RealVector::Constant(1, 2.0);
    P.A11    = Matrix::Constant(1, 1, Complex(0.0, 0.6));
    P.B1     = Matrix::Zero(1, 1);
    P.C1     = Matrix::Zero(1, 1);
    try
    {
        xz_probe(P, 1.0, Matrix::Zero(1, 1), {Complex(0, 1), Complex(0, -1)});
        FAIL() << "expected SingularXAt";
    }
    catch (const SingularXAt& e)
    {
        EXPECT_EQ(e.point(), Complex(0, -1));
    }
}

TEST(XzProbe, NeedsLeadingBlock)
{
    const auto out = hna_reduce(balanced_realization(scalar(-1, 1, 1, 0)), 0, 0.0, 1e-8);
    EXPECT_THROW(xz_probe(out.part, 0.5, out.U_work, {Complex(0, 1)}),
                 std::invalid_argument);
}

// ---- Q_E / Q_U bounds -------------------------------------------------------

TEST(QeQuBounds, HermitianBlock)
{
    const auto out = hna_reduce(hermitian_test_balanced(1e-6, 1e-2, 7), 8, 1.01e-6, 1e-10);
    const auto b   = qequ_bounds(out.part, out.selection.epsilon, 1e-10, out.q,
                                 out.c2_singular_values, out.U_work);
    EXPECT_TRUE(b.hermitian_a22);
    EXPECT_LE(b.qu.measured, 1e-10);
    EXPECT_TRUE(b.qu.pass);
    EXPECT_TRUE(b.qe.pass);
}

TEST(QeQuBounds, FullRankBranch)
{
    Rng rng(59);
    const auto out = hna_reduce(six_state(rng), 2, 1e-6, 1e-10);
    ASSERT_EQ(out.q, out.selection.r);
    const auto b = qequ_bounds(out.part, out.selection.epsilon, 1e-10, out.q,
                               out.c2_singular_values, out.U_work);
    EXPECT_EQ(b.Q1, 0.0);
    EXPECT_LE(b.qe.measured, b.Q2 + 1e-10);
}

TEST(QeQuBounds, MisalignedClusterHasMargin)
{
    Rng rng(60);
    const double eps = 1e-6;
    BalancedSpec spec;
    spec.sigma.resize(6);
    spec.sigma << 1.0, 0.6, 0.4, 0.4 - 0.5 * eps, 0.4 - 0.8 * eps, 0.1;
    spec.p             = 1;
    spec.m             = 2;
    spec.cluster_begin = 2;
    spec.cluster_end   = 5;
    spec.misalignment  = 1e-3;
    const auto out = hna_reduce(random_balanced_system(spec, rng), 2, eps, 1e-10);
    const auto b   = qequ_bounds(out.part, eps, 1e-10, out.q, out.c2_singular_values,
                                 out.U_work);
    EXPECT_FALSE(b.hermitian_a22);
    EXPECT_LT(b.qu.measured, b.qu.bound);
    if (b.qe.applicable)
    {
        EXPECT_LT(b.qe.measured, b.qe.bound);
    }
}

TEST(QeQuBounds, ClusterSuiteProperty)
{
    Rng rng(61);
    for (int t = 0; t < 40; ++t)
    {
        const auto tr  = suite::cluster_trial(t, rng);
        const auto out = hna_reduce(tr.bal, tr.k, tr.epsilon, 1e-10);
        const auto b   = qequ_bounds(out.part, tr.epsilon, 1e-10, out.q,
                                     out.c2_singular_values, out.U_work);
        EXPECT_TRUE(b.qe.pass) << "trial " << t;
        EXPECT_TRUE(b.qu.pass) << "trial " << t;
        if (tr.mode == 2)
        {
            EXPECT_LE(b.qu.measured, 1e-10) << "trial " << t;
        }
    }
}

// ---- full report ------------------------------------------------------------

TEST(Diagnose, ReportIsFiniteAndSerializable)
{
    Rng rng(62);
    const auto out = hna_reduce(six_state(rng), 2, 1e-6, 1e-10);
    const auto d   = diagnose(out, 1e-10, sample_moebius_uniform(64));
    EXPECT_TRUE(d.xz.has_value());
    EXPECT_TRUE(d.bounds.has_value());
    for (const auto& [name, v] : d.lemma)
    {
        EXPECT_TRUE(std::isfinite(v)) << name;
    }
    EXPECT_TRUE(std::isfinite(d.rank.rho3));
    const auto j = to_json(d);
    EXPECT_EQ(j["cluster"]["r"].get<Index>(), 1);
    EXPECT_EQ(j["lemma_residuals"].size(), 7U);
    EXPECT_EQ(j["inertia_hat"].size(), 3U);
    EXPECT_TRUE(j["bounds"]["Q_U"]["pass"].get<bool>());
    // Round trip through text keeps the numbers.
    const auto back = nlohmann::json::parse(j.dump());
    EXPECT_DOUBLE_EQ(back["Q_E"].get<double>(), d.Q_E);
}

TEST(Diagnose, EmptyLeadingBlockHasNullMargins)
{
    const auto out = hna_reduce(balanced_realization(scalar(-1, 1, 1, 0)), 0, 0.0, 1e-8);
    const auto j   = to_json(diagnose(out, 1e-8, sample_moebius_uniform(16)));
    EXPECT_TRUE(j["rank_criteria"]["margin_hat"].is_null());
    EXPECT_TRUE(j["xz_inv_sup"].is_null());
}
