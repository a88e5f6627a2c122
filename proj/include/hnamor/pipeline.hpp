///
/// \file pipeline.hpp
///
/// Two-stage reduction from transfer-function samples: block-AAA fit,
/// stable/antistable split, balanced realization, Hankel norm approximation
/// and a final split. Produces the reduced stable system and a report.
///

#ifndef HNAMOR_PIPELINE_HPP
#define HNAMOR_PIPELINE_HPP

#include <chrono>
#include <variant>

#include <json.hpp>

#include "hnamor/aaa.hpp"
#include "hnamor/diagnostics.hpp"
#include "hnamor/hna.hpp"
#include "hnamor/io.hpp"
#include "hnamor/stabilize.hpp"

namespace hnamor
{

/// moebius:N or log:A,B,N.
struct GridSpec
{
    enum class Kind
    {
        moebius,
        log
    };
    Kind kind     = Kind::moebius;
    std::size_t n = 512;
    double a      = 1e-4;
    double b      = 1.0;

    std::vector<Complex> points() const
    {
        return kind == Kind::moebius ? sample_moebius_uniform(n)
                                     : sample_log(a, b, n);
    }

    std::string to_string() const
    {
        if (kind == Kind::moebius)
        {
            return "moebius:" + std::to_string(n);
        }
        return "log:" + format_double(a) + "," + format_double(b) + "," +
               std::to_string(n);
    }

    /// Throws std::invalid_argument on malformed input.
    static GridSpec parse(const std::string& text)
    {
        GridSpec g;
        auto number = [&](const std::string& tok) {
            std::size_t used = 0;
            const double v   = std::stod(tok, &used);
            if (used != tok.size())
            {
                throw std::invalid_argument("bad number '" + tok + "'");
            }
            return v;
        };
        auto count = [&](const std::string& tok) {
            const double v = number(tok);
            if (!(v >= 1.0) || v != std::floor(v))
            {
                throw std::invalid_argument("bad count '" + tok + "'");
            }
            return static_cast<std::size_t>(v);
        };
        try
        {
            if (text.rfind("moebius:", 0) == 0)
            {
                g.kind = Kind::moebius;
                g.n    = count(text.substr(8));
                if (g.n < 2)
                {
                    throw std::invalid_argument("need at least 2 points");
                }
                return g;
            }
            if (text.rfind("log:", 0) == 0)
            {
                g.kind                = Kind::log;
                const std::string rest = text.substr(4);
                const auto c1         = rest.find(',');
                const auto c2         = rest.find(',', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos)
                {
                    throw std::invalid_argument("expected log:A,B,N");
                }
                g.a = number(rest.substr(0, c1));
                g.b = number(rest.substr(c1 + 1, c2 - c1 - 1));
                g.n = count(rest.substr(c2 + 1));
                if (!(g.a > 0.0) || !(g.b >= g.a))
                {
                    throw std::invalid_argument("need 0 < A <= B");
                }
                return g;
            }
        }
        catch (const std::logic_error& e)
        {
            throw std::invalid_argument("invalid grid '" + text +
                                        "': " + e.what());
        }
        throw std::invalid_argument("invalid grid '" + text +
                                    "': expected moebius:N or log:A,B,N");
    }
};

struct FixedDegree
{
    std::size_t d = 20;
};

struct AdaptiveDegree
{
    double tol        = 1e-8;
    std::size_t d_max = 60;
};

using DegreePolicy = std::variant<FixedDegree, AdaptiveDegree>;

struct PipelineConfig
{
    Index k = 1;
    /// Empty selects automatic tuning.
    std::optional<double> lambda = std::nullopt;
    /// Cluster tolerance and U threshold, relative to the largest Hankel
    /// singular value of the intermediate system.
    double epsilon = 1e-9;
    double gamma   = 1e-10;
    DegreePolicy degree = AdaptiveDegree{};
    /// Grid for the pseudospectral and X(z) diagnostics.
    GridSpec grid;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const PipelineConfig& c)
{
    nlohmann::json j;
    j["k"]       = c.k;
    j["lambda"]  = c.lambda ? nlohmann::json(*c.lambda) : nlohmann::json("auto");
    j["epsilon"] = c.epsilon;
    j["gamma"]   = c.gamma;
    if (const auto* f = std::get_if<FixedDegree>(&c.degree))
    {
        j["degree"] = {{"policy", "fixed"}, {"d", f->d}};
    }
    else
    {
        const auto& a = std::get<AdaptiveDegree>(c.degree);
        j["degree"]   = {{"policy", "adaptive"}, {"tol", a.tol}, {"d_max", a.d_max}};
    }
    j["grid"] = c.grid.to_string();
    j["seed"] = c.seed;
    return j;
}

struct ErrorReport
{
    /// max over sample points of ||G_final + H_hat + H_tilde - G||_2.
    double surrogate = 0.0;
    Complex argmax   = 0.0;
    /// Test mode only: the same quantity against the reference system over
    /// the sample points and the evaluation grid, refined near its maximum.
    std::optional<double> truth_surrogate;
    std::optional<double> hankel_error;
};

/// Grid surrogate of the H-infinity error. The antistable branches do not
/// change the Hankel operator, so the full-axis supremum bounds the Hankel
/// error. The sample-point value only sees the sampled band.
inline ErrorReport error_report(const SampleSet& samples,
                                const StateSpaceSystem& final_sys,
                                const StateSpaceSystem& H_tilde,
                                const StateSpaceSystem& H_hat,
                                const std::vector<Complex>& grid,
                                const StateSpaceSystem* truth = nullptr)
{
    const StateSpaceSystem total =
        parallel_sum(parallel_sum(final_sys, H_hat), H_tilde);
    const auto errs = index_map<double>(samples.size(), [&](std::size_t i) {
        return norm2(eval_transfer(total, samples.points[i]) - samples.values[i]);
    });
    ErrorReport rep;
    for (std::size_t i = 0; i < errs.size(); ++i)
    {
        if (i == 0 || errs[i] > rep.surrogate)
        {
            rep.surrogate = errs[i];
            rep.argmax    = samples.points[i];
        }
    }
    if (truth != nullptr)
    {
        std::vector<Complex> pts = samples.points;
        pts.insert(pts.end(), grid.begin(), grid.end());
        const auto diff = [&](Complex z) {
            return Matrix(eval_transfer(total, z) - eval_transfer(*truth, z));
        };
        rep.truth_surrogate = hinf_norm_refined(diff, pts).value;
        rep.hankel_error    = hankel_error(*truth, final_sys);
    }
    return rep;
}

struct StageTimings
{
    double fit       = 0.0;
    double realize   = 0.0;
    double split1    = 0.0;
    double balance   = 0.0;
    double hna       = 0.0;
    double split2    = 0.0;
    double diagnose  = 0.0;
    double total     = 0.0;
};

struct ReductionReport
{
    StateSpaceSystem final_system;
    StateSpaceSystem H_tilde;
    StateSpaceSystem H_hat;
    std::size_t d   = 0;
    Index K         = 0;
    Index truncated = 0;
    double lambda   = 0.0;
    std::optional<LambdaTuning> tuning;
    double E1_rel = 0.0;
    double E1_abs = 0.0;
    std::vector<double> E1_history;
    bool no_progress = false;
    /// Relative realization-vs-barycentric mismatch on 64 check points.
    double realization_mismatch = 0.0;
    double kappa_stage1 = 1.0;
    double kappa_stage2 = 1.0;
    RealVector sigma_tilde;
    double sigma_tilde_k1 = 0.0;
    double epsilon_abs    = 0.0;
    double gamma_abs      = 0.0;
    ErrorReport errors;
    bool rank_mismatch  = false;
    Index achieved_rank = 0;
    HnaDiagnostics diagnostics;
    StageTimings timings;
    PipelineConfig config;
};

inline nlohmann::json to_json(const ReductionReport& r)
{
    nlohmann::json j;
    j["d"]         = r.d;
    j["K"]         = r.K;
    j["truncated"] = r.truncated;
    j["lambda"]    = r.lambda;
    if (r.tuning)
    {
        j["lambda_tuning"] = {{"gap", r.tuning->gap},
                              {"E1", r.tuning->e1},
                              {"E2", r.tuning->e2}};
    }
    j["E1_rel"]     = r.E1_rel;
    j["E1_abs"]     = r.E1_abs;
    j["E1_history"] = r.E1_history;
    j["no_progress"] = r.no_progress;
    j["realization_mismatch"] = r.realization_mismatch;
    j["kappa_stage1"] = r.kappa_stage1;
    j["kappa_stage2"] = r.kappa_stage2;
    j["sigma_tilde"]  = std::vector<double>(r.sigma_tilde.data(),
                                           r.sigma_tilde.data() +
                                               r.sigma_tilde.size());
    j["sigma_tilde_k1"] = r.sigma_tilde_k1;
    j["epsilon_abs"]    = r.epsilon_abs;
    j["gamma_abs"]      = r.gamma_abs;
    j["errors"]         = {{"hinf_surrogate", r.errors.surrogate},
                           {"argmax_im", r.errors.argmax.imag()}};
    if (r.errors.hankel_error)
    {
        j["errors"]["hankel_error"] = *r.errors.hankel_error;
    }
    if (r.errors.truth_surrogate)
    {
        j["errors"]["truth_hinf_surrogate"] = *r.errors.truth_surrogate;
    }
    j["warnings"] = nlohmann::json::array();
    if (r.rank_mismatch)
    {
        j["warnings"].push_back("RankMismatch");
    }
    if (r.no_progress)
    {
        j["warnings"].push_back("NoProgress");
    }
    j["achieved_rank"] = r.achieved_rank;
    j["diagnostics"]   = to_json(r.diagnostics);
    j["timings"] = {{"fit", r.timings.fit},           {"realize", r.timings.realize},
                    {"split1", r.timings.split1},     {"balance", r.timings.balance},
                    {"hna", r.timings.hna},           {"split2", r.timings.split2},
                    {"diagnose", r.timings.diagnose}, {"total", r.timings.total}};
    j["config"]  = to_json(r.config);
    j["H_tilde"] = system_to_json(r.H_tilde);
    j["H_hat"]   = system_to_json(r.H_hat);
    return j;
}

namespace detail
{

class Stopwatch
{
public:
    double lap()
    {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - m_last).count();
        m_last         = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point m_last =
        std::chrono::steady_clock::now();
};

} // namespace detail

/// Runs both stages. `truth`, when given, adds the exact Hankel error.
inline ReductionReport reduce_two_stage(const SampleSet& samples,
                                        const PipelineConfig& cfg,
                                        const StateSpaceSystem* truth = nullptr)
{
    if (cfg.k < 1 || !(cfg.epsilon >= 0.0) || !(cfg.gamma >= 0.0))
    {
        throw std::invalid_argument(
            "reduce_two_stage: need k >= 1, epsilon >= 0, gamma >= 0");
    }
    samples.validate();
    ReductionReport rep;
    rep.config = cfg;
    detail::Stopwatch watch;
    detail::Stopwatch total;

    // Stage I: rational fit and realization.
    const auto* fixed = std::get_if<FixedDegree>(&cfg.degree);
    const std::size_t d_target =
        fixed ? fixed->d : std::get<AdaptiveDegree>(cfg.degree).d_max;
    if (samples.size() <= d_target)
    {
        throw std::invalid_argument(
            "reduce_two_stage: need more samples than the degree");
    }
    if (cfg.lambda)
    {
        rep.lambda = *cfg.lambda;
    }
    else
    {
        rep.tuning = tune_lambda(samples, d_target);
        rep.lambda = rep.tuning->lambda;
    }
    AaaResult fit;
    if (fixed)
    {
        fit = aaa_fit_degree(samples, fixed->d, rep.lambda);
    }
    else
    {
        const auto& ad = std::get<AdaptiveDegree>(cfg.degree);
        AaaOptions opts;
        opts.d_max  = ad.d_max;
        opts.tol    = ad.tol;
        opts.lambda = rep.lambda;
        fit         = aaa_fit(samples, opts);
    }
    rep.d           = fit.rational.degree();
    rep.E1_rel      = fit.error_rel;
    rep.E1_abs      = fit.error_abs;
    rep.E1_history  = fit.history;
    rep.no_progress = fit.no_progress;
    rep.timings.fit = watch.lap();

    const StateSpaceSystem realized = realize(fit.rational, false);
    rep.realization_mismatch =
        realization_mismatch(fit.rational, realized, sample_moebius_uniform(64))
            .value;
    rep.timings.realize = watch.lap();

    const StabilizationResult split1 = split_stable(realized);
    rep.H_tilde         = split1.antistable;
    rep.kappa_stage1    = split1.kappa;
    rep.timings.split1  = watch.lap();

    // Stage II: balanced realization and Hankel norm approximation.
    const BalancedSystem bal = balanced_realization(split1.stable);
    rep.K                    = bal.sigma.size();
    rep.truncated            = bal.truncated;
    rep.sigma_tilde          = bal.sigma;
    if (cfg.k >= rep.K)
    {
        throw std::invalid_argument("reduce_two_stage: rank k = " +
                                    std::to_string(cfg.k) +
                                    " is not below the intermediate rank " +
                                    std::to_string(rep.K));
    }
    rep.sigma_tilde_k1  = bal.sigma(cfg.k);
    rep.epsilon_abs     = cfg.epsilon * bal.sigma(0);
    rep.gamma_abs       = cfg.gamma * bal.sigma(0);
    rep.timings.balance = watch.lap();

    const AllPassDilation hna =
        hna_reduce(bal, cfg.k, rep.epsilon_abs, rep.gamma_abs, UMode::modified);
    rep.timings.hna = watch.lap();

    const StabilizationResult split2 = split_stable(hna.sys);
    rep.final_system   = split2.stable;
    rep.H_hat          = split2.antistable;
    rep.kappa_stage2   = split2.kappa;
    rep.achieved_rank  = rep.final_system.n();
    rep.rank_mismatch  = rep.achieved_rank != cfg.k;
    rep.timings.split2 = watch.lap();

    rep.diagnostics      = diagnose(hna, rep.gamma_abs, cfg.grid.points());
    rep.errors = error_report(samples, rep.final_system, rep.H_tilde,
                              rep.H_hat, cfg.grid.points(), truth);
    rep.timings.diagnose = watch.lap();
    rep.timings.total    = total.lap();
    return rep;
}

} // namespace hnamor

#endif // HNAMOR_PIPELINE_HPP
