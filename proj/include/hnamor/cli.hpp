///
/// \file cli.hpp
///
/// Command-line front end. Exit codes: 0 success, 1 I/O failure, 2 usage or
/// invalid input, 3 numerical failure (error name printed on stderr).
///

#ifndef HNAMOR_CLI_HPP
#define HNAMOR_CLI_HPP

#include <iostream>

#include <CLI11.hpp>

#include "hnamor/pipeline.hpp"
#include "hnamor/sampling.hpp"

namespace hnamor
{

namespace detail
{

inline DegreePolicy parse_degree(const std::string& text)
{
    try
    {
        if (text.rfind("fixed:", 0) == 0)
        {
            std::size_t used = 0;
            const long d     = std::stol(text.substr(6), &used);
            if (used != text.size() - 6 || d < 1)
            {
                throw std::invalid_argument("bad degree");
            }
            return FixedDegree{static_cast<std::size_t>(d)};
        }
        if (text.rfind("adaptive:", 0) == 0)
        {
            const std::string rest = text.substr(9);
            const auto comma       = rest.find(',');
            if (comma == std::string::npos)
            {
                throw std::invalid_argument("missing DMAX");
            }
            std::size_t used = 0;
            const double tol = std::stod(rest.substr(0, comma), &used);
            if (used != comma || !(tol >= 0.0))
            {
                throw std::invalid_argument("bad TOL");
            }
            const std::string dm = rest.substr(comma + 1);
            const long dmax      = std::stol(dm, &used);
            if (used != dm.size() || dmax < 1)
            {
                throw std::invalid_argument("bad DMAX");
            }
            return AdaptiveDegree{tol, static_cast<std::size_t>(dmax)};
        }
    }
    catch (const std::logic_error& e)
    {
        throw std::invalid_argument("invalid degree '" + text + "': " + e.what());
    }
    throw std::invalid_argument("invalid degree '" + text +
                                "': expected fixed:D or adaptive:TOL,DMAX");
}

inline std::optional<double> parse_lambda(const std::string& text)
{
    if (text == "auto")
    {
        return std::nullopt;
    }
    std::size_t used = 0;
    double v         = 0.0;
    try
    {
        v = std::stod(text, &used);
    }
    catch (const std::logic_error&)
    {
        used = 0;
    }
    if (used != text.size() || !(v >= 0.0))
    {
        throw std::invalid_argument("invalid lambda '" + text +
                                    "': expected auto or a number >= 0");
    }
    return v;
}

class UsageError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace detail

inline int cli_main(int argc, const char* const* argv,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr)
{
    CLI::App app{"Model order reduction from transfer-function samples"};
    app.require_subcommand(1);

    // reduce
    auto* reduce = app.add_subcommand("reduce", "Two-stage reduction of a samples file");
    std::string samples_path;
    Index rank = 0;
    std::string lambda_text = "auto";
    double epsilon          = 1e-9;
    double gamma            = 1e-10;
    std::string degree_text = "adaptive:1e-8,60";
    std::string grid_text   = "moebius:512";
    std::string out_path    = "system.json";
    std::string report_path = "report.json";
    std::string truth_path;
    reduce->add_option("--samples", samples_path, "Samples CSV")->required();
    reduce->add_option("--rank", rank, "Target rank k")->required();
    reduce->add_option("--lambda", lambda_text, "auto or regularization value")
        ->capture_default_str();
    reduce->add_option("--epsilon", epsilon,
                       "Cluster tolerance relative to the largest singular value")
        ->capture_default_str();
    reduce->add_option("--gamma", gamma,
                       "Singular-value threshold for U, relative")
        ->capture_default_str();
    reduce->add_option("--degree", degree_text, "fixed:D or adaptive:TOL,DMAX")
        ->capture_default_str();
    reduce->add_option("--grid", grid_text, "Diagnostics grid: moebius:N or log:A,B,N")
        ->capture_default_str();
    reduce->add_option("--out", out_path, "Reduced system JSON")->capture_default_str();
    reduce->add_option("--report", report_path, "Report JSON")->capture_default_str();
    reduce->add_option("--truth", truth_path, "Reference system JSON for the exact Hankel error");

    // sample
    auto* sample = app.add_subcommand("sample", "Write a samples file");
    std::string example;
    std::string system_path;
    std::string sample_grid = "log:1e-4,1,300";
    std::string sample_out;
    int terms = 500;
    auto* ex_opt = sample->add_option("--example", example, "Built-in example")
                       ->check(CLI::IsMember({"hilbert"}));
    auto* sys_opt = sample->add_option("--system", system_path, "System JSON to sample");
    ex_opt->excludes(sys_opt);
    sample->add_option("--grid", sample_grid, "moebius:N or log:A,B,N")->capture_default_str();
    sample->add_option("--out", sample_out, "Samples CSV")->required();
    sample->add_option("--terms", terms, "Series length of the hilbert example")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Hankel norm approximation diagnostics for a system");
    std::string diag_system;
    Index diag_rank = 0;
    double diag_eps = 1e-9;
    double diag_gamma = 1e-10;
    std::string diag_grid = "moebius:512";
    std::string diag_out;
    diag->add_option("--system", diag_system, "System JSON")->required();
    diag->add_option("--rank", diag_rank, "Target rank k")->required();
    diag->add_option("--epsilon", diag_eps, "Cluster tolerance, relative")->capture_default_str();
    diag->add_option("--gamma", diag_gamma, "U threshold, relative")->capture_default_str();
    diag->add_option("--grid", diag_grid, "moebius:N or log:A,B,N")->capture_default_str();
    diag->add_option("--out", diag_out, "Output JSON (stdout if omitted)");

    // eval
    auto* evalc = app.add_subcommand("eval", "Evaluate a system on a grid");
    std::string eval_system;
    std::string eval_grid = "moebius:128";
    std::string eval_out;
    evalc->add_option("--system", eval_system, "System JSON")->required();
    evalc->add_option("--grid", eval_grid, "moebius:N or log:A,B,N")->capture_default_str();
    evalc->add_option("--out", eval_out, "Samples CSV")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (*reduce)
        {
            PipelineConfig cfg;
            cfg.k       = rank;
            cfg.lambda  = detail::parse_lambda(lambda_text);
            cfg.epsilon = epsilon;
            cfg.gamma   = gamma;
            cfg.degree  = detail::parse_degree(degree_text);
            cfg.grid    = GridSpec::parse(grid_text);
            if (rank < 1 || !(epsilon >= 0.0) || !(gamma >= 0.0))
            {
                throw detail::UsageError(
                    "--rank must be >= 1, --epsilon and --gamma >= 0");
            }
            const SampleSet samples = read_samples(samples_path);
            std::optional<StateSpaceSystem> truth;
            if (!truth_path.empty())
            {
                truth = read_system(truth_path);
            }
            const ReductionReport rep =
                reduce_two_stage(samples, cfg, truth ? &*truth : nullptr);
            write_system(out_path, rep.final_system);
            write_file_atomic(report_path, dump_json(to_json(rep)));
            if (rep.rank_mismatch)
            {
                err << "warning: RankMismatch (achieved rank "
                    << rep.achieved_rank << ", requested " << rank << ")\n";
            }
            out << "reduced to " << rep.final_system.n()
                << " states; surrogate error " << rep.errors.surrogate << "\n";
        }
        else if (*sample)
        {
            if (example.empty() == system_path.empty())
            {
                throw detail::UsageError(
                    "sample: give exactly one of --example or --system");
            }
            const auto grid = GridSpec::parse(sample_grid).points();
            const SampleSet s =
                example.empty() ? sample_system(read_system(system_path), grid)
                                : hilbert_samples(grid, terms);
            write_samples(sample_out, s);
        }
        else if (*diag)
        {
            const auto grid            = GridSpec::parse(diag_grid).points();
            const StateSpaceSystem sys = read_system(diag_system);
            const StabilizationResult split = split_stable(sys);
            const BalancedSystem bal = balanced_realization(split.stable);
            if (diag_rank < 1 || diag_rank >= bal.sigma.size())
            {
                throw detail::UsageError(
                    "--rank must lie in [1, K) for the stable part");
            }
            const double eps_abs = diag_eps * bal.sigma(0);
            const double gam_abs = diag_gamma * bal.sigma(0);
            const AllPassDilation hna =
                hna_reduce(bal, diag_rank, eps_abs, gam_abs, UMode::modified);
            const HnaDiagnostics d =
                diagnose(hna, gam_abs, grid);
            const std::string text = dump_json(to_json(d));
            if (diag_out.empty())
            {
                out << text;
            }
            else
            {
                write_file_atomic(diag_out, text);
            }
        }
        else if (*evalc)
        {
            const auto grid            = GridSpec::parse(eval_grid).points();
            const StateSpaceSystem sys = read_system(eval_system);
            write_samples(eval_out, sample_system(sys, grid));
        }
    }
    catch (const NumericalError& e)
    {
        err << e.name() << ": " << e.what() << "\n";
        return 3;
    }
    catch (const FormatError& e)
    {
        err << "FormatError: " << e.what() << "\n";
        return 2;
    }
    catch (const std::invalid_argument& e)
    {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace hnamor

#endif // HNAMOR_CLI_HPP
