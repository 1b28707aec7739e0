// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: single-scenario solve, CDF runs and G / L sweeps.

#include "flexprec/flexprec.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace flexprec;

namespace {

struct CommonOptions
{
    std::string config_path;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::string alphas;
    std::string methods;
    std::size_t workers = 1;
    bool trace = false;
    bool timing = false;
    std::string out_dir = ".";
};

void add_common(CLI::App *cmd, CommonOptions &o, bool batch)
{
    cmd->add_option("--config", o.config_path, "Key-value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--alpha", o.alphas, "Comma-separated regularization factors (overrides alpha_list)");
    cmd->add_option("--methods", o.methods, "Comma-separated subset of flexible,fast_as,fixed");
    cmd->add_flag("--trace", o.trace, "Record the per-iteration refinement trace");
    if (batch)
    {
        cmd->add_option("--trials", o.trials, "Number of Monte Carlo trials");
        cmd->add_option("--seed", o.seed, "Master seed (overrides master_seed)");
        cmd->add_option("--workers", o.workers, "Concurrent trial workers")->check(CLI::PositiveNumber);
        cmd->add_option("--out", o.out_dir, "Output directory");
        cmd->add_flag("--timing", o.timing, "Fill the wall_ms column (output is then not reproducible)");
    }
}

ExperimentConfig resolve_config(const CommonOptions &o)
{
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (o.trials)
        c.trials = *o.trials;
    if (o.seed)
        c.master_seed = *o.seed;
    if (!o.alphas.empty())
        c.alpha_list = parse_list<double>(o.alphas, "--alpha");
    if (!o.methods.empty())
        c.methods = parse_methods(o.methods);
    return c;
}

std::ofstream open_output(const fs::path &path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("Cannot write '" + path.string() + "'.");
    return os;
}

void write_trace(const fs::path &path, const std::vector<std::vector<TraceRecord>> &traces)
{
    auto os = open_output(path);
    for (std::size_t t = 0; t < traces.size(); ++t)
        for (const auto &rec : traces[t])
            os << "trial=" << t << ' ' << format_trace(rec) << '\n';
}

int report_failures(std::size_t failures, const std::vector<TrialResult> &results, const fs::path &dir)
{
    if (failures == 0)
        return 0;
    auto os = open_output(dir / "errors.csv");
    write_errors_csv(os, results);
    std::cerr << failures << " trial(s) failed; see " << (dir / "errors.csv").string() << '\n';
    return 3;
}

int run_solve(const CommonOptions &o, std::uint64_t seed)
{
    ExperimentConfig c = resolve_config(o);
    c.validate();
    const PathSet paths = sample_paths(seed, c.K, c.L);
    std::printf("scenario K=%zu L=%zu G=%zux%zu N=%zu seed=%llu digest=%016llx\n", c.K, c.L, c.grid_nx, c.grid_nz,
                c.N, static_cast<unsigned long long>(seed), static_cast<unsigned long long>(paths.digest()));
    int status = 0;
    for (const Method m : c.methods)
        for (const double alpha : c.alpha_list)
        {
            std::vector<TraceRecord> trace;
            const TrialResult r = run_method(c, paths, 0, m, alpha, o.trace ? &trace : nullptr);
            std::printf("\n[%s alpha=%g]\n", std::string(to_string(m)).c_str(), alpha);
            if (!r.ok())
            {
                std::printf("  error: %s\n", r.error.c_str());
                status = 3;
                continue;
            }
            for (std::size_t n = 0; n < r.positions.size(); ++n)
                std::printf("  antenna %zu: x=%.6f m z=%.6f m\n", n, r.positions[n].x, r.positions[n].z);
            for (Eigen::Index k = 0; k < r.sinr.size(); ++k)
                std::printf("  user %td: SINR=%.6f\n", k, r.sinr(k));
            std::printf("  sum rate: %.6f bits/s/Hz\n", r.sum_rate);
            for (const auto &rec : trace)
                std::printf("  trace %s\n", format_trace(rec).c_str());
        }
    return status;
}

int run_cdf(const CommonOptions &o)
{
    const ExperimentConfig c = resolve_config(o);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    const MonteCarloResult mc = run_monte_carlo(c, {o.workers, o.trace});

    {
        auto os = open_output(dir / "raw.csv");
        write_raw_csv(os, mc.results, o.timing);
    }
    {
        auto os = open_output(dir / "cdf.csv");
        write_cdf_csv(os, mc.results, c.methods, c.alpha_list);
    }
    {
        auto os = open_output(dir / "positions.csv");
        write_positions_csv(os, mc.results);
    }
    if (o.trace)
        write_trace(dir / "trace.log", mc.traces);

    for (const Method m : c.methods)
        for (const double a : c.alpha_list)
        {
            const auto rates = select_rates(mc.results, m, a);
            const auto s = sample_stats(rates);
            std::printf("%-9s alpha=%-8g mean=%.4f stderr=%.4f n=%zu\n", std::string(to_string(m)).c_str(), a, s.mean,
                        s.std_error, s.count);
        }
    return report_failures(mc.failures, mc.results, dir);
}

int run_sweep(const CommonOptions &o, SweepVariable variable, const std::string &values_text)
{
    const ExperimentConfig c = resolve_config(o);
    const auto values = parse_list<std::size_t>(values_text, "--values");
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    const std::string tag(to_string(variable));

    const SweepResult result = sweep(c, variable, values, {o.workers, false});
    {
        auto os = open_output(dir / ("sweep_" + tag + ".csv"));
        write_aggregate_csv(os, result.rows);
    }
    {
        auto os = open_output(dir / ("raw_" + tag + ".csv"));
        write_raw_csv(os, result.raw, o.timing);
    }
    if (o.trace)
    {
        // Traces are per configuration; re-run each value with collection on.
        std::vector<std::vector<TraceRecord>> all;
        for (const auto v : values)
        {
            auto mc = run_monte_carlo(with_sweep_value(c, variable, v), {o.workers, true});
            std::move(mc.traces.begin(), mc.traces.end(), std::back_inserter(all));
        }
        write_trace(dir / ("trace_" + tag + ".log"), all);
    }
    for (const auto &row : result.rows)
        std::printf("%s=%-4zu %-9s alpha=%-8g mean=%.4f stderr=%.4f n=%zu\n", tag.c_str(), row.value,
                    std::string(to_string(row.method)).c_str(), row.alpha, row.stats.mean, row.stats.std_error,
                    row.stats.count);
    return report_failures(result.failures, result.raw, dir);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Flexible RZF precoding for movable-antenna arrays"};
    app.require_subcommand(1);

    CommonOptions solve_opts, cdf_opts, sweep_g_opts, sweep_l_opts;
    std::uint64_t solve_seed = 1;
    std::string g_values = "9,16,25,36,49,64,81,100";
    std::string l_values = "3,6,9,12,15";

    auto *solve = app.add_subcommand("solve", "Solve one scenario and print positions, SINRs and sum rate");
    add_common(solve, solve_opts, false);
    solve->add_option("--seed", solve_seed, "Scenario seed");

    auto *cdf = app.add_subcommand("cdf", "Monte Carlo sum-rate CDF (raw.csv, cdf.csv, positions.csv)");
    add_common(cdf, cdf_opts, true);

    auto *sweep_g = app.add_subcommand("sweep-g", "Sum rate versus movable-region size G (square grids)");
    add_common(sweep_g, sweep_g_opts, true);
    sweep_g->add_option("--values", g_values, "Comma-separated perfect squares");

    auto *sweep_l = app.add_subcommand("sweep-l", "Sum rate versus number of paths L");
    add_common(sweep_l, sweep_l_opts, true);
    sweep_l->add_option("--values", l_values, "Comma-separated path counts");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*solve)
            return run_solve(solve_opts, solve_seed);
        if (*cdf)
            return run_cdf(cdf_opts);
        if (*sweep_g)
            return run_sweep(sweep_g_opts, SweepVariable::G, g_values);
        if (*sweep_l)
            return run_sweep(sweep_l_opts, SweepVariable::L, l_values);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
