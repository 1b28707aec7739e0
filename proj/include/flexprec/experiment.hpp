// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte Carlo harness: configuration, paired trials, CDF and sweep
// aggregation, CSV output.

#ifndef FLEXPREC_EXPERIMENT_HPP
#define FLEXPREC_EXPERIMENT_HPP

#include "baselines.hpp"
#include "channel_model.hpp"
#include "flex_omp.hpp"
#include "linear_precoding.hpp"
#include "rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <iterator>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace flexprec {

enum class Method
{
    Flexible,
    FastAS,
    Fixed,
};

inline std::string_view to_string(Method m)
{
    switch (m)
    {
    case Method::Flexible:
        return "flexible";
    case Method::FastAS:
        return "fast_as";
    case Method::Fixed:
        return "fixed";
    }
    return "?";
}

inline Method parse_method(std::string_view s)
{
    if (s == "flexible")
        return Method::Flexible;
    if (s == "fast_as")
        return Method::FastAS;
    if (s == "fixed")
        return Method::Fixed;
    throw std::invalid_argument("Unknown method '" + std::string(s) + "' (expected flexible, fast_as or fixed).");
}

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Text helpers

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what)
{
    s = trim(s);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ConfigError("Invalid value '" + std::string(s) + "' for " + std::string(what) + ".");
    return value;
}

inline bool parse_bool(std::string_view s, std::string_view what)
{
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError("Invalid boolean '" + std::string(s) + "' for " + std::string(what) + ".");
}

/// Shortest round-trip decimal representation; locale-independent.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace detail

template <typename T>
std::vector<T> parse_list(std::string_view s, std::string_view what)
{
    std::vector<T> out;
    for (const auto item : detail::split(s, ','))
        out.push_back(detail::parse_number<T>(item, what));
    return out;
}

inline std::vector<Method> parse_methods(std::string_view s)
{
    std::vector<Method> out;
    for (const auto item : detail::split(s, ','))
    {
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) != out.end())
            throw ConfigError("Method '" + std::string(item) + "' listed twice.");
        out.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig
{
    std::size_t K = 4;
    std::size_t N = 4;
    std::size_t L = 15;
    std::size_t grid_nx = 6;
    std::size_t grid_nz = 6;
    double carrier_hz = 3e9;
    std::vector<double> alpha_list{1.0};
    double noise_power = 1.0;
    double total_power = 1.0;
    std::size_t trials = 500;
    std::uint64_t master_seed = 1;
    std::vector<Method> methods{Method::Flexible, Method::FastAS, Method::Fixed};
    RefinementParams refinement;
    std::size_t fixed_nx = 2;
    std::size_t fixed_nz = 2;

    double wavelength() const { return wavelength_from_carrier(carrier_hz); }
    PositionGrid grid() const { return PositionGrid(grid_nx, grid_nz, wavelength()); }
    std::size_t grid_size() const { return grid_nx * grid_nz; }

    void validate() const
    {
        if (K == 0 || N == 0 || L == 0)
            throw ConfigError("K, N and L must be positive.");
        if (grid_nx == 0 || grid_nz == 0 || grid_nx * grid_nz < N)
            throw ConfigError("The grid must hold at least N points.");
        if (!(carrier_hz > 0.0))
            throw ConfigError("carrier_hz must be positive.");
        if (alpha_list.empty())
            throw ConfigError("alpha_list must not be empty.");
        for (const double a : alpha_list)
            if (!(a > 0.0))
                throw ConfigError("Every alpha must be positive.");
        if (!(noise_power > 0.0) || !(total_power > 0.0))
            throw ConfigError("noise_power and total_power must be positive.");
        if (trials == 0)
            throw ConfigError("trials must be at least 1.");
        if (methods.empty())
            throw ConfigError("methods must not be empty.");
        if (fixed_nx * fixed_nz != N)
            throw ConfigError("fixed_nx * fixed_nz must equal N.");
        refinement.validate();
    }
};

/// Applies one `key = value` setting. Unknown keys are an error.
inline void apply_setting(ExperimentConfig &c, std::string_view key, std::string_view value)
{
    using detail::parse_bool;
    using detail::parse_number;
    if (key == "K")
        c.K = parse_number<std::size_t>(value, key);
    else if (key == "N")
        c.N = parse_number<std::size_t>(value, key);
    else if (key == "L")
        c.L = parse_number<std::size_t>(value, key);
    else if (key == "grid_nx")
        c.grid_nx = parse_number<std::size_t>(value, key);
    else if (key == "grid_nz")
        c.grid_nz = parse_number<std::size_t>(value, key);
    else if (key == "carrier_hz")
        c.carrier_hz = parse_number<double>(value, key);
    else if (key == "alpha_list")
        c.alpha_list = parse_list<double>(value, key);
    else if (key == "noise_power")
        c.noise_power = parse_number<double>(value, key);
    else if (key == "total_power")
        c.total_power = parse_number<double>(value, key);
    else if (key == "trials")
        c.trials = parse_number<std::size_t>(value, key);
    else if (key == "master_seed")
        c.master_seed = parse_number<std::uint64_t>(value, key);
    else if (key == "methods")
        c.methods = parse_methods(value);
    else if (key == "fixed_nx")
        c.fixed_nx = parse_number<std::size_t>(value, key);
    else if (key == "fixed_nz")
        c.fixed_nz = parse_number<std::size_t>(value, key);
    else if (key == "max_refine_iters")
        c.refinement.max_refine_iters = parse_number<std::size_t>(value, key);
    else if (key == "gamma_max_scale")
        c.refinement.gamma_max_scale = parse_number<double>(value, key);
    else if (key == "bisection_tol")
        c.refinement.bisection_tol = parse_number<double>(value, key);
    else if (key == "step_tol")
        c.refinement.step_tol = parse_number<double>(value, key);
    else if (key == "max_backoff")
        c.refinement.max_backoff = parse_number<std::size_t>(value, key);
    else if (key == "refine_all_after")
        c.refinement.refine_all_after = parse_bool(value, key);
    else
        throw ConfigError("Unknown configuration key '" + std::string(key) + "'.");
}

/// Flat `key = value` text; `#` starts a comment.
inline ExperimentConfig parse_config(std::istream &in)
{
    ExperimentConfig c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty())
            continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("Line " + std::to_string(line_no) + ": expected 'key = value'.");
        try
        {
            apply_setting(c, detail::trim(view.substr(0, eq)), detail::trim(view.substr(eq + 1)));
        }
        catch (const std::exception &e)
        {
            throw ConfigError("Line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("Cannot open config file '" + path + "'.");
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Trials

struct TrialResult
{
    std::size_t trial_index = 0;
    Method method = Method::Flexible;
    double alpha = 1.0;
    std::size_t G = 0;
    std::size_t L = 0;
    double sum_rate = std::numeric_limits<double>::quiet_NaN(); // bits/s/Hz
    RVector sinr;
    AntennaPositions positions;
    double wall_time = 0.0; // seconds
    std::uint64_t scenario_digest = 0;
    std::string error; // empty on success

    bool ok() const { return error.empty(); }
};

/// Scenario of a trial. Depends only on (master_seed, trial_index, K, L).
inline PathSet trial_paths(const ExperimentConfig &config, std::size_t trial_index)
{
    return sample_paths(derive_seed(config.master_seed, trial_index), config.K, config.L);
}

/// Runs one method on a given scenario and scores it with the normalized
/// precoder on the true channel at the chosen positions.
inline TrialResult run_method(const ExperimentConfig &config, const PathSet &paths, std::size_t trial_index,
                              Method method, double alpha, std::vector<TraceRecord> *trace = nullptr)
{
    TrialResult r;
    r.trial_index = trial_index;
    r.method = method;
    r.alpha = alpha;
    r.G = config.grid_size();
    r.L = config.L;
    r.scenario_digest = paths.digest();

    const auto start = std::chrono::steady_clock::now();
    try
    {
        const PositionGrid grid = config.grid();
        const double wavelength = grid.wavelength();
        CMatrix F;
        switch (method)
        {
        case Method::Flexible: {
            auto res = flexible_precoding(paths, grid, config.N, alpha, config.refinement, config.total_power, trace);
            r.positions = std::move(res.positions);
            F = std::move(res.precoder);
            break;
        }
        case Method::FastAS: {
            r.positions = fast_antenna_selection(paths, grid, config.N, config.noise_power).positions;
            F = normalize_precoder(rzf_dual(channel_matrix(r.positions, paths, wavelength), alpha), config.total_power);
            break;
        }
        case Method::Fixed: {
            r.positions = fixed_array_positions(config.fixed_nx, config.fixed_nz, wavelength);
            F = normalize_precoder(rzf_dual(channel_matrix(r.positions, paths, wavelength), alpha), config.total_power);
            break;
        }
        }
        const CMatrix H = channel_matrix(r.positions, paths, wavelength);
        r.sinr = sinr_per_user(H, F, config.noise_power);
        r.sum_rate = sum_rate(H, F, config.noise_power);
    }
    catch (const std::exception &e)
    {
        r.error = e.what();
        r.sum_rate = std::numeric_limits<double>::quiet_NaN();
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline TrialResult run_trial(const ExperimentConfig &config, std::size_t trial_index, Method method, double alpha,
                             std::vector<TraceRecord> *trace = nullptr)
{
    return run_method(config, trial_paths(config, trial_index), trial_index, method, alpha, trace);
}

struct MonteCarloOptions
{
    std::size_t workers = 1;
    bool collect_trace = false;
};

struct MonteCarloResult
{
    std::vector<TrialResult> results;               // ordered by (method, alpha, trial)
    std::vector<std::vector<TraceRecord>> traces;   // per trial, when collected
    std::size_t failures = 0;
    std::map<std::string, std::size_t> error_counts; // message -> occurrences
};

/// All (method, alpha) pairs of every trial. Each trial samples one scenario
/// shared by all methods and alphas. Trials are distributed over workers; the
/// output order does not depend on scheduling.
inline MonteCarloResult run_monte_carlo(const ExperimentConfig &config, const MonteCarloOptions &options = {})
{
    config.validate();
    const std::size_t per_trial = config.methods.size() * config.alpha_list.size();
    std::vector<std::vector<TrialResult>> by_trial(config.trials);
    std::vector<std::vector<TraceRecord>> traces(options.collect_trace ? config.trials : 0);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t t = next++; t < config.trials; t = next++)
        {
            const PathSet paths = trial_paths(config, t);
            auto &slot = by_trial[t];
            slot.reserve(per_trial);
            for (const Method m : config.methods)
                for (const double alpha : config.alpha_list)
                {
                    auto *trace = options.collect_trace && m == Method::Flexible ? &traces[t] : nullptr;
                    slot.push_back(run_method(config, paths, t, m, alpha, trace));
                }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, config.trials);
    if (workers == 1)
        work();
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }

    MonteCarloResult out;
    out.results.reserve(config.trials * per_trial);
    for (std::size_t j = 0; j < per_trial; ++j)
        for (std::size_t t = 0; t < config.trials; ++t)
        {
            TrialResult &r = by_trial[t][j];
            if (!r.ok())
            {
                ++out.failures;
                ++out.error_counts[r.error];
            }
            out.results.push_back(std::move(r));
        }
    out.traces = std::move(traces);
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation

inline std::vector<double> select_rates(std::span<const TrialResult> results, Method method, double alpha)
{
    std::vector<double> rates;
    for (const auto &r : results)
        if (r.ok() && r.method == method && r.alpha == alpha)
            rates.push_back(r.sum_rate);
    return rates;
}

struct CdfPoint
{
    double sum_rate;
    double probability;
};

/// Empirical CDF: sorted rates with probabilities (i + 1) / n.
inline std::vector<CdfPoint> cdf_points(std::span<const TrialResult> results, Method method, double alpha)
{
    std::vector<double> rates = select_rates(results, method, alpha);
    if (rates.empty())
        throw std::invalid_argument("cdf_points: no successful results for " + std::string(to_string(method)) + ".");
    std::sort(rates.begin(), rates.end());
    std::vector<CdfPoint> out;
    out.reserve(rates.size());
    const double n = static_cast<double>(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i)
        out.push_back({rates[i], static_cast<double>(i + 1) / n});
    return out;
}

struct SampleStats
{
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN(); // NaN below two samples
    std::size_t count = 0;
};

inline SampleStats sample_stats(std::span<const double> values)
{
    SampleStats s;
    s.count = values.size();
    if (values.empty())
        return s;
    double sum = 0.0;
    for (const double v : values)
        sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2)
    {
        double ss = 0.0;
        for (const double v : values)
            ss += (v - s.mean) * (v - s.mean);
        const double n = static_cast<double>(values.size());
        s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return s;
}

enum class SweepVariable
{
    G,
    L,
};

inline std::string_view to_string(SweepVariable v) { return v == SweepVariable::G ? "G" : "L"; }

struct SweepRow
{
    SweepVariable variable = SweepVariable::G;
    std::size_t value = 0;
    Method method = Method::Flexible;
    double alpha = 1.0;
    SampleStats stats;
};

struct SweepResult
{
    std::vector<SweepRow> rows;
    std::vector<TrialResult> raw;
    std::size_t failures = 0;
};

/// Side length of a square grid with G points, or throws.
inline std::size_t square_side(std::size_t G)
{
    auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(G))));
    if (G == 0 || side * side != G)
        throw std::invalid_argument("Grid size G=" + std::to_string(G) + " is not a perfect square.");
    return side;
}

inline ExperimentConfig with_sweep_value(ExperimentConfig config, SweepVariable variable, std::size_t value)
{
    if (variable == SweepVariable::G)
        config.grid_nx = config.grid_nz = square_side(value);
    else
        config.L = value;
    return config;
}

inline SweepResult sweep(const ExperimentConfig &config, SweepVariable variable, std::span<const std::size_t> values,
                         const MonteCarloOptions &options = {})
{
    for (const auto v : values)
        with_sweep_value(config, variable, v).validate();

    SweepResult out;
    for (const auto v : values)
    {
        const ExperimentConfig c = with_sweep_value(config, variable, v);
        MonteCarloResult mc = run_monte_carlo(c, options);
        out.failures += mc.failures;
        for (const Method m : c.methods)
            for (const double alpha : c.alpha_list)
            {
                const auto rates = select_rates(mc.results, m, alpha);
                out.rows.push_back({variable, v, m, alpha, sample_stats(rates)});
            }
        std::move(mc.results.begin(), mc.results.end(), std::back_inserter(out.raw));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV output

/// trial,method,alpha,G,L,sum_rate_bps_hz,wall_ms. wall_ms is left empty unless
/// `with_timing` is set so that untimed runs are byte-reproducible.
inline void write_raw_csv(std::ostream &os, std::span<const TrialResult> results, bool with_timing = false)
{
    using detail::format_double;
    os << "trial,method,alpha,G,L,sum_rate_bps_hz,wall_ms\n";
    for (const auto &r : results)
    {
        os << r.trial_index << ',' << to_string(r.method) << ',' << format_double(r.alpha) << ',' << r.G << ','
           << r.L << ',' << format_double(r.sum_rate) << ',';
        if (with_timing)
            os << format_double(r.wall_time * 1e3);
        os << '\n';
    }
}

inline void write_cdf_csv(std::ostream &os, std::span<const TrialResult> results, std::span<const Method> methods,
                          std::span<const double> alphas)
{
    using detail::format_double;
    os << "method,alpha,sum_rate_bps_hz,cumulative_probability\n";
    for (const Method m : methods)
        for (const double a : alphas)
        {
            if (select_rates(results, m, a).empty())
                continue;
            for (const auto &p : cdf_points(results, m, a))
                os << to_string(m) << ',' << format_double(a) << ',' << format_double(p.sum_rate) << ','
                   << format_double(p.probability) << '\n';
        }
}

inline void write_positions_csv(std::ostream &os, std::span<const TrialResult> results)
{
    using detail::format_double;
    os << "trial,method,alpha,antenna,x_m,z_m\n";
    for (const auto &r : results)
        for (std::size_t n = 0; n < r.positions.size(); ++n)
            os << r.trial_index << ',' << to_string(r.method) << ',' << format_double(r.alpha) << ',' << n << ','
               << format_double(r.positions[n].x) << ',' << format_double(r.positions[n].z) << '\n';
}

/// sweep_var,value,method,alpha,mean,stderr,trials
inline void write_aggregate_csv(std::ostream &os, std::span<const SweepRow> rows)
{
    using detail::format_double;
    os << "sweep_var,value,method,alpha,mean,stderr,trials\n";
    for (const auto &row : rows)
        os << to_string(row.variable) << ',' << row.value << ',' << to_string(row.method) << ','
           << format_double(row.alpha) << ',' << format_double(row.stats.mean) << ','
           << format_double(row.stats.std_error) << ',' << row.stats.count << '\n';
}

inline void write_errors_csv(std::ostream &os, std::span<const TrialResult> results)
{
    os << "trial,method,alpha,error\n";
    for (const auto &r : results)
        if (!r.ok())
        {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            os << r.trial_index << ',' << to_string(r.method) << ',' << detail::format_double(r.alpha) << ',' << msg
               << '\n';
        }
}

} // namespace flexprec

#endif
