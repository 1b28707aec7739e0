// SPDX-License-Identifier: Apache-2.0
//
// Flexible RZF precoding by off-grid regularized-least-squares OMP.
//
// Antennas are placed one at a time. Each outer iteration
//   1. matches the grid atom with the largest l1 correlation against the
//      residual R = I - H F,
//   2. refines that antenna off the grid with first-order Taylor steps,
//   3. refits F by regularized least squares and updates R,
//   4. prunes every grid candidate closer than lambda/2 to the new antenna.
// The final precoder is column-normalized.

#ifndef FLEXPREC_FLEX_OMP_HPP
#define FLEXPREC_FLEX_OMP_HPP

#include "channel_model.hpp"
#include "linear_precoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexprec {

/// Thrown when the movable region runs out of feasible grid points.
class RegionExhaustedError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct RefinementParams
{
    std::size_t max_refine_iters = 10; // Taylor steps per placed antenna; 0 disables refinement
    double gamma_max_scale = 1e6;      // gamma_max = scale * max(bx^H bx, bz^H bz)
    double bisection_tol = 1e-8;       // relative to max(bx^H bx, bz^H bz)
    double step_tol = 1e-4;            // in wavelengths, on |dx| + |dz|
    std::size_t max_backoff = 5;       // gamma doublings after a rejected step
    bool refine_all_after = false;     // one extra cyclic pass over all antennas at the end

    void validate() const
    {
        if (!(gamma_max_scale > 0.0) || !(bisection_tol > 0.0) || !(step_tol > 0.0))
            throw std::invalid_argument("RefinementParams: tolerances and gamma scale must be positive.");
    }
};

/// Grid indices still eligible for antenna matching, kept sorted ascending.
using CandidateSet = std::vector<std::size_t>;

inline CandidateSet all_candidates(const PositionGrid &grid)
{
    CandidateSet c(grid.size());
    for (std::size_t g = 0; g < c.size(); ++g)
        c[g] = g;
    return c;
}

struct SupportState
{
    AntennaPositions selected;
    CandidateSet candidates;
    CMatrix channel;  // K x n
    CMatrix precoder; // n x K, unnormalized
    CMatrix residual; // K x K

    static SupportState initial(std::size_t num_users, const PositionGrid &grid)
    {
        const auto K = static_cast<Eigen::Index>(num_users);
        return {{}, all_candidates(grid), CMatrix(K, 0), CMatrix(0, K), CMatrix::Identity(K, K)};
    }
};

// ---------------------------------------------------------------------------
// Trace

enum class TraceKind
{
    Matched,  // grid atom chosen; objective_after is the on-grid objective
    Step,     // accepted Taylor step
    Rejected, // no acceptable step; refinement of this antenna stops
    Refit,    // RLS refit after refinement
};

struct TraceRecord
{
    TraceKind kind = TraceKind::Matched;
    std::size_t iteration = 0; // outer iteration, 1-based
    std::size_t inner = 0;     // Taylor step index, 0 for Matched/Refit
    std::size_t antenna = 0;   // 0-based antenna being refined
    std::size_t grid_index = 0;
    Position position;
    double objective_before = 0.0;
    double objective_after = 0.0;
    double gamma = 0.0;
};

inline const char *to_string(TraceKind k)
{
    switch (k)
    {
    case TraceKind::Matched:
        return "matched";
    case TraceKind::Step:
        return "step";
    case TraceKind::Rejected:
        return "rejected";
    case TraceKind::Refit:
        return "refit";
    }
    return "?";
}

/// One whitespace-separated line per record.
inline std::string format_trace(const TraceRecord &r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s iter=%zu inner=%zu antenna=%zu grid=%zu x=%.12g z=%.12g before=%.17g after=%.17g gamma=%.6g",
                  to_string(r.kind), r.iteration, r.inner, r.antenna, r.grid_index, r.position.x, r.position.z,
                  r.objective_before, r.objective_after, r.gamma);
    return buf;
}

// ---------------------------------------------------------------------------
// Antenna matching

/// argmax over candidates of || D(:, g)^H R ||_1. Ties go to the lowest index.
inline std::size_t antenna_matching(const CMatrix &dictionary, const CMatrix &residual, std::span<const std::size_t> candidates)
{
    if (candidates.empty())
        throw RegionExhaustedError("antenna_matching: no feasible grid position left.");
    std::size_t best = candidates.front();
    double best_score = -1.0;
    for (const std::size_t g : candidates)
    {
        const auto col = dictionary.col(static_cast<Eigen::Index>(g));
        double score = 0.0;
        for (Eigen::Index j = 0; j < residual.cols(); ++j)
            score += std::abs(col.dot(residual.col(j))); // dot conjugates its left operand
        if (score > best_score || (score == best_score && g < best))
        {
            best_score = score;
            best = g;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Off-grid refinement

/// Regularized projections of r onto bx and bz, as functions of gamma.
struct TaylorProjection
{
    cplx corr_x = 0.0; // bx^H r
    cplx corr_z = 0.0; // bz^H r
    double energy_x = 0.0; // bx^H bx
    double energy_z = 0.0; // bz^H bz

    TaylorProjection() = default;

    TaylorProjection(const CVector &bx, const CVector &bz, const CVector &r)
        : corr_x(bx.dot(r)), corr_z(bz.dot(r)), energy_x(bx.squaredNorm()), energy_z(bz.squaredNorm())
    {
    }

    cplx eta(double gamma) const { return energy_x + gamma > 0.0 ? corr_x / (energy_x + gamma) : cplx(0.0); }
    cplx xi(double gamma) const { return energy_z + gamma > 0.0 ? corr_z / (energy_z + gamma) : cplx(0.0); }

    /// Real coordinate displacement (Re eta, Re xi).
    Position step(double gamma) const { return {eta(gamma).real(), xi(gamma).real()}; }

    double gamma_max(double scale) const { return scale * std::max(energy_x, energy_z); }
};

/// Kronecker product f^T (x) d for column vectors f, d: equals vec(d f^T)
/// under column-major stacking.
inline CVector kron_column(const CVector &f, const CVector &d)
{
    CVector out(f.size() * d.size());
    for (Eigen::Index j = 0; j < f.size(); ++j)
        out.segment(j * d.size(), d.size()) = f(j) * d;
    return out;
}

/// Column-major vec().
inline CVector vec(const CMatrix &M)
{
    return Eigen::Map<const CVector>(M.data(), M.size());
}

/// Slack on the lambda/2 spacing test, in meters. Absorbs rounding in grid
/// coordinates such as 3d - 2d < d.
inline constexpr double kSpacingSlack = 1e-12;

namespace detail {

inline bool step_feasible(const Position &p, std::span<const Position> others, const PositionGrid &region)
{
    if (!region.contains(p))
        return false;
    const double min_dist = region.wavelength() / 2.0 - kSpacingSlack;
    for (const auto &o : others)
        if (distance(p, o) < min_dist)
            return false;
    return true;
}

inline Position displaced(const Position &p, const Position &d) { return {p.x + d.x, p.z + d.z}; }

} // namespace detail

/// Smallest gamma in [0, gamma_max] whose step keeps the moved antenna inside the
/// region and at least lambda/2 from `others`. Returns 0 when the full step is
/// feasible and nullopt when not even gamma_max is.
inline std::optional<double> gamma_bisection(const TaylorProjection &proj, const Position &current,
                                             std::span<const Position> others, const PositionGrid &region,
                                             const RefinementParams &params)
{
    auto feasible = [&](double gamma) {
        return detail::step_feasible(detail::displaced(current, proj.step(gamma)), others, region);
    };
    if (feasible(0.0))
        return 0.0;
    const double gamma_max = proj.gamma_max(params.gamma_max_scale);
    if (!(gamma_max > 0.0) || !feasible(gamma_max))
        return std::nullopt;

    double lo = 0.0, hi = gamma_max;
    const double tol = params.bisection_tol * std::max(proj.energy_x, proj.energy_z);
    while (hi - lo > tol)
    {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

inline std::optional<double> gamma_bisection(const CVector &bx, const CVector &bz, const CVector &r,
                                             const Position &current, std::span<const Position> others,
                                             const PositionGrid &region, const RefinementParams &params)
{
    return gamma_bisection(TaylorProjection(bx, bz, r), current, others, region, params);
}

/// Taylor projection of the residual for moving antenna `n` of `state`, at
/// the RLS fit of the current positions.
inline TaylorProjection taylor_projection(const PathSet &paths, const SupportState &state, std::size_t n, double wavelength)
{
    const Position &p = state.selected[n];
    const auto grad = position_manifold_grad(paths, p.x, p.z, wavelength);
    const CVector f = state.precoder.row(static_cast<Eigen::Index>(n)).transpose();
    return TaylorProjection(kron_column(f, grad.d_x), kron_column(f, grad.d_z), vec(state.residual));
}

/// Recomputes channel, RLS precoder and residual from the selected positions.
inline void refit(const PathSet &paths, SupportState &state, double alpha, double wavelength)
{
    state.channel = channel_matrix(state.selected, paths, wavelength);
    state.precoder = rzf_primal(state.channel, alpha);
    const auto K = state.channel.rows();
    state.residual = CMatrix::Identity(K, K) - state.channel * state.precoder;
}

inline double support_objective(const SupportState &state, double alpha)
{
    return state.residual.squaredNorm() + alpha * state.precoder.squaredNorm();
}

/// Off-grid refinement of antenna `n`. Every accepted step strictly lowers
/// ||I - HF||_F^2 + alpha ||F||_F^2 (with F refit at the new position); a
/// rejected step is retried with gamma doubled. The returned state carries
/// channel, precoder and residual consistent with its positions.
inline SupportState refine_position(const PathSet &paths, SupportState state, std::size_t n, double alpha,
                                    const RefinementParams &params, const PositionGrid &region,
                                    std::vector<TraceRecord> *trace = nullptr, std::size_t iteration = 0,
                                    std::size_t grid_index = 0)
{
    if (n >= state.selected.size())
        throw std::out_of_range("refine_position: antenna index out of range.");
    const double wavelength = region.wavelength();
    refit(paths, state, alpha, wavelength);
    double objective = support_objective(state, alpha);

    AntennaPositions others;
    others.reserve(state.selected.size());

    for (std::size_t inner = 1; inner <= params.max_refine_iters; ++inner)
    {
        const Position current = state.selected[n];
        const TaylorProjection proj = taylor_projection(paths, state, n, wavelength);

        others.clear();
        for (std::size_t i = 0; i < state.selected.size(); ++i)
            if (i != n)
                others.push_back(state.selected[i]);

        const auto gamma0 = gamma_bisection(proj, current, others, region, params);
        if (!gamma0)
            break;
        if (proj.step(*gamma0) == Position{})
            break;

        double gamma = *gamma0;
        const double gamma_seed = std::max(proj.energy_x, proj.energy_z);
        bool accepted = false;
        SupportState trial = state;
        double trial_objective = objective;
        for (std::size_t attempt = 0; attempt <= params.max_backoff; ++attempt)
        {
            if (attempt > 0)
                gamma = gamma > 0.0 ? 2.0 * gamma : gamma_seed;
            const Position proposal = region.clamp(detail::displaced(current, proj.step(gamma)));
            if (!detail::step_feasible(proposal, others, region))
                continue;
            trial.selected[n] = proposal;
            refit(paths, trial, alpha, wavelength);
            trial_objective = support_objective(trial, alpha);
            if (trial_objective < objective)
            {
                accepted = true;
                break;
            }
        }

        if (!accepted)
        {
            if (trace)
                trace->push_back({TraceKind::Rejected, iteration, inner, n, grid_index, current, objective,
                                  trial_objective, gamma});
            break;
        }

        const Position moved = trial.selected[n];
        if (trace)
            trace->push_back({TraceKind::Step, iteration, inner, n, grid_index, moved, objective, trial_objective, gamma});
        state = std::move(trial);
        objective = trial_objective;

        if (std::abs(moved.x - current.x) + std::abs(moved.z - current.z) < params.step_tol * wavelength)
            break;
    }
    return state;
}

// ---------------------------------------------------------------------------
// Support confirmation

/// Drops every candidate closer than lambda/2 to `refined`. Points at exactly
/// lambda/2 (up to kSpacingSlack) stay feasible.
inline CandidateSet support_confirmation(std::span<const std::size_t> candidates, const PositionGrid &grid,
                                         const Position &refined)
{
    const double min_dist = grid.wavelength() / 2.0 - kSpacingSlack;
    CandidateSet kept;
    kept.reserve(candidates.size());
    for (const std::size_t g : candidates)
        if (distance(grid.coordinate(g), refined) >= min_dist)
            kept.push_back(g);
    return kept;
}

// ---------------------------------------------------------------------------
// Full algorithm

struct FlexibleResult
{
    AntennaPositions positions;
    std::vector<std::size_t> grid_indices; // matched atom per antenna
    CMatrix channel;                       // K x N at the final positions
    CMatrix precoder;                      // N x K, column-normalized
    CMatrix raw_precoder;                  // N x K, RLS fit before normalization
    double objective = 0.0;                // ||I - H F||^2 + alpha ||F||^2 with the raw fit
};

inline FlexibleResult flexible_precoding(const PathSet &paths, const PositionGrid &grid, std::size_t num_antennas,
                                         double alpha, const RefinementParams &params, double total_power = 1.0,
                                         std::vector<TraceRecord> *trace = nullptr)
{
    if (num_antennas == 0)
        throw std::invalid_argument("flexible_precoding: need at least one antenna.");
    if (!(alpha > 0.0))
        throw std::invalid_argument("flexible_precoding: alpha must be positive.");
    params.validate();

    const double wavelength = grid.wavelength();
    const CMatrix dictionary = build_dictionary(paths, grid);
    SupportState state = SupportState::initial(paths.num_users(), grid);
    FlexibleResult result;

    for (std::size_t n = 1; n <= num_antennas; ++n)
    {
        const std::size_t g = antenna_matching(dictionary, state.residual, state.candidates);
        state.selected.push_back(grid.coordinate(g));
        result.grid_indices.push_back(g);
        if (trace)
        {
            SupportState probe = state;
            refit(paths, probe, alpha, wavelength);
            const double obj = support_objective(probe, alpha);
            trace->push_back({TraceKind::Matched, n, 0, n - 1, g, state.selected.back(), obj, obj, 0.0});
        }

        if (params.max_refine_iters > 0)
            state = refine_position(paths, std::move(state), n - 1, alpha, params, grid, trace, n, g);

        refit(paths, state, alpha, wavelength);
        if (trace)
        {
            const double obj = support_objective(state, alpha);
            trace->push_back({TraceKind::Refit, n, 0, n - 1, g, state.selected.back(), obj, obj, 0.0});
        }
        state.candidates = support_confirmation(state.candidates, grid, state.selected.back());
    }

    if (params.refine_all_after && params.max_refine_iters > 0)
    {
        for (std::size_t i = 0; i < state.selected.size(); ++i)
            state = refine_position(paths, std::move(state), i, alpha, params, grid, trace, num_antennas + 1,
                                    result.grid_indices[i]);
        refit(paths, state, alpha, wavelength);
    }

    result.positions = state.selected;
    result.channel = state.channel;
    result.raw_precoder = state.precoder;
    result.objective = support_objective(state, alpha);
    result.precoder = normalize_precoder(state.precoder, total_power);
    return result;
}

} // namespace flexprec

#endif
