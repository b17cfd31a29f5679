#include "ksafc/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ksafc {

namespace {

constexpr double kIncrementFloor = 1e-300;

double relative_increment(std::span<const double> next, std::span<const double> prev)
{
    double diff = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        diff = std::max(diff, std::abs(next[i] - prev[i]));
        size = std::max(size, std::abs(next[i]));
    }
    return diff / std::max(size, kIncrementFloor);
}

bool all_finite(std::span<const double> x)
{
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace

std::string_view to_string(Scheme scheme)
{
    switch (scheme) {
    case Scheme::Standard:
        return "standard";
    case Scheme::LowOrder:
        return "low";
    case Scheme::Afc:
        return "afc";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view name)
{
    if (name == "standard") {
        return Scheme::Standard;
    }
    if (name == "low") {
        return Scheme::LowOrder;
    }
    if (name == "afc") {
        return Scheme::Afc;
    }
    throw std::invalid_argument("unknown scheme '" + std::string(name) +
                                "' (expected standard, low or afc)");
}

Stepper::Stepper(const P1Space& space, const Operators& ops, StepParams params)
    : space_(&space),
      ops_(&ops),
      params_(std::move(params)),
      a1_solver_(params_.solver, params_.solver_tol),
      a2_solver_(SolverKind::Direct, params_.solver_tol)
{
    if (!(params_.k > 0.0)) {
        throw std::invalid_argument("Stepper: time step k must be positive");
    }
    if (!(params_.fp_tol > 0.0) || params_.fp_max_iters < 1) {
        throw std::invalid_argument("Stepper: need fp_tol > 0 and fp_max_iters >= 1");
    }
    if (!ops.mass.same_pattern(space.pattern()) || !ops.stiffness.same_pattern(space.pattern())) {
        throw DimensionError("Stepper: operators were not assembled on this space");
    }
    if (auto* q = std::get_if<MassOverK>(&params_.q_strategy); q != nullptr && q->k <= 0.0) {
        q->k = params_.k;
    }
    if (params_.scheme == Scheme::Afc && !std::holds_alternative<MassOverK>(params_.q_strategy)) {
        gamma_ = quality(space.mesh()).gamma;
    }

    const double k = params_.k;
    const bool standard = params_.scheme == Scheme::Standard;
    a1_base_ = add_scaled(space.pattern(), ops.stiffness, k);
    a2_ = add_scaled(space.pattern(), ops.stiffness, k);
    auto base = a1_base_.values();
    auto a2 = a2_.values();
    if (standard) {
        const auto m = ops.mass.values();
        for (std::size_t s = 0; s < base.size(); ++s) {
            base[s] += m[s];
            a2[s] += (1.0 + k) * m[s];
        }
    } else {
        const auto offsets = a1_base_.row_offsets();
        const auto cols = a1_base_.col_indices();
        for (std::size_t i = 0; i < a1_base_.rows(); ++i) {
            for (std::size_t s = offsets[i]; s < offsets[i + 1]; ++s) {
                if (cols[s] == i) {
                    base[s] += ops.lumped[i];
                    a2[s] += (1.0 + k) * ops.lumped[i];
                }
            }
        }
    }
    a2_solver_.factor(a2_);
    t_ = space.pattern().zeros_like();
    d_ = space.pattern().zeros_like();
    a1_ = a1_base_;
}

std::vector<double> Stepper::weighted_mass(std::span<const double> x) const
{
    if (params_.scheme == Scheme::Standard) {
        return spmv(ops_->mass, x);
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = ops_->lumped[i] * x[i];
    }
    return out;
}

std::pair<State, StepReport> Stepper::step(const State& prev)
{
    const std::size_t n = space_->num_nodes();
    if (prev.alpha.size() != n || prev.beta.size() != n) {
        throw DimensionError("Stepper::step: state size does not match the mesh");
    }
    if (!all_finite(prev.alpha) || !all_finite(prev.beta)) {
        throw std::invalid_argument("Stepper::step: previous state has non-finite entries");
    }

    const double k = params_.k;
    const bool standard = params_.scheme == Scheme::Standard;
    const bool afc = params_.scheme == Scheme::Afc;

    StepReport report;
    report.mass_before = mass(prev, ops_->lumped);

    const auto mass_alpha = weighted_mass(prev.alpha);
    const auto mass_beta = weighted_mass(prev.beta);

    std::vector<double> v = prev.alpha;
    std::vector<double> w = prev.beta;
    std::vector<double> fbar(n, 0.0);
    std::vector<double> rhs(n);
    bool converged = false;

    for (int iter = 1; iter <= params_.fp_max_iters; ++iter) {
        assemble_convection_into(*space_, w, params_.lambda, t_);
        auto a1 = a1_.values();
        const auto base = a1_base_.values();
        const auto tv = t_.values();
        if (standard) {
            for (std::size_t s = 0; s < a1.size(); ++s) {
                a1[s] = base[s] - k * tv[s];
            }
        } else {
            assemble_artificial_diffusion_into(t_, space_->transpose(), d_);
            const auto dv = d_.values();
            for (std::size_t s = 0; s < a1.size(); ++s) {
                a1[s] = base[s] - k * (tv[s] + dv[s]);
            }
        }

        std::fill(fbar.begin(), fbar.end(), 0.0);
        if (afc) {
            const auto flux = antidiffusive_fluxes(d_, v);
            const auto q = compute_q(gamma_, d_, ops_->lumped, params_.q_strategy);
            LimiterWork work = correction_factors(d_, flux, v, q.q);
            if (params_.zero_factors) {
                std::fill(work.factor.begin(), work.factor.end(), 0.0);
            }
            fbar = limited_antidiffusion(d_, work.factor, flux);
            report.led_ok = report.led_ok &&
                            led_check(d_, work.factor, flux, work.q_plus, work.q_minus);
            last_limiter_ = std::move(work);
        }

        if (params_.check_dominance) {
            const auto dom = column_diagonal_dominance(a1_);
            if (!report.a1_dominance || dom.worst_margin < report.a1_dominance->worst_margin) {
                report.a1_dominance = dom;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = mass_alpha[i] + k * fbar[i];
        }
        SolveReport solve_report;
        a1_solver_.factor(a1_);
        auto v_next = a1_solver_.solve(rhs, solve_report, v);
        if (!solve_report.success) {
            report.iterations = iter;
            throw StepFailure("u-solve failed at t=" + std::to_string(prev.time + k) +
                                  " (relative residual " +
                                  std::to_string(solve_report.relative_residual) + ")",
                              report);
        }

        const auto coupling = weighted_mass(params_.lagged_coupling ? prev.alpha : v);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = mass_beta[i] + k * coupling[i];
        }
        auto w_next = a2_solver_.solve(rhs, solve_report);
        if (!solve_report.success) {
            report.iterations = iter;
            throw StepFailure("c-solve failed at t=" + std::to_string(prev.time + k) +
                                  " (relative residual " +
                                  std::to_string(solve_report.relative_residual) + ")",
                              report);
        }

        const double inc = std::max(relative_increment(v_next, v), relative_increment(w_next, w));
        report.increments.push_back(inc);
        report.iterations = iter;
        v = std::move(v_next);
        w = std::move(w_next);
        if (!std::isfinite(inc)) {
            break;
        }
        if (inc < params_.fp_tol) {
            converged = true;
            break;
        }
    }

    if (params_.check_dominance) {
        report.a2_dominance = column_diagonal_dominance(a2_);
    }

    State next{std::move(v), std::move(w), prev.time + k};
    const auto minimum = min_nodal(next);
    report.min_alpha = minimum.alpha;
    report.min_beta = minimum.beta;
    report.mass_after = mass(next, ops_->lumped);

    if (!converged) {
        std::ostringstream msg;
        msg << "fixed-point iteration did not reach tolerance " << params_.fp_tol << " within "
            << params_.fp_max_iters << " iterations at t=" << next.time;
        if (!report.increments.empty()) {
            msg << " (last increment " << report.increments.back() << ")";
        }
        throw StepFailure(msg.str(), report);
    }
    return {std::move(next), std::move(report)};
}

double mass(const State& state, std::span<const double> lumped)
{
    if (state.alpha.size() != lumped.size()) {
        throw DimensionError("mass: state size does not match the lumped mass");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < lumped.size(); ++i) {
        sum += lumped[i] * state.alpha[i];
    }
    return sum;
}

NodalMinimum min_nodal(const State& state)
{
    NodalMinimum out;
    if (!state.alpha.empty()) {
        const auto it = std::min_element(state.alpha.begin(), state.alpha.end());
        out.alpha = *it;
        out.alpha_node = static_cast<int>(it - state.alpha.begin());
    }
    if (!state.beta.empty()) {
        const auto it = std::min_element(state.beta.begin(), state.beta.end());
        out.beta = *it;
        out.beta_node = static_cast<int>(it - state.beta.begin());
    }
    return out;
}

RunSummary run(Stepper& stepper, const State& initial, int n_steps, const StepObserver& observer)
{
    if (n_steps < 0) {
        throw std::invalid_argument("run: n_steps must be non-negative");
    }
    const auto& lumped = stepper.operators().lumped;
    RunSummary summary;
    summary.final_state = initial;
    summary.initial_mass = mass(initial, lumped);
    const auto initial_min = min_nodal(initial);
    summary.min_alpha = initial_min.alpha;
    summary.min_beta = initial_min.beta;
    const double mass_scale = std::max(std::abs(summary.initial_mass), kIncrementFloor);

    for (int n = 1; n <= n_steps; ++n) {
        auto [next, report] = stepper.step(summary.final_state);
        StepRecord rec;
        rec.step = n;
        rec.time = next.time;
        rec.mass = report.mass_after;
        rec.min_alpha = report.min_alpha;
        rec.min_beta = report.min_beta;
        rec.iterations = report.iterations;
        for (std::size_t j = 1; j < report.increments.size(); ++j) {
            if (report.increments[j - 1] > 0.0) {
                rec.max_increment_ratio = std::max(rec.max_increment_ratio,
                                                   report.increments[j] / report.increments[j - 1]);
            }
        }
        summary.max_relative_mass_drift =
            std::max(summary.max_relative_mass_drift,
                     std::abs(rec.mass - summary.initial_mass) / mass_scale);
        summary.min_alpha = std::min(summary.min_alpha, rec.min_alpha);
        summary.min_beta = std::min(summary.min_beta, rec.min_beta);
        summary.max_iterations = std::max(summary.max_iterations, rec.iterations);
        summary.max_increment_ratio = std::max(summary.max_increment_ratio, rec.max_increment_ratio);
        if (report.a1_dominance) {
            summary.worst_a1_margin = std::min(summary.worst_a1_margin.value_or(
                                                   std::numeric_limits<double>::infinity()),
                                               report.a1_dominance->worst_margin);
        }
        if (report.a2_dominance) {
            summary.worst_a2_margin = std::min(summary.worst_a2_margin.value_or(
                                                   std::numeric_limits<double>::infinity()),
                                               report.a2_dominance->worst_margin);
        }
        summary.steps.push_back(rec);
        if (observer) {
            observer(next, report);
        }
        summary.final_state = std::move(next);
    }
    return summary;
}

} // namespace ksafc
