#pragma once

#include "ksafc/assembly.hpp"
#include "ksafc/limiter.hpp"
#include "ksafc/sparse.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ksafc {

enum class Scheme { Standard, LowOrder, Afc };

std::string_view to_string(Scheme scheme);
/// Accepts "standard", "low", "afc".
Scheme parse_scheme(std::string_view name);

/// Nodal coefficients of (u_h, c_h) at one time level.
struct State {
    std::vector<double> alpha;
    std::vector<double> beta;
    double time = 0.0;
};

struct StepParams {
    double k = 0.0;
    double lambda = 1.0;
    Scheme scheme = Scheme::Afc;
    /// MassOverK with k <= 0 is resolved to the time step.
    QStrategy q_strategy = MassOverK{0.0};
    double fp_tol = 1e-8;
    int fp_max_iters = 100;
    double solver_tol = 1e-12;
    SolverKind solver = SolverKind::Direct;
    /// Couple the c-update to alpha^{n-1} instead of the current u-iterate.
    bool lagged_coupling = false;
    /// Force every correction factor to zero (AFC reduces to low order).
    bool zero_factors = false;
    /// Record the column diagonal dominance of A1 and A2 per iteration.
    bool check_dominance = false;
};

struct StepReport {
    int iterations = 0;
    /// max(rel_inf(v), rel_inf(w)) per fixed-point iteration.
    std::vector<double> increments;
    double min_alpha = 0.0;
    double min_beta = 0.0;
    double mass_before = 0.0;
    double mass_after = 0.0;
    bool led_ok = true;
    std::optional<DominanceReport> a1_dominance;
    std::optional<DominanceReport> a2_dominance;
};

class StepFailure : public std::runtime_error {
public:
    StepFailure(const std::string& what, StepReport report)
        : std::runtime_error(what), report_(std::move(report))
    {}
    const StepReport& report() const { return report_; }

private:
    StepReport report_;
};

/// Backward Euler step of the coupled system via fixed-point iteration.
///
/// Each iteration j solves
///   A1(w_j) v_{j+1} = M_L alpha^{n-1} + k fbar(v_j, w_j),  A1 = M_L + k(S - T - D)
///   A2 w_{j+1}      = M_L beta^{n-1}  + k M_L v_j,         A2 = M_L + k(M_L + S)
/// with fbar = 0 for the low-order scheme. The standard scheme uses the
/// consistent mass and drops D and fbar. The space and operators must
/// outlive the stepper.
class Stepper {
public:
    Stepper(const P1Space& space, const Operators& ops, StepParams params);

    std::pair<State, StepReport> step(const State& prev);

    const StepParams& params() const { return params_; }
    const P1Space& space() const { return *space_; }
    const Operators& operators() const { return *ops_; }

    /// Last limiter pass (AFC only).
    const std::optional<LimiterWork>& last_limiter() const { return last_limiter_; }

private:
    std::vector<double> weighted_mass(std::span<const double> x) const;

    const P1Space* space_;
    const Operators* ops_;
    StepParams params_;
    std::vector<double> gamma_;
    SparseMatrix a1_base_;
    SparseMatrix a2_;
    LinearSolver a1_solver_;
    LinearSolver a2_solver_;
    SparseMatrix t_;
    SparseMatrix d_;
    SparseMatrix a1_;
    std::optional<LimiterWork> last_limiter_;
};

/// (alpha, 1)_h
double mass(const State& state, std::span<const double> lumped);

struct NodalMinimum {
    double alpha = 0.0;
    double beta = 0.0;
    int alpha_node = -1;
    int beta_node = -1;
};

NodalMinimum min_nodal(const State& state);

struct StepRecord {
    int step = 0;
    double time = 0.0;
    double mass = 0.0;
    double min_alpha = 0.0;
    double min_beta = 0.0;
    int iterations = 0;
    /// Largest ||Delta_{j+1}|| / ||Delta_j|| within the step (0 for one iteration).
    double max_increment_ratio = 0.0;
};

struct RunSummary {
    State final_state;
    std::vector<StepRecord> steps;
    double initial_mass = 0.0;
    /// max_n |(U^n,1)_h - (U^0,1)_h| / |(U^0,1)_h|
    double max_relative_mass_drift = 0.0;
    double min_alpha = 0.0;
    double min_beta = 0.0;
    int max_iterations = 0;
    double max_increment_ratio = 0.0;
    std::optional<double> worst_a1_margin;
    std::optional<double> worst_a2_margin;
};

using StepObserver = std::function<void(const State&, const StepReport&)>;

/// Runs n_steps >= 0 steps; throws StepFailure on the first failed step.
RunSummary run(Stepper& stepper, const State& initial, int n_steps,
               const StepObserver& observer = {});

} // namespace ksafc
