#pragma once

#include "ksafc/assembly.hpp"
#include "ksafc/mesh.hpp"
#include "ksafc/stepper.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ksafc {

struct InitialCondition {
    std::string name;
    ScalarField u;
    ScalarField c;
};

/// "blowup", "gauss5" or "sincos".
InitialCondition initial_condition(std::string_view name);

struct KRule {
    enum class Kind { Explicit, Blowup, HOver, H2Over };
    Kind kind = Kind::Blowup;
    double c = 0.0;
};

/// "explicit", "blowup", "h/<c>", "h2/<c>".
KRule parse_k_rule(std::string_view text);
std::string to_string(const KRule& rule);

/// Blowup uses the triangle diameter h = sqrt(2)/M; the h/ and h2/ rules
/// use the grid spacing h0 = 1/M.
double time_step(const KRule& rule, int M, std::optional<double> explicit_k = std::nullopt);

/// "gamma-sum-d", "gamma-m-nu:<nu>", "m-over-k".
QStrategy parse_q_strategy(std::string_view text);

struct RunConfig {
    int M = 32;
    Scheme scheme = Scheme::Afc;
    double lambda = 1.0;
    std::optional<double> k;
    KRule k_rule{};
    std::optional<double> T;
    std::optional<int> steps;
    QStrategy q_strategy = MassOverK{0.0};
    double fp_tol = 1e-8;
    int fp_max_iters = 100;
    SolverKind solver = SolverKind::Iterative;
    std::string ic = "blowup";
    std::filesystem::path out = ".";
    bool vtk = false;
    int ref_M = 160;
    double ref_k = 1e-5;
    std::vector<int> resolutions{10, 20, 40};
    std::vector<Scheme> schemes{Scheme::Standard, Scheme::LowOrder, Scheme::Afc};
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Applies one key=value setting. Keys mirror the CLI flags without dashes
/// prefix: M, scheme, lambda, k, k-rule, T, steps, q, fp-tol, fp-max-iters,
/// solver, ic, out, vtk, ref-M, ref-k, resolutions, schemes.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat key=value text; '#' starts a comment, blank lines are skipped.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

struct Resolved {
    double k = 0.0;
    int n_steps = 0;
    /// Set when T/k was not an integer and k was shrunk to T/n_steps.
    bool k_adjusted = false;
};

/// Default when neither T nor steps is given: 63 steps.
Resolved resolve(const RunConfig& config, int M);

/// Mesh, P1 space and operators kept together so the pointers inside the
/// space stay valid.
struct Discretization {
    explicit Discretization(int M);
    Mesh mesh;
    P1Space space;
    Operators ops;
};

StepParams step_params(const RunConfig& config, Scheme scheme, double k);

State initial_state(const Mesh& mesh, const InitialCondition& ic);

struct SimulationResult {
    Scheme scheme = Scheme::Afc;
    Resolved resolved;
    State initial;
    RunSummary summary;
};

SimulationResult simulate(const Discretization& disc, const RunConfig& config, Scheme scheme,
                          const Resolved& resolved);

// ---------------------------------------------------------------------------
// Errors against a fine reference

struct ErrorNorms {
    double l2 = 0.0;
    double h1 = 0.0;
};

/// Exact nodal evaluation of a P1 function on a nested uniform mesh.
std::vector<double> prolongate(const Mesh& coarse, std::span<const double> values,
                               const Mesh& fine);

ErrorNorms error_norms(const Discretization& fine, std::span<const double> fine_ref,
                       const Mesh& coarse, std::span<const double> coarse_sol);

// ---------------------------------------------------------------------------
// Experiments

struct BlowupRun {
    SimulationResult result;
    double initial_sup = 0.0;
    /// Nodes with negative u at the final time.
    std::vector<int> negative_nodes;
};

struct BlowupReport {
    int M = 0;
    std::vector<BlowupRun> runs;
};

/// Runs every scheme in config.schemes on the blow-up data.
BlowupReport run_blowup(const RunConfig& config, const Discretization& disc);

enum class Norm { L2, H1 };
std::string_view to_string(Norm norm);

struct ConvergenceRow {
    int M = 0;
    double h0 = 0.0;
    double k = 0.0;
    int n_steps = 0;
    std::map<Scheme, double> error;
    /// log2(error_prev / error); absent on the first row.
    std::map<Scheme, double> order;
};

struct ConvergenceTable {
    std::string ic;
    Norm norm = Norm::L2;
    std::vector<Scheme> schemes;
    std::vector<ConvergenceRow> rows;
};

struct RunDiagnostics {
    Scheme scheme = Scheme::Afc;
    Norm norm = Norm::L2;
    int M = 0;
    int n_steps = 0;
    int max_iterations = 0;
    double max_increment_ratio = 0.0;
    double max_relative_mass_drift = 0.0;
    double min_alpha = 0.0;
};

struct ConvergenceResult {
    std::vector<ConvergenceTable> tables;
    /// One entry per coarse run plus one per reference (norm = L2, M = ref_M).
    std::vector<RunDiagnostics> diagnostics;
};

using ProgressSink = std::function<void(const std::string&)>;

/// Reference per scheme at (ref_M, ref_k); the L2 sweep uses k = h0^2/2 and
/// the H1 sweep k = h0/20 (h0 = 1/M).
ConvergenceResult run_convergence(const RunConfig& config, const std::vector<Norm>& norms,
                                  const ProgressSink& progress = {});

// ---------------------------------------------------------------------------
// Output

/// x,y,u,c per node, 17 significant digits.
void write_state_csv(const Mesh& mesh, const State& state, const std::filesystem::path& path);

/// Legacy VTK ASCII unstructured grid with point arrays u and c.
void write_vtk(const Mesh& mesh, const State& state, const std::filesystem::path& path);

void write_convergence_csv(const ConvergenceTable& table, const std::filesystem::path& path);
ConvergenceTable read_convergence_csv(const std::filesystem::path& path, std::string ic = {},
                                      Norm norm = Norm::L2);

void write_step_log(const RunSummary& summary, const std::filesystem::path& path);

} // namespace ksafc
