// Command-line driver for the Keller-Segel solvers.

#include "ksafc/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace ksafc;

namespace {

struct Flags {
    std::string config;
    std::vector<std::pair<std::string, std::string>> settings;
};

// Registers a string flag that is replayed through apply_setting after the
// config file, so flags override the file.
void add_setting(CLI::App* app, Flags& flags, const std::string& name, const std::string& help)
{
    app->add_option_function<std::string>(
        "--" + name, [&flags, name](const std::string& v) { flags.settings.emplace_back(name, v); },
        help);
}

void add_common(CLI::App* app, Flags& flags)
{
    app->add_option("--config", flags.config, "key=value configuration file");
    add_setting(app, flags, "M", "mesh resolution (unit square split into 2M^2 triangles)");
    add_setting(app, flags, "lambda", "chemotactic sensitivity");
    add_setting(app, flags, "k", "explicit time step");
    add_setting(app, flags, "k-rule", "blowup | h/<c> | h2/<c>");
    add_setting(app, flags, "T", "final time");
    add_setting(app, flags, "steps", "number of time steps");
    add_setting(app, flags, "q", "gamma-sum-d | gamma-m-nu:<nu> | m-over-k");
    add_setting(app, flags, "fp-tol", "fixed-point tolerance");
    add_setting(app, flags, "fp-max-iters", "fixed-point iteration cap");
    add_setting(app, flags, "out", "output directory");
    add_setting(app, flags, "solver", "direct | iterative (Jacobi BiCGSTAB, LU fallback)");
    app->add_flag_function(
        "--vtk", [&flags](std::int64_t) { flags.settings.emplace_back("vtk", "1"); },
        "also write legacy VTK files");
}

RunConfig build_config(const Flags& flags, RunConfig config)
{
    if (!flags.config.empty()) {
        load_config_file(config, flags.config);
    }
    for (const auto& [key, value] : flags.settings) {
        apply_setting(config, key, value);
    }
    return config;
}

void write_fields(const RunConfig& config, const Mesh& mesh, const State& state,
                  const std::string& stem)
{
    write_state_csv(mesh, state, config.out / (stem + ".csv"));
    if (config.vtk) {
        write_vtk(mesh, state, config.out / (stem + ".vtk"));
    }
}

int cmd_run(const RunConfig& config)
{
    const Discretization disc(config.M);
    const Resolved res = resolve(config, config.M);
    if (res.k_adjusted) {
        std::cerr << "note: k adjusted to " << res.k << " so that T is reached in "
                  << res.n_steps << " steps\n";
    }
    std::printf("run: scheme=%s ic=%s M=%d k=%.6e steps=%d q=%s\n",
                std::string(to_string(config.scheme)).c_str(), config.ic.c_str(), config.M, res.k,
                res.n_steps, describe(config.q_strategy).c_str());
    const auto sim = simulate(disc, config, config.scheme, res);
    const auto& s = sim.summary;
    std::printf("  t=%.6e  min over run: u=%.6e c=%.6e  mass drift=%.3e  max iters=%d\n",
                s.final_state.time, s.min_alpha, s.min_beta, s.max_relative_mass_drift,
                s.max_iterations);
    const std::string stem = "run_" + std::string(to_string(config.scheme));
    write_fields(config, disc.mesh, s.final_state, stem);
    write_step_log(s, config.out / (stem + "_steps.csv"));
    return 0;
}

int cmd_blowup(RunConfig config)
{
    config.ic = "blowup";
    const Discretization disc(config.M);
    const auto report = run_blowup(config, disc);
    auto out = std::ofstream();
    std::filesystem::create_directories(config.out);
    const auto report_path = config.out / "blowup_positivity.csv";
    out.open(report_path);
    if (!out) {
        throw std::runtime_error("cannot open " + report_path.string());
    }
    out.precision(17);
    out << "scheme,k,steps,min_u_all_steps,min_u_final,negative_nodes,mass_drift\n";
    for (const auto& run : report.runs) {
        const auto& s = run.result.summary;
        const auto fmin = min_nodal(s.final_state);
        std::printf("%-8s k=%.4e steps=%d  min u (all steps)=%.6e  final min u=%.6e at (%.4f,%.4f)"
                    "  negative nodes=%zu  mass drift=%.3e\n",
                    std::string(to_string(run.result.scheme)).c_str(), run.result.resolved.k,
                    run.result.resolved.n_steps, s.min_alpha, fmin.alpha,
                    disc.mesh.node(fmin.alpha_node).x, disc.mesh.node(fmin.alpha_node).y,
                    run.negative_nodes.size(), s.max_relative_mass_drift);
        out << to_string(run.result.scheme) << ',' << run.result.resolved.k << ','
            << run.result.resolved.n_steps << ',' << s.min_alpha << ',' << fmin.alpha << ','
            << run.negative_nodes.size() << ',' << s.max_relative_mass_drift << '\n';
        const std::string stem = "blowup_" + std::string(to_string(run.result.scheme));
        write_fields(config, disc.mesh, s.final_state, stem);
        write_step_log(s, config.out / (stem + "_steps.csv"));
    }
    return 0;
}

int cmd_converge(const RunConfig& config)
{
    const auto result = run_convergence(config, {Norm::L2, Norm::H1},
                                        [](const std::string& msg) { std::cerr << msg << '\n'; });
    for (const auto& table : result.tables) {
        std::printf("%s errors, ic=%s\n", std::string(to_string(table.norm)).c_str(),
                    table.ic.c_str());
        std::printf("%-8s", "h0");
        for (Scheme s : table.schemes) {
            std::printf(" %14s %8s", std::string(to_string(s)).c_str(), "order");
        }
        std::printf("\n");
        for (const auto& row : table.rows) {
            std::printf("1/%-6d", row.M);
            for (Scheme s : table.schemes) {
                std::printf(" %14.6e", row.error.at(s));
                if (auto it = row.order.find(s); it != row.order.end()) {
                    std::printf(" %8.4f", it->second);
                } else {
                    std::printf(" %8s", "");
                }
            }
            std::printf("\n");
        }
        write_convergence_csv(table, config.out / ("convergence_" + table.ic + "_" +
                                                   std::string(to_string(table.norm)) + ".csv"));
    }
    return 0;
}

int cmd_mesh_dump(const RunConfig& config)
{
    const auto mesh = build_uniform_unit_square(config.M);
    std::filesystem::create_directories(config.out);
    write_mesh_dump(mesh, config.out / "mesh_nodes.csv", config.out / "mesh_triangles.csv");
    const auto q = quality(mesh);
    std::printf("M=%d nodes=%zu triangles=%zu h_max=%.6f max angle=%.6f rad\n", config.M,
                mesh.num_nodes(), mesh.num_triangles(), q.h_max, q.max_interior_angle);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Keller-Segel P1 finite element solver with algebraic flux correction"};
    app.require_subcommand(1);

    Flags run_flags, blowup_flags, converge_flags, mesh_flags;

    auto* run = app.add_subcommand("run", "single run of one scheme");
    add_common(run, run_flags);
    add_setting(run, run_flags, "scheme", "standard | low | afc");
    add_setting(run, run_flags, "ic", "blowup | gauss5 | sincos");

    auto* blowup = app.add_subcommand("blowup", "blow-up positivity experiment, all schemes");
    add_common(blowup, blowup_flags);

    auto* converge = app.add_subcommand("converge", "convergence study against a fine reference");
    add_common(converge, converge_flags);
    add_setting(converge, converge_flags, "ic", "gauss5 | sincos");
    add_setting(converge, converge_flags, "ref-M", "reference resolution");
    add_setting(converge, converge_flags, "ref-k", "reference time step");
    add_setting(converge, converge_flags, "resolutions", "comma-separated list of M");
    add_setting(converge, converge_flags, "schemes", "comma-separated list of schemes");

    auto* mesh_dump = app.add_subcommand("mesh-dump", "write the uniform mesh as CSV");
    add_setting(mesh_dump, mesh_flags, "M", "mesh resolution");
    add_setting(mesh_dump, mesh_flags, "out", "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(build_config(run_flags, RunConfig{}));
        }
        if (*blowup) {
            RunConfig defaults;
            defaults.M = 120;
            return cmd_blowup(build_config(blowup_flags, defaults));
        }
        if (*converge) {
            RunConfig defaults;
            defaults.ic = "gauss5";
            defaults.T = 0.01;
            return cmd_converge(build_config(converge_flags, defaults));
        }
        if (*mesh_dump) {
            return cmd_mesh_dump(build_config(mesh_flags, RunConfig{}));
        }
    } catch (const StepFailure& e) {
        std::cerr << "step failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
