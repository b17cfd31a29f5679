#include "ksafc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>
#include <numbers>
#include <sstream>

namespace ksafc {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view text, std::string_view what)
{
    const std::string s = trim(text);
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    double v = 0.0;
    in >> v;
    if (s.empty() || in.fail() || !in.eof() || !std::isfinite(v)) {
        throw ConfigError("invalid number for " + std::string(what) + ": '" + s + "'");
    }
    return v;
}

int parse_int(std::string_view text, std::string_view what)
{
    const std::string s = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("invalid integer for " + std::string(what) + ": '" + s + "'");
    }
    return v;
}

bool parse_bool(std::string_view text, std::string_view what)
{
    const std::string s = trim(text);
    if (s == "1" || s == "true" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "0" || s == "false" || s == "no" || s == "off") {
        return false;
    }
    throw ConfigError("invalid boolean for " + std::string(what) + ": '" + s + "'");
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.imbue(std::locale::classic());
    out.precision(17);
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

double gaussian(double x, double y, double a)
{
    const double dx = x - 0.5;
    const double dy = y - 0.5;
    return std::exp(-a * (dx * dx + dy * dy));
}

} // namespace

InitialCondition initial_condition(std::string_view name)
{
    if (name == "blowup") {
        return {"blowup", [](double x, double y) { return 1000.0 * gaussian(x, y, 100.0); },
                [](double x, double y) { return 500.0 * gaussian(x, y, 50.0); }};
    }
    if (name == "gauss5") {
        return {"gauss5", [](double x, double y) { return 10.0 * gaussian(x, y, 10.0) + 5.0; },
                [](double, double) { return 0.0; }};
    }
    if (name == "sincos") {
        return {"sincos",
                [](double x, double y) {
                    const double s = std::sin(std::numbers::pi * x);
                    const double c = std::cos(std::numbers::pi * y);
                    return s * s * c * c;
                },
                [](double, double) { return 0.0; }};
    }
    throw ConfigError("unknown initial condition '" + std::string(name) +
                      "' (expected blowup, gauss5 or sincos)");
}

KRule parse_k_rule(std::string_view text)
{
    const std::string s = trim(text);
    if (s == "explicit") {
        return {KRule::Kind::Explicit, 0.0};
    }
    if (s == "blowup") {
        return {KRule::Kind::Blowup, 1e-5};
    }
    KRule rule;
    std::string_view rest;
    if (s.rfind("h2/", 0) == 0) {
        rule.kind = KRule::Kind::H2Over;
        rest = std::string_view(s).substr(3);
    } else if (s.rfind("h/", 0) == 0) {
        rule.kind = KRule::Kind::HOver;
        rest = std::string_view(s).substr(2);
    } else {
        throw ConfigError("unknown k rule '" + s + "' (expected explicit, blowup, h/<c>, h2/<c>)");
    }
    rule.c = parse_double(rest, "k rule divisor");
    if (!(rule.c > 0.0)) {
        throw ConfigError("k rule divisor must be positive");
    }
    return rule;
}

std::string to_string(const KRule& rule)
{
    std::ostringstream out;
    out.imbue(std::locale::classic());
    switch (rule.kind) {
    case KRule::Kind::Explicit:
        return "explicit";
    case KRule::Kind::Blowup:
        return "blowup";
    case KRule::Kind::HOver:
        out << "h/" << rule.c;
        break;
    case KRule::Kind::H2Over:
        out << "h2/" << rule.c;
        break;
    }
    return out.str();
}

double time_step(const KRule& rule, int M, std::optional<double> explicit_k)
{
    if (M < 1) {
        throw ConfigError("time_step: M must be >= 1");
    }
    const double h0 = 1.0 / M;
    switch (rule.kind) {
    case KRule::Kind::Explicit:
        if (!explicit_k || !(*explicit_k > 0.0)) {
            throw ConfigError("explicit k rule needs a positive k");
        }
        return *explicit_k;
    case KRule::Kind::Blowup:
        return 1e-5 * std::pow(std::numbers::sqrt2 * h0, 1.01);
    case KRule::Kind::HOver:
        return h0 / rule.c;
    case KRule::Kind::H2Over:
        return h0 * h0 / rule.c;
    }
    throw ConfigError("time_step: bad rule");
}

QStrategy parse_q_strategy(std::string_view text)
{
    const std::string s = trim(text);
    if (s == "gamma-sum-d") {
        return GammaSumD{};
    }
    if (s == "m-over-k") {
        return MassOverK{0.0};
    }
    if (s == "gamma-m-nu") {
        return GammaMassOverNu{};
    }
    if (s.rfind("gamma-m-nu:", 0) == 0) {
        const double nu = parse_double(std::string_view(s).substr(11), "nu");
        if (!(nu > 0.0 && nu < 1.0)) {
            throw ConfigError("gamma-m-nu needs nu in (0, 1)");
        }
        return GammaMassOverNu{nu};
    }
    throw ConfigError("unknown q strategy '" + s +
                      "' (expected gamma-sum-d, gamma-m-nu:<nu>, m-over-k)");
}

void apply_setting(RunConfig& config, std::string_view key_in, std::string_view value)
{
    const std::string key = trim(key_in);
    if (key == "M") {
        config.M = parse_int(value, key);
        if (config.M < 1) {
            throw ConfigError("M must be >= 1");
        }
    } else if (key == "scheme") {
        config.scheme = parse_scheme(trim(value));
    } else if (key == "lambda") {
        config.lambda = parse_double(value, key);
    } else if (key == "k") {
        config.k = parse_double(value, key);
        if (!(*config.k > 0.0)) {
            throw ConfigError("k must be positive");
        }
        config.k_rule = {KRule::Kind::Explicit, 0.0};
    } else if (key == "k-rule") {
        config.k_rule = parse_k_rule(value);
    } else if (key == "T") {
        config.T = parse_double(value, key);
        if (!(*config.T > 0.0)) {
            throw ConfigError("T must be positive");
        }
    } else if (key == "steps") {
        config.steps = parse_int(value, key);
        if (*config.steps < 0) {
            throw ConfigError("steps must be >= 0");
        }
    } else if (key == "q") {
        config.q_strategy = parse_q_strategy(value);
    } else if (key == "fp-tol") {
        config.fp_tol = parse_double(value, key);
        if (!(config.fp_tol > 0.0)) {
            throw ConfigError("fp-tol must be positive");
        }
    } else if (key == "fp-max-iters") {
        config.fp_max_iters = parse_int(value, key);
    } else if (key == "solver") {
        const std::string v = trim(value);
        if (v == "direct") {
            config.solver = SolverKind::Direct;
        } else if (v == "iterative") {
            config.solver = SolverKind::Iterative;
        } else {
            throw ConfigError("solver must be direct or iterative");
        }
    } else if (key == "ic") {
        config.ic = initial_condition(trim(value)).name;
    } else if (key == "out") {
        config.out = trim(value);
    } else if (key == "vtk") {
        config.vtk = parse_bool(value, key);
    } else if (key == "ref-M") {
        config.ref_M = parse_int(value, key);
    } else if (key == "ref-k") {
        config.ref_k = parse_double(value, key);
    } else if (key == "resolutions") {
        config.resolutions.clear();
        for (const auto& item : split(value, ',')) {
            config.resolutions.push_back(parse_int(item, key));
        }
    } else if (key == "schemes") {
        config.schemes.clear();
        for (const auto& item : split(value, ',')) {
            config.schemes.push_back(parse_scheme(item));
        }
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

void load_config_file(RunConfig& config, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        try {
            apply_setting(config, std::string_view(body).substr(0, eq),
                          std::string_view(body).substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

Resolved resolve(const RunConfig& config, int M)
{
    Resolved r;
    r.k = time_step(config.k_rule, M, config.k);
    if (config.steps) {
        r.n_steps = *config.steps;
        if (config.T && std::abs(r.k * r.n_steps - *config.T) > 1e-9 * *config.T) {
            throw ConfigError("both T and steps given but k*steps != T");
        }
        return r;
    }
    if (!config.T) {
        r.n_steps = 63;
        return r;
    }
    const double ratio = *config.T / r.k;
    const double n = std::round(ratio);
    if (n >= 1.0 && std::abs(ratio - n) <= 1e-9 * ratio) {
        r.n_steps = static_cast<int>(n);
        return r;
    }
    r.n_steps = static_cast<int>(std::ceil(ratio));
    r.k = *config.T / r.n_steps;
    r.k_adjusted = true;
    return r;
}

Discretization::Discretization(int M)
    : mesh(build_uniform_unit_square(M)), space(mesh), ops(assemble_operators(space))
{}

StepParams step_params(const RunConfig& config, Scheme scheme, double k)
{
    StepParams p;
    p.k = k;
    p.lambda = config.lambda;
    p.scheme = scheme;
    p.q_strategy = config.q_strategy;
    p.fp_tol = config.fp_tol;
    p.fp_max_iters = config.fp_max_iters;
    p.solver = config.solver;
    return p;
}

State initial_state(const Mesh& mesh, const InitialCondition& ic)
{
    return {nodal_interpolant(mesh, ic.u), nodal_interpolant(mesh, ic.c), 0.0};
}

SimulationResult simulate(const Discretization& disc, const RunConfig& config, Scheme scheme,
                          const Resolved& resolved)
{
    SimulationResult out;
    out.scheme = scheme;
    out.resolved = resolved;
    out.initial = initial_state(disc.mesh, initial_condition(config.ic));
    Stepper stepper(disc.space, disc.ops, step_params(config, scheme, resolved.k));
    out.summary = run(stepper, out.initial, resolved.n_steps);
    return out;
}

std::vector<double> prolongate(const Mesh& coarse, std::span<const double> values,
                               const Mesh& fine)
{
    const auto mc = coarse.uniform_resolution();
    const auto mf = fine.uniform_resolution();
    if (!mc || !mf) {
        throw std::invalid_argument("prolongate: both meshes must be uniform unit-square meshes");
    }
    if (*mf % *mc != 0) {
        throw std::invalid_argument("prolongate: fine M=" + std::to_string(*mf) +
                                    " is not a multiple of coarse M=" + std::to_string(*mc));
    }
    if (values.size() != coarse.num_nodes()) {
        throw DimensionError("prolongate: value count does not match the coarse mesh");
    }
    const int r = *mf / *mc;
    const int nc = *mc + 1;
    const int nf = *mf + 1;
    std::vector<double> out(fine.num_nodes());
    for (int J = 0; J < nf; ++J) {
        const int cj = std::min(J / r, *mc - 1);
        const double t = static_cast<double>(J - cj * r) / r;
        for (int I = 0; I < nf; ++I) {
            const int ci = std::min(I / r, *mc - 1);
            const double s = static_cast<double>(I - ci * r) / r;
            const double sw = values[static_cast<std::size_t>(ci + cj * nc)];
            const double se = values[static_cast<std::size_t>(ci + 1 + cj * nc)];
            const double ne = values[static_cast<std::size_t>(ci + 1 + (cj + 1) * nc)];
            const double nw = values[static_cast<std::size_t>(ci + (cj + 1) * nc)];
            double v;
            if (s >= t) {
                v = (1.0 - s) * sw + (s - t) * se + t * ne;
            } else {
                v = (1.0 - t) * sw + s * ne + (t - s) * nw;
            }
            out[static_cast<std::size_t>(I + J * nf)] = v;
        }
    }
    return out;
}

ErrorNorms error_norms(const Discretization& fine, std::span<const double> fine_ref,
                       const Mesh& coarse, std::span<const double> coarse_sol)
{
    if (fine_ref.size() != fine.mesh.num_nodes()) {
        throw DimensionError("error_norms: reference size does not match the fine mesh");
    }
    auto e = prolongate(coarse, coarse_sol, fine.mesh);
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] -= fine_ref[i];
    }
    const auto me = spmv(fine.ops.mass, e);
    const auto se = spmv(fine.ops.stiffness, e);
    double l2 = 0.0, semi = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        l2 += e[i] * me[i];
        semi += e[i] * se[i];
    }
    l2 = std::max(l2, 0.0);
    semi = std::max(semi, 0.0);
    return {std::sqrt(l2), std::sqrt(l2 + semi)};
}

BlowupReport run_blowup(const RunConfig& config, const Discretization& disc)
{
    if (config.ic != "blowup") {
        throw ConfigError("run_blowup needs ic=blowup");
    }
    BlowupReport report;
    report.M = *disc.mesh.uniform_resolution();
    const Resolved resolved = resolve(config, report.M);
    for (Scheme scheme : config.schemes) {
        BlowupRun run;
        run.result = simulate(disc, config, scheme, resolved);
        run.initial_sup = inf_norm(run.result.initial.alpha);
        const auto& alpha = run.result.summary.final_state.alpha;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (alpha[i] < 0.0) {
                run.negative_nodes.push_back(static_cast<int>(i));
            }
        }
        report.runs.push_back(std::move(run));
    }
    return report;
}

std::string_view to_string(Norm norm)
{
    return norm == Norm::L2 ? "L2" : "H1";
}

ConvergenceResult run_convergence(const RunConfig& config, const std::vector<Norm>& norms,
                                  const ProgressSink& progress)
{
    const double T = config.T.value_or(0.01);
    if (config.resolutions.empty()) {
        throw ConfigError("run_convergence: no resolutions");
    }
    for (int M : config.resolutions) {
        if (M < 1 || config.ref_M % M != 0) {
            throw ConfigError("run_convergence: reference M=" + std::to_string(config.ref_M) +
                              " is not a multiple of M=" + std::to_string(M));
        }
    }
    auto say = [&](const std::string& msg) {
        if (progress) {
            progress(msg);
        }
    };

    RunConfig base = config;
    base.T = T;
    base.steps.reset();

    ConvergenceResult result;
    for (Norm norm : norms) {
        result.tables.push_back({config.ic, norm, config.schemes, {}});
        for (int M : config.resolutions) {
            ConvergenceRow row;
            row.M = M;
            row.h0 = 1.0 / M;
            result.tables.back().rows.push_back(row);
        }
    }

    const Discretization fine(config.ref_M);
    std::map<int, std::unique_ptr<Discretization>> coarse;
    for (int M : config.resolutions) {
        coarse.emplace(M, std::make_unique<Discretization>(M));
    }

    for (Scheme scheme : config.schemes) {
        RunConfig ref_cfg = base;
        ref_cfg.k = config.ref_k;
        ref_cfg.k_rule = {KRule::Kind::Explicit, 0.0};
        const Resolved ref_res = resolve(ref_cfg, config.ref_M);
        say("reference " + std::string(to_string(scheme)) + " M=" + std::to_string(config.ref_M) +
            " steps=" + std::to_string(ref_res.n_steps));
        const auto ref = simulate(fine, ref_cfg, scheme, ref_res);
        result.diagnostics.push_back({scheme, Norm::L2, config.ref_M, ref_res.n_steps,
                                      ref.summary.max_iterations,
                                      ref.summary.max_increment_ratio,
                                      ref.summary.max_relative_mass_drift, ref.summary.min_alpha});

        for (auto& table : result.tables) {
            RunConfig cfg = base;
            cfg.k_rule = table.norm == Norm::L2 ? KRule{KRule::Kind::H2Over, 2.0}
                                                : KRule{KRule::Kind::HOver, 20.0};
            for (auto& row : table.rows) {
                const Resolved res = resolve(cfg, row.M);
                row.k = res.k;
                row.n_steps = res.n_steps;
                say(std::string(to_string(table.norm)) + " " + std::string(to_string(scheme)) +
                    " M=" + std::to_string(row.M) + " steps=" + std::to_string(res.n_steps));
                const auto& disc = *coarse.at(row.M);
                const auto sol = simulate(disc, cfg, scheme, res);
                const auto err = error_norms(fine, ref.summary.final_state.alpha, disc.mesh,
                                             sol.summary.final_state.alpha);
                row.error[scheme] = table.norm == Norm::L2 ? err.l2 : err.h1;
                result.diagnostics.push_back({scheme, table.norm, row.M, res.n_steps,
                                              sol.summary.max_iterations,
                                              sol.summary.max_increment_ratio,
                                              sol.summary.max_relative_mass_drift,
                                              sol.summary.min_alpha});
            }
            for (std::size_t r = 1; r < table.rows.size(); ++r) {
                const auto& prev = table.rows[r - 1];
                auto& row = table.rows[r];
                row.order[scheme] = std::log(prev.error.at(scheme) / row.error.at(scheme)) /
                                    std::log(static_cast<double>(row.M) / prev.M);
            }
        }
    }
    return result;
}

void write_state_csv(const Mesh& mesh, const State& state, const std::filesystem::path& path)
{
    if (state.alpha.size() != mesh.num_nodes() || state.beta.size() != mesh.num_nodes()) {
        throw DimensionError("write_state_csv: state size does not match the mesh");
    }
    auto out = open_output(path);
    out << "x,y,u,c\n";
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const auto& p = mesh.node(static_cast<int>(i));
        out << p.x << ',' << p.y << ',' << state.alpha[i] << ',' << state.beta[i] << '\n';
    }
    finish(out, path);
}

void write_vtk(const Mesh& mesh, const State& state, const std::filesystem::path& path)
{
    if (state.alpha.size() != mesh.num_nodes() || state.beta.size() != mesh.num_nodes()) {
        throw DimensionError("write_vtk: state size does not match the mesh");
    }
    auto out = open_output(path);
    const auto n = mesh.num_nodes();
    const auto nt = mesh.num_triangles();
    out << "# vtk DataFile Version 3.0\n"
        << "keller-segel t=" << state.time << "\n"
        << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (const auto& p : mesh.nodes()) {
        out << p.x << ' ' << p.y << " 0\n";
    }
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (const auto& t : mesh.triangles()) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "CELL_TYPES " << nt << '\n';
    for (std::size_t t = 0; t < nt; ++t) {
        out << "5\n";
    }
    out << "POINT_DATA " << n << '\n';
    out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
    for (double v : state.alpha) {
        out << v << '\n';
    }
    out << "SCALARS c double 1\nLOOKUP_TABLE default\n";
    for (double v : state.beta) {
        out << v << '\n';
    }
    finish(out, path);
}

void write_convergence_csv(const ConvergenceTable& table, const std::filesystem::path& path)
{
    auto out = open_output(path);
    out << "h0";
    for (Scheme s : table.schemes) {
        out << ',' << to_string(s) << ',' << to_string(s) << "_order";
    }
    out << '\n';
    for (const auto& row : table.rows) {
        out << "1/" << row.M;
        for (Scheme s : table.schemes) {
            out << ',';
            if (auto it = row.error.find(s); it != row.error.end()) {
                out << it->second;
            }
            out << ',';
            if (auto it = row.order.find(s); it != row.order.end()) {
                out << it->second;
            }
        }
        out << '\n';
    }
    finish(out, path);
}

ConvergenceTable read_convergence_csv(const std::filesystem::path& path, std::string ic, Norm norm)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    ConvergenceTable table;
    table.ic = std::move(ic);
    table.norm = norm;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path.string() + ": empty file");
    }
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "h0" || header.size() % 2 != 1) {
        throw std::runtime_error(path.string() + ": unexpected header");
    }
    for (std::size_t c = 1; c < header.size(); c += 2) {
        table.schemes.push_back(parse_scheme(header[c]));
    }
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != header.size() || cells[0].rfind("1/", 0) != 0) {
            throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
        }
        ConvergenceRow row;
        row.M = parse_int(std::string_view(cells[0]).substr(2), "h0");
        row.h0 = 1.0 / row.M;
        for (std::size_t s = 0; s < table.schemes.size(); ++s) {
            const auto& err = cells[1 + 2 * s];
            const auto& ord = cells[2 + 2 * s];
            if (!err.empty()) {
                row.error[table.schemes[s]] = parse_double(err, "error");
            }
            if (!ord.empty()) {
                row.order[table.schemes[s]] = parse_double(ord, "order");
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_step_log(const RunSummary& summary, const std::filesystem::path& path)
{
    auto out = open_output(path);
    out << "step,time,mass,min_u,min_c,iterations,max_increment_ratio\n";
    for (const auto& r : summary.steps) {
        out << r.step << ',' << r.time << ',' << r.mass << ',' << r.min_alpha << ',' << r.min_beta
            << ',' << r.iterations << ',' << r.max_increment_ratio << '\n';
    }
    finish(out, path);
}

} // namespace ksafc
