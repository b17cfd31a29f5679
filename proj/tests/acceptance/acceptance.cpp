// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero when any criterion fails.
//
//   acceptance --suite quick|long|all [--out DIR]

#include "ksafc/harness.hpp"

#include "../oracles/dense_assembly.hpp"
#include "../oracles/naive_limiter.hpp"
#include "../support.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

using namespace ksafc;
using testing_support::rel_frobenius;
using testing_support::to_dense;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail)
{
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) {
        ++failures;
    }
}

void info(const std::string& name, const std::string& detail)
{
    std::printf("[INFO] %s: %s\n", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class Timer {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------

void assembly_oracle()
{
    Timer timer;
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int M = 1; M <= 4; ++M) {
        const auto mesh = build_uniform_unit_square(M);
        const P1Space space(mesh);
        const auto ops = assemble_operators(space);
        const auto ref = oracle::dense_operators(mesh);
        const auto beta = testing_support::random_vector(mesh.num_nodes(), -3, 3, rng);
        const auto t = assemble_convection(space, beta, 1.0);
        const auto t_ref = oracle::dense_convection(mesh, beta, 1.0);
        const Eigen::Map<const Eigen::VectorXd> ml(ops.lumped.data(),
                                                   static_cast<Eigen::Index>(ops.lumped.size()));
        worst = std::max({worst, rel_frobenius(to_dense(ops.mass), ref.mass),
                          (ml - ref.lumped).norm() / ref.lumped.norm(),
                          rel_frobenius(to_dense(ops.stiffness), ref.stiffness),
                          rel_frobenius(to_dense(t), t_ref),
                          rel_frobenius(to_dense(assemble_artificial_diffusion(t)),
                                        oracle::dense_artificial_diffusion(t_ref))});
    }
    const Mesh unit({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    Eigen::Matrix3d expected;
    expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
    const double local = (to_dense(assemble_stiffness(unit)) - expected).cwiseAbs().maxCoeff();
    report(worst <= 1e-12 && local <= 1e-14, "assembly vs dense 7-point oracle",
           fmt("M=1..4 worst rel Frobenius %.2e (<=1e-12), unit triangle stiffness err %.2e "
               "(<=1e-14), %.2fs",
               worst, local, timer.seconds()));
}

void structural_invariants()
{
    Timer timer;
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> pickM(2, 8);
    std::uniform_real_distribution<double> scale(0.1, 100.0);
    double worst_colsum = 0.0, worst_dsum = 0.0, min_doff = 0.0, min_td = 0.0;
    bool symmetric = true;
    for (int trial = 0; trial < 200; ++trial) {
        const auto mesh = testing_support::jittered_mesh(pickM(rng), 0.2, rng);
        const P1Space space(mesh);
        const double s = scale(rng);
        const auto beta = testing_support::random_vector(mesh.num_nodes(), -s, s, rng);
        const auto ts = assemble_convection(space, beta, scale(rng) / 10);
        const auto t = to_dense(ts);
        const auto d = to_dense(assemble_artificial_diffusion(ts));
        const double tmax = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
        worst_colsum = std::max(worst_colsum, t.colwise().sum().cwiseAbs().maxCoeff() / tmax);
        const double dmax = std::max(d.cwiseAbs().maxCoeff(), 1e-300);
        worst_dsum = std::max({worst_dsum, d.rowwise().sum().cwiseAbs().maxCoeff() / dmax,
                               d.colwise().sum().cwiseAbs().maxCoeff() / dmax});
        symmetric = symmetric && d == d.transpose();
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            for (Eigen::Index j = 0; j < d.cols(); ++j) {
                if (i != j) {
                    min_doff = std::min(min_doff, d(i, j));
                    min_td = std::min(min_td, t(i, j) + d(i, j));
                }
            }
        }
    }
    report(worst_colsum <= 1e-12 && worst_dsum <= 1e-12 && symmetric && min_doff >= 0.0 &&
               min_td >= -1e-14,
           "convection/diffusion structure (200 random trials)",
           fmt("T col sums %.2e rel, D sym=%s, D row/col sums %.2e rel, min d_ij %.1e, min "
               "(T+D)_ij %.2e, %.2fs",
               worst_colsum, symmetric ? "yes" : "no", worst_dsum, min_doff, min_td,
               timer.seconds()));
}

void limiter_oracle()
{
    Timer timer;
    std::mt19937_64 rng(303);
    std::vector<Mesh> meshes;
    for (int M = 1; M <= 4; ++M) {
        meshes.push_back(build_uniform_unit_square(M));
    }
    for (int M = 2; M <= 4; ++M) {
        meshes.push_back(testing_support::jittered_mesh(M, 0.2, rng));
    }
    const std::array<QStrategy, 3> strategies{GammaSumD{}, GammaMassOverNu{0.5}, MassOverK{1e-3}};
    double worst_factor = 0.0, worst_fbar = 0.0;
    bool led = true;
    int trials = 0;
    for (const auto& mesh : meshes) {
        const P1Space space(mesh);
        const auto lumped = assemble_mass(space).lumped;
        const auto n = mesh.num_nodes();
        for (int s = 0; s < 100; ++s) {
            const auto alpha = testing_support::random_vector(n, -1, 1, rng);
            const auto beta = testing_support::random_vector(n, 0, 10, rng);
            const auto d = assemble_artificial_diffusion(assemble_convection(space, beta, 1.0));
            const auto q = compute_q(mesh, d, lumped, strategies[static_cast<std::size_t>(s % 3)]);
            const auto flux = antidiffusive_fluxes(d, alpha);
            const auto w = correction_factors(d, flux, alpha, q.q);
            const auto fbar = limited_antidiffusion(d, w.factor, flux);

            const auto ref = oracle::naive_limiter(
                mesh, to_dense(d), Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(n)),
                Eigen::Map<const Eigen::VectorXd>(q.q.data(), static_cast<Eigen::Index>(n)));
            const double fscale = std::max(ref.flux.cwiseAbs().maxCoeff(), 1e-300);
            const auto offsets = d.row_offsets();
            const auto cols = d.col_indices();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                    if (cols[k] != i) {
                        worst_factor = std::max(
                            worst_factor,
                            std::abs(w.factor[k] - ref.factor(static_cast<Eigen::Index>(i),
                                                              static_cast<Eigen::Index>(cols[k]))));
                    }
                }
                const auto ii = static_cast<Eigen::Index>(i);
                worst_fbar = std::max(worst_fbar, std::abs(fbar[i] - ref.fbar(ii)) / fscale);
                const double slack = 1e-14 * fscale;
                led = led && ref.fbar(ii) <= ref.q_plus(ii) + slack &&
                      ref.fbar(ii) >= ref.q_minus(ii) - slack;
            }
            led = led && led_check(d, w.factor, flux, w.q_plus, w.q_minus);
            ++trials;
        }
    }
    report(worst_factor <= 1e-14 && worst_fbar <= 1e-14, "limiter vs naive transcription",
           fmt("%d trials on %zu meshes (<=25 nodes), worst |a_ij diff| %.1e, worst fbar diff "
               "%.1e rel (<=1e-14), %.2fs",
               trials, meshes.size(), worst_factor, worst_fbar, timer.seconds()));
    report(led, "limiter local extremum diminishing", fmt("Q- <= fbar <= Q+ on all %d trials", trials));
}

void linearity_preservation()
{
    Timer timer;
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-5, 5);
    int passed = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto mesh = build_uniform_unit_square(4 + trial % 5);
        const double a = u(rng), b = u(rng), c = u(rng);
        const auto v = nodal_interpolant(mesh, [&](double x, double y) { return a + b * x + c * y; });
        const auto w = testing_support::random_vector(mesh.num_nodes(), 0, 10, rng);
        passed += linearity_preservation_check(mesh, v, w, 1.0, GammaSumD{}) ? 1 : 0;
    }
    report(passed == 50, "linearity preservation (q = gamma sum d)",
           fmt("%d/50 affine fields keep abar_ij = 1 at every interior node, %.2fs", passed,
               timer.seconds()));
}

void blowup_positivity(std::vector<double>& drifts)
{
    Timer timer;
    RunConfig cfg;
    cfg.ic = "blowup";
    cfg.k_rule = parse_k_rule("blowup");

    cfg.M = 120;
    const Discretization d120(120);
    const auto rep = run_blowup(cfg, d120);
    bool stabilized_ok = true;
    std::string detail;
    double standard_final = 0.0;
    for (const auto& run : rep.runs) {
        const auto& s = run.result.summary;
        const double fin = min_nodal(s.final_state).alpha;
        detail += fmt("%s min_all=%.3e final=%.3e; ", std::string(to_string(run.result.scheme)).c_str(),
                      s.min_alpha, fin);
        if (run.result.scheme == Scheme::Standard) {
            standard_final = fin;
        } else {
            stabilized_ok = stabilized_ok && s.min_alpha >= -1e-12 * run.initial_sup;
            drifts.push_back(s.max_relative_mass_drift);
        }
    }
    const double k = rep.runs.front().result.resolved.k;
    report(stabilized_ok, "positivity of low/afc, blow-up data M=120",
           fmt("k=%.4e, 63 steps: %s%.1fs", k, detail.c_str(), timer.seconds()));
    report(standard_final < 0.0, "standard scheme negative at final step, M=120",
           fmt("min u(T)=%.3e with k=1e-5*h^1.01 (T=%.3e)", standard_final, 63 * k));

    Timer t60;
    cfg.M = 60;
    cfg.schemes = {Scheme::LowOrder, Scheme::Afc};
    const Discretization d60(60);
    const auto rep60 = run_blowup(cfg, d60);
    bool ok60 = true;
    std::string d60s;
    for (const auto& run : rep60.runs) {
        ok60 = ok60 && run.result.summary.min_alpha >= -1e-12 * run.initial_sup;
        drifts.push_back(run.result.summary.max_relative_mass_drift);
        d60s += fmt("%s min_all=%.3e; ", std::string(to_string(run.result.scheme)).c_str(),
                    run.result.summary.min_alpha);
    }
    report(ok60, "positivity of low/afc, blow-up data M=60", d60s + fmt("%.1fs", t60.seconds()));

    // Not a criterion: the same experiment with a larger step, inside the
    // stated bound 63k < 8e-5, to show where the standard scheme does go negative.
    RunConfig big = cfg;
    big.M = 120;
    big.k = 1e-6;
    big.k_rule = parse_k_rule("explicit");
    big.schemes = {Scheme::Standard, Scheme::LowOrder};
    const auto repb = run_blowup(big, d120);
    std::string bd;
    for (const auto& run : repb.runs) {
        bd += fmt("%s min u(T)=%.3e (%zu negative nodes); ",
                  std::string(to_string(run.result.scheme)).c_str(),
                  min_nodal(run.result.summary.final_state).alpha, run.negative_nodes.size());
    }
    info("blow-up data M=120 with k=1e-6, 63 steps", bd);
}

void conservation(const std::string& where, const std::vector<double>& drifts)
{
    double worst = 0.0;
    for (double d : drifts) {
        worst = std::max(worst, d);
    }
    report(!drifts.empty() && worst <= 1e-10, "mass conservation, " + where,
           fmt("%zu stabilized runs, worst relative drift %.2e (<=1e-10)", drifts.size(), worst));
}

void zero_factor_reduction()
{
    Timer timer;
    bool identical = true;
    int compared = 0;
    for (const char* ic : {"blowup", "gauss5"}) {
        const int M = 24;
        const Discretization d(M);
        RunConfig cfg;
        cfg.ic = ic;
        const double k = std::string(ic) == "blowup" ? time_step(parse_k_rule("blowup"), M)
                                                     : time_step(parse_k_rule("h2/2"), M);
        StepParams p = step_params(cfg, Scheme::LowOrder, k);
        p.lambda = std::string(ic) == "blowup" ? 1.0 : 20.0;
        Stepper low(d.space, d.ops, p);
        p.scheme = Scheme::Afc;
        p.zero_factors = true;
        Stepper afc(d.space, d.ops, p);
        State a = initial_state(d.mesh, initial_condition(ic));
        if (std::string(ic) == "gauss5") {
            a.beta = nodal_interpolant(d.mesh, [](double x, double y) { return 5 * std::exp(-20 * ((x - .3) * (x - .3) + (y - .6) * (y - .6))); });
        }
        State b = a;
        for (int n = 0; n < 20; ++n) {
            a = low.step(a).first;
            b = afc.step(b).first;
            identical = identical && a.alpha == b.alpha && a.beta == b.beta;
            ++compared;
        }
    }
    report(identical, "afc with zero factors equals low order",
           fmt("%d steps compared bitwise (u and c), %.2fs", compared, timer.seconds()));
}

void quadrature_scaling()
{
    Timer timer;
    const auto f = [](double x, double y) { return std::sin(std::numbers::pi * x) * std::cos(std::numbers::pi * y) + x * x; };
    const auto g = [](double x, double y) { return std::exp(x * y) + y; };
    std::vector<double> errs;
    for (int M : {8, 16, 32, 64}) {
        const auto mesh = build_uniform_unit_square(M);
        const auto mm = assemble_mass(mesh);
        const auto chi = nodal_interpolant(mesh, f);
        const auto psi = nodal_interpolant(mesh, g);
        const auto mpsi = spmv(mm.consistent, psi);
        double exact = 0.0;
        for (std::size_t i = 0; i < chi.size(); ++i) {
            exact += chi[i] * mpsi[i];
        }
        errs.push_back(std::abs(exact - lumped_inner_product(mm.lumped, chi, psi)));
    }
    bool ok = true;
    std::string rates;
    for (std::size_t i = 1; i < errs.size(); ++i) {
        const double r = std::log2(errs[i - 1] / errs[i]);
        ok = ok && std::abs(r - 2.0) <= 0.3;
        rates += fmt("%.3f ", r);
    }
    report(ok, "lumping error decay", fmt("errors %.2e..%.2e over M=8..64, log2 rates %s(2 +- 0.3)",
                                          errs.front(), errs.back(), rates.c_str()));

    std::mt19937_64 rng(909);
    const auto mesh = build_uniform_unit_square(8);
    const auto mm = assemble_mass(mesh);
    double lo = 1e300, hi = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto chi = testing_support::random_vector(mesh.num_nodes(), -1, 1, rng);
        const auto mchi = spmv(mm.consistent, chi);
        double l2 = 0.0;
        for (std::size_t i = 0; i < chi.size(); ++i) {
            l2 += chi[i] * mchi[i];
        }
        const double ratio = std::sqrt(lumped_inner_product(mm.lumped, chi, chi) / l2);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    report(lo >= 1.0 && hi <= 2.0, "lumped norm equivalence",
           fmt("||chi||_h/||chi|| in [%.4f, %.4f] over 100 random chi (within [1,2]), %.2fs", lo,
               hi, timer.seconds()));
}

void convergence(const std::filesystem::path& out)
{
    std::vector<double> drifts;
    int worst_iters = 0;
    double worst_ratio = 0.0;
    for (const char* ic : {"gauss5", "sincos"}) {
        Timer timer;
        RunConfig cfg;
        cfg.ic = ic;
        cfg.T = 0.01;
        cfg.resolutions = {10, 20, 40};
        cfg.ref_M = 160;
        cfg.ref_k = 1e-5;
        const auto result = run_convergence(cfg, {Norm::L2, Norm::H1});
        for (const auto& table : result.tables) {
            if (!out.empty()) {
                write_convergence_csv(table, out / ("convergence_" + table.ic + "_" +
                                                    std::string(to_string(table.norm)) + ".csv"));
            }
            const bool l2 = table.norm == Norm::L2;
            const double lo = l2 ? 1.7 : 0.75, hi = l2 ? 2.3 : 1.25;
            for (Scheme s : table.schemes) {
                std::string errs, ords;
                for (const auto& row : table.rows) {
                    errs += fmt("%.4e ", row.error.at(s));
                    if (auto it = row.order.find(s); it != row.order.end()) {
                        ords += fmt("%.4f ", it->second);
                    }
                }
                const double finest = table.rows.back().order.at(s);
                report(finest >= lo && finest <= hi,
                       fmt("%s order, %s, %s", std::string(to_string(table.norm)).c_str(), ic,
                           std::string(to_string(s)).c_str()),
                       fmt("errors %sorders %sfinest %.4f in [%.2f, %.2f]", errs.c_str(),
                           ords.c_str(), finest, lo, hi));
            }
        }
        for (const auto& dgn : result.diagnostics) {
            worst_iters = std::max(worst_iters, dgn.max_iterations);
            worst_ratio = std::max(worst_ratio, dgn.max_increment_ratio);
            if (dgn.scheme != Scheme::Standard) {
                drifts.push_back(dgn.max_relative_mass_drift);
            }
        }
        info(fmt("convergence study %s", ic), fmt("%.0fs", timer.seconds()));
    }
    report(worst_iters <= 100 && worst_ratio < 1.0, "fixed-point convergence in the study regime",
           fmt("max iterations per step %d (<=100), max increment ratio %.3e (<1)", worst_iters,
               worst_ratio));
    conservation("convergence studies", drifts);
}

} // namespace

int main(int argc, char** argv)
{
    std::string suite = "quick";
    std::filesystem::path out;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--suite") == 0 && i + 1 < argc) {
            suite = argv[++i];
        } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
            out = argv[++i];
            std::filesystem::create_directories(out);
        } else {
            std::fprintf(stderr, "usage: %s [--suite quick|long|all] [--out DIR]\n", argv[0]);
            return 2;
        }
    }
    const bool quick = suite == "quick" || suite == "all";
    const bool longer = suite == "long" || suite == "all";
    if (!quick && !longer) {
        std::fprintf(stderr, "unknown suite '%s'\n", suite.c_str());
        return 2;
    }

    try {
        if (quick) {
            assembly_oracle();
            structural_invariants();
            limiter_oracle();
            linearity_preservation();
            std::vector<double> drifts;
            blowup_positivity(drifts);
            conservation("blow-up runs", drifts);
            zero_factor_reduction();
            quadrature_scaling();
        }
        if (longer) {
            convergence(out);
        }
    } catch (const std::exception& e) {
        report(false, "unexpected exception", e.what());
    }
    std::printf("%d criterion line(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
