#include "ksafc/limiter.hpp"

#include "ksafc/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ksafc {

namespace {

// |P| below this is treated as P = 0.
constexpr double kTinyFluxSum = 1e-300;

void require_size(std::size_t got, std::size_t want, const char* what)
{
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(want) +
                             " entries, got " + std::to_string(got));
    }
}

} // namespace

std::string describe(const QStrategy& strategy)
{
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            std::ostringstream out;
            if constexpr (std::is_same_v<T, GammaSumD>) {
                out << "gamma-sum-d";
            } else if constexpr (std::is_same_v<T, GammaMassOverNu>) {
                out << "gamma-m-nu:" << s.nu;
            } else {
                out << "m-over-k";
                if (s.k > 0.0) {
                    out << "(k=" << s.k << ")";
                }
            }
            return out.str();
        },
        strategy);
}

std::vector<double> antidiffusive_fluxes(const SparseMatrix& d, std::span<const double> alpha)
{
    require_size(alpha.size(), d.rows(), "antidiffusive_fluxes");
    const auto offsets = d.row_offsets();
    const auto cols = d.col_indices();
    const auto dv = d.values();
    std::vector<double> flux(d.nnz(), 0.0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] != i) {
                flux[k] = dv[k] * (alpha[i] - alpha[cols[k]]);
            }
        }
    }
    return flux;
}

QVector compute_q(std::span<const double> gamma, const SparseMatrix& d,
                  std::span<const double> lumped, const QStrategy& strategy)
{
    const std::size_t n = d.rows();
    require_size(lumped.size(), n, "compute_q (lumped mass)");
    QVector out;
    out.q.assign(n, 0.0);

    if (const auto* s = std::get_if<MassOverK>(&strategy)) {
        if (!(s->k > 0.0)) {
            throw std::invalid_argument("compute_q: MassOverK needs k > 0");
        }
        for (std::size_t i = 0; i < n; ++i) {
            out.q[i] = lumped[i] / s->k;
        }
    } else if (const auto* s = std::get_if<GammaMassOverNu>(&strategy)) {
        if (!(s->nu > 0.0 && s->nu < 1.0)) {
            throw std::invalid_argument("compute_q: GammaMassOverNu needs nu in (0, 1)");
        }
        require_size(gamma.size(), n, "compute_q (gamma)");
        for (std::size_t i = 0; i < n; ++i) {
            out.q[i] = gamma[i] * lumped[i] / s->nu;
        }
    } else {
        require_size(gamma.size(), n, "compute_q (gamma)");
        const auto offsets = d.row_offsets();
        const auto cols = d.col_indices();
        const auto dv = d.values();
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                if (cols[k] != i) {
                    sum += dv[k];
                }
            }
            out.q[i] = gamma[i] * sum;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(out.q[i] > 0.0)) {
            out.zero_nodes.push_back(static_cast<int>(i));
        }
    }
    return out;
}

QVector compute_q(const Mesh& mesh, const SparseMatrix& d, std::span<const double> lumped,
                  const QStrategy& strategy)
{
    std::vector<double> gamma;
    if (!std::holds_alternative<MassOverK>(strategy)) {
        gamma = quality(mesh).gamma;
    }
    return compute_q(gamma, d, lumped, strategy);
}

LimiterWork correction_factors(const SparseMatrix& pattern, std::span<const double> flux,
                               std::span<const double> alpha, std::span<const double> q)
{
    const std::size_t n = pattern.rows();
    require_size(flux.size(), pattern.nnz(), "correction_factors (fluxes)");
    require_size(alpha.size(), n, "correction_factors (alpha)");
    require_size(q.size(), n, "correction_factors (q)");

    const auto offsets = pattern.row_offsets();
    const auto cols = pattern.col_indices();
    const auto transpose = transpose_slots(pattern);

    LimiterWork w;
    w.flux.assign(flux.begin(), flux.end());
    w.p_plus.assign(n, 0.0);
    w.p_minus.assign(n, 0.0);
    w.q_plus.assign(n, 0.0);
    w.q_minus.assign(n, 0.0);
    w.r_plus.assign(n, 1.0);
    w.r_minus.assign(n, 1.0);
    w.abar.assign(pattern.nnz(), 1.0);
    w.factor.assign(pattern.nnz(), 1.0);

    for (std::size_t i = 0; i < n; ++i) {
        double pp = 0.0, pm = 0.0;
        double amax = alpha[i], amin = alpha[i];
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            const std::size_t j = cols[k];
            amax = std::max(amax, alpha[j]);
            amin = std::min(amin, alpha[j]);
            if (j != i) {
                pp += std::max(0.0, flux[k]);
                pm += std::min(0.0, flux[k]);
            }
        }
        w.p_plus[i] = pp;
        w.p_minus[i] = pm;
        w.q_plus[i] = q[i] * (amax - alpha[i]);
        w.q_minus[i] = q[i] * (amin - alpha[i]);
        w.r_plus[i] = pp > kTinyFluxSum ? std::min(1.0, w.q_plus[i] / pp) : 1.0;
        w.r_minus[i] = pm < -kTinyFluxSum ? std::min(1.0, w.q_minus[i] / pm) : 1.0;
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] == i) {
                continue;
            }
            if (flux[k] > 0.0) {
                w.abar[k] = w.r_plus[i];
            } else if (flux[k] < 0.0) {
                w.abar[k] = w.r_minus[i];
            }
        }
    }
    for (std::size_t k = 0; k < pattern.nnz(); ++k) {
        w.factor[k] = std::min(w.abar[k], w.abar[transpose[k]]);
    }
    return w;
}

std::vector<double> limited_antidiffusion(const SparseMatrix& pattern,
                                          std::span<const double> factor,
                                          std::span<const double> flux)
{
    require_size(factor.size(), pattern.nnz(), "limited_antidiffusion (factors)");
    require_size(flux.size(), pattern.nnz(), "limited_antidiffusion (fluxes)");
    const auto offsets = pattern.row_offsets();
    const auto cols = pattern.col_indices();
    std::vector<double> fbar(pattern.rows(), 0.0);
    for (std::size_t i = 0; i < pattern.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] != i) {
                sum += factor[k] * flux[k];
            }
        }
        fbar[i] = sum;
    }
    return fbar;
}

bool led_check(const SparseMatrix& pattern, std::span<const double> factor,
               std::span<const double> flux, std::span<const double> q_plus,
               std::span<const double> q_minus)
{
    require_size(q_plus.size(), pattern.rows(), "led_check (Q+)");
    require_size(q_minus.size(), pattern.rows(), "led_check (Q-)");
    const auto fbar = limited_antidiffusion(pattern, factor, flux);
    const auto offsets = pattern.row_offsets();
    const auto cols = pattern.col_indices();
    for (std::size_t i = 0; i < pattern.rows(); ++i) {
        double scale = std::max(std::abs(q_plus[i]), std::abs(q_minus[i]));
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] != i) {
                scale = std::max(scale, std::abs(flux[k]));
            }
        }
        const double slack = 1e-12 * scale;
        if (fbar[i] > q_plus[i] + slack || fbar[i] < q_minus[i] - slack) {
            return false;
        }
    }
    return true;
}

bool linearity_preservation_check(const Mesh& mesh, std::span<const double> v,
                                  std::span<const double> w, double lambda,
                                  const QStrategy& strategy)
{
    require_size(v.size(), mesh.num_nodes(), "linearity_preservation_check (v)");
    const P1Space space(mesh);
    const auto t = assemble_convection(space, w, lambda);
    SparseMatrix d = space.pattern().zeros_like();
    assemble_artificial_diffusion_into(t, space.transpose(), d);
    const auto lumped = assemble_mass(space).lumped;
    const auto q = compute_q(mesh, d, lumped, strategy);
    const auto flux = antidiffusive_fluxes(d, v);
    const auto work = correction_factors(d, flux, v, q.q);

    const auto offsets = d.row_offsets();
    const auto cols = d.col_indices();
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (mesh.is_boundary(static_cast<int>(i))) {
            continue;
        }
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] != i && work.abar[k] < 1.0 - 1e-12) {
                return false;
            }
        }
    }
    return true;
}

void write_limiter_csv(const SparseMatrix& pattern, const LimiterWork& work,
                       const std::filesystem::path& nodes_path,
                       const std::filesystem::path& edges_path)
{
    std::ofstream nodes(nodes_path);
    if (!nodes) {
        throw std::runtime_error("cannot open " + nodes_path.string() + " for writing");
    }
    nodes.precision(17);
    nodes << "i,P_plus,P_minus,Q_plus,Q_minus,R_plus,R_minus\n";
    for (std::size_t i = 0; i < pattern.rows(); ++i) {
        nodes << i << ',' << work.p_plus[i] << ',' << work.p_minus[i] << ',' << work.q_plus[i]
              << ',' << work.q_minus[i] << ',' << work.r_plus[i] << ',' << work.r_minus[i] << '\n';
    }
    std::ofstream edges(edges_path);
    if (!edges) {
        throw std::runtime_error("cannot open " + edges_path.string() + " for writing");
    }
    edges.precision(17);
    edges << "i,j,flux,abar,a\n";
    const auto offsets = pattern.row_offsets();
    const auto cols = pattern.col_indices();
    for (std::size_t i = 0; i < pattern.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] != i) {
                edges << i << ',' << cols[k] << ',' << work.flux[k] << ',' << work.abar[k] << ','
                      << work.factor[k] << '\n';
            }
        }
    }
    if (!nodes || !edges) {
        throw std::runtime_error("write failed for limiter dump");
    }
}

} // namespace ksafc
