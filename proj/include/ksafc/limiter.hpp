#pragma once

#include "ksafc/mesh.hpp"
#include "ksafc/sparse.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ksafc {

/// q_i = gamma_i * sum_{j != i} d_ij
struct GammaSumD {};
/// q_i = gamma_i * m_i / nu, nu in (0, 1)
struct GammaMassOverNu {
    double nu = 0.5;
};
/// q_i = m_i / k; k <= 0 means "use the time step" inside the stepper
struct MassOverK {
    double k = 0.0;
};

using QStrategy = std::variant<GammaSumD, GammaMassOverNu, MassOverK>;

std::string describe(const QStrategy& strategy);

struct QVector {
    std::vector<double> q;
    /// Nodes where q_i came out zero (GammaSumD on a zero row of D). No
    /// fluxes leave such a node, so the limiter ends with R_i = 1 there.
    std::vector<int> zero_nodes;
};

/// Antidiffusive fluxes f_ij = d_ij (alpha_i - alpha_j), one per slot of the
/// pattern of D. Diagonal slots carry zero.
std::vector<double> antidiffusive_fluxes(const SparseMatrix& d, std::span<const double> alpha);

/// gamma holds gamma_i per node (see gamma_i); MassOverK ignores it.
QVector compute_q(std::span<const double> gamma, const SparseMatrix& d,
                  std::span<const double> lumped, const QStrategy& strategy);
QVector compute_q(const Mesh& mesh, const SparseMatrix& d, std::span<const double> lumped,
                  const QStrategy& strategy);

/// Per-node and per-slot state of one limiter pass. Slot-indexed arrays
/// follow the pattern the fluxes were computed on.
struct LimiterWork {
    std::vector<double> flux;
    std::vector<double> p_plus, p_minus;
    std::vector<double> q_plus, q_minus;
    std::vector<double> r_plus, r_minus;
    std::vector<double> abar;
    std::vector<double> factor;
};

/// Kuzmin-type computation of symmetric correction factors.
///
/// The local extrema are taken over the pattern row of i, i.e. i and its
/// adjacent vertices.
LimiterWork correction_factors(const SparseMatrix& pattern, std::span<const double> flux,
                               std::span<const double> alpha, std::span<const double> q);

/// f_bar_i = sum_{j != i} a_ij f_ij
std::vector<double> limited_antidiffusion(const SparseMatrix& pattern,
                                          std::span<const double> factor,
                                          std::span<const double> flux);

/// Q_i^- <= sum_j a_ij f_ij <= Q_i^+ at every node, slack 1e-12 * scale.
bool led_check(const SparseMatrix& pattern, std::span<const double> factor,
               std::span<const double> flux, std::span<const double> q_plus,
               std::span<const double> q_minus);

/// Runs the limiter on v (an affine interpolant) with D = D(T(w)) and reports
/// whether every directed factor abar_ij leaving an interior node equals 1
/// to within 1e-12.
bool linearity_preservation_check(const Mesh& mesh, std::span<const double> v,
                                  std::span<const double> w, double lambda,
                                  const QStrategy& strategy);

/// CSV forensics: a node table (i,P+,P-,Q+,Q-,R+,R-) and an edge table
/// (i,j,flux,abar_ij,a_ij).
void write_limiter_csv(const SparseMatrix& pattern, const LimiterWork& work,
                       const std::filesystem::path& nodes_path,
                       const std::filesystem::path& edges_path);

} // namespace ksafc
