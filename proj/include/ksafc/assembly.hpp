#pragma once

#include "ksafc/mesh.hpp"
#include "ksafc/sparse.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace ksafc {

using Gradient = std::array<double, 2>;
using ScalarField = std::function<double(double x, double y)>;
using GradientField = std::function<Gradient(double x, double y)>;

/// Per-triangle P1 data shared by all assembly routines of one mesh.
///
/// The matrix pattern is the node adjacency graph plus the diagonal; every
/// operator assembled through a P1Space uses it, so slot k addresses the same
/// (i, j) pair in M, S, T and D.
class P1Space {
public:
    explicit P1Space(const Mesh& mesh);

    const Mesh& mesh() const { return *mesh_; }
    std::size_t num_nodes() const { return mesh_->num_nodes(); }

    const SparseMatrix& pattern() const { return pattern_; }
    std::span<const std::size_t> transpose() const { return transpose_; }

    /// Gradients of the three local basis functions on triangle t (constant).
    const std::array<Gradient, 3>& gradients(int t) const
    {
        return gradients_[static_cast<std::size_t>(t)];
    }
    /// Slot of (tri[a], tri[b]) at index 3a + b.
    const std::array<std::size_t, 9>& element_slots(int t) const
    {
        return slots_[static_cast<std::size_t>(t)];
    }

private:
    const Mesh* mesh_;
    SparseMatrix pattern_;
    std::vector<std::size_t> transpose_;
    std::vector<std::array<Gradient, 3>> gradients_;
    std::vector<std::array<std::size_t, 9>> slots_;
};

struct MassMatrices {
    SparseMatrix consistent;
    /// Diagonal of the lumped mass matrix, m_i = sum_j m_ij.
    std::vector<double> lumped;
};

struct Operators {
    SparseMatrix mass;
    std::vector<double> lumped;
    SparseMatrix stiffness;
};

MassMatrices assemble_mass(const P1Space& space);
MassMatrices assemble_mass(const Mesh& mesh);

SparseMatrix assemble_stiffness(const P1Space& space);
SparseMatrix assemble_stiffness(const Mesh& mesh);

Operators assemble_operators(const P1Space& space);

/// tau_ij = lambda (phi_j grad c_h, grad phi_i), with c_h = sum beta_l phi_l.
SparseMatrix assemble_convection(const P1Space& space, std::span<const double> beta,
                                 double lambda);
SparseMatrix assemble_convection(const Mesh& mesh, std::span<const double> beta, double lambda);
/// Overwrites the values of t, which must carry the space pattern.
void assemble_convection_into(const P1Space& space, std::span<const double> beta, double lambda,
                              SparseMatrix& t);

/// d_ij = max{-tau_ij, 0, -tau_ji} off the diagonal, d_ii = -sum_{j != i} d_ij,
/// on the symmetrized pattern of T (diagonal always present).
SparseMatrix assemble_artificial_diffusion(const SparseMatrix& t);
/// Pattern-preserving variant: d and t share one structurally symmetric
/// pattern with the given transpose slots.
void assemble_artificial_diffusion_into(const SparseMatrix& t,
                                        std::span<const std::size_t> transpose, SparseMatrix& d);

/// (psi, chi)_h = sum_i m_i psi_i chi_i.
double lumped_inner_product(std::span<const double> lumped, std::span<const double> psi,
                            std::span<const double> chi);
double lumped_inner_product(const Mesh& mesh, std::span<const double> psi,
                            std::span<const double> chi);

std::vector<double> nodal_interpolant(const Mesh& mesh, const ScalarField& f);

/// Elliptic projection: (S + M) r = b with b_i = int grad f . grad phi_i + f phi_i,
/// the right side integrated by a 7-point degree-5 rule on each triangle.
std::vector<double> ritz_projection(const P1Space& space, const ScalarField& f,
                                    const GradientField& grad_f, double tol = 1e-12);

/// Degree-5 Dunavant rule on a triangle: barycentric points and weights that
/// sum to one (scale by the area).
struct TriangleRule {
    std::array<std::array<double, 3>, 7> points;
    std::array<double, 7> weights;
};
const TriangleRule& seven_point_rule();

} // namespace ksafc
