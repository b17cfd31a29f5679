#include "ksafc/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ksafc {

P1Space::P1Space(const Mesh& mesh) : mesh_(&mesh)
{
    const auto n = mesh.num_nodes();
    std::vector<Triplet> trips;
    trips.reserve(n + 2 * mesh.edges().size());
    for (std::size_t i = 0; i < n; ++i) {
        trips.push_back({i, i, 0.0});
    }
    for (const auto& e : mesh.edges()) {
        const auto a = static_cast<std::size_t>(e[0]);
        const auto b = static_cast<std::size_t>(e[1]);
        trips.push_back({a, b, 0.0});
        trips.push_back({b, a, 0.0});
    }
    pattern_ = SparseMatrix::from_triplets(n, n, trips);
    transpose_ = transpose_slots(pattern_);

    gradients_.resize(mesh.num_triangles());
    slots_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(static_cast<int>(t));
        const double twice_area = 2.0 * mesh.area(static_cast<int>(t));
        for (int a = 0; a < 3; ++a) {
            const Point& pb = mesh.node(tri[(a + 1) % 3]);
            const Point& pc = mesh.node(tri[(a + 2) % 3]);
            gradients_[t][static_cast<std::size_t>(a)] = {(pb.y - pc.y) / twice_area,
                                                          (pc.x - pb.x) / twice_area};
            for (int b = 0; b < 3; ++b) {
                slots_[t][static_cast<std::size_t>(3 * a + b)] =
                    pattern_.find(static_cast<std::size_t>(tri[a]), static_cast<std::size_t>(tri[b]));
            }
        }
    }
}

MassMatrices assemble_mass(const P1Space& space)
{
    const Mesh& mesh = space.mesh();
    MassMatrices out{space.pattern().zeros_like(), std::vector<double>(mesh.num_nodes(), 0.0)};
    auto vals = out.consistent.values();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const int ti = static_cast<int>(t);
        const double area = mesh.area(ti);
        const auto& slots = space.element_slots(ti);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                vals[slots[static_cast<std::size_t>(3 * a + b)]] += a == b ? area / 6.0 : area / 12.0;
            }
            out.lumped[static_cast<std::size_t>(mesh.triangle(ti)[a])] += area / 3.0;
        }
    }
    return out;
}

MassMatrices assemble_mass(const Mesh& mesh)
{
    return assemble_mass(P1Space(mesh));
}

SparseMatrix assemble_stiffness(const P1Space& space)
{
    const Mesh& mesh = space.mesh();
    SparseMatrix s = space.pattern().zeros_like();
    auto vals = s.values();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const int ti = static_cast<int>(t);
        const double area = mesh.area(ti);
        const auto& g = space.gradients(ti);
        const auto& slots = space.element_slots(ti);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                vals[slots[3 * a + b]] += area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    return s;
}

SparseMatrix assemble_stiffness(const Mesh& mesh)
{
    return assemble_stiffness(P1Space(mesh));
}

Operators assemble_operators(const P1Space& space)
{
    auto mass = assemble_mass(space);
    return {std::move(mass.consistent), std::move(mass.lumped), assemble_stiffness(space)};
}

void assemble_convection_into(const P1Space& space, std::span<const double> beta, double lambda,
                              SparseMatrix& t)
{
    const Mesh& mesh = space.mesh();
    if (beta.size() != mesh.num_nodes()) {
        throw DimensionError("assemble_convection: beta has " + std::to_string(beta.size()) +
                             " entries for " + std::to_string(mesh.num_nodes()) + " nodes");
    }
    if (!t.same_pattern(space.pattern())) {
        t = space.pattern().zeros_like();
    }
    auto vals = t.values();
    std::fill(vals.begin(), vals.end(), 0.0);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const int ti = static_cast<int>(k);
        const auto& tri = mesh.triangle(ti);
        const auto& g = space.gradients(ti);
        double gx = 0.0, gy = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            const double b = beta[static_cast<std::size_t>(tri[a])];
            gx += b * g[a][0];
            gy += b * g[a][1];
        }
        // int_K phi_j = |K|/3 for every vertex j of K.
        const double scale = lambda * mesh.area(ti) / 3.0;
        const auto& slots = space.element_slots(ti);
        for (std::size_t a = 0; a < 3; ++a) {
            const double row = scale * (gx * g[a][0] + gy * g[a][1]);
            for (std::size_t b = 0; b < 3; ++b) {
                vals[slots[3 * a + b]] += row;
            }
        }
    }
}

SparseMatrix assemble_convection(const P1Space& space, std::span<const double> beta, double lambda)
{
    SparseMatrix t = space.pattern().zeros_like();
    assemble_convection_into(space, beta, lambda, t);
    return t;
}

SparseMatrix assemble_convection(const Mesh& mesh, std::span<const double> beta, double lambda)
{
    return assemble_convection(P1Space(mesh), beta, lambda);
}

void assemble_artificial_diffusion_into(const SparseMatrix& t,
                                        std::span<const std::size_t> transpose, SparseMatrix& d)
{
    if (t.rows() != t.cols()) {
        throw DimensionError("assemble_artificial_diffusion: T is not square");
    }
    if (transpose.size() != t.nnz()) {
        throw DimensionError("assemble_artificial_diffusion: transpose map size mismatch");
    }
    if (!d.same_pattern(t)) {
        d = t.zeros_like();
    }
    const auto offsets = t.row_offsets();
    const auto cols = t.col_indices();
    const auto tau = t.values();
    auto dv = d.values();
    for (std::size_t i = 0; i < t.rows(); ++i) {
        double diag_sum = 0.0;
        std::size_t diag_slot = SparseMatrix::npos;
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (cols[k] == i) {
                diag_slot = k;
                continue;
            }
            const double dij = std::max({-tau[k], 0.0, -tau[transpose[k]]});
            dv[k] = dij;
            diag_sum += dij;
        }
        if (diag_slot == SparseMatrix::npos) {
            throw DimensionError("assemble_artificial_diffusion: pattern lacks diagonal of row " +
                                 std::to_string(i));
        }
        dv[diag_slot] = -diag_sum;
    }
}

SparseMatrix assemble_artificial_diffusion(const SparseMatrix& t)
{
    if (t.rows() != t.cols()) {
        throw DimensionError("assemble_artificial_diffusion: T is not square");
    }
    // Union of the patterns of T, T^T and I, carrying the values of T.
    SparseMatrix sym = add_scaled(add_scaled(t, transpose(t), 0.0), SparseMatrix::identity(t.rows()),
                                  0.0);
    {
        auto vals = sym.values();
        std::fill(vals.begin(), vals.end(), 0.0);
        const auto offsets = sym.row_offsets();
        const auto cols = sym.col_indices();
        for (std::size_t i = 0; i < sym.rows(); ++i) {
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                vals[k] = t.at(i, cols[k]);
            }
        }
    }
    SparseMatrix d = sym.zeros_like();
    assemble_artificial_diffusion_into(sym, transpose_slots(sym), d);
    return d;
}

double lumped_inner_product(std::span<const double> lumped, std::span<const double> psi,
                            std::span<const double> chi)
{
    if (psi.size() != lumped.size() || chi.size() != lumped.size()) {
        throw DimensionError("lumped_inner_product: length mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < lumped.size(); ++i) {
        sum += lumped[i] * psi[i] * chi[i];
    }
    return sum;
}

double lumped_inner_product(const Mesh& mesh, std::span<const double> psi,
                            std::span<const double> chi)
{
    std::vector<double> lumped(mesh.num_nodes(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        for (int v : mesh.triangle(static_cast<int>(t))) {
            lumped[static_cast<std::size_t>(v)] += mesh.area(static_cast<int>(t)) / 3.0;
        }
    }
    return lumped_inner_product(lumped, psi, chi);
}

std::vector<double> nodal_interpolant(const Mesh& mesh, const ScalarField& f)
{
    std::vector<double> values(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const auto& p = mesh.node(static_cast<int>(i));
        values[i] = f(p.x, p.y);
        if (!std::isfinite(values[i])) {
            throw std::domain_error("nodal_interpolant: non-finite value at node " +
                                    std::to_string(i));
        }
    }
    return values;
}

const TriangleRule& seven_point_rule()
{
    static const TriangleRule rule = [] {
        const double s15 = std::sqrt(15.0);
        const double b1 = (6.0 + s15) / 21.0;
        const double a1 = 1.0 - 2.0 * b1;
        const double b2 = (6.0 - s15) / 21.0;
        const double a2 = 1.0 - 2.0 * b2;
        const double w1 = (155.0 + s15) / 1200.0;
        const double w2 = (155.0 - s15) / 1200.0;
        TriangleRule r;
        r.points = {{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                     {a1, b1, b1},
                     {b1, a1, b1},
                     {b1, b1, a1},
                     {a2, b2, b2},
                     {b2, a2, b2},
                     {b2, b2, a2}}};
        r.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
        return r;
    }();
    return rule;
}

std::vector<double> ritz_projection(const P1Space& space, const ScalarField& f,
                                    const GradientField& grad_f, double tol)
{
    const Mesh& mesh = space.mesh();
    const auto& rule = seven_point_rule();
    std::vector<double> rhs(mesh.num_nodes(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const int ti = static_cast<int>(t);
        const auto& tri = mesh.triangle(ti);
        const auto& g = space.gradients(ti);
        const double area = mesh.area(ti);
        const Point& p0 = mesh.node(tri[0]);
        const Point& p1 = mesh.node(tri[1]);
        const Point& p2 = mesh.node(tri[2]);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto& lam = rule.points[q];
            const double x = lam[0] * p0.x + lam[1] * p1.x + lam[2] * p2.x;
            const double y = lam[0] * p0.y + lam[1] * p1.y + lam[2] * p2.y;
            const double fv = f(x, y);
            const Gradient gf = grad_f(x, y);
            const double w = rule.weights[q] * area;
            for (std::size_t a = 0; a < 3; ++a) {
                rhs[static_cast<std::size_t>(tri[a])] +=
                    w * (gf[0] * g[a][0] + gf[1] * g[a][1] + fv * lam[a]);
            }
        }
    }
    const auto ops = assemble_operators(space);
    const auto system = add_scaled(ops.stiffness, ops.mass, 1.0);
    auto [r, report] = solve(system, rhs, tol);
    if (!report.success) {
        throw std::runtime_error("ritz_projection: linear solve failed (residual " +
                                 std::to_string(report.relative_residual) + ")");
    }
    return r;
}

} // namespace ksafc
