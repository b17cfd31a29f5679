#pragma once

#include "ksafc/mesh.hpp"
#include "ksafc/sparse.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace testing_support {

// Uniform mesh with interior nodes moved by up to `amplitude` grid spacings.
// Amplitudes below 0.25 keep every triangle positively oriented.
inline ksafc::Mesh jittered_mesh(int M, double amplitude, std::mt19937_64& rng)
{
    const auto base = ksafc::build_uniform_unit_square(M);
    std::uniform_real_distribution<double> u(-amplitude / M, amplitude / M);
    auto nodes = base.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!base.is_boundary(static_cast<int>(i))) {
            nodes[i].x += u(rng);
            nodes[i].y += u(rng);
        }
    }
    return ksafc::Mesh(nodes, base.triangles());
}

inline Eigen::MatrixXd to_dense(const ksafc::SparseMatrix& a)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()),
                                                static_cast<Eigen::Index>(a.cols()));
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) += vals[k];
        }
    }
    return out;
}

inline std::vector<double> random_vector(std::size_t n, double lo, double hi, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

} // namespace testing_support
