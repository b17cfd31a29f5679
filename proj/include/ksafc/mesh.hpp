#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksafc {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conforming P1 triangulation with node patches.
///
/// Immutable after construction. Triangles are stored counterclockwise; a
/// clockwise input triangle is rejected rather than silently reoriented.
class Mesh {
public:
    Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles);

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }

    const std::vector<Point>& nodes() const { return nodes_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    /// Unordered node pairs, stored with the smaller index first, sorted.
    const std::vector<Edge>& edges() const { return edges_; }

    const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
    double area(int t) const { return areas_[static_cast<std::size_t>(t)]; }

    /// Triangles of the patch omega_i.
    std::span<const int> patch_triangles(int i) const;
    /// Adjacent vertices Z_h^i, sorted ascending; excludes i itself.
    std::span<const int> neighbors(int i) const;
    bool is_boundary(int i) const { return boundary_[static_cast<std::size_t>(i)] != 0; }

    /// Number of triangles incident to edge e (1 on the boundary, 2 inside).
    int edge_multiplicity(std::size_t e) const { return edge_multiplicity_[e]; }

    /// Set for meshes produced by build_uniform_unit_square.
    std::optional<int> uniform_resolution() const { return uniform_resolution_; }

private:
    friend Mesh build_uniform_unit_square(int M);

    std::vector<Point> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<double> areas_;
    std::vector<Edge> edges_;
    std::vector<int> edge_multiplicity_;
    std::vector<std::size_t> patch_offsets_;
    std::vector<int> patch_triangles_;
    std::vector<std::size_t> neighbor_offsets_;
    std::vector<int> neighbors_;
    std::vector<char> boundary_;
    std::optional<int> uniform_resolution_;
};

/// (M+1)^2 nodes at (i/M, j/M); each cell is split by its lower-left to
/// upper-right diagonal. Node index is i + j(M+1).
Mesh build_uniform_unit_square(int M);

struct MeshQuality {
    double h_max = 0.0;
    double h_min = 0.0;
    double quasiuniformity_ratio = 1.0;
    double max_interior_angle = 0.0;
    std::vector<double> gamma;

    bool nonobtuse() const;
    /// True when some angle is a right angle to within round-off.
    bool has_right_angle() const;
};

MeshQuality quality(const Mesh& mesh);

/// Linearity-preservation constant of the patch of node i.
///
/// Returns 1 for patches that are point-symmetric about Z_i. Otherwise the
/// ratio of the largest distance to a patch vertex over the distance to the
/// convex hull facets of the patch that do not contain Z_i.
double gamma_i(const Mesh& mesh, int i);

/// Largest interior angle of triangle t, in radians.
double max_angle(const Mesh& mesh, int t);

/// Plain-text dump: "x y" per node line and "i j k" per triangle line.
void write_mesh_dump(const Mesh& mesh, const std::filesystem::path& nodes_path,
                     const std::filesystem::path& triangles_path);

} // namespace ksafc
