#include "ksafc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

namespace ksafc {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c)
{
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(const Point& a, const Point& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

double cross(const Point& o, const Point& a, const Point& b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double point_segment_distance(const Point& p, const Point& a, const Point& b)
{
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) {
        return distance(p, a);
    }
    const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Andrew's monotone chain; collinear points are dropped from the hull.
std::vector<Point> convex_hull(std::vector<Point> pts)
{
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    if (pts.size() < 3) {
        return pts;
    }
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) {
            --k;
        }
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) {
            --k;
        }
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

} // namespace

Mesh::Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles))
{
    const auto n = static_cast<int>(nodes_.size());
    for (const auto& p : nodes_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw MeshError("mesh: non-finite node coordinate");
        }
    }

    areas_.reserve(triangles_.size());
    std::map<Edge, int> edge_count;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (int v : tri) {
            if (v < 0 || v >= n) {
                throw MeshError("mesh: triangle " + std::to_string(t) + " references node " +
                                std::to_string(v) + " out of range");
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw MeshError("mesh: triangle " + std::to_string(t) + " repeats a vertex");
        }
        const double a = signed_area(node(tri[0]), node(tri[1]), node(tri[2]));
        if (!(a > 0.0)) {
            throw MeshError("mesh: triangle " + std::to_string(t) +
                            " has non-positive signed area");
        }
        areas_.push_back(a);
        for (int e = 0; e < 3; ++e) {
            int u = tri[e];
            int v = tri[(e + 1) % 3];
            if (u > v) {
                std::swap(u, v);
            }
            ++edge_count[{u, v}];
        }
    }

    edges_.reserve(edge_count.size());
    edge_multiplicity_.reserve(edge_count.size());
    boundary_.assign(nodes_.size(), 0);
    std::vector<std::vector<int>> nbrs(nodes_.size());
    for (const auto& [e, count] : edge_count) {
        if (count > 2) {
            throw MeshError("mesh: edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                            ") shared by " + std::to_string(count) + " triangles");
        }
        edges_.push_back(e);
        edge_multiplicity_.push_back(count);
        if (count == 1) {
            boundary_[static_cast<std::size_t>(e[0])] = 1;
            boundary_[static_cast<std::size_t>(e[1])] = 1;
        }
        nbrs[static_cast<std::size_t>(e[0])].push_back(e[1]);
        nbrs[static_cast<std::size_t>(e[1])].push_back(e[0]);
    }

    neighbor_offsets_.assign(1, 0);
    for (auto& list : nbrs) {
        std::sort(list.begin(), list.end());
        neighbors_.insert(neighbors_.end(), list.begin(), list.end());
        neighbor_offsets_.push_back(neighbors_.size());
    }

    std::vector<std::vector<int>> patches(nodes_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        for (int v : triangles_[t]) {
            patches[static_cast<std::size_t>(v)].push_back(static_cast<int>(t));
        }
    }
    patch_offsets_.assign(1, 0);
    for (const auto& list : patches) {
        patch_triangles_.insert(patch_triangles_.end(), list.begin(), list.end());
        patch_offsets_.push_back(patch_triangles_.size());
    }
}

std::span<const int> Mesh::patch_triangles(int i) const
{
    const auto u = static_cast<std::size_t>(i);
    return {patch_triangles_.data() + patch_offsets_[u], patch_offsets_[u + 1] - patch_offsets_[u]};
}

std::span<const int> Mesh::neighbors(int i) const
{
    const auto u = static_cast<std::size_t>(i);
    return {neighbors_.data() + neighbor_offsets_[u],
            neighbor_offsets_[u + 1] - neighbor_offsets_[u]};
}

Mesh build_uniform_unit_square(int M)
{
    if (M < 1) {
        throw MeshError("build_uniform_unit_square: M must be >= 1, got " + std::to_string(M));
    }
    const int stride = M + 1;
    std::vector<Point> nodes;
    nodes.reserve(static_cast<std::size_t>(stride) * static_cast<std::size_t>(stride));
    for (int j = 0; j <= M; ++j) {
        for (int i = 0; i <= M; ++i) {
            nodes.push_back({static_cast<double>(i) / M, static_cast<double>(j) / M});
        }
    }
    std::vector<Triangle> triangles;
    triangles.reserve(2 * static_cast<std::size_t>(M) * static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) {
        for (int i = 0; i < M; ++i) {
            const int sw = i + j * stride;
            const int se = sw + 1;
            const int nw = sw + stride;
            const int ne = nw + 1;
            triangles.push_back({sw, se, ne});
            triangles.push_back({sw, ne, nw});
        }
    }
    Mesh mesh(std::move(nodes), std::move(triangles));
    mesh.uniform_resolution_ = M;
    return mesh;
}

double max_angle(const Mesh& mesh, int t)
{
    const auto& tri = mesh.triangle(t);
    double largest = 0.0;
    for (int a = 0; a < 3; ++a) {
        const Point& p = mesh.node(tri[a]);
        const Point& q = mesh.node(tri[(a + 1) % 3]);
        const Point& r = mesh.node(tri[(a + 2) % 3]);
        const double ux = q.x - p.x, uy = q.y - p.y;
        const double vx = r.x - p.x, vy = r.y - p.y;
        const double angle = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
        largest = std::max(largest, angle);
    }
    return largest;
}

bool MeshQuality::nonobtuse() const
{
    return max_interior_angle <= std::numbers::pi / 2 + 1e-12;
}

bool MeshQuality::has_right_angle() const
{
    return std::abs(max_interior_angle - std::numbers::pi / 2) <= 1e-12;
}

MeshQuality quality(const Mesh& mesh)
{
    MeshQuality q;
    q.h_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(static_cast<int>(t));
        double diam = 0.0;
        for (int a = 0; a < 3; ++a) {
            diam = std::max(diam, distance(mesh.node(tri[a]), mesh.node(tri[(a + 1) % 3])));
        }
        q.h_max = std::max(q.h_max, diam);
        q.h_min = std::min(q.h_min, diam);
        q.max_interior_angle = std::max(q.max_interior_angle, max_angle(mesh, static_cast<int>(t)));
    }
    if (mesh.num_triangles() == 0) {
        q.h_min = 0.0;
    }
    q.quasiuniformity_ratio = q.h_min > 0.0 ? q.h_max / q.h_min : 1.0;
    q.gamma.resize(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        q.gamma[i] = mesh.patch_triangles(static_cast<int>(i)).empty()
                         ? 0.0
                         : gamma_i(mesh, static_cast<int>(i));
    }
    return q;
}

double gamma_i(const Mesh& mesh, int i)
{
    if (i < 0 || static_cast<std::size_t>(i) >= mesh.num_nodes()) {
        throw MeshError("gamma_i: node " + std::to_string(i) + " out of range");
    }
    if (mesh.patch_triangles(i).empty()) {
        throw MeshError("gamma_i: node " + std::to_string(i) + " has an empty patch");
    }
    const Point& zi = mesh.node(i);
    const auto nbrs = mesh.neighbors(i);

    double reach = 0.0;
    for (int j : nbrs) {
        reach = std::max(reach, distance(zi, mesh.node(j)));
    }
    const double tol = 1e-12 * std::max(reach, 1.0);

    bool symmetric = !mesh.is_boundary(i);
    for (int j : nbrs) {
        if (!symmetric) {
            break;
        }
        const Point mirror{2.0 * zi.x - mesh.node(j).x, 2.0 * zi.y - mesh.node(j).y};
        symmetric = std::any_of(nbrs.begin(), nbrs.end(), [&](int l) {
            return distance(mirror, mesh.node(l)) <= tol;
        });
    }
    if (symmetric) {
        return 1.0;
    }

    std::vector<Point> pts{zi};
    for (int j : nbrs) {
        pts.push_back(mesh.node(j));
    }
    const auto hull = convex_hull(std::move(pts));
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < hull.size(); ++a) {
        const double d = point_segment_distance(zi, hull[a], hull[(a + 1) % hull.size()]);
        if (d > tol) {
            gap = std::min(gap, d);
        }
    }
    if (!std::isfinite(gap)) {
        throw MeshError("gamma_i: degenerate patch at node " + std::to_string(i));
    }
    return reach / gap;
}

void write_mesh_dump(const Mesh& mesh, const std::filesystem::path& nodes_path,
                     const std::filesystem::path& triangles_path)
{
    std::ofstream nodes_out(nodes_path);
    if (!nodes_out) {
        throw std::runtime_error("cannot open " + nodes_path.string() + " for writing");
    }
    nodes_out.precision(17);
    for (const auto& p : mesh.nodes()) {
        nodes_out << p.x << ' ' << p.y << '\n';
    }
    std::ofstream tri_out(triangles_path);
    if (!tri_out) {
        throw std::runtime_error("cannot open " + triangles_path.string() + " for writing");
    }
    for (const auto& t : mesh.triangles()) {
        tri_out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    if (!nodes_out || !tri_out) {
        throw std::runtime_error("write failed for mesh dump");
    }
}

} // namespace ksafc
