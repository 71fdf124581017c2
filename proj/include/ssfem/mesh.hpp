#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssfem/errors.hpp"

namespace ssfem {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Marker for a missing element neighbour (boundary edge).
inline constexpr int kNoNeighbor = -1;

/// Side length of the model domain (-1,1)^2.
inline constexpr double kDomainLength = 2.0;

/// Edge of the triangulation with its one or two adjacent elements.
struct Edge {
    std::array<int, 2> nodes{};
    std::array<int, 2> elements{kNoNeighbor, kNoNeighbor};

    bool is_boundary() const { return elements[1] == kNoNeighbor; }
};

/// Conforming triangulation of a polygonal domain.
///
/// Element nodes are stored counterclockwise. Local edge k (0-based) joins
/// local nodes k and (k+1)%3, and element_neighbors[e][k] is the element on
/// the other side of that edge. The adjacency tables are filled by
/// finalize(); every builder in this header calls it.
struct Mesh {
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<bool> boundary_node_flags;
    std::vector<Edge> edges;
    std::vector<std::vector<int>> node_patches;
    std::vector<std::array<int, 3>> element_neighbors;
    std::vector<std::array<int, 3>> element_edges;
    /// Quadrilateral cell id per element for grid-derived meshes (two
    /// triangles per cell), empty otherwise.
    std::vector<int> cell_of_element;
    double h = 0.0;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_elements() const { return elements.size(); }

    double signed_area(std::size_t e) const {
        const auto& t = elements[e];
        const Point& a = nodes[t[0]];
        const Point& b = nodes[t[1]];
        const Point& c = nodes[t[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }

    double total_area() const {
        double sum = 0.0;
        for (std::size_t e = 0; e < elements.size(); ++e) sum += signed_area(e);
        return sum;
    }

    Point centroid(std::size_t e) const {
        const auto& t = elements[e];
        return {(nodes[t[0]].x + nodes[t[1]].x + nodes[t[2]].x) / 3.0,
                (nodes[t[0]].y + nodes[t[1]].y + nodes[t[2]].y) / 3.0};
    }

    /// Rebuilds edges, patches and neighbour tables from nodes/elements.
    /// Boundary flags are set topologically (node on a boundary edge).
    void finalize() {
        edges.clear();
        element_edges.assign(elements.size(), {-1, -1, -1});
        element_neighbors.assign(elements.size(), {kNoNeighbor, kNoNeighbor, kNoNeighbor});
        node_patches.assign(nodes.size(), {});

        std::map<std::pair<int, int>, int> edge_index;
        for (std::size_t e = 0; e < elements.size(); ++e) {
            const auto& t = elements[e];
            for (int k = 0; k < 3; ++k) {
                node_patches[t[k]].push_back(static_cast<int>(e));
                const int a = t[k];
                const int b = t[(k + 1) % 3];
                const auto key = std::minmax(a, b);
                auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(edges.size()));
                if (inserted) {
                    Edge edge;
                    edge.nodes = {a, b};
                    edge.elements[0] = static_cast<int>(e);
                    edges.push_back(edge);
                } else {
                    Edge& edge = edges[it->second];
                    if (edge.elements[1] != kNoNeighbor)
                        throw MeshError("edge shared by more than two elements");
                    edge.elements[1] = static_cast<int>(e);
                }
                element_edges[e][k] = it->second;
            }
        }

        boundary_node_flags.assign(nodes.size(), false);
        for (const Edge& edge : edges) {
            if (edge.is_boundary()) {
                boundary_node_flags[edge.nodes[0]] = true;
                boundary_node_flags[edge.nodes[1]] = true;
                continue;
            }
            for (int side = 0; side < 2; ++side) {
                const int e = edge.elements[side];
                const int other = edge.elements[1 - side];
                for (int k = 0; k < 3; ++k)
                    if (element_edges[e][k] == &edge - edges.data()) element_neighbors[e][k] = other;
            }
        }
    }

    /// Throws MeshError if an element is degenerate or clockwise.
    void validate(double min_area = 1e-10) const {
        for (std::size_t e = 0; e < elements.size(); ++e) {
            if (signed_area(e) <= min_area) {
                std::ostringstream msg;
                msg << "element " << e << " has non-positive area " << signed_area(e);
                throw MeshError(msg.str());
            }
        }
    }
};

/// Coarse mesh, its uniform refinement, and the nesting maps between them.
struct Hierarchy {
    Mesh coarse;
    Mesh fine;
    /// Ancestor coarse element of each fine element.
    std::vector<int> fine_to_coarse_element;
    /// Fine node index of each coarse node.
    std::vector<int> coarse_to_fine_node;
    int levels = 0;
    double H = 0.0;
};

/// Uniform grid on (-1,1)^2 with n cells per side, every cell split along its
/// lower-left to upper-right diagonal. Elements 2c and 2c+1 form cell c.
inline Mesh build_structured(int n) {
    if (n < 1) throw InvalidArgument("build_structured: n must be >= 1");
    Mesh mesh;
    const int np = n + 1;
    mesh.nodes.reserve(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            mesh.nodes.push_back({-1.0 + kDomainLength * i / n, -1.0 + kDomainLength * j / n});

    mesh.elements.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = j * np + i;
            const int b = a + 1;
            const int c = b + np;
            const int d = a + np;
            mesh.elements.push_back({a, b, c});
            mesh.elements.push_back({a, c, d});
            mesh.cell_of_element.push_back(j * n + i);
            mesh.cell_of_element.push_back(j * n + i);
        }
    }
    mesh.h = kDomainLength / n;
    mesh.finalize();
    return mesh;
}

namespace detail {

// Uniform double in [-1, 1) from raw engine bits; std distributions are not
// reproducible across standard library implementations.
inline double symmetric_unit(std::mt19937_64& engine) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

}  // namespace detail

/// Structured N-grid with every interior node moved by a seeded offset of at
/// most `amplitude * (L/N)` per coordinate. Boundary nodes stay in place.
inline Mesh build_unstructured(int N, std::uint64_t seed, double amplitude = 0.25) {
    if (N < 2) throw InvalidArgument("build_unstructured: N must be >= 2");
    Mesh mesh = build_structured(N);
    std::mt19937_64 engine(seed);
    const double max_shift = amplitude * kDomainLength / N;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        const double dx = detail::symmetric_unit(engine);
        const double dy = detail::symmetric_unit(engine);
        if (mesh.boundary_node_flags[i]) continue;
        mesh.nodes[i].x += max_shift * dx;
        mesh.nodes[i].y += max_shift * dy;
    }
    mesh.validate();
    return mesh;
}

namespace detail {

struct RefineStep {
    Mesh fine;
    std::vector<int> parent;  // per fine element
};

// Splits every triangle into four via edge midpoints. Coarse nodes keep
// their indices; midpoints are appended in edge order.
inline RefineStep refine_once(const Mesh& coarse) {
    RefineStep step;
    Mesh& fine = step.fine;
    fine.nodes = coarse.nodes;
    std::vector<int> midpoint(coarse.edges.size());
    for (std::size_t k = 0; k < coarse.edges.size(); ++k) {
        const auto& ed = coarse.edges[k];
        const Point& a = coarse.nodes[ed.nodes[0]];
        const Point& b = coarse.nodes[ed.nodes[1]];
        midpoint[k] = static_cast<int>(fine.nodes.size());
        fine.nodes.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
    fine.elements.reserve(4 * coarse.elements.size());
    step.parent.reserve(4 * coarse.elements.size());
    for (std::size_t e = 0; e < coarse.elements.size(); ++e) {
        const auto& t = coarse.elements[e];
        const auto& ee = coarse.element_edges[e];
        const int m01 = midpoint[ee[0]];
        const int m12 = midpoint[ee[1]];
        const int m20 = midpoint[ee[2]];
        fine.elements.push_back({t[0], m01, m20});
        fine.elements.push_back({m01, t[1], m12});
        fine.elements.push_back({m20, m12, t[2]});
        fine.elements.push_back({m01, m12, m20});
        for (int c = 0; c < 4; ++c) step.parent.push_back(static_cast<int>(e));
    }
    if (!coarse.cell_of_element.empty()) {
        fine.cell_of_element.reserve(fine.elements.size());
        for (int p : step.parent) fine.cell_of_element.push_back(coarse.cell_of_element[p]);
    }
    fine.h = 0.5 * coarse.h;
    fine.finalize();
    return step;
}

}  // namespace detail

/// Refines `mesh` uniformly `levels` times and records the nesting.
/// The fine mesh's cell_of_element refers to the coarse grid cells.
inline Hierarchy refine_uniform(const Mesh& mesh, int levels) {
    if (levels < 0) throw InvalidArgument("refine_uniform: levels must be >= 0");
    Hierarchy hier;
    hier.coarse = mesh;
    hier.fine = mesh;
    hier.levels = levels;
    hier.H = mesh.h;
    hier.fine_to_coarse_element.resize(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) hier.fine_to_coarse_element[e] = static_cast<int>(e);
    hier.coarse_to_fine_node.resize(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) hier.coarse_to_fine_node[i] = static_cast<int>(i);

    for (int l = 0; l < levels; ++l) {
        detail::RefineStep step = detail::refine_once(hier.fine);
        std::vector<int> ancestor(step.fine.num_elements());
        for (std::size_t e = 0; e < ancestor.size(); ++e)
            ancestor[e] = hier.fine_to_coarse_element[step.parent[e]];
        hier.fine_to_coarse_element = std::move(ancestor);
        hier.fine = std::move(step.fine);
    }
    return hier;
}

/// Coarse N-grid (structured or seeded-perturbed) refined to n cells per side.
inline Hierarchy build_hierarchy(int n, int N, bool unstructured, std::uint64_t seed = 0) {
    if (N < 1 || n < N || n % N != 0) throw InvalidArgument("build_hierarchy: n must be a multiple of N");
    int ratio = n / N;
    int levels = 0;
    while (ratio > 1) {
        if (ratio % 2 != 0) throw InvalidArgument("build_hierarchy: n/N must be a power of two");
        ratio /= 2;
        ++levels;
    }
    const Mesh coarse = unstructured ? build_unstructured(N, seed) : build_structured(N);
    return refine_uniform(coarse, levels);
}

/// Edge-based smoothing domain: the barycentric thirds of the elements
/// adjacent to one edge.
struct EdgeDomain {
    int edge = -1;
    std::array<int, 2> elements{kNoNeighbor, kNoNeighbor};
    double area = 0.0;

    bool is_boundary() const { return elements[1] == kNoNeighbor; }
};

inline std::vector<EdgeDomain> edge_smoothing_domains(const Mesh& mesh) {
    std::vector<EdgeDomain> domains;
    domains.reserve(mesh.edges.size());
    for (std::size_t k = 0; k < mesh.edges.size(); ++k) {
        const Edge& edge = mesh.edges[k];
        EdgeDomain d;
        d.edge = static_cast<int>(k);
        d.elements = edge.elements;
        d.area = mesh.signed_area(edge.elements[0]) / 3.0;
        if (!edge.is_boundary()) d.area += mesh.signed_area(edge.elements[1]) / 3.0;
        domains.push_back(d);
    }
    return domains;
}

/// Area of the node-based smoothing domain around each node (one third of
/// every element in the patch).
inline std::vector<double> node_domain_areas(const Mesh& mesh) {
    std::vector<double> areas(mesh.num_nodes(), 0.0);
    for (std::size_t p = 0; p < mesh.num_nodes(); ++p)
        for (int e : mesh.node_patches[p]) areas[p] += mesh.signed_area(e) / 3.0;
    return areas;
}

// ---------------------------------------------------------------------------
// Plain-text mesh I/O:
//   nodes <count> elements <count>
//   x y flag        (one line per node)
//   i j k           (one line per element, 0-based)

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "nodes " << mesh.num_nodes() << " elements " << mesh.num_elements() << '\n';
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
        buf << mesh.nodes[i].x << ' ' << mesh.nodes[i].y << ' ' << (mesh.boundary_node_flags[i] ? 1 : 0) << '\n';
    for (const auto& t : mesh.elements) buf << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << buf.str();
}

/// Reads the format written by write_mesh. Boundary flags in the file are
/// checked against the topology.
inline Mesh read_mesh(std::istream& in) {
    std::string tag_nodes, tag_elements;
    std::size_t nn = 0, ne = 0;
    if (!(in >> tag_nodes >> nn >> tag_elements >> ne) || tag_nodes != "nodes" || tag_elements != "elements")
        throw MeshError("read_mesh: bad header");
    Mesh mesh;
    mesh.nodes.resize(nn);
    std::vector<int> flags(nn);
    for (std::size_t i = 0; i < nn; ++i)
        if (!(in >> mesh.nodes[i].x >> mesh.nodes[i].y >> flags[i])) throw MeshError("read_mesh: truncated node list");
    mesh.elements.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        auto& t = mesh.elements[e];
        if (!(in >> t[0] >> t[1] >> t[2])) throw MeshError("read_mesh: truncated element list");
        for (int v : t)
            if (v < 0 || static_cast<std::size_t>(v) >= nn) throw MeshError("read_mesh: node index out of range");
    }
    mesh.finalize();
    for (std::size_t i = 0; i < nn; ++i)
        if ((flags[i] != 0) != mesh.boundary_node_flags[i]) throw MeshError("read_mesh: boundary flag mismatch");
    double hmax = 0.0;
    for (const Edge& edge : mesh.edges) {
        const Point& a = mesh.nodes[edge.nodes[0]];
        const Point& b = mesh.nodes[edge.nodes[1]];
        hmax = std::max(hmax, std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)));
    }
    mesh.h = hmax;
    return mesh;
}

}  // namespace ssfem
