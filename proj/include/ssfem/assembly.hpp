#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssfem/errors.hpp"
#include "ssfem/mesh.hpp"
#include "ssfem/problem.hpp"
#include "ssfem/sparse.hpp"

namespace ssfem {

/// Stiffness formulation.
enum class Method { fem, esfem, sse, nsfem };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::fem: return "fem";
        case Method::esfem: return "esfem";
        case Method::sse: return "sse";
        case Method::nsfem: return "nsfem";
    }
    return "?";
}

/// Constant shape-function gradients of a P1 triangle.
struct ElementGradient {
    /// Row 0: d/dx, row 1: d/dy of the three nodal basis functions.
    Eigen::Matrix<double, 2, 3> B;
    double area = 0.0;
};

inline ElementGradient element_gradient(const Mesh& mesh, std::size_t e) {
    const auto& t = mesh.elements[e];
    const Point& p0 = mesh.nodes[t[0]];
    const Point& p1 = mesh.nodes[t[1]];
    const Point& p2 = mesh.nodes[t[2]];
    const double twice_area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    if (!(twice_area > 0.0)) throw MeshError("degenerate or clockwise element " + std::to_string(e));
    ElementGradient g;
    g.area = 0.5 * twice_area;
    g.B << p1.y - p2.y, p2.y - p0.y, p0.y - p1.y,
           p2.x - p1.x, p0.x - p2.x, p1.x - p0.x;
    g.B /= twice_area;
    return g;
}

/// A constant (smoothed) gradient operator acting on the nodal values of a
/// small node stencil, together with the area it is integrated over.
struct GradientSample {
    double weight = 0.0;
    std::vector<int> nodes;
    Eigen::Matrix<double, 2, Eigen::Dynamic> grad;
};

namespace detail {

// Accumulates weighted element gradients over a growing node stencil.
class StencilBuilder {
public:
    void add(const std::array<int, 3>& element_nodes, const Eigen::Matrix<double, 2, 3>& B, double w) {
        for (int i = 0; i < 3; ++i) {
            const int node = element_nodes[i];
            auto it = std::find(nodes_.begin(), nodes_.end(), node);
            std::size_t k = static_cast<std::size_t>(it - nodes_.begin());
            if (it == nodes_.end()) {
                nodes_.push_back(node);
                cols_.push_back({0.0, 0.0});
            }
            cols_[k][0] += w * B(0, i);
            cols_[k][1] += w * B(1, i);
        }
    }

    GradientSample finish(double weight) const {
        GradientSample s;
        s.weight = weight;
        s.nodes = nodes_;
        s.grad.resize(2, static_cast<Eigen::Index>(nodes_.size()));
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            s.grad(0, static_cast<Eigen::Index>(k)) = cols_[k][0];
            s.grad(1, static_cast<Eigen::Index>(k)) = cols_[k][1];
        }
        return s;
    }

private:
    std::vector<int> nodes_;
    std::vector<std::array<double, 2>> cols_;
};

}  // namespace detail

/// Decomposes the chosen stiffness bilinear form into
/// sum_s weight_s (G_s u)^T (G_s v):
///  - fem: one sample per element (|e|, B_e);
///  - esfem: one per edge domain, area-weighted average of the adjacent
///    element gradients over |s| = (|e1| + |e2|)/3;
///  - sse: three per element (Gauss values of the linear smoothed field built
///    from the intermediate edge gradients), each weighted |e|/3;
///  - nsfem: one per node, area-weighted average over the node patch with
///    |s| = sum |e|/3.
inline std::vector<GradientSample> gradient_samples(const Mesh& mesh, Method method) {
    const std::size_t ne = mesh.num_elements();
    std::vector<ElementGradient> grads;
    grads.reserve(ne);
    for (std::size_t e = 0; e < ne; ++e) grads.push_back(element_gradient(mesh, e));

    std::vector<GradientSample> samples;
    switch (method) {
        case Method::fem: {
            samples.reserve(ne);
            for (std::size_t e = 0; e < ne; ++e) {
                detail::StencilBuilder b;
                b.add(mesh.elements[e], grads[e].B, 1.0);
                samples.push_back(b.finish(grads[e].area));
            }
            break;
        }
        case Method::esfem: {
            for (const EdgeDomain& d : edge_smoothing_domains(mesh)) {
                detail::StencilBuilder b;
                double total = 0.0;
                for (int e : d.elements)
                    if (e != kNoNeighbor) total += grads[e].area;
                for (int e : d.elements)
                    if (e != kNoNeighbor) b.add(mesh.elements[e], grads[e].B, grads[e].area / total);
                samples.push_back(b.finish(d.area));
            }
            break;
        }
        case Method::sse: {
            samples.reserve(3 * ne);
            for (std::size_t e = 0; e < ne; ++e) {
                // Intermediate gradient across local edge k, as a weighted
                // combination of the two element gradients.
                auto add_intermediate = [&](detail::StencilBuilder& b, int k, double scale) {
                    const int nb = mesh.element_neighbors[e][k];
                    if (nb == kNoNeighbor) {
                        b.add(mesh.elements[e], grads[e].B, scale);
                        return;
                    }
                    const double total = grads[e].area + grads[nb].area;
                    b.add(mesh.elements[e], grads[e].B, scale * grads[e].area / total);
                    b.add(mesh.elements[nb], grads[nb].B, scale * grads[nb].area / total);
                };
                for (int k = 0; k < 3; ++k) {
                    detail::StencilBuilder b;
                    add_intermediate(b, (k + 2) % 3, 0.5);
                    add_intermediate(b, k, 0.5);
                    samples.push_back(b.finish(grads[e].area / 3.0));
                }
            }
            break;
        }
        case Method::nsfem: {
            samples.reserve(mesh.num_nodes());
            for (std::size_t p = 0; p < mesh.num_nodes(); ++p) {
                double total = 0.0;
                for (int e : mesh.node_patches[p]) total += grads[e].area;
                detail::StencilBuilder b;
                for (int e : mesh.node_patches[p]) b.add(mesh.elements[e], grads[e].B, grads[e].area / total);
                samples.push_back(b.finish(total / 3.0));
            }
            break;
        }
    }
    return samples;
}

/// 3 x (2m) engineering strain matrix of a gradient operator, DOFs
/// interleaved (u_x, u_y) per node.
inline Eigen::Matrix<double, 3, Eigen::Dynamic> strain_matrix(const Eigen::Matrix<double, 2, Eigen::Dynamic>& grad) {
    const Eigen::Index m = grad.cols();
    Eigen::Matrix<double, 3, Eigen::Dynamic> Be = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        Be(0, 2 * i) = grad(0, i);
        Be(1, 2 * i + 1) = grad(1, i);
        Be(2, 2 * i) = grad(1, i);
        Be(2, 2 * i + 1) = grad(0, i);
    }
    return Be;
}

/// Full (pre-boundary-condition) stiffness matrix.
inline SparseMatrix assemble_stiffness(const Mesh& mesh, const ProblemSpec& spec, Method method) {
    const int dpn = spec.dofs_per_node();
    const auto samples = gradient_samples(mesh, method);
    const Eigen::Matrix3d D = spec.material.plane_stress();

    std::vector<Triplet> entries;
    std::size_t estimate = 0;
    for (const auto& s : samples) estimate += s.nodes.size() * s.nodes.size();
    entries.reserve(estimate * static_cast<std::size_t>(dpn * dpn));

    for (const auto& s : samples) {
        const int m = static_cast<int>(s.nodes.size());
        DenseMatrix local;
        if (spec.kind == ProblemKind::poisson) {
            local = s.weight * (s.grad.transpose() * s.grad);
        } else {
            const auto Be = strain_matrix(s.grad);
            local = s.weight * (Be.transpose() * D * Be);
        }
        for (int a = 0; a < m; ++a)
            for (int ca = 0; ca < dpn; ++ca)
                for (int b = 0; b < m; ++b)
                    for (int cb = 0; cb < dpn; ++cb)
                        entries.emplace_back(s.nodes[a] * dpn + ca, s.nodes[b] * dpn + cb,
                                             local(a * dpn + ca, b * dpn + cb));
    }
    const int n = static_cast<int>(mesh.num_nodes()) * dpn;
    SparseMatrix K(n, n);
    K.setFromTriplets(entries.begin(), entries.end());
    return K;
}

inline SparseMatrix assemble_standard(const Mesh& mesh, const ProblemSpec& spec) {
    return assemble_stiffness(mesh, spec, Method::fem);
}
inline SparseMatrix assemble_es(const Mesh& mesh, const ProblemSpec& spec) {
    return assemble_stiffness(mesh, spec, Method::esfem);
}
inline SparseMatrix assemble_sse(const Mesh& mesh, const ProblemSpec& spec) {
    return assemble_stiffness(mesh, spec, Method::sse);
}
inline SparseMatrix assemble_ns(const Mesh& mesh, const ProblemSpec& spec) {
    return assemble_stiffness(mesh, spec, Method::nsfem);
}

/// Six-point degree-4 Gauss rule on the reference triangle: barycentric
/// coordinates and weights (weights sum to 1).
struct TriangleRule {
    std::array<std::array<double, 3>, 6> bary;
    std::array<double, 6> weight;
};

inline const TriangleRule& gauss6() {
    static const TriangleRule rule = [] {
        constexpr double a1 = 0.44594849091596488632;
        constexpr double w1 = 0.22338158967801146570;
        constexpr double a2 = 0.091576213509770743460;
        constexpr double w2 = 0.10995174365532186764;
        TriangleRule r;
        r.bary = {{{a1, a1, 1.0 - 2.0 * a1},
                   {a1, 1.0 - 2.0 * a1, a1},
                   {1.0 - 2.0 * a1, a1, a1},
                   {a2, a2, 1.0 - 2.0 * a2},
                   {a2, 1.0 - 2.0 * a2, a2},
                   {1.0 - 2.0 * a2, a2, a2}}};
        r.weight = {w1, w1, w1, w2, w2, w2};
        return r;
    }();
    return rule;
}

/// f_i = integral of the source (or body force) times phi_i. The same vector
/// serves every stiffness formulation.
inline Vector assemble_load(const Mesh& mesh, const ProblemSpec& spec) {
    const int dpn = spec.dofs_per_node();
    Vector f = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()) * dpn);
    const TriangleRule& rule = gauss6();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.elements[e];
        const double area = mesh.signed_area(e);
        for (std::size_t q = 0; q < rule.weight.size(); ++q) {
            const auto& lam = rule.bary[q];
            double x = 0.0, y = 0.0;
            for (int i = 0; i < 3; ++i) {
                x += lam[i] * mesh.nodes[t[i]].x;
                y += lam[i] * mesh.nodes[t[i]].y;
            }
            const double w = area * rule.weight[q];
            if (spec.kind == ProblemKind::poisson) {
                const double val = spec.source(x, y);
                for (int i = 0; i < 3; ++i) f[t[i]] += w * val * lam[i];
            } else {
                const auto b = spec.body_force(x, y);
                for (int i = 0; i < 3; ++i) {
                    f[2 * t[i]] += w * b[0] * lam[i];
                    f[2 * t[i] + 1] += w * b[1] * lam[i];
                }
            }
        }
    }
    return f;
}

/// Free/constrained split of the global DOFs.
struct DofMap {
    std::vector<int> free_dofs;       // sorted global indices
    std::vector<int> global_to_free;  // -1 for constrained DOFs

    int num_free() const { return static_cast<int>(free_dofs.size()); }
    int num_global() const { return static_cast<int>(global_to_free.size()); }
};

inline DofMap make_dof_map(const Mesh& mesh, const ProblemSpec& spec) {
    const int dpn = spec.dofs_per_node();
    DofMap map;
    map.global_to_free.assign(mesh.num_nodes() * dpn, -1);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        if (spec.dirichlet(mesh.nodes[i], mesh.boundary_node_flags[i])) continue;
        for (int c = 0; c < dpn; ++c) {
            const int g = static_cast<int>(i) * dpn + c;
            map.global_to_free[g] = map.num_free();
            map.free_dofs.push_back(g);
        }
    }
    return map;
}

inline SparseMatrix restrict_matrix(const SparseMatrix& A, const DofMap& map) {
    return principal_submatrix(A, map.free_dofs);
}

inline Vector restrict_vector(const Vector& v, const DofMap& map) {
    Vector out(map.num_free());
    for (int k = 0; k < map.num_free(); ++k) out[k] = v[map.free_dofs[k]];
    return out;
}

/// Scatters free values back to a global vector (zero on constrained DOFs).
inline Vector extend_vector(const Vector& v, const DofMap& map) {
    Vector out = Vector::Zero(map.num_global());
    for (int k = 0; k < map.num_free(); ++k) out[map.free_dofs[k]] = v[k];
    return out;
}

/// Eliminated system on the free DOFs.
struct ReducedSystem {
    SparseMatrix A;
    Vector f;
    DofMap dofs;
};

/// Removes homogeneous Dirichlet rows and columns.
inline ReducedSystem apply_dirichlet(const SparseMatrix& A, const Vector& f, const Mesh& mesh, const ProblemSpec& spec) {
    ReducedSystem sys;
    sys.dofs = make_dof_map(mesh, spec);
    if (sys.dofs.num_free() == 0) throw InvalidArgument("apply_dirichlet: every DOF is constrained");
    sys.A = restrict_matrix(A, sys.dofs);
    sys.f = restrict_vector(f, sys.dofs);
    return sys;
}

}  // namespace ssfem
