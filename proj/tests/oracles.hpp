#pragma once

// Brute-force reference implementations used by the tests. They avoid the
// library's adjacency tables and gradient-sample machinery and work directly
// from node coordinates and element connectivity.

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssfem/assembly.hpp"
#include "ssfem/mesh.hpp"
#include "ssfem/problem.hpp"
#include "ssfem/schwarz.hpp"

namespace oracle {

using ssfem::Mesh;
using ssfem::Point;
using Grad = Eigen::Vector2d;
using Dense = Eigen::MatrixXd;

inline double tri_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// Gradient of the hat function of local vertex i: rotate the opposite edge.
inline Grad hat_gradient(const Mesh& m, std::size_t e, int i) {
    const auto& t = m.elements[e];
    const Point& pj = m.nodes[t[(i + 1) % 3]];
    const Point& pk = m.nodes[t[(i + 2) % 3]];
    const double A = tri_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
    return Grad(pj.y - pk.y, pk.x - pj.x) / (2.0 * A);
}

// Value of global hat function `node` at point p, evaluated in element e.
inline double hat_value(const Mesh& m, std::size_t e, int node, const Point& p) {
    const auto& t = m.elements[e];
    for (int i = 0; i < 3; ++i) {
        if (t[i] != node) continue;
        const Point& a = m.nodes[t[(i + 1) % 3]];
        const Point& b = m.nodes[t[(i + 2) % 3]];
        return tri_area(p, a, b) / tri_area(m.nodes[t[i]], a, b);
    }
    return 0.0;
}

// One quadrature sample of a smoothed gradient field: weight and the
// gradient of every global hat function (zero where absent).
struct Sample {
    double weight = 0.0;
    std::map<int, Grad> grads;
};

// Contour integral of hat `node` times the outward normal along the closed
// polygon `poly` (counterclockwise), where the hat is linear on each
// segment. The midpoint rule is exact for linear integrands.
template <class HatAt>
inline Grad contour_integral(const std::vector<Point>& poly, const HatAt& hat) {
    Grad sum = Grad::Zero();
    for (std::size_t k = 0; k < poly.size(); ++k) {
        const Point& a = poly[k];
        const Point& b = poly[(k + 1) % poly.size()];
        const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        // Outward normal times length for a counterclockwise polygon.
        const Grad nl(b.y - a.y, a.x - b.x);
        sum += hat(mid) * nl;
    }
    return sum;
}

inline double polygon_area(const std::vector<Point>& poly) {
    double s = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) {
        const Point& a = poly[k];
        const Point& b = poly[(k + 1) % poly.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

inline Point centroid(const Mesh& m, std::size_t e) {
    const auto& t = m.elements[e];
    return {(m.nodes[t[0]].x + m.nodes[t[1]].x + m.nodes[t[2]].x) / 3.0,
            (m.nodes[t[0]].y + m.nodes[t[1]].y + m.nodes[t[2]].y) / 3.0};
}

inline Point midpoint(const Point& a, const Point& b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

// Edge -> adjacent elements, by scanning all elements.
inline std::map<std::pair<int, int>, std::vector<int>> edge_elements(const Mesh& m) {
    std::map<std::pair<int, int>, std::vector<int>> out;
    for (std::size_t e = 0; e < m.elements.size(); ++e)
        for (int k = 0; k < 3; ++k) {
            const int a = m.elements[e][k];
            const int b = m.elements[e][(k + 1) % 3];
            out[std::minmax(a, b)].push_back(static_cast<int>(e));
        }
    return out;
}

inline std::vector<Sample> fem_samples(const Mesh& m) {
    std::vector<Sample> out;
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        Sample s;
        const auto& t = m.elements[e];
        s.weight = tri_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
        for (int i = 0; i < 3; ++i) s.grads[t[i]] = hat_gradient(m, e, i);
        out.push_back(s);
    }
    return out;
}

// Smoothed gradient over a domain made of triangular/polygonal pieces, each
// inside one element: (1/|s|) sum of piece contour integrals.
struct Piece {
    std::size_t element;
    std::vector<Point> polygon;
};

inline Sample smoothed_sample(const Mesh& m, const std::vector<Piece>& pieces) {
    Sample s;
    double area = 0.0;
    std::set<int> nodes;
    for (const Piece& p : pieces) {
        area += polygon_area(p.polygon);
        for (int v : m.elements[p.element]) nodes.insert(v);
    }
    for (int v : nodes) {
        Grad g = Grad::Zero();
        for (const Piece& p : pieces)
            g += contour_integral(p.polygon, [&](const Point& x) { return hat_value(m, p.element, v, x); });
        s.grads[v] = g / area;
    }
    s.weight = area;
    return s;
}

// Edge smoothing domains: per adjacent element the triangle (a, b, centroid).
inline std::vector<Sample> es_samples(const Mesh& m) {
    std::vector<Sample> out;
    for (const auto& [edge, elems] : edge_elements(m)) {
        std::vector<Piece> pieces;
        for (int e : elems) {
            const auto& t = m.elements[e];
            // Orient (a, b) as in the element so the piece is counterclockwise.
            int a = edge.first, b = edge.second;
            for (int k = 0; k < 3; ++k)
                if (t[k] == edge.second && t[(k + 1) % 3] == edge.first) std::swap(a, b);
            pieces.push_back({static_cast<std::size_t>(e), {m.nodes[a], m.nodes[b], centroid(m, e)}});
        }
        out.push_back(smoothed_sample(m, pieces));
    }
    return out;
}

// Node smoothing domains: per patch element the quadrilateral
// (v, mid(v, next), centroid, mid(v, prev)).
inline std::vector<Sample> ns_samples(const Mesh& m) {
    std::vector<Sample> out;
    for (std::size_t v = 0; v < m.nodes.size(); ++v) {
        std::vector<Piece> pieces;
        for (std::size_t e = 0; e < m.elements.size(); ++e) {
            const auto& t = m.elements[e];
            for (int k = 0; k < 3; ++k) {
                if (t[k] != static_cast<int>(v)) continue;
                const Point& pv = m.nodes[v];
                const Point& pn = m.nodes[t[(k + 1) % 3]];
                const Point& pp = m.nodes[t[(k + 2) % 3]];
                pieces.push_back({e, {pv, midpoint(pv, pn), centroid(m, e), midpoint(pv, pp)}});
            }
        }
        out.push_back(smoothed_sample(m, pieces));
    }
    return out;
}

// Degree-4 symmetric rule on the reference triangle (barycentric, weight).
inline const std::vector<std::pair<std::array<double, 3>, double>>& rule6() {
    static const std::vector<std::pair<std::array<double, 3>, double>> r = [] {
        const double a1 = 0.445948490915965, w1 = 0.223381589678011;
        const double a2 = 0.091576213509771, w2 = 0.109951743655322;
        std::vector<std::pair<std::array<double, 3>, double>> v;
        v.push_back({{1 - 2 * a1, a1, a1}, w1});
        v.push_back({{a1, 1 - 2 * a1, a1}, w1});
        v.push_back({{a1, a1, 1 - 2 * a1}, w1});
        v.push_back({{1 - 2 * a2, a2, a2}, w2});
        v.push_back({{a2, 1 - 2 * a2, a2}, w2});
        v.push_back({{a2, a2, 1 - 2 * a2}, w2});
        return v;
    }();
    return r;
}

// SSE: per element a linear gradient field fixed by its values at the three
// interior Gauss points (barycentric 2/3, 1/6, 1/6), integrated exactly with
// the 6-point rule. Gauss point k carries the mean of the intermediate
// gradients across the two edges meeting at vertex k.
inline std::vector<Sample> sse_samples(const Mesh& m) {
    const auto edges = edge_elements(m);
    std::vector<Sample> out;
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        const auto& t = m.elements[e];
        const double Ae = tri_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
        // Intermediate gradient across local edge k (vertices k, k+1).
        std::array<std::map<int, Grad>, 3> inter;
        for (int k = 0; k < 3; ++k) {
            const auto& adj = edges.at(std::minmax(t[k], t[(k + 1) % 3]));
            int nb = -1;
            for (int x : adj)
                if (x != static_cast<int>(e)) nb = x;
            std::vector<std::pair<std::size_t, double>> parts;
            if (nb < 0) {
                parts.push_back({e, 1.0});
            } else {
                const auto& tn = m.elements[nb];
                const double An = tri_area(m.nodes[tn[0]], m.nodes[tn[1]], m.nodes[tn[2]]);
                parts.push_back({e, Ae / (Ae + An)});
                parts.push_back({static_cast<std::size_t>(nb), An / (Ae + An)});
            }
            for (auto [el, w] : parts)
                for (int i = 0; i < 3; ++i) {
                    const int v = m.elements[el][i];
                    if (!inter[k].count(v)) inter[k][v] = Grad::Zero();
                    inter[k][v] += w * hat_gradient(m, el, i);
                }
        }
        std::array<std::map<int, Grad>, 3> gauss;
        for (int k = 0; k < 3; ++k) {
            for (const auto* src : {&inter[(k + 2) % 3], &inter[k]})
                for (const auto& [v, g] : *src) {
                    if (!gauss[k].count(v)) gauss[k][v] = Grad::Zero();
                    gauss[k][v] += 0.5 * g;
                }
        }
        for (const auto& [lam, w] : rule6()) {
            // Linear interpolation through the Gauss points: weights
            // mu_k = 2 lambda_k - 1/3.
            Sample s;
            s.weight = w * Ae;
            for (int k = 0; k < 3; ++k) {
                const double mu = 2.0 * lam[k] - 1.0 / 3.0;
                for (const auto& [v, g] : gauss[k]) {
                    if (!s.grads.count(v)) s.grads[v] = Grad::Zero();
                    s.grads[v] += mu * g;
                }
            }
            out.push_back(s);
        }
    }
    return out;
}

inline std::vector<Sample> samples(const Mesh& m, ssfem::Method method) {
    switch (method) {
        case ssfem::Method::fem: return fem_samples(m);
        case ssfem::Method::esfem: return es_samples(m);
        case ssfem::Method::sse: return sse_samples(m);
        case ssfem::Method::nsfem: return ns_samples(m);
    }
    return {};
}

// Dense stiffness sum_s w_s a(grad_s phi_a, grad_s phi_b) for Poisson or
// plane-stress elasticity (DOFs interleaved per node).
inline Dense dense_stiffness(const Mesh& m, const ssfem::ProblemSpec& spec, ssfem::Method method) {
    const int dpn = spec.dofs_per_node();
    const Eigen::Index n = static_cast<Eigen::Index>(m.nodes.size()) * dpn;
    Dense K = Dense::Zero(n, n);
    const Eigen::Matrix3d D = spec.material.plane_stress();
    for (const Sample& s : samples(m, method)) {
        for (const auto& [a, ga] : s.grads)
            for (const auto& [b, gb] : s.grads) {
                if (dpn == 1) {
                    K(a, b) += s.weight * ga.dot(gb);
                    continue;
                }
                // Strain of the vector hat (phi_a e_c): columns c = x, y.
                Eigen::Matrix<double, 3, 2> Ba, Bb;
                Ba << ga.x(), 0, 0, ga.y(), ga.y(), ga.x();
                Bb << gb.x(), 0, 0, gb.y(), gb.y(), gb.x();
                K.block<2, 2>(2 * a, 2 * b) += s.weight * Ba.transpose() * D * Bb;
            }
    }
    return K;
}

// Exact load for a linear source f: per element |e|/12 (2 f_i + f_j + f_k).
inline Eigen::VectorXd linear_load(const Mesh& m, double c0, double cx, double cy) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.nodes.size()));
    for (const auto& t : m.elements) {
        const double A = tri_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
        double fv[3];
        for (int i = 0; i < 3; ++i) fv[i] = c0 + cx * m.nodes[t[i]].x + cy * m.nodes[t[i]].y;
        for (int i = 0; i < 3; ++i) f[t[i]] += A / 12.0 * (2 * fv[i] + fv[(i + 1) % 3] + fv[(i + 2) % 3]);
    }
    return f;
}

// Element-layer distance from the seed elements, where one layer adds
// every element sharing a vertex with the current region.
inline std::vector<int> element_layers(const Mesh& m, const std::vector<int>& seed) {
    std::vector<int> dist(m.elements.size(), -1);
    for (int e : seed) dist[e] = 0;
    for (int layer = 1;; ++layer) {
        std::set<int> region_nodes;
        for (std::size_t e = 0; e < m.elements.size(); ++e)
            if (dist[e] >= 0)
                for (int v : m.elements[e]) region_nodes.insert(v);
        bool grew = false;
        for (std::size_t e = 0; e < m.elements.size(); ++e) {
            if (dist[e] >= 0) continue;
            for (int v : m.elements[e])
                if (region_nodes.count(v)) {
                    dist[e] = layer;
                    grew = true;
                    break;
                }
        }
        if (!grew) break;
    }
    return dist;
}

// Explicit dense two-level additive Schwarz operator
// R0^T A0^{-1} R0 + sum_j R_j^T A_j^{-1} R_j with boolean R_j.
inline Dense dense_schwarz(const ssfem::OverlapDecomposition& dd, const Dense& local_source,
                           const Dense& coarse_source) {
    const Eigen::Index n = local_source.rows();
    const Dense R0t(dd.coarse_interpolation);
    const Dense A0 = R0t.transpose() * coarse_source * R0t;
    Dense M = R0t * A0.inverse() * R0t.transpose();
    for (const auto& sub : dd.subdomains) {
        Dense R = Dense::Zero(static_cast<Eigen::Index>(sub.dofs.size()), n);
        for (std::size_t k = 0; k < sub.dofs.size(); ++k) R(static_cast<Eigen::Index>(k), sub.dofs[k]) = 1.0;
        const Dense Aj = R * local_source * R.transpose();
        M += R.transpose() * Aj.inverse() * R;
    }
    return M;
}

}  // namespace oracle
