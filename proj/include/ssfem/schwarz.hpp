#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ssfem/assembly.hpp"
#include "ssfem/errors.hpp"
#include "ssfem/mesh.hpp"
#include "ssfem/problem.hpp"
#include "ssfem/sparse.hpp"

namespace ssfem {

/// One overlapping subdomain.
struct Subdomain {
    /// Fine elements of the nonoverlapping cell (two coarse triangles).
    std::vector<int> core_elements;
    /// Fine elements of the overlapping extension.
    std::vector<int> elements;
    /// Sorted free fine DOFs whose whole element patch lies in the extension.
    std::vector<int> dofs;
};

struct OverlapDecomposition {
    std::vector<Subdomain> subdomains;
    /// Coarse-to-fine interpolation R_0^T (fine free DOFs x coarse free DOFs).
    SparseMatrix coarse_interpolation;
    DofMap fine_dofs;
    DofMap coarse_dofs;
    int delta_layers = 0;
    double H = 0.0;
    double h = 0.0;
    double delta = 0.0;

    std::size_t size() const { return subdomains.size(); }
};

/// Barycentric coordinates of p in triangle (a, b, c).
inline std::array<double, 3> barycentric(const Point& a, const Point& b, const Point& c, const Point& p) {
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    return {1.0 - l1 - l2, l1, l2};
}

/// Nodal interpolation of the coarse P1 basis at the fine nodes, restricted to
/// free DOFs on both levels. Fine nodes are located through the refinement
/// map, so no geometric search is involved.
inline SparseMatrix coarse_interpolation(const Hierarchy& hier, const ProblemSpec& spec, const DofMap& fine_dofs,
                                         const DofMap& coarse_dofs) {
    const int dpn = spec.dofs_per_node();
    const Mesh& fine = hier.fine;
    const Mesh& coarse = hier.coarse;
    std::vector<Triplet> entries;
    for (std::size_t i = 0; i < fine.num_nodes(); ++i) {
        const int fe = fine.node_patches[i].front();
        const int ce = hier.fine_to_coarse_element[fe];
        const auto& t = coarse.elements[ce];
        const auto lam = barycentric(coarse.nodes[t[0]], coarse.nodes[t[1]], coarse.nodes[t[2]], fine.nodes[i]);
        for (int v = 0; v < 3; ++v) {
            if (std::abs(lam[v]) < 1e-13) continue;
            for (int c = 0; c < dpn; ++c) {
                const int row = fine_dofs.global_to_free[i * dpn + c];
                const int col = coarse_dofs.global_to_free[t[v] * dpn + c];
                if (row >= 0 && col >= 0) entries.emplace_back(row, col, lam[v]);
            }
        }
    }
    SparseMatrix R0t(fine_dofs.num_free(), coarse_dofs.num_free());
    R0t.setFromTriplets(entries.begin(), entries.end());
    return R0t;
}

/// Splits the domain into the coarse grid cells and grows each cell by
/// `delta_layers` layers of fine elements. A layer adds every element that
/// shares a node with the current region.
inline OverlapDecomposition decompose(const Hierarchy& hier, const ProblemSpec& spec, int delta_layers) {
    if (delta_layers < 1) throw InvalidArgument("decompose: overlap must be at least one layer");
    const Mesh& fine = hier.fine;
    if (fine.cell_of_element.size() != fine.num_elements())
        throw InvalidArgument("decompose: mesh has no quadrilateral cell structure");
    const int num_cells = *std::max_element(fine.cell_of_element.begin(), fine.cell_of_element.end()) + 1;
    if (num_cells < 4) throw InvalidArgument("decompose: coarse grid must be at least 2 x 2");

    OverlapDecomposition dd;
    dd.delta_layers = delta_layers;
    dd.H = hier.coarse.h;
    dd.h = fine.h;
    dd.delta = delta_layers * fine.h;
    dd.fine_dofs = make_dof_map(fine, spec);
    dd.coarse_dofs = make_dof_map(hier.coarse, spec);
    dd.coarse_interpolation = coarse_interpolation(hier, spec, dd.fine_dofs, dd.coarse_dofs);
    dd.subdomains.resize(num_cells);
    for (std::size_t e = 0; e < fine.num_elements(); ++e)
        dd.subdomains[fine.cell_of_element[e]].core_elements.push_back(static_cast<int>(e));

    const int dpn = spec.dofs_per_node();
    std::vector<char> in_element(fine.num_elements(), 0);
    std::vector<char> in_node(fine.num_nodes(), 0);
    for (int j = 0; j < num_cells; ++j) {
        Subdomain& sub = dd.subdomains[j];
        std::vector<int> elements = sub.core_elements;
        std::vector<int> nodes;
        auto mark_nodes_of = [&](int e) {
            for (int v : fine.elements[e])
                if (!in_node[v]) {
                    in_node[v] = 1;
                    nodes.push_back(v);
                }
        };
        for (int e : elements) in_element[e] = 1;
        for (int e : elements) mark_nodes_of(e);
        for (int layer = 0; layer < delta_layers; ++layer) {
            const std::size_t frontier = nodes.size();
            std::vector<int> added;
            for (std::size_t k = 0; k < frontier; ++k)
                for (int e : fine.node_patches[nodes[k]])
                    if (!in_element[e]) {
                        in_element[e] = 1;
                        added.push_back(e);
                    }
            for (int e : added) mark_nodes_of(e);
            elements.insert(elements.end(), added.begin(), added.end());
        }

        for (int v : nodes) {
            const auto& patch = fine.node_patches[v];
            const bool interior = std::all_of(patch.begin(), patch.end(), [&](int e) { return in_element[e] != 0; });
            if (!interior) continue;
            for (int c = 0; c < dpn; ++c) {
                const int k = dd.fine_dofs.global_to_free[v * dpn + c];
                if (k >= 0) sub.dofs.push_back(k);
            }
        }
        std::sort(sub.dofs.begin(), sub.dofs.end());
        std::sort(elements.begin(), elements.end());
        sub.elements = std::move(elements);

        for (int e : sub.elements) in_element[e] = 0;
        for (int v : nodes) in_node[v] = 0;
        if (sub.dofs.empty())
            throw InvalidArgument("decompose: subdomain " + std::to_string(j) + " has no interior DOFs");
    }
    return dd;
}

/// R_j A R_j^T for subdomain j.
inline SparseMatrix local_matrix(const OverlapDecomposition& dd, const SparseMatrix& A, std::size_t j) {
    return principal_submatrix(A, dd.subdomains.at(j).dofs);
}

/// R_0 A R_0^T.
inline SparseMatrix coarse_matrix(const OverlapDecomposition& dd, const SparseMatrix& A) {
    const SparseMatrix& R0t = dd.coarse_interpolation;
    const SparseMatrix R0 = R0t.transpose();
    const SparseMatrix AR = A * R0t;
    const SparseMatrix A0 = R0 * AR;
    // Symmetrize away round-off from the triple product.
    const SparseMatrix A0t = A0.transpose();
    return SparseMatrix(0.5 * (A0 + A0t));
}

enum class SchwarzVariant {
    standard,  ///< local and coarse problems from K
    enhanced,  ///< local and coarse problems from Kbar
    hybrid     ///< local problems from Kbar, coarse problem from K
};

inline std::string to_string(SchwarzVariant v) {
    switch (v) {
        case SchwarzVariant::standard: return "m";
        case SchwarzVariant::enhanced: return "mbar";
        case SchwarzVariant::hybrid: return "mbaralt";
    }
    return "?";
}

/// Two-level additive Schwarz preconditioner
/// z = R_0^T A_0^{-1} R_0 r + sum_j R_j^T A_j^{-1} R_j r with all factors
/// computed up front. Immutable after construction.
class SchwarzPreconditioner {
public:
    /// `Kbar` is required for the enhanced and hybrid variants.
    SchwarzPreconditioner(SchwarzVariant variant, const OverlapDecomposition& dd, const SparseMatrix& K,
                          const SparseMatrix* Kbar = nullptr, bool with_coarse = true)
        : variant_(variant), with_coarse_(with_coarse), R0t_(dd.coarse_interpolation) {
        if (variant != SchwarzVariant::standard && Kbar == nullptr)
            throw InvalidArgument("Schwarz: enhanced variants need the smoothed stiffness matrix");
        if (K.rows() != dd.fine_dofs.num_free()) throw InvalidArgument("Schwarz: matrix does not match decomposition");
        const SparseMatrix& local_source = variant == SchwarzVariant::standard ? K : *Kbar;
        const SparseMatrix& coarse_source = variant == SchwarzVariant::enhanced ? *Kbar : K;

        local_.reserve(dd.size());
        dofs_.reserve(dd.size());
        for (std::size_t j = 0; j < dd.size(); ++j) dofs_.push_back(dd.subdomains[j].dofs);
        for (std::size_t j = 0; j < dd.size(); ++j)
            local_.emplace_back(local_matrix(dd, local_source, j), "subdomain " + std::to_string(j));
        if (with_coarse_) {
            coarse_ = CholeskyFactor(coarse_matrix(dd, coarse_source), "coarse problem");
            R0_ = R0t_.transpose();
        }
    }

    SchwarzVariant variant() const { return variant_; }

    Vector apply(const Vector& r) const {
        Vector z = Vector::Zero(r.size());
        if (with_coarse_) {
            const Vector r0 = R0_ * r;
            z.noalias() += R0t_ * coarse_.solve(r0);
        }
        Vector rj;
        for (std::size_t j = 0; j < local_.size(); ++j) {
            const auto& idx = dofs_[j];
            rj.resize(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t k = 0; k < idx.size(); ++k) rj[k] = r[idx[k]];
            const Vector zj = local_[j].solve(rj);
            for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] += zj[k];
        }
        return z;
    }

private:
    SchwarzVariant variant_;
    bool with_coarse_;
    std::vector<std::vector<int>> dofs_;
    std::vector<CholeskyFactor> local_;
    CholeskyFactor coarse_;
    SparseMatrix R0t_;
    SparseMatrix R0_;
};

}  // namespace ssfem
