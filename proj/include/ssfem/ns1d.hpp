#pragma once

#include <vector>

#include "ssfem/errors.hpp"
#include "ssfem/sparse.hpp"
#include "ssfem/spectral.hpp"

namespace ssfem {

/// Uniform partition of [0,1] into n cells with homogeneous Dirichlet ends.
/// Unknowns are the n-1 interior nodal values.
struct Interval1DProblem {
    int n = 0;
    /// Standard P1 stiffness, n * tridiag(-1, 2, -1).
    SparseMatrix K;
    /// Node-smoothed stiffness.
    SparseMatrix Kbar;
    /// Alternating 1, 0, 1, ... at the interior nodes.
    Vector u;
    /// All ones at the interior nodes.
    Vector v;
};

/// Node-based smoothing in 1D: every node owns a dual cell. Interior nodes
/// get [x_i - h/2, x_i + h/2] and the smoothed derivative is the mean of the
/// two adjacent cell derivatives. The end nodes get half cells carrying the
/// derivative of their one adjacent cell.
inline Interval1DProblem assemble_1d(int n) {
    if (n < 4 || n % 2 != 0) throw InvalidArgument("assemble_1d: n must be even and >= 4");
    Interval1DProblem p;
    p.n = n;
    const int m = n - 1;
    const double h = 1.0 / n;

    std::vector<Triplet> k;
    for (int i = 0; i < m; ++i) {
        k.emplace_back(i, i, 2.0 * n);
        if (i > 0) k.emplace_back(i, i - 1, -1.0 * n);
        if (i + 1 < m) k.emplace_back(i, i + 1, -1.0 * n);
    }
    p.K.resize(m, m);
    p.K.setFromTriplets(k.begin(), k.end());

    // Cell c = [c h, (c+1) h] has derivative (u_{c+1} - u_c)/h; nodal index
    // i maps to unknown i-1 and the end values are zero.
    SparseMatrix D(n, m);
    {
        std::vector<Triplet> d;
        for (int c = 0; c < n; ++c) {
            if (c + 1 <= m) d.emplace_back(c, c, 1.0 / h);
            if (c >= 1) d.emplace_back(c, c - 1, -1.0 / h);
        }
        D.setFromTriplets(d.begin(), d.end());
    }
    // Dual cells 0..n: smoothed derivative = S * cell derivatives, weights w.
    SparseMatrix S(n + 1, n);
    Vector w(n + 1);
    {
        std::vector<Triplet> s;
        s.emplace_back(0, 0, 1.0);
        s.emplace_back(n, n - 1, 1.0);
        w[0] = w[n] = 0.5 * h;
        for (int i = 1; i < n; ++i) {
            s.emplace_back(i, i - 1, 0.5);
            s.emplace_back(i, i, 0.5);
            w[i] = h;
        }
        S.setFromTriplets(s.begin(), s.end());
    }
    const SparseMatrix G = S * D;
    const SparseMatrix Gt = G.transpose();
    p.Kbar = Gt * w.asDiagonal() * G;

    p.u.resize(m);
    for (int i = 0; i < m; ++i) p.u[i] = (i % 2 == 0) ? 1.0 : 0.0;
    p.v = Vector::Ones(m);
    return p;
}

/// x^T Kbar x / x^T K x.
inline double rayleigh_ratio(const Interval1DProblem& p, const Vector& x) {
    return x.dot(p.Kbar * x) / x.dot(p.K * x);
}

/// Lower bound on kappa(K^{-1} Kbar) from the two test vectors; equals 3n/4.
inline double kappa_lower_bound_1d(int n) {
    const Interval1DProblem p = assemble_1d(n);
    return rayleigh_ratio(p, p.v) / rayleigh_ratio(p, p.u);
}

struct Ns1dRow {
    int n = 0;
    double ratio_u = 0.0;
    double ratio_v = 0.0;
    double lower_bound = 0.0;
    double true_kappa = 0.0;
};

/// Rayleigh quotients, the bound and the dense kappa(K^{-1} Kbar) for one n.
inline Ns1dRow ns1d_row(int n) {
    const Interval1DProblem p = assemble_1d(n);
    Ns1dRow row;
    row.n = n;
    row.ratio_u = rayleigh_ratio(p, p.u);
    row.ratio_v = rayleigh_ratio(p, p.v);
    row.lower_bound = row.ratio_v / row.ratio_u;
    row.true_kappa = dense_generalized_spectrum(p.K, p.Kbar).kappa;
    return row;
}

}  // namespace ssfem
