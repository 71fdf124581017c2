#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ssfem/errors.hpp"
#include "ssfem/mesh.hpp"
#include "ssfem/schwarz.hpp"
#include "ssfem/sparse.hpp"

namespace ssfem {

/// Extreme eigenvalues of the pencil B x = lambda A x.
struct SpectrumEstimate {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;
    std::string method;  // "dense" or "lanczos"
    bool converged = false;
    /// Lanczos steps used by the two runs (zero for dense).
    int iterations = 0;
};

struct LanczosOptions {
    /// Relative change of the extreme Ritz value below which a step counts
    /// as settled.
    double tol = 1e-8;
    /// Consecutive settled steps required.
    int settle_steps = 5;
    int max_iter = 500;
    std::uint64_t seed = 12345;
};

struct LanczosResult {
    double lambda_max = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of the pencil B x = lambda A x (A SPD, B symmetric).
/// Runs Lanczos on A^{-1}B, which is self-adjoint in the A inner product,
/// with full reorthogonalization. `solve_A` must apply A^{-1}.
template <class SolveA>
LanczosResult lanczos_max(const SparseMatrix& A, const SparseMatrix& B, const SolveA& solve_A,
                          const LanczosOptions& opts = {}) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || B.cols() != n) throw InvalidArgument("lanczos: dimension mismatch");
    LanczosResult out;
    if (n == 0) throw InvalidArgument("lanczos: empty matrix");

    std::mt19937_64 engine(opts.seed);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = detail::symmetric_unit(engine);
    v /= std::sqrt(v.dot(A * v));

    const int cap = static_cast<int>(std::min<Eigen::Index>(opts.max_iter, n));
    std::vector<Vector> basis;
    std::vector<double> diag;
    std::vector<double> off;
    double previous = 0.0;
    int settled = 0;
    for (int k = 0; k < cap; ++k) {
        basis.push_back(v);
        const Vector Bv = B * v;
        Vector w = solve_A(Bv);
        const double alpha = v.dot(Bv);
        diag.push_back(alpha);
        w -= alpha * v;
        if (k > 0) w -= off.back() * basis[k - 1];
        // Two Gram-Schmidt passes in the A inner product.
        for (int pass = 0; pass < 2; ++pass) {
            const Vector Aw = A * w;
            for (const Vector& q : basis) w -= q.dot(Aw) * q;
        }
        const double beta = std::sqrt(std::max(0.0, w.dot(A * w)));

        Vector d = Eigen::Map<const Vector>(diag.data(), static_cast<Eigen::Index>(diag.size()));
        Vector e = Eigen::Map<const Vector>(off.data(), static_cast<Eigen::Index>(off.size()));
        const double ritz = diag.size() == 1 ? diag[0] : tridiagonal_extremes(d, e).lambda_max;
        out.lambda_max = ritz;
        out.iterations = k + 1;

        // Invariant subspace reached: the Ritz values are exact.
        if (beta <= 1e-12 * std::max(std::abs(alpha), std::abs(ritz))) {
            out.converged = true;
            break;
        }
        if (k > 0 && std::abs(ritz - previous) <= opts.tol * std::abs(ritz)) {
            if (++settled >= opts.settle_steps) {
                out.converged = true;
                break;
            }
        } else {
            settled = 0;
        }
        previous = ritz;
        off.push_back(beta);
        v = w / beta;
    }
    if (out.iterations == n) out.converged = true;
    return out;
}

/// Dense generalized eigensolve; intended for small systems.
inline SpectrumEstimate dense_generalized_spectrum(const SparseMatrix& A, const SparseMatrix& B) {
    if (A.rows() != B.rows() || A.rows() == 0) throw InvalidArgument("dense spectrum: dimension mismatch");
    const DenseMatrix Ad(A);
    const DenseMatrix Bd(B);
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> eig(Bd, Ad, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NotSpdError("dense generalized eigensolve");
    SpectrumEstimate s;
    s.lambda_min = eig.eigenvalues().minCoeff();
    s.lambda_max = eig.eigenvalues().maxCoeff();
    s.kappa = s.lambda_max / s.lambda_min;
    s.method = "dense";
    s.converged = true;
    return s;
}

/// Extreme eigenvalues of B x = lambda A x for SPD A and B.
///
/// lambda_max comes from Lanczos on A^{-1}B. lambda_min is taken as
/// 1 / lambda_max(B^{-1}A) from a second run, since the low end of the
/// spectrum can be dense (node-based smoothing) and converges slowly.
inline SpectrumEstimate generalized_kappa(const SparseMatrix& A, const SparseMatrix& B,
                                          const LanczosOptions& opts = {}) {
    const CholeskyFactor fa(A, "generalized_kappa: A");
    const CholeskyFactor fb(B, "generalized_kappa: B");
    const auto top = lanczos_max(A, B, [&](const Vector& x) { return fa.solve(x); }, opts);
    const auto bottom = lanczos_max(B, A, [&](const Vector& x) { return fb.solve(x); }, opts);
    if (!(top.lambda_max > 0.0) || !(bottom.lambda_max > 0.0))
        throw NumericalError("generalized_kappa: non-positive extreme eigenvalue");
    SpectrumEstimate s;
    s.lambda_max = top.lambda_max;
    s.lambda_min = 1.0 / bottom.lambda_max;
    s.kappa = s.lambda_max / s.lambda_min;
    s.method = "lanczos";
    s.converged = top.converged && bottom.converged;
    s.iterations = top.iterations + bottom.iterations;
    return s;
}

/// lambda_max(A^{-1}B) alone.
inline LanczosResult generalized_lambda_max(const SparseMatrix& A, const SparseMatrix& B,
                                            const LanczosOptions& opts = {}) {
    const CholeskyFactor fa(A, "generalized_lambda_max: A");
    return lanczos_max(A, B, [&](const Vector& x) { return fa.solve(x); }, opts);
}

/// omega_0 = max_j lambda_max(A_j^{-1} Kbar_j) over the subdomains and the
/// coarse problem, where A_j are the local matrices built from `K`.
inline double local_omega0(const OverlapDecomposition& dd, const SparseMatrix& K, const SparseMatrix& Kbar,
                           const LanczosOptions& opts = {}) {
    double omega = generalized_lambda_max(coarse_matrix(dd, K), coarse_matrix(dd, Kbar), opts).lambda_max;
    for (std::size_t j = 0; j < dd.size(); ++j)
        omega = std::max(omega, generalized_lambda_max(local_matrix(dd, K, j), local_matrix(dd, Kbar, j), opts).lambda_max);
    return omega;
}

}  // namespace ssfem
