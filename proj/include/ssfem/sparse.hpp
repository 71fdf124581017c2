#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "ssfem/errors.hpp"

namespace ssfem {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Compressed sparse row matrix (row pointer / column index / value arrays).
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

inline Vector spmv(const SparseMatrix& A, const Vector& x) {
    if (A.cols() != x.size()) throw InvalidArgument("spmv: dimension mismatch");
    return A * x;
}

inline double max_abs(const SparseMatrix& A) {
    double m = 0.0;
    for (int k = 0; k < A.nonZeros(); ++k) m = std::max(m, std::abs(A.valuePtr()[k]));
    return m;
}

/// Largest |A_ij - A_ji|.
inline double asymmetry(const SparseMatrix& A) {
    const SparseMatrix At = A.transpose();
    const SparseMatrix diff = A - At;
    return max_abs(diff);
}

/// Order-sensitive FNV-1a hash over structure and values, for checking that
/// two code paths produced bit-identical matrices.
inline std::uint64_t checksum(const SparseMatrix& A) {
    std::uint64_t hash = 1469598103934665603ULL;
    auto mix = [&hash](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            hash ^= p[i];
            hash *= 1099511628211ULL;
        }
    };
    const SparseMatrix& C = A;
    mix(C.outerIndexPtr(), sizeof(int) * (C.outerSize() + 1));
    mix(C.innerIndexPtr(), sizeof(int) * C.nonZeros());
    mix(C.valuePtr(), sizeof(double) * C.nonZeros());
    return hash;
}

/// Principal submatrix A(idx, idx); idx must be sorted and unique.
inline SparseMatrix principal_submatrix(const SparseMatrix& A, const std::vector<int>& idx) {
    std::vector<int> local(A.rows(), -1);
    for (std::size_t k = 0; k < idx.size(); ++k) local[idx[k]] = static_cast<int>(k);
    std::vector<Triplet> entries;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        for (SparseMatrix::InnerIterator it(A, idx[k]); it; ++it) {
            const int j = local[it.col()];
            if (j >= 0) entries.emplace_back(static_cast<int>(k), j, it.value());
        }
    }
    const int m = static_cast<int>(idx.size());
    SparseMatrix sub(m, m);
    sub.setFromTriplets(entries.begin(), entries.end());
    return sub;
}

/// Sparse Cholesky factor P A P^T = L L^T with an AMD fill-reducing ordering.
class CholeskyFactor {
public:
    using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    CholeskyFactor() = default;

    explicit CholeskyFactor(const SparseMatrix& A, const std::string& label = "cholesky") {
        if (A.rows() != A.cols()) throw InvalidArgument("cholesky: matrix is not square");
        dim_ = A.rows();
        if (dim_ == 0) return;
        auto solver = std::make_shared<Solver>();
        solver->compute(ColMatrix(A));
        if (solver->info() != Eigen::Success) throw NotSpdError(label);
        solver_ = std::move(solver);
    }

    Eigen::Index dim() const { return dim_; }

    Vector solve(const Vector& b) const {
        if (b.size() != dim_) throw InvalidArgument("cholesky solve: dimension mismatch");
        if (dim_ == 0) return Vector();
        return solver_->solve(b);
    }

    DenseMatrix solve(const DenseMatrix& B) const {
        if (B.rows() != dim_) throw InvalidArgument("cholesky solve: dimension mismatch");
        if (dim_ == 0) return DenseMatrix(0, B.cols());
        return solver_->solve(B);
    }

    const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>& permutation() const {
        return solver_->permutationP();
    }

    ColMatrix lower() const { return ColMatrix(solver_->matrixL()); }

private:
    Eigen::Index dim_ = 0;
    using Solver = Eigen::SimplicialLLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
    std::shared_ptr<const Solver> solver_;
};

inline CholeskyFactor cholesky(const SparseMatrix& A, const std::string& label = "cholesky") {
    return CholeskyFactor(A, label);
}

// ---------------------------------------------------------------------------
// Preconditioned conjugate gradients

struct IdentityPreconditioner {
    Vector apply(const Vector& r) const { return r; }
};

template <class P>
concept Preconditioner = requires(const P& p, const Vector& r) {
    { p.apply(r) } -> std::convertible_to<Vector>;
};

/// The stop test is ||f - A u_k||_2 / ||f||_2 < tol. The benchmark tables
/// are reproduced with tol = 1e-6, i.e. a squared residual ratio of 1e-12.
struct PcgOptions {
    double tol = 1e-6;
    int max_iter = 10000;
};

/// Iteration record of one PCG solve.
struct SolveReport {
    int iterations = 0;
    bool converged = false;
    /// ||f - A u_k|| / ||f|| after each iteration (recursive residual).
    std::vector<double> residual_history;
    std::vector<double> alphas;
    std::vector<double> betas;
    /// Condition number estimate of M^{-1}A from the CG coefficients;
    /// empty when fewer than two iterations were taken.
    std::optional<double> lanczos_kappa;
    double lanczos_lambda_min = 0.0;
    double lanczos_lambda_max = 0.0;
    /// ||f - A u|| / ||f|| recomputed from the returned iterate.
    double true_residual = 0.0;
};

struct SolveResult {
    Vector x;
    SolveReport report;
};

struct TridiagonalSpectrum {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

namespace detail {

// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x.
inline int sturm_count(const Vector& diag, const Vector& off, double x) {
    int count = 0;
    double q = 1.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        const double e2 = i > 0 ? off[i - 1] * off[i - 1] : 0.0;
        q = diag[i] - x - (i > 0 ? e2 / q : 0.0);
        if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1e-300);
        if (q < 0.0) ++count;
    }
    return count;
}

// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double tridiagonal_eigenvalue(const Vector& diag, const Vector& off, int k) {
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(off[i - 1]);
        if (i + 1 < diag.size()) radius += std::abs(off[i]);
        lo = std::min(lo, diag[i] - radius);
        hi = std::max(hi, diag[i] + radius);
    }
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= 1e-15 * std::max(std::abs(lo), std::abs(hi))) break;
        if (sturm_count(diag, off, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Extreme eigenvalues of a symmetric tridiagonal matrix.
inline TridiagonalSpectrum tridiagonal_extremes(const Vector& diag, const Vector& off) {
    const int n = static_cast<int>(diag.size());
    return {detail::tridiagonal_eigenvalue(diag, off, 0), detail::tridiagonal_eigenvalue(diag, off, n - 1)};
}

/// Extreme eigenvalues of the Lanczos tridiagonal matrix built from CG
/// coefficients: diagonal 1/a_k + b_{k-1}/a_{k-1}, off-diagonal sqrt(b_k)/a_k.
inline std::optional<TridiagonalSpectrum> lanczos_spectrum(const std::vector<double>& alphas,
                                                           const std::vector<double>& betas) {
    const std::size_t k = alphas.size();
    if (k < 2 || betas.size() + 1 < k) return std::nullopt;
    Vector diag(k);
    Vector off(k - 1);
    for (std::size_t j = 0; j < k; ++j) {
        diag[j] = 1.0 / alphas[j];
        if (j > 0) diag[j] += betas[j - 1] / alphas[j - 1];
    }
    for (std::size_t j = 0; j + 1 < k; ++j) off[j] = std::sqrt(betas[j]) / alphas[j];
    return tridiagonal_extremes(diag, off);
}

inline std::optional<double> lanczos_kappa(const std::vector<double>& alphas, const std::vector<double>& betas) {
    const auto spec = lanczos_spectrum(alphas, betas);
    if (!spec || spec->lambda_min <= 0.0) return std::nullopt;
    return spec->lambda_max / spec->lambda_min;
}

/// PCG from a zero initial guess. Stops once the unpreconditioned relative
/// residual drops below opts.tol; a run that hits max_iter is reported with
/// converged = false.
template <Preconditioner P>
SolveResult pcg(const SparseMatrix& A, const Vector& f, const P& precond, const PcgOptions& opts = {}) {
    if (A.rows() != A.cols() || A.rows() != f.size()) throw InvalidArgument("pcg: dimension mismatch");
    SolveResult out;
    SolveReport& rep = out.report;
    out.x = Vector::Zero(f.size());
    const double fnorm = f.norm();
    if (fnorm == 0.0) {
        rep.converged = true;
        return out;
    }

    Vector r = f;
    Vector z = precond.apply(r);
    Vector p = z;
    double rz = r.dot(z);
    Vector q(f.size());
    for (int k = 1; k <= opts.max_iter; ++k) {
        q.noalias() = A * p;
        const double pq = p.dot(q);
        if (!(pq > 0.0)) throw NotSpdError("pcg: p^T A p <= 0");
        const double alpha = rz / pq;
        out.x.noalias() += alpha * p;
        r.noalias() -= alpha * q;
        rep.alphas.push_back(alpha);
        const double rel = r.norm() / fnorm;
        rep.residual_history.push_back(rel);
        rep.iterations = k;
        if (rel < opts.tol) {
            rep.converged = true;
            break;
        }
        z = precond.apply(r);
        const double rz_next = r.dot(z);
        if (!(rz_next > 0.0)) throw NotSpdError("pcg: preconditioner is not positive definite");
        const double beta = rz_next / rz;
        rep.betas.push_back(beta);
        rz = rz_next;
        p = z + beta * p;
    }

    if (const auto spec = lanczos_spectrum(rep.alphas, rep.betas)) {
        rep.lanczos_lambda_min = spec->lambda_min;
        rep.lanczos_lambda_max = spec->lambda_max;
        if (spec->lambda_min > 0.0) rep.lanczos_kappa = spec->lambda_max / spec->lambda_min;
    }
    rep.true_residual = (f - A * out.x).norm() / fnorm;
    return out;
}

inline SolveResult pcg(const SparseMatrix& A, const Vector& f, const PcgOptions& opts = {}) {
    return pcg(A, f, IdentityPreconditioner{}, opts);
}

/// Writes the lower triangle of a symmetric matrix in MatrixMarket
/// coordinate format (1-based indices).
inline void write_matrix_market(std::ostream& out, const SparseMatrix& A) {
    std::size_t count = 0;
    for (int i = 0; i < A.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(A, i); it; ++it)
            if (it.col() <= i) ++count;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << A.rows() << ' ' << A.cols() << ' ' << count << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < A.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(A, i); it; ++it)
            if (it.col() <= i) out << (i + 1) << ' ' << (it.col() + 1) << ' ' << it.value() << '\n';
}

}  // namespace ssfem
