#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ssfem/assembly.hpp"
#include "ssfem/errors.hpp"
#include "ssfem/mesh.hpp"
#include "ssfem/ns1d.hpp"
#include "ssfem/problem.hpp"
#include "ssfem/schwarz.hpp"
#include "ssfem/sparse.hpp"
#include "ssfem/spectral.hpp"

namespace ssfem::bench {

enum class PrecondKind { none, m, mbar, mbaralt };
enum class MeshKind { structured, unstructured };

inline std::string to_string(PrecondKind p) {
    switch (p) {
        case PrecondKind::none: return "none";
        case PrecondKind::m: return "m";
        case PrecondKind::mbar: return "mbar";
        case PrecondKind::mbaralt: return "mbaralt";
    }
    return "?";
}

inline std::string to_string(MeshKind m) { return m == MeshKind::structured ? "structured" : "unstructured"; }

inline ProblemKind parse_problem(const std::string& s) {
    if (s == "poisson") return ProblemKind::poisson;
    if (s == "elasticity") return ProblemKind::elasticity;
    throw InvalidArgument("unknown problem '" + s + "' (poisson|elasticity)");
}

inline Method parse_method(const std::string& s) {
    if (s == "fem") return Method::fem;
    if (s == "esfem") return Method::esfem;
    if (s == "sse") return Method::sse;
    if (s == "nsfem") return Method::nsfem;
    throw InvalidArgument("unknown method '" + s + "' (fem|esfem|sse|nsfem)");
}

inline PrecondKind parse_precond(const std::string& s) {
    if (s == "none") return PrecondKind::none;
    if (s == "m") return PrecondKind::m;
    if (s == "mbar") return PrecondKind::mbar;
    if (s == "mbaralt") return PrecondKind::mbaralt;
    throw InvalidArgument("unknown preconditioner '" + s + "' (none|m|mbar|mbaralt)");
}

inline MeshKind parse_mesh(const std::string& s) {
    if (s == "structured") return MeshKind::structured;
    if (s == "unstructured") return MeshKind::unstructured;
    throw InvalidArgument("unknown mesh '" + s + "' (structured|unstructured)");
}

inline SchwarzVariant schwarz_variant(PrecondKind p) {
    switch (p) {
        case PrecondKind::m: return SchwarzVariant::standard;
        case PrecondKind::mbar: return SchwarzVariant::enhanced;
        case PrecondKind::mbaralt: return SchwarzVariant::hybrid;
        case PrecondKind::none: break;
    }
    throw InvalidArgument("no Schwarz variant for preconditioner 'none'");
}

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

inline ProblemSpec make_problem(ProblemKind kind) {
    return kind == ProblemKind::poisson ? poisson_benchmark() : elasticity_benchmark();
}

struct ExperimentConfig {
    ProblemKind problem = ProblemKind::poisson;
    Method method = Method::esfem;
    PrecondKind precond = PrecondKind::none;
    MeshKind mesh = MeshKind::structured;
    int n = 8;
    /// Coarse cells per side; 0 picks the default (2 for solves, 4 for
    /// unstructured spectra, where the perturbed coarse grid is refined).
    int N = 0;
    /// Overlap width in fine layers (delta / h).
    int overlap = 2;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 10000;

    int coarse_for_solve() const { return N > 0 ? N : 2; }
    int coarse_for_spectrum() const { return N > 0 ? N : std::max(2, std::min(4, n)); }

    void validate_solve() const {
        if (!is_power_of_two(n) || n < 2) throw InvalidArgument("--n must be a power of two >= 2");
        const int c = coarse_for_solve();
        if (!is_power_of_two(c)) throw InvalidArgument("--cN must be a power of two");
        if (c > n) throw InvalidArgument("--cN must not exceed --n");
        if (precond != PrecondKind::none) {
            if (c >= n) throw InvalidArgument("a preconditioner needs n > N");
            if (c < 2) throw InvalidArgument("a preconditioner needs N >= 2");
            if (overlap < 1) throw InvalidArgument("--overlap must be at least 1");
        }
        if (mesh == MeshKind::unstructured && c < 2) throw InvalidArgument("unstructured meshes need N >= 2");
        if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
        if (max_iter < 1) throw InvalidArgument("iteration limit must be positive");
    }

    void validate_spectrum() const {
        if (!is_power_of_two(n) || n < 2) throw InvalidArgument("--n must be a power of two >= 2");
        if (method == Method::fem) throw InvalidArgument("spectrum needs a smoothed method (esfem|sse|nsfem)");
        if (mesh == MeshKind::unstructured) {
            const int c = coarse_for_spectrum();
            if (!is_power_of_two(c) || c > n) throw InvalidArgument("--cN must be a power of two not exceeding --n");
        }
    }
};

/// Mesh hierarchy plus the assembled post-BC system for one (n, N).
struct PreparedSystem {
    Hierarchy hier;
    ProblemSpec spec;
    /// K (standard FEM) restricted to the free DOFs, load and DOF map.
    ReducedSystem fem;
    /// Stiffness of the chosen method on the free DOFs; the system solved.
    SparseMatrix Kbar;
};

inline PreparedSystem prepare(ProblemKind problem, Method method, MeshKind mesh, int n, int N, std::uint64_t seed) {
    PreparedSystem p;
    p.spec = make_problem(problem);
    p.spec.validate();
    p.hier = build_hierarchy(n, N, mesh == MeshKind::unstructured, seed);
    const Mesh& fine = p.hier.fine;
    p.fem = apply_dirichlet(assemble_standard(fine, p.spec), assemble_load(fine, p.spec), fine, p.spec);
    p.Kbar = method == Method::fem ? p.fem.A : restrict_matrix(assemble_stiffness(fine, p.spec, method), p.fem.dofs);
    return p;
}

struct SolveRow {
    std::string problem;
    std::string method;
    std::string precond;
    std::string mesh;
    int n = 0;
    int N = 0;
    int delta_over_h = 0;
    int iterations = 0;
    double kappa = 0.0;
    double wall_ms = 0.0;
};

struct SolveOutcome {
    SolveRow row;
    SolveReport report;
    /// Checksum of the system matrix, for checking that all preconditioners
    /// see the same system.
    std::uint64_t system_checksum = 0;
};

/// Solves Kbar u = f with the requested preconditioner. wall_ms covers the
/// decomposition, the preconditioner setup and PCG.
inline SolveOutcome solve_prepared(const PreparedSystem& p, const ExperimentConfig& cfg) {
    PcgOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    const auto start = std::chrono::steady_clock::now();
    SolveResult result;
    if (cfg.precond == PrecondKind::none) {
        result = pcg(p.Kbar, p.fem.f, opts);
    } else {
        const OverlapDecomposition dd = decompose(p.hier, p.spec, cfg.overlap);
        const SchwarzPreconditioner M(schwarz_variant(cfg.precond), dd, p.fem.A, &p.Kbar);
        result = pcg(p.Kbar, p.fem.f, M, opts);
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    SolveOutcome out;
    out.report = std::move(result.report);
    out.system_checksum = checksum(p.Kbar);
    SolveRow& r = out.row;
    r.problem = to_string(cfg.problem);
    r.method = ssfem::to_string(cfg.method);
    r.precond = to_string(cfg.precond);
    r.mesh = to_string(cfg.mesh);
    r.n = cfg.n;
    r.N = cfg.coarse_for_solve();
    r.delta_over_h = cfg.precond == PrecondKind::none ? 0 : cfg.overlap;
    r.iterations = out.report.iterations;
    r.kappa = out.report.lanczos_kappa.value_or(std::numeric_limits<double>::quiet_NaN());
    r.wall_ms = ms;
    return out;
}

inline SolveOutcome run_solve(const ExperimentConfig& cfg) {
    cfg.validate_solve();
    const PreparedSystem p = prepare(cfg.problem, cfg.method, cfg.mesh, cfg.n, cfg.coarse_for_solve(), cfg.seed);
    return solve_prepared(p, cfg);
}

struct SpectrumRow {
    std::string problem;
    std::string method;
    std::string mesh;
    int n = 0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;
    bool converged = false;
};

/// Fine mesh used for spectra: the plain grid, or the refined perturbed
/// coarse mesh for the unstructured case.
inline Mesh spectrum_mesh(const ExperimentConfig& cfg) {
    if (cfg.mesh == MeshKind::structured) return build_structured(cfg.n);
    return build_hierarchy(cfg.n, cfg.coarse_for_spectrum(), true, cfg.seed).fine;
}

inline SpectrumRow run_spectrum(const ExperimentConfig& cfg) {
    cfg.validate_spectrum();
    const ProblemSpec spec = make_problem(cfg.problem);
    const Mesh mesh = spectrum_mesh(cfg);
    const DofMap dofs = make_dof_map(mesh, spec);
    const SparseMatrix K = restrict_matrix(assemble_standard(mesh, spec), dofs);
    const SparseMatrix Kbar = restrict_matrix(assemble_stiffness(mesh, spec, cfg.method), dofs);
    const SpectrumEstimate s = generalized_kappa(K, Kbar);
    SpectrumRow r;
    r.problem = to_string(cfg.problem);
    r.method = ssfem::to_string(cfg.method);
    r.mesh = to_string(cfg.mesh);
    r.n = cfg.n;
    r.lambda_min = s.lambda_min;
    r.lambda_max = s.lambda_max;
    r.kappa = s.kappa;
    r.converged = s.converged;
    return r;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline const char* solve_header() { return "problem,method,precond,mesh,n,N,delta/h,iters,kappa_lanczos,wall_ms"; }
inline const char* spectrum_header() { return "problem,method,mesh,n,lambda_min,lambda_max,kappa"; }
inline const char* ns1d_header() { return "n,lower_bound,true_kappa"; }

/// With timing disabled wall_ms is written as "-" so reruns are
/// byte-identical.
inline std::string to_csv(const SolveRow& r, bool timing = true) {
    std::ostringstream s;
    s << r.problem << ',' << r.method << ',' << r.precond << ',' << r.mesh << ',' << r.n << ',' << r.N << ','
      << r.delta_over_h << ',' << r.iterations << ',' << sci(r.kappa) << ',' << (timing ? sci(r.wall_ms) : "-");
    return s.str();
}

inline std::string to_csv(const SpectrumRow& r) {
    std::ostringstream s;
    s << r.problem << ',' << r.method << ',' << r.mesh << ',' << r.n << ',' << sci(r.lambda_min) << ','
      << sci(r.lambda_max) << ',' << sci(r.kappa);
    return s.str();
}

inline std::string to_csv(const Ns1dRow& r) {
    std::ostringstream s;
    s << r.n << ',' << sci(r.lower_bound) << ',' << sci(r.true_kappa);
    return s.str();
}

// ---------------------------------------------------------------------------
// Tables

struct TableOptions {
    std::uint64_t seed = 0;
    bool timing = true;
    /// Largest fine grid in the sweep; lowering it gives a quick partial table.
    int max_n = 128;
    int overlap = 2;
};

struct TableResult {
    std::string text;
    std::string csv;
    /// Cells that failed; they show as "fail" in the text table.
    int failures = 0;
};

inline const std::vector<std::string>& table_ids() {
    static const std::vector<std::string> ids{"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "F4", "F5", "F6"};
    return ids;
}

namespace detail {

inline std::vector<int> fine_sizes(int max_n) {
    std::vector<int> ns;
    for (int n = 8; n <= max_n; n *= 2) ns.push_back(n);
    return ns;
}

inline std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

// Spectrum table: one row per label, one column per n.
struct SpectrumLine {
    std::string label;
    ProblemKind problem;
    Method method;
    MeshKind mesh;
};

inline TableResult spectrum_table(const std::string& title, const std::vector<SpectrumLine>& lines,
                                  const TableOptions& opt) {
    TableResult res;
    std::ostringstream text;
    std::ostringstream csv;
    csv << spectrum_header() << '\n';
    const auto ns = fine_sizes(opt.max_n);
    text << title << '\n' << pad("", 26);
    for (int n : ns) text << pad("n=" + std::to_string(n), 12);
    text << '\n';
    for (const auto& line : lines) {
        text << pad(line.label, 26);
        for (int n : ns) {
            ExperimentConfig cfg;
            cfg.problem = line.problem;
            cfg.method = line.method;
            cfg.mesh = line.mesh;
            cfg.n = n;
            cfg.seed = opt.seed;
            try {
                const SpectrumRow r = run_spectrum(cfg);
                csv << to_csv(r) << '\n';
                text << pad(sci(r.kappa), 12);
            } catch (const NumericalError&) {
                ++res.failures;
                text << pad("fail", 12);
            }
        }
        text << '\n';
    }
    res.text = text.str();
    res.csv = csv.str();
    return res;
}

// Iteration / kappa table: a "None" row, then one
// block per preconditioner with a row per coarse size N.
inline TableResult solve_table(const std::string& title, ProblemKind problem, Method method, const TableOptions& opt) {
    TableResult res;
    std::ostringstream csv;
    csv << solve_header() << '\n';
    const auto ns = fine_sizes(opt.max_n);
    std::vector<int> Ns;
    for (int N = 2; N <= opt.max_n / 4; N *= 2) Ns.push_back(N);
    const std::vector<PrecondKind> variants{PrecondKind::m, PrecondKind::mbar, PrecondKind::mbaralt};

    // cells[{precond, N, n}] = "iters kappa"
    std::map<std::tuple<int, int, int>, std::string> cells;
    auto cell_text = [](const SolveOutcome& o) {
        std::ostringstream s;
        s << std::setw(4) << o.row.iterations << ' ' << sci(o.row.kappa);
        return s.str();
    };
    auto base_config = [&](int n, int N) {
        ExperimentConfig cfg;
        cfg.problem = problem;
        cfg.method = method;
        cfg.n = n;
        cfg.N = N;
        cfg.overlap = opt.overlap;
        cfg.seed = opt.seed;
        return cfg;
    };

    std::vector<std::string> rows;
    for (int n : ns) {
        ExperimentConfig cfg = base_config(n, 2);
        try {
            const PreparedSystem p = prepare(problem, method, MeshKind::structured, n, 2, opt.seed);
            const SolveOutcome o = solve_prepared(p, cfg);
            rows.push_back(to_csv(o.row, opt.timing));
            cells[{0, 0, n}] = cell_text(o);
        } catch (const NumericalError&) {
            ++res.failures;
            cells[{0, 0, n}] = "fail";
        }
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (int N : Ns) {
            for (int n : ns) {
                if (n < 4 * N) continue;
                ExperimentConfig cfg = base_config(n, N);
                cfg.precond = variants[v];
                try {
                    const PreparedSystem p = prepare(problem, method, MeshKind::structured, n, N, opt.seed);
                    const SolveOutcome o = solve_prepared(p, cfg);
                    rows.push_back(to_csv(o.row, opt.timing));
                    cells[{static_cast<int>(v) + 1, N, n}] = cell_text(o);
                } catch (const NumericalError&) {
                    ++res.failures;
                    cells[{static_cast<int>(v) + 1, N, n}] = "fail";
                }
            }
        }
    }
    for (const auto& r : rows) csv << r << '\n';

    std::ostringstream text;
    text << title << '\n' << pad("Precond.", 10) << pad("N", 5);
    for (int n : ns) text << pad("n=" + std::to_string(n), 16);
    text << '\n';
    auto emit = [&](const std::string& label, const std::string& N, int v, int key_N) {
        text << pad(label, 10) << pad(N, 5);
        for (int n : ns) {
            const auto it = cells.find({v, key_N, n});
            text << pad(it == cells.end() ? "   -" : it->second, 16);
        }
        text << '\n';
    };
    emit("None", "", 0, 0);
    const char* names[] = {"M", "Mbar", "Mbar_alt"};
    for (std::size_t v = 0; v < variants.size(); ++v)
        for (std::size_t k = 0; k < Ns.size(); ++k)
            emit(k == 0 ? names[v] : "", std::to_string(Ns[k]), static_cast<int>(v) + 1, Ns[k]);
    res.text = text.str();
    res.csv = csv.str();
    return res;
}

// kappa(Mbar_alt^{-1} Kbar) with n/N fixed at 4.
struct ScalingLine {
    std::string label;
    Method method;
    MeshKind mesh;
};

inline TableResult scaling_figure(const std::string& title, ProblemKind problem, const std::vector<ScalingLine>& lines,
                                  const TableOptions& opt) {
    TableResult res;
    std::ostringstream text;
    std::ostringstream csv;
    csv << solve_header() << '\n';
    std::vector<int> ns;
    for (int n = 16; n <= opt.max_n; n *= 2) ns.push_back(n);
    text << title << '\n' << pad("", 26);
    for (int n : ns) text << pad("n=" + std::to_string(n), 12);
    text << '\n';
    for (const auto& line : lines) {
        text << pad(line.label, 26);
        for (int n : ns) {
            ExperimentConfig cfg;
            cfg.problem = problem;
            cfg.method = line.method;
            cfg.mesh = line.mesh;
            cfg.precond = PrecondKind::mbaralt;
            cfg.n = n;
            cfg.N = n / 4;
            cfg.overlap = opt.overlap;
            cfg.seed = opt.seed;
            try {
                const SolveOutcome o = run_solve(cfg);
                csv << to_csv(o.row, opt.timing) << '\n';
                text << pad(sci(o.row.kappa), 12);
            } catch (const NumericalError&) {
                ++res.failures;
                text << pad("fail", 12);
            }
        }
        text << '\n';
    }
    res.text = text.str();
    res.csv = csv.str();
    return res;
}

// kappa(Mbar_alt^{-1} Kbar) against H/delta for fixed H/h.
inline TableResult overlap_figure(const TableOptions& opt) {
    TableResult res;
    std::ostringstream text;
    std::ostringstream csv;
    csv << solve_header() << '\n';
    const int n = opt.max_n;
    const std::vector<int> deltas{16, 8, 4, 2, 1};
    text << "F5: kappa(Mbar_alt^-1 Kbar), Poisson, n=" << n << ", varying H/delta\n" << pad("", 26);
    for (int d : deltas) text << pad("dh=" + std::to_string(d), 12);
    text << '\n';
    for (Method method : {Method::esfem, Method::sse}) {
        for (int ratio : {32, 64}) {
            const int N = n / ratio;
            std::ostringstream label;
            label << ssfem::to_string(method) << " H/h=" << ratio;
            text << pad(label.str(), 26);
            if (N < 2) {
                for (std::size_t k = 0; k < deltas.size(); ++k) text << pad("-", 12);
                text << '\n';
                continue;
            }
            const PreparedSystem p = prepare(ProblemKind::poisson, method, MeshKind::structured, n, N, opt.seed);
            for (int d : deltas) {
                ExperimentConfig cfg;
                cfg.problem = ProblemKind::poisson;
                cfg.method = method;
                cfg.precond = PrecondKind::mbaralt;
                cfg.n = n;
                cfg.N = N;
                cfg.overlap = d;
                cfg.seed = opt.seed;
                try {
                    const SolveOutcome o = solve_prepared(p, cfg);
                    csv << to_csv(o.row, opt.timing) << '\n';
                    text << pad(sci(o.row.kappa), 12);
                } catch (const NumericalError&) {
                    ++res.failures;
                    text << pad("fail", 12);
                }
            }
            text << '\n';
        }
    }
    text << "(column dh = delta/h; H/delta = (H/h) / dh)\n";
    res.text = text.str();
    res.csv = csv.str();
    return res;
}

}  // namespace detail

/// Runs the full sweep behind one table (T1..T8) or figure (F4..F6).
inline TableResult run_table(const std::string& id, const TableOptions& opt = {}) {
    using detail::SpectrumLine;
    using detail::ScalingLine;
    const auto P = ProblemKind::poisson;
    const auto E = ProblemKind::elasticity;
    const auto S = MeshKind::structured;
    const auto U = MeshKind::unstructured;
    if (!is_power_of_two(opt.max_n) || opt.max_n < 8) throw InvalidArgument("table: max n must be a power of two >= 8");
    if (id == "T1")
        return detail::spectrum_table("T1: kappa(K^-1 Kbar), Poisson",
                                      {{"ES-FEM structured", P, Method::esfem, S},
                                       {"ES-FEM unstructured", P, Method::esfem, U},
                                       {"SSE structured", P, Method::sse, S},
                                       {"SSE unstructured", P, Method::sse, U}},
                                      opt);
    if (id == "T2") return detail::solve_table("T2: ES-FEM, Poisson, iters / kappa", P, Method::esfem, opt);
    if (id == "T3") return detail::solve_table("T3: SSE, Poisson, iters / kappa", P, Method::sse, opt);
    if (id == "T4")
        return detail::spectrum_table("T4: kappa(K^-1 Kbar), elasticity",
                                      {{"ES-FEM structured", E, Method::esfem, S}, {"SSE structured", E, Method::sse, S}},
                                      opt);
    if (id == "T5") return detail::solve_table("T5: ES-FEM, elasticity, iters / kappa", E, Method::esfem, opt);
    if (id == "T6") return detail::solve_table("T6: SSE, elasticity, iters / kappa", E, Method::sse, opt);
    if (id == "T7")
        return detail::spectrum_table("T7: kappa(K^-1 Kbar_NS), elasticity", {{"NS-FEM structured", E, Method::nsfem, S}},
                                      opt);
    if (id == "T8") return detail::solve_table("T8: NS-FEM, elasticity, iters / kappa", E, Method::nsfem, opt);
    if (id == "F4")
        return detail::scaling_figure("F4: kappa(Mbar_alt^-1 Kbar), Poisson, n/N = 4", P,
                                      {{"ES-FEM structured", Method::esfem, S},
                                       {"ES-FEM unstructured", Method::esfem, U},
                                       {"SSE structured", Method::sse, S},
                                       {"SSE unstructured", Method::sse, U}},
                                      opt);
    if (id == "F5") return detail::overlap_figure(opt);
    if (id == "F6")
        return detail::scaling_figure("F6: kappa(Mbar_alt^-1 Kbar), elasticity, n/N = 4", E,
                                      {{"ES-FEM structured", Method::esfem, S}, {"SSE structured", Method::sse, S}},
                                      opt);
    throw InvalidArgument("unknown table '" + id + "' (T1..T8, F4, F5, F6)");
}

}  // namespace ssfem::bench
