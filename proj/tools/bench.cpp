// Experiment driver: single solves, spectra, the full table sweeps and the
// 1D node-smoothing example. Exit codes: 0 ok, 1 usage error, 2 numerical
// failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssfem/bench.hpp"

namespace {

using namespace ssfem;
using namespace ssfem::bench;

struct Flags {
    std::string problem = "poisson";
    std::string method = "esfem";
    std::string precond = "none";
    std::string mesh = "structured";
    int n = 8;
    int N = 0;
    int overlap = 2;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 10000;
    std::string out;
    std::string dump_matrix;
    std::string dump_mesh;
    bool no_timing = false;

    ExperimentConfig config() const {
        ExperimentConfig cfg;
        cfg.problem = parse_problem(problem);
        cfg.method = parse_method(method);
        cfg.precond = parse_precond(precond);
        cfg.mesh = parse_mesh(mesh);
        cfg.n = n;
        cfg.N = N;
        cfg.overlap = overlap;
        cfg.seed = seed;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        return cfg;
    }
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--problem", f.problem, "poisson | elasticity")->capture_default_str();
    cmd->add_option("--method", f.method, "fem | esfem | sse | nsfem")->capture_default_str();
    cmd->add_option("--mesh", f.mesh, "structured | unstructured")->capture_default_str();
    cmd->add_option("--n", f.n, "fine cells per side")->capture_default_str();
    cmd->add_option("--cN", f.N, "coarse cells per side (0 = default)")->capture_default_str();
    cmd->add_option("--seed", f.seed, "seed for unstructured meshes")->capture_default_str();
    cmd->add_option("--out", f.out, "CSV output file (default: stdout)");
    cmd->add_option("--dump-matrix", f.dump_matrix, "write the smoothed stiffness (free DOFs) as MatrixMarket");
    cmd->add_option("--dump-mesh", f.dump_mesh, "write the fine mesh");
}

// Opens --out or falls back to stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw InvalidArgument("cannot open output file '" + path + "'");
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void dump(const Flags& f, const Mesh& mesh, const SparseMatrix& A) {
    if (!f.dump_mesh.empty()) {
        std::ofstream out(f.dump_mesh);
        if (!out) throw InvalidArgument("cannot open '" + f.dump_mesh + "'");
        write_mesh(out, mesh);
    }
    if (!f.dump_matrix.empty()) {
        std::ofstream out(f.dump_matrix);
        if (!out) throw InvalidArgument("cannot open '" + f.dump_matrix + "'");
        write_matrix_market(out, A);
    }
}

int cmd_solve(const Flags& f) {
    const ExperimentConfig cfg = f.config();
    cfg.validate_solve();
    const PreparedSystem p = prepare(cfg.problem, cfg.method, cfg.mesh, cfg.n, cfg.coarse_for_solve(), cfg.seed);
    dump(f, p.hier.fine, p.Kbar);
    const SolveOutcome o = solve_prepared(p, cfg);
    Output out(f.out);
    out.stream() << solve_header() << '\n' << to_csv(o.row, !f.no_timing) << '\n';
    if (!o.report.converged) {
        std::cerr << "bench: PCG did not converge in the iteration limit\n";
        return 2;
    }
    return 0;
}

int cmd_spectrum(const Flags& f) {
    const ExperimentConfig cfg = f.config();
    cfg.validate_spectrum();
    if (!f.dump_mesh.empty() || !f.dump_matrix.empty()) {
        const Mesh mesh = spectrum_mesh(cfg);
        const ProblemSpec spec = make_problem(cfg.problem);
        dump(f, mesh, restrict_matrix(assemble_stiffness(mesh, spec, cfg.method), make_dof_map(mesh, spec)));
    }
    const SpectrumRow r = run_spectrum(cfg);
    Output out(f.out);
    out.stream() << spectrum_header() << '\n' << to_csv(r) << '\n';
    if (!r.converged) {
        std::cerr << "bench: Lanczos estimate did not settle\n";
        return 2;
    }
    return 0;
}

int cmd_table(const std::string& id, const Flags& f, int max_n) {
    TableOptions opt;
    opt.seed = f.seed;
    opt.timing = !f.no_timing;
    opt.max_n = max_n;
    opt.overlap = f.overlap;
    const TableResult res = run_table(id, opt);
    std::cout << res.text;
    if (!f.out.empty()) {
        Output out(f.out);
        out.stream() << res.csv;
    }
    if (res.failures > 0) {
        std::cerr << "bench: " << res.failures << " cell(s) failed\n";
        return 2;
    }
    return 0;
}

int cmd_ns1d(const std::vector<int>& sizes, const std::string& path) {
    Output out(path);
    out.stream() << ns1d_header() << '\n';
    for (int n : sizes) out.stream() << to_csv(ns1d_row(n)) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smoothed FEM / two-level Schwarz experiment driver"};
    app.require_subcommand(1);

    Flags f;
    auto* solve = app.add_subcommand("solve", "assemble and solve one configuration with PCG");
    add_common(solve, f);
    solve->add_option("--precond", f.precond, "none | m | mbar | mbaralt")->capture_default_str();
    solve->add_option("--overlap", f.overlap, "overlap width delta/h")->capture_default_str();
    solve->add_option("--tol", f.tol, "relative residual tolerance")->capture_default_str();
    solve->add_option("--max-iter", f.max_iter, "PCG iteration limit")->capture_default_str();
    solve->add_flag("--no-timing", f.no_timing, "write '-' for wall_ms");

    auto* spectrum = app.add_subcommand("spectrum", "extreme eigenvalues of K^-1 Kbar");
    add_common(spectrum, f);

    std::string table_id;
    int max_n = 128;
    auto* table = app.add_subcommand("table", "run a full table or figure sweep");
    table->add_option("id", table_id, "T1..T8, F4, F5, F6")->required();
    table->add_option("--seed", f.seed, "seed for unstructured meshes")->capture_default_str();
    table->add_option("--overlap", f.overlap, "overlap width delta/h")->capture_default_str();
    table->add_option("--max-n", max_n, "largest fine grid in the sweep")->capture_default_str();
    table->add_option("--out", f.out, "CSV output file");
    table->add_flag("--no-timing", f.no_timing, "write '-' for wall_ms");

    std::vector<int> sizes{4, 8, 16, 32, 64};
    std::string ns1d_out;
    auto* ns1d = app.add_subcommand("ns1d", "1D node-smoothing counterexample");
    ns1d->add_option("--n", sizes, "even subinterval counts")->capture_default_str();
    ns1d->add_option("--out", ns1d_out, "CSV output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve) return cmd_solve(f);
        if (*spectrum) return cmd_spectrum(f);
        if (*table) return cmd_table(table_id, f, max_n);
        if (*ns1d) return cmd_ns1d(sizes, ns1d_out);
    } catch (const InvalidArgument& e) {
        std::cerr << "bench: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "bench: numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
