#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "ssfem/errors.hpp"
#include "ssfem/mesh.hpp"

namespace ssfem {

enum class ProblemKind { poisson, elasticity };

/// Isotropic plane-stress material.
struct Material {
    double young = 1.0e3;
    double poisson = 0.2;

    /// D = E/(1-nu^2) [[1,nu,0],[nu,1,0],[0,0,(1-nu)/2]] for engineering shear strain.
    Eigen::Matrix3d plane_stress() const {
        const double c = young / (1.0 - poisson * poisson);
        Eigen::Matrix3d D;
        D << c, c * poisson, 0.0,
             c * poisson, c, 0.0,
             0.0, 0.0, c * 0.5 * (1.0 - poisson);
        return D;
    }
};

/// Model problem: scalar Poisson (-Laplace u = f) or plane-stress
/// elasticity (-div sigma(u) = b), with homogeneous Dirichlet data on the
/// nodes selected by `dirichlet`.
struct ProblemSpec {
    ProblemKind kind = ProblemKind::poisson;
    std::function<double(double, double)> source;                   // Poisson f
    std::function<std::array<double, 2>(double, double)> body_force;  // elasticity b
    Material material;
    /// Selects constrained nodes; receives the coordinates and the mesh
    /// boundary flag.
    std::function<bool(const Point&, bool)> dirichlet;

    int dofs_per_node() const { return kind == ProblemKind::poisson ? 1 : 2; }

    void validate() const {
        if (kind == ProblemKind::elasticity) {
            if (!(material.young > 0.0)) throw InvalidArgument("Young's modulus must be positive");
            if (!(material.poisson >= 0.0 && material.poisson < 0.5))
                throw InvalidArgument("Poisson's ratio must lie in [0, 0.5)");
            if (!body_force) throw InvalidArgument("elasticity problem needs a body force");
        } else if (!source) {
            throw InvalidArgument("Poisson problem needs a source term");
        }
        if (!dirichlet) throw InvalidArgument("problem needs a Dirichlet predicate");
    }
};

inline std::string to_string(ProblemKind kind) { return kind == ProblemKind::poisson ? "poisson" : "elasticity"; }

/// Exact solution of the Poisson benchmark: e^{8(x+y)} sin(pi x) sin(pi y).
inline double poisson_benchmark_solution(double x, double y) {
    using std::numbers::pi;
    return std::exp(8.0 * (x + y)) * std::sin(pi * x) * std::sin(pi * y);
}

/// f = -Laplace of poisson_benchmark_solution:
/// -e^{8(x+y)} [ (128 - 2 pi^2) sin(pi x) sin(pi y) + 16 pi sin(pi (x+y)) ].
inline double poisson_benchmark_source(double x, double y) {
    using std::numbers::pi;
    const double g = std::exp(8.0 * (x + y));
    return -g * ((128.0 - 2.0 * pi * pi) * std::sin(pi * x) * std::sin(pi * y) + 16.0 * pi * std::sin(pi * (x + y)));
}

/// Poisson on (-1,1)^2 with u = 0 on the whole boundary.
inline ProblemSpec poisson_benchmark() {
    ProblemSpec spec;
    spec.kind = ProblemKind::poisson;
    spec.source = poisson_benchmark_source;
    spec.dirichlet = [](const Point&, bool on_boundary) { return on_boundary; };
    return spec;
}

/// Plane-stress cantilever: b = (-y^2, 1 - x^2), E = 1e3, nu = 0.2,
/// clamped along the left edge x = -1.
inline ProblemSpec elasticity_benchmark() {
    ProblemSpec spec;
    spec.kind = ProblemKind::elasticity;
    spec.body_force = [](double x, double y) { return std::array<double, 2>{-y * y, 1.0 - x * x}; };
    spec.material = Material{1.0e3, 0.2};
    spec.dirichlet = [](const Point& p, bool) { return std::abs(p.x + 1.0) < 1e-12; };
    return spec;
}

}  // namespace ssfem
