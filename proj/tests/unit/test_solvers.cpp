// ----------------------------------------------------------------------------
// Copyright 2026 The nlthin Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#include "nlthin/densities.hpp"
#include "nlthin/energy.hpp"
#include "nlthin/error.hpp"
#include "nlthin/kernels.hpp"
#include "nlthin/lattice.hpp"
#include "nlthin/solvers.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <cmath>

using namespace nlthin;

namespace
{
    LatticePtr square_film(Index planar, Index vertical)
    {
        CylinderSpec spec;
        const std::vector<Index> counts{planar, vertical};
        return std::make_shared<Lattice>(build_lattice(spec, counts, {false, false}));
    }

    /// chi of the unit square centred at 0.3 (e_1 + e_2): a kernel tilted off both axes.
    Kernel tilted_square()
    {
        KernelTraits traits;
        traits.label = "tilted_square";
        traits.dim = 2;
        traits.planar_radius = 1.3;
        traits.vertical_halfheight = 1.3;
        traits.planar_radial = false;
        traits.vertical_even = false;
        traits.radial_breaks = {0.7, 1.3};
        traits.vertical_breaks = {-0.7, 1.3};
        return Kernel(traits, [](const XiRef& xi) {
            return std::abs(xi(0) - 0.3) < 1.0 && std::abs(xi(1) - 0.3) < 1.0 ? 1.0 : 0.0;
        });
    }
}

TEST_CASE("vector minimizer solves a convex quadratic")
{
    Eigen::Matrix2d A;
    A << 3.0, 1.0, 1.0, 2.0;
    const Eigen::Vector2d c(1.0, -2.0);
    VectorObjective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = A * x - c;
        return 0.5 * x.dot(A * x) - c.dot(x);
    };
    const auto result = minimize_vector(objective, Eigen::VectorXd::Zero(2), 1e-12, 500);
    CHECK(result.converged);
    const Eigen::Vector2d exact = A.inverse() * c;
    CHECK((result.argmin - exact).norm() < 1e-9);
}

TEST_CASE("Dirichlet iterates stay exactly feasible")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = square_film(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    DirichletClassSpec spec;
    spec.M = Eigen::MatrixXd::Constant(1, 1, 1.5);
    const auto mask = dirichlet_fixed_mask(*lattice, spec.collar_radius * scale.eps());
    REQUIRE(std::count(mask.begin(), mask.end(), true) > 0);

    SolverOptions opts;
    opts.multistart = 2;
    opts.max_iters = 200;
    int iterates = 0;
    bool feasible = true;
    opts.on_iterate = [&](const Eigen::MatrixXd& x) {
        ++iterates;
        for (Index i = 0; i < lattice->size(); ++i)
        {
            if (mask[i])
            {
                const Eigen::VectorXd planar = lattice->coordinate(i).head(1);
                feasible = feasible && x(0, i) == spec.boundary_value(planar)(0);
            }
        }
    };
    const auto report = minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
    CHECK(iterates > 3);
    CHECK(feasible);
    CHECK(report.value <= report.affine_value);
    CHECK(report.value >= 0.0);
    CHECK(report.start_values.size() == 3);
}

TEST_CASE("affine data are discrete minimizers of the pure convolution energy")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = square_film(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    DirichletClassSpec spec;
    spec.M = Eigen::MatrixXd::Constant(1, 1, 1.0);
    SolverOptions opts;
    opts.multistart = 1;
    const auto report = minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
    CHECK(report.converged);
    CHECK(report.value == doctest::Approx(report.affine_value).epsilon(1e-9));
}

TEST_CASE("zero datum gives zero minimum")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = square_film(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    DirichletClassSpec spec;
    spec.M = Eigen::MatrixXd::Zero(1, 1);
    const auto report = minimize_dirichlet(*density, scale, lattice, spec, stencil);
    CHECK(report.value == 0.0);
}

TEST_CASE("certification restarts agree for convex densities")
{
    const auto density = pure_convolution(1.0, 3.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = square_film(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    DirichletClassSpec spec;
    spec.datum = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::sin(3.0 * x(0))); };
    SolverOptions opts;
    opts.certify = true;
    opts.tol_g = 1e-10;
    const auto report = minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
    REQUIRE(report.certificate_spread);
    CHECK(*report.certificate_spread <= 1e-6);
    CHECK(report.start_values.size() == 6);
}

TEST_CASE("non-convex densities are flagged as upper bounds")
{
    const auto density = rotation_bumps(0.2, 2.0);
    CHECK(density->traits().convex_in_z);
    const auto nonconvex = rotation_example(0.2, 2.0);
    CylinderSpec cyl;
    cyl.ambient_dim = 3;
    cyl.codomain_dim = 3;
    cyl.planar_box = {Interval{}, Interval{}};
    const std::vector<Index> counts{5, 5, 5};
    const auto lattice = std::make_shared<Lattice>(build_lattice(cyl, counts, {true, true, false}));
    const auto stencil = build_stencil(nonconvex->support(), 1.0, 1.0, *lattice);
    PeriodicClassSpec spec;
    spec.M = Eigen::MatrixXd::Zero(3, 2);
    spec.M(0, 0) = 1.0;
    spec.M(1, 1) = 1.0;
    spec.b = Eigen::Vector3d(0.0, 0.0, 1.0);
    SolverOptions opts;
    opts.max_iters = 5;
    const auto report = minimize_periodic_cell(*nonconvex, 1.0, spec, lattice, stencil, opts);
    CHECK(report.upper_bound);
    REQUIRE(report.warning);
    CHECK(report.start_values.size() == 5);
    CHECK(report.value <= report.affine_value);
}

TEST_CASE("identical seeds give identical minimizers")
{
    const auto density = pure_convolution(1.0, 2.5);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = square_film(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    DirichletClassSpec spec;
    spec.datum = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x(0) * x(0)); };
    SolverOptions opts;
    opts.multistart = 2;
    opts.seed = 17;
    const auto a = minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
    const auto b = minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
    CHECK(a.value == b.value);
    CHECK(a.field.values() == b.field.values());
}

TEST_CASE("periodic cell minimum of an affine slope on the torus")
{
    const auto density = planar_cut(pure_convolution(1.0, 2.0));
    const auto lattice = std::make_shared<Lattice>(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1.0 / 32.0),
                                                   std::vector<Index>{32}, std::vector<bool>{true});
    const auto stencil = build_stencil(density->support(), 1.0, 1.0, *lattice);
    PeriodicClassSpec spec;
    spec.M = Eigen::MatrixXd::Constant(1, 1, 2.0);
    spec.cell = CellShape::torus;
    const auto report = minimize_periodic_cell(*density, 1.0, spec, lattice, stencil);
    double expected = 0.0;
    for (const auto& e : stencil.entries)
    {
        expected += e.weight * 4.0 * e.xi(0) * e.xi(0);
    }
    CHECK(report.value == doctest::Approx(expected).epsilon(1e-10));
    CHECK(report.field.values().cwiseAbs().maxCoeff() < 1e-10);
    CHECK(report.slope_gradient(0, 0) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("vertical slope of the symmetric cylinder is zero")
{
    const auto result = relax_vertical_slope(*pure_convolution(1.0, 2.0), 2, 1.0, Eigen::MatrixXd::Ones(1, 1));
    CHECK(result.converged);
    CHECK(std::abs(result.b(0)) < 1e-8);
    CHECK(result.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("a purely vertical shift keeps the optimal vertical slope at zero")
{
    const auto density = homogeneous_convex(shifted_cylinder(1.0, 0.3), 2.0);
    const auto result = relax_vertical_slope(*density, 2, 1.0, Eigen::MatrixXd::Ones(1, 1));
    CHECK(std::abs(result.b(0)) < 1e-8);
}

TEST_CASE("a tilted kernel moves the optimal vertical slope off zero")
{
    const auto density = homogeneous_convex(tilted_square(), 2.0);
    const auto result = relax_vertical_slope(*density, 2, 1.0, Eigen::MatrixXd::Ones(1, 1));
    // Quadratic in b: A + 2 b B + b^2 C with weight (2 - |xi_2|) over (-0.7, 1.3)^2.
    const double first = 0.6;
    const double second = (1.3 * 1.3 * 1.3 + 0.7 * 0.7 * 0.7) / 3.0;
    const double w0 = 4.0 - (1.3 * 1.3 + 0.7 * 0.7) / 2.0;
    const double w1 = 1.2 - (1.3 * 1.3 * 1.3 - 0.7 * 0.7 * 0.7) / 3.0;
    const double w2 = 2.0 * second - (std::pow(1.3, 4) + std::pow(0.7, 4)) / 4.0;
    const double A = second * w0;
    const double B = first * w1;
    const double C = 2.0 * w2;
    CHECK(result.converged);
    CHECK(result.b(0) == doctest::Approx(-B / C).epsilon(1e-6));
    CHECK(result.value == doctest::Approx(A - B * B / C).epsilon(1e-8));
}

TEST_CASE("slope relaxation rejects kernels without planar support bound")
{
    const auto density = homogeneous_convex(separable(Profile::gaussian(1.0), Profile::box(1.0), 0.0), 2.0);
    CHECK_THROWS_WITH_AS(relax_vertical_slope(*density, 2, 1.0, Eigen::MatrixXd::Ones(1, 1)),
                         doctest::Contains("kernel support"), ValidationError);
}
