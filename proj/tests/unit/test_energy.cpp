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

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nlthin;

namespace
{
    LatticePtr film_lattice(Index planar, Index vertical, double half_thickness = 1.0, bool periodic = false)
    {
        CylinderSpec spec;
        spec.half_thickness = half_thickness;
        const std::vector<Index> counts{planar, vertical};
        return std::make_shared<Lattice>(build_lattice(spec, counts, {periodic, false}));
    }

    Field smooth_field(const LatticePtr& lattice, int m)
    {
        return Field::from_function(lattice, m, [m](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(m);
            for (int c = 0; c < m; ++c)
            {
                v(c) = std::sin(2.0 * (c + 1) * x(0) + 0.3) + 0.5 * x(1) * x(1) * (c + 1) - 0.2 * x(0) * x(1);
            }
            return v;
        });
    }

    Field random_field(const LatticePtr& lattice, int m, std::mt19937_64& rng)
    {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        return Field(lattice, Eigen::MatrixXd::NullaryExpr(m, lattice->size(), [&]() { return u(rng); }));
    }
}

TEST_CASE("scale parameters and prefactors")
{
    const auto s = ScaleParams::thin_film(0.25, 0.5);
    CHECK(s.delta() == doctest::Approx(0.5));
    CHECK(s.prefactor_rescaled() == doctest::Approx(1.0));
    CHECK(s.prefactor_physical() == doctest::Approx(2.0));
    const auto t = ScaleParams::thin_film(0.5, 0.125);
    CHECK(t.prefactor_rescaled() == doctest::Approx(4.0));
    CHECK(t.prefactor_physical() == doctest::Approx(32.0));
    CHECK_THROWS_AS(ScaleParams::thin_film(1.5, 0.5), ValidationError);
    CHECK_THROWS_AS(ScaleParams(0.0, 0.5), ValidationError);
    const auto cell = ScaleParams::unit_cell(0.25);
    CHECK(cell.eps() == 1.0);
    CHECK(cell.gamma() == doctest::Approx(4.0));
}

TEST_CASE("physical and rescaled energies coincide")
{
    const auto density = pure_convolution(1.0, 2.5);
    for (const auto& [eps, gamma] : std::vector<std::pair<double, double>>{{0.25, 0.5}, {0.5, 0.125}, {0.25, 0.25}})
    {
        const auto scale = ScaleParams::thin_film(eps, gamma);
        const auto rescaled = film_lattice(33, 17);
        const auto physical = film_lattice(33, 17, gamma);
        const auto u = smooth_field(rescaled, 2);
        const Field v(physical, u.values());
        const auto stencil = build_stencil(density->support(), eps, gamma, *rescaled);
        const double a = energy_rescaled(u, *density, scale, stencil).total;
        const double b = energy_physical(v, *density, scale, stencil).total;
        CHECK(a > 0.0);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }
}

TEST_CASE("physical energy rejects a lattice that is not the vertical rescaling")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.5);
    const auto rescaled = film_lattice(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.5, *rescaled);
    const Field wrong = Field::zeros(film_lattice(17, 9, 0.7), 1);
    CHECK_THROWS_AS(energy_physical(wrong, *density, scale, stencil), ValidationError);
}

TEST_CASE("three forms of the convolution energy agree")
{
    for (const auto& [eps, gamma, p] :
         std::vector<std::tuple<double, double, double>>{{0.25, 0.5, 2.0}, {0.5, 0.125, 3.0}, {0.125, 0.0625, 2.0}})
    {
        const auto lattice = film_lattice(25, 13);
        const auto u = smooth_field(lattice, 1);
        const auto forms = conv_energy_forms_check(u, 1.0, ScaleParams::thin_film(eps, gamma), p);
        CHECK(forms.xi_form > 0.0);
        CHECK(std::abs(forms.xy_form - forms.xi_form) <= 1e-12 * forms.xi_form);
        CHECK(std::abs(forms.z_form - forms.xi_form) <= 1e-12 * forms.xi_form);
    }
}

TEST_CASE("per-offset partials sum to the total")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = film_lattice(17, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    const auto breakdown = energy_rescaled(smooth_field(lattice, 1), *density, scale, stencil);
    REQUIRE(breakdown.per_offset.size() == stencil.size());
    double sum = 0.0;
    for (const auto& term : breakdown.per_offset)
    {
        CHECK(term.partial >= 0.0);
        sum += term.partial;
    }
    CHECK(breakdown.total == doctest::Approx(breakdown.prefactor * breakdown.node_measure * sum));
}

TEST_CASE("truncated energies increase with the radius and reach the full energy")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = film_lattice(33, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    const auto u = smooth_field(lattice, 2);
    double previous = 0.0;
    for (double T : {0.0, 0.1, 0.25, 0.4, 0.6, 0.8, 1.0, 2.0})
    {
        const double value = energy_truncated(u, *density, scale, stencil, T).total;
        CHECK(value >= previous);
        previous = value;
    }
    CHECK(previous == doctest::Approx(energy_rescaled(u, *density, scale, stencil).total));
}

TEST_CASE("gradient matches central differences")
{
    std::mt19937_64 rng(2024);
    const auto density = homogeneous_convex(mollifier_over_norm_p(2.0), 3.0);
    const auto scale = ScaleParams::thin_film(0.5, 0.25);
    const auto lattice = film_lattice(13, 7);
    const auto stencil = build_stencil(density->support(), 0.5, 0.25, *lattice);
    const auto u = random_field(lattice, 2, rng);
    const auto g = gradient_rescaled(u, *density, scale, stencil).values();
    std::uniform_int_distribution<Index> node(0, lattice->size() - 1);
    std::uniform_int_distribution<int> comp(0, 1);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s)
    {
        const Index i = node(rng);
        const int c = comp(rng);
        const double h = 1e-5;
        Eigen::MatrixXd plus = u.values();
        Eigen::MatrixXd minus = u.values();
        plus(c, i) += h;
        minus(c, i) -= h;
        const double fd = (energy_rescaled(Field(lattice, plus), *density, scale, stencil).total -
                           energy_rescaled(Field(lattice, minus), *density, scale, stencil).total) /
                          (2.0 * h);
        worst = std::max(worst, std::abs(fd - g(c, i)) / std::max({std::abs(g(c, i)), std::abs(fd), 1e-8}));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("masked gradient vanishes on fixed nodes")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = film_lattice(9, 5);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    std::vector<bool> mask(lattice->size(), false);
    mask[0] = mask[7] = true;
    const auto g = gradient_rescaled(smooth_field(lattice, 1), *density, scale, stencil, std::nullopt, mask);
    CHECK(g.values()(0, 0) == 0.0);
    CHECK(g.values()(0, 7) == 0.0);
}

TEST_CASE("convex densities give convex energies")
{
    std::mt19937_64 rng(99);
    const auto density = pure_convolution(1.0, 2.5);
    const auto scale = ScaleParams::thin_film(0.5, 0.5);
    const auto lattice = film_lattice(9, 5);
    const auto stencil = build_stencil(density->support(), 0.5, 0.5, *lattice);
    for (int s = 0; s < 20; ++s)
    {
        const auto u = random_field(lattice, 1, rng);
        const auto v = random_field(lattice, 1, rng);
        const Field mid(lattice, 0.5 * (u.values() + v.values()));
        const double fu = energy_rescaled(u, *density, scale, stencil).total;
        const double fv = energy_rescaled(v, *density, scale, stencil).total;
        const double fm = energy_rescaled(mid, *density, scale, stencil).total;
        CHECK(fm <= 0.5 * (fu + fv) * (1.0 + 1e-12));
    }
}

TEST_CASE("localized energy is bounded by the full energy and additive in the region")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = film_lattice(33, 9);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    const auto u = smooth_field(lattice, 1);
    const double full = energy_rescaled(u, *density, scale, stencil).total;
    const double local = energy_rescaled(u, *density, scale, stencil, PlanarRegion{{Interval{0.25, 0.75}}}).total;
    CHECK(local > 0.0);
    CHECK(local < full);
}

TEST_CASE("threaded evaluation matches the serial one")
{
    const auto density = pure_convolution(1.0, 3.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = film_lattice(33, 17);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    const auto u = smooth_field(lattice, 2);
    set_thread_count(1);
    const double serial = energy_rescaled(u, *density, scale, stencil).total;
    set_thread_count(3);
    const double threaded = energy_rescaled(u, *density, scale, stencil).total;
    const double again = energy_rescaled(u, *density, scale, stencil).total;
    set_thread_count(1);
    CHECK(threaded == doctest::Approx(serial).epsilon(1e-13));
    CHECK(threaded == again);
}

TEST_CASE("non-finite energies raise a numerical error")
{
    const auto density = pure_convolution(1.0, 2.0);
    const auto scale = ScaleParams::thin_film(0.25, 0.25);
    const auto lattice = film_lattice(9, 5);
    const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(1, lattice->size());
    values(0, 3) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(energy_rescaled(Field(lattice, values), *density, scale, stencil), NumericalError);
}
