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

#include "nlthin/cli.hpp"
#include "nlthin/densities.hpp"
#include "nlthin/error.hpp"
#include "nlthin/homogenization.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace nlthin;

TEST_CASE("theta closed form")
{
    CHECK(theta(1.0, 1.0) == doctest::Approx(3.0));
    CHECK(theta(0.5, 2.0) == doctest::Approx(6.0));
    CHECK(theta(4.0, 1.0) == doctest::Approx(4.0));
    CHECK(theta(0.0, 2.0) == doctest::Approx(8.0));
    CHECK(theta(std::numeric_limits<double>::infinity(), 2.0) == doctest::Approx(4.0));
    CHECK(theta(1e-9, 2.0) == doctest::Approx(theta(0.0, 2.0)).epsilon(1e-6));
    CHECK(theta(1e9, 2.0) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK_THROWS_AS(theta(1.0, -1.0), ValidationError);
}

TEST_CASE("theta is continuous across the support boundary")
{
    for (double r : {0.5, 1.0, 2.0})
    {
        const double kink = 2.0 / r;
        CHECK(theta(kink * (1.0 - 1e-10), r) == doctest::Approx(theta(kink * (1.0 + 1e-10), r)).epsilon(1e-8));
    }
}

TEST_CASE("planar moments and pure convolution oracles")
{
    const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
    CHECK(planar_moment(one, 1.0, 2.0) == doctest::Approx(2.0 / 3.0));
    CHECK(planar_moment(one, 2.0, 2.0) == doctest::Approx(16.0 / 3.0));
    Eigen::MatrixXd row(1, 2);
    row << 1.0, 0.0;
    CHECK(planar_moment(row, 1.0, 2.0) == doctest::Approx(std::numbers::pi / 4.0));

    CHECK(oracle_pure_conv(one, 1.0, 2.0, Regime::finite(1.0)) == doctest::Approx(2.0));
    CHECK(oracle_pure_conv(one, 2.0, 2.0, Regime::zero()) == doctest::Approx(128.0 / 3.0));
    CHECK(oracle_pure_conv(one, 2.0, 2.0, Regime::infinity()) == doctest::Approx(64.0 / 3.0));
    CHECK(oracle_pure_conv(Eigen::MatrixXd::Zero(1, 1), 2.0, 2.0, Regime::zero()) == 0.0);
}

TEST_CASE("Richardson extrapolation removes a first-order error")
{
    std::vector<LadderPoint> ladder;
    for (int n : {8, 16, 32})
    {
        LadderPoint p;
        p.resolution = n;
        p.spacing = 1.0 / n;
        p.value = 2.0 - 3.0 * p.spacing;
        ladder.push_back(p);
    }
    const auto [value, rate] = richardson(ladder);
    REQUIRE(value);
    REQUIRE(rate);
    CHECK(*value == doctest::Approx(2.0));
    CHECK(*rate == doctest::Approx(1.0));

    ladder[1].value = ladder[0].value;
    ladder[2].value = ladder[0].value;
    CHECK_FALSE(richardson(ladder).first);
}

TEST_CASE("aligned spacing puts the support boundary between shifts")
{
    const Index n = aligned_intervals(1.0, 0.125, 3);
    const double h = 1.0 / static_cast<double>(n);
    const double shifts = 0.125 / h;
    CHECK(std::abs(shifts - std::round(shifts)) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("indicator vertical factor is continuous at the transition")
{
    CHECK(indicator_vertical_factor(0.5, 0.125) == doctest::Approx(0.125));
    CHECK(indicator_vertical_factor(0.25, 0.25) == doctest::Approx(0.75));
    CHECK(indicator_vertical_factor(0.5, 0.25 - 1e-12) == doctest::Approx(indicator_vertical_factor(0.5, 0.25 + 1e-12)));
}

TEST_CASE("cell formula reproduces theta on a short ladder")
{
    CellOptions opts;
    opts.ladder = {8, 16, 32};
    const auto estimate = cell_formula_delta(*pure_convolution(1.0, 2.0), 2, 1.0, Eigen::MatrixXd::Ones(1, 1), opts);
    REQUIRE(estimate.ladder.size() == 3);
    for (std::size_t i = 1; i < estimate.ladder.size(); ++i)
    {
        CHECK(std::abs(estimate.ladder[i].value - 2.0) < std::abs(estimate.ladder[i - 1].value - 2.0));
    }
    CHECK(estimate.value == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("zero slope has zero homogenized density")
{
    CellOptions opts;
    opts.ladder = {8, 16};
    opts.extrapolate = false;
    const auto estimate = cell_formula_delta(*pure_convolution(1.0, 2.0), 2, 1.0, Eigen::MatrixXd::Zero(1, 1), opts);
    CHECK(estimate.value == 0.0);
}

TEST_CASE("regime formulas validate their densities")
{
    CellOptions opts;
    opts.ladder = {8};
    CHECK_THROWS_AS(cell_formula_zero(*rotation_example(0.05, 2.0), 3, Eigen::MatrixXd::Identity(3, 2), opts),
                    ValidationError);
    CHECK_THROWS_WITH_AS(cell_formula_infinity(*pure_convolution(1.0, 2.0), 2, Eigen::MatrixXd::Ones(1, 1), opts),
                         doctest::Contains("requires planar density"), ValidationError);
    CHECK_THROWS_AS(cell_formula_delta(*pure_convolution(1.0, 2.0), 2, 1.0, Eigen::MatrixXd::Ones(2, 2), opts),
                    ValidationError);
}

TEST_CASE("asymptotic minima are bounded by the affine energy")
{
    AsymptoticOptions opts;
    opts.R = {3.0, 6.0};
    opts.planar_cells = 3;
    opts.vertical_cells = 3;
    const auto points = asymptotic_formula(*pure_convolution(1.0, 2.0), 2, 1.0, Eigen::MatrixXd::Ones(1, 1), opts);
    REQUIRE(points.size() == 2);
    for (const auto& p : points)
    {
        CHECK(p.value > 0.0);
        CHECK(p.value < 2.0);
        CHECK(p.minimum == doctest::Approx(p.value * p.R));
    }
    CHECK(points[1].value > points[0].value);
}

TEST_CASE("gamma-min sweep with zero datum has zero minima")
{
    GammaMinSpec spec;
    spec.density = pure_convolution(1.0, 2.0);
    spec.M = Eigen::MatrixXd::Zero(1, 1);
    spec.eps = {0.25, 0.125};
    const auto table = gamma_min_sweep(spec);
    REQUIRE(table.rows.size() == 2);
    for (const auto& row : table.rows)
    {
        CHECK(row.value == 0.0);
        CHECK(row.gap == 0.0);
    }
}

TEST_CASE("gamma-min sweep approaches the oracle along each trajectory")
{
    for (auto trajectory : {Trajectory::constant_delta, Trajectory::gamma_is_eps_squared})
    {
        GammaMinSpec spec;
        spec.density = pure_convolution(1.0, 2.0);
        spec.M = Eigen::MatrixXd::Ones(1, 1);
        spec.trajectory = trajectory;
        spec.eps = {0.25, 0.125};
        const auto table = gamma_min_sweep(spec);
        REQUIRE(table.rows.size() == 2);
        CHECK(table.rows[1].gap < table.rows[0].gap);
        CHECK(table.rows[1].value < table.rows[1].oracle);
    }
    CHECK(trajectory_from_string("eps_is_gamma_squared") == Trajectory::eps_is_gamma_squared);
    CHECK_THROWS_AS(trajectory_from_string("sideways"), ValidationError);
}

TEST_CASE("scaling probe matches the indicator formula")
{
    ScalingProbeSpec spec;
    spec.indicator_pairs = {{0.5, 0.125}, {0.25, 0.25}};
    spec.singular_ratios = {4.0, 16.0};
    const auto table = scaling_probe(spec);
    CHECK(table.max_relative_error < 0.01);
    CHECK(table.fitted_exponent == doctest::Approx(-0.5).epsilon(0.1));
}
