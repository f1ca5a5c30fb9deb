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

#pragma once

#include "nlthin/densities.hpp"
#include "nlthin/kernels.hpp"
#include "nlthin/solvers.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nlthin
{
    /// Limit regime of the ratio delta = eps / gamma.
    struct Regime
    {
        enum class Kind
        {
            finite,
            zero,
            infinity
        };
        Kind kind = Kind::finite;
        double delta = 1.0;

        static Regime finite(double delta) { return {Kind::finite, delta}; }
        static Regime zero() { return {Kind::zero, 0.0}; }
        static Regime infinity() { return {Kind::infinity, unbounded}; }
        std::string label() const;
    };

    /// (delta v 1)(r ^ 2/delta)(4 - delta (r ^ 2/delta)); 4r at delta = 0 and 4 at delta = infinity.
    double theta(double delta, double r);

    /// Integral of |M xi_alpha|^p over the planar ball B_r in R^{M.cols()}.
    double planar_moment(const Eigen::MatrixXd& M, double r, double p);

    /// Homogenized density of chi_{C_r} |z|^p: theta(regime, r) times planar_moment(M, r, p).
    double oracle_pure_conv(const Eigen::MatrixXd& M, double r, double p, const Regime& regime);

    struct LadderPoint
    {
        int resolution = 0;
        double spacing = 0.0;
        double value = 0.0;
        double runtime_s = 0.0;
        double grad_norm = 0.0;
        int iterations = 0;
        bool converged = false;
        std::vector<IterationRecord> history;
    };

    struct HomogenizationEstimate
    {
        Eigen::MatrixXd M;
        Regime regime;
        /// Extrapolated value when available, otherwise the finest ladder value.
        double value = 0.0;
        std::string grid;
        std::vector<LadderPoint> ladder;
        std::optional<double> extrapolated;
        std::optional<double> observed_rate;
        /// Optimal vertical slope of the zero regime.
        std::optional<Eigen::VectorXd> vertical_slope;
    };

    struct CellOptions
    {
        /// Nodes per unit length along each periodic axis.
        std::vector<int> ladder{16, 32, 64};
        SolverOptions solver;
        bool extrapolate = true;
        double slope_tol = 1e-8;
        int slope_max_iters = 100;
    };

    /// First-order Richardson extrapolation of a ladder in spacing, skipped when the observed
    /// rate of the last three points is undefined or below 1/2. Returns (value, rate).
    std::pair<std::optional<double>, std::optional<double>> richardson(const std::vector<LadderPoint>& ladder);

    /// Cell formula on Q_1 x I with vertical ratio delta.
    HomogenizationEstimate cell_formula_delta(const Density& density, int d, double delta, const Eigen::MatrixXd& M,
                                              const CellOptions& opts = {});

    /// 2 inf_b of the full-dimensional periodic cell problem on Q_1^d with slope (M | b).
    HomogenizationEstimate cell_formula_zero(const Density& density, int d, const Eigen::MatrixXd& M,
                                             const CellOptions& opts = {});

    /// 4 times the (d - 1)-dimensional periodic cell problem of a planar density.
    HomogenizationEstimate cell_formula_infinity(const Density& planar_density, int d, const Eigen::MatrixXd& M,
                                                 const CellOptions& opts = {});

    struct AsymptoticOptions
    {
        std::vector<double> R{4.0, 8.0, 16.0};
        /// Planar spacing 2 rho / (2N + 1) with rho the planar kernel radius.
        int planar_cells = 7;
        /// Vertical spacing chosen the same way against the vertical kernel extent.
        int vertical_cells = 7;
        double collar_radius = 1.0;
        SolverOptions solver;
    };

    struct AsymptoticPoint
    {
        double R = 0.0;
        double value = 0.0;
        double minimum = 0.0;
        double spacing = 0.0;
        double runtime_s = 0.0;
        double grad_norm = 0.0;
        bool converged = false;
        std::vector<IterationRecord> history;
    };

    /// Node-interval count of an axis of the given length whose spacing places the kernel
    /// boundary `reach` midway between two lattice shifts: spacing close to 2 reach / (2N + 1).
    Index aligned_intervals(double length, double reach, int half_cells);

    /// H_R = min over the lateral Dirichlet class on Q_R x I, divided by R^{d-1}.
    std::vector<AsymptoticPoint> asymptotic_formula(const Density& density, int d, double delta,
                                                    const Eigen::MatrixXd& M, const AsymptoticOptions& opts = {});

    struct ScalingRow
    {
        double eps = 0.0;
        double gamma = 0.0;
        /// Unscaled energy s(eps, gamma).
        double raw_energy = 0.0;
        /// Planar interaction integral of the test field.
        double planar_factor = 0.0;
        /// s / planar_factor.
        double vertical_factor = 0.0;
        /// Closed-form vertical factor (indicator rows) or the model (eps/gamma v 1)^{beta - 1} gamma.
        double predicted = 0.0;
        double ratio = 0.0;
    };

    struct ScalingProbeSpec
    {
        double p = 2.0;
        std::vector<std::pair<double, double>> indicator_pairs{{0.5, 0.125}, {0.5, 0.0625}, {0.25, 0.03125},
                                                               {0.125, 0.5}, {0.25, 0.25},  {0.125, 0.125}};
        /// Lattice steps per unit of xi.
        int planar_steps = 8;
        int vertical_steps = 64;
        double beta = 0.5;
        double singular_eps = 0.25;
        std::vector<double> singular_ratios{4.0, 16.0, 64.0};
        int singular_vertical_nodes = 33;
    };

    struct ScalingTable
    {
        std::vector<ScalingRow> indicator_rows;
        std::vector<ScalingRow> singular_rows;
        double max_relative_error = 0.0;
        double beta = 0.0;
        /// Least-squares slope of log(s / (gamma P)) against log(eps / gamma).
        double fitted_exponent = 0.0;
    };

    /// Closed-form vertical factor of the unit cylinder: 4 gamma^2 / eps if 2 gamma < eps, else 4 gamma - eps.
    double indicator_vertical_factor(double eps, double gamma);

    /// Energy scaling of the sinusoid u(x) = sin(2 pi x_1) on a film over the periodic unit interval.
    ScalingTable scaling_probe(const ScalingProbeSpec& spec = {});

    /// Solver settings of the rotation experiment: tolerance 1e-6, 40 iterations, 2 perturbed starts.
    SolverOptions rotation_solver_defaults();

    struct RotationSpec
    {
        double eta = 0.05;
        double p = 2.0;
        double delta = 0.5;
        double delta_invariance = 8.0;
        /// Nodes per unit length of the cell lattice.
        int resolution = 16;
        /// Vertical nodes per unit length for the invariance runs.
        int invariance_vertical_resolution = 4;
        int rotations = 3;
        /// Slope of the invariance runs.
        Eigen::MatrixXd invariance_M;
        SolverOptions solver = rotation_solver_defaults();
        std::uint64_t seed = 0;
    };

    struct RotationReport
    {
        double value_plus = 0.0;
        std::vector<double> value_plus_starts;
        /// 2 (2 - delta (1 + eta)) inf_b sum_i f_i(-e_i + b).
        double value_minus_lower_bound = 0.0;
        /// (1 - eta) 2^{2 + p/2}, the delta-uniform form of the same bound.
        double uniform_lower_bound = 0.0;
        /// 4 + 8 p eta (1 + 2 eta)^{p - 1}.
        double analytic_upper_bound = 0.0;
        Eigen::VectorXd optimal_b;
        bool asymmetric = false;
        std::vector<Eigen::MatrixXd> rotated_slopes;
        std::vector<double> invariance_values;
        double invariance_spread = 0.0;
        bool invariant = false;
    };

    RotationReport rotation_invariance_experiment(const RotationSpec& spec = {});
}
