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
#include "nlthin/homogenization.hpp"
#include "nlthin/solvers.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace nlthin
{
    /// Path of (eps, gamma) towards zero.
    enum class Trajectory
    {
        /// gamma = eps / delta.
        constant_delta,
        /// eps = gamma^2, so delta = gamma tends to zero.
        eps_is_gamma_squared,
        /// gamma = eps^2, so delta = 1 / eps grows without bound.
        gamma_is_eps_squared
    };

    std::string to_string(Trajectory trajectory);
    Trajectory trajectory_from_string(const std::string& tag);

    struct GammaMinSpec
    {
        DensityPtr density;
        int d = 2;
        /// Planar-affine boundary datum on A = (0, 1)^{d-1}.
        Eigen::MatrixXd M;
        Trajectory trajectory = Trajectory::constant_delta;
        /// Ratio eps / gamma for the constant-delta trajectory.
        double delta = 1.0;
        std::vector<double> eps{0.125, 0.0625, 0.03125};
        /// Planar spacing 2 r eps / (2N + 1) with r the planar kernel radius.
        int planar_cells = 7;
        int vertical_cells = 7;
        double collar_radius = 1.0;
        SolverOptions solver;
    };

    struct GammaMinRow
    {
        double eps = 0.0;
        double gamma = 0.0;
        double delta = 0.0;
        /// Discrete minimum divided by |A|.
        double value = 0.0;
        double oracle = 0.0;
        /// |value - oracle| / |oracle|, or |value| when the oracle vanishes.
        double gap = 0.0;
        double runtime_s = 0.0;
        double grad_norm = 0.0;
        int iterations = 0;
        bool converged = false;
        std::vector<IterationRecord> history;
    };

    struct GammaMinTable
    {
        Trajectory trajectory = Trajectory::constant_delta;
        Regime regime;
        std::vector<GammaMinRow> rows;
    };

    /// Minimizes the rescaled energy over the lateral Dirichlet class of the affine datum along
    /// the trajectory and compares min / |A| with the homogenized oracle of the pure-convolution
    /// density chi_{C_r} |z|^p.
    GammaMinTable gamma_min_sweep(const GammaMinSpec& spec);

    /// Runs the experiment command line; returns the process exit code.
    int run(int argc, const char* const* argv);
}
