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
#include "nlthin/energy.hpp"
#include "nlthin/lattice.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nlthin
{
    struct SolverOptions
    {
        /// Stop when the scaled gradient norm is at most tol_g * (1 + |value|).
        double tol_g = 1e-7;
        int max_iters = 20000;
        /// Perturbed starts in addition to the affine one; 0 selects 4 for non-convex densities.
        int multistart = 0;
        std::uint64_t seed = 0;
        /// Run 5 seeded restarts for convex densities and report their spread.
        bool certify = false;
        /// Amplitude of the random perturbations used by restarts.
        double perturbation = 0.5;
        /// Called with every accepted iterate (nodal values, m x N) of every start.
        std::function<void(const Eigen::MatrixXd&)> on_iterate;
    };

    struct IterationRecord
    {
        double value = 0.0;
        double step = 0.0;
        double grad_norm = 0.0;
    };

    struct MinimizeReport
    {
        explicit MinimizeReport(Field field_)
            : field(std::move(field_))
        {
        }

        /// For Dirichlet problems the minimizer itself; for periodic cells the corrector, the
        /// full map being slope * x + corrector.
        Field field;
        double value = 0.0;
        int iterations = 0;
        /// Gradient norm in the discrete L2 metric: |g| / sqrt(node measure).
        double grad_norm = 0.0;
        bool converged = false;
        std::vector<IterationRecord> history;
        /// Energy of the affine starting point; value never exceeds it.
        double affine_value = 0.0;
        /// Set for non-convex densities: value is only an upper bound of the discrete minimum.
        bool upper_bound = false;
        std::optional<std::string> warning;
        /// Final values of all starts (affine first).
        std::vector<double> start_values;
        /// Relative spread of the certification restarts around value.
        std::optional<double> certificate_spread;
        /// Affine part (m x dim) of periodic cells, empty for Dirichlet problems.
        Eigen::MatrixXd slope;
        /// Derivative of the cell value with respect to the affine part.
        Eigen::MatrixXd slope_gradient;
    };

    /// Lateral Dirichlet class: u = g(x_alpha) on every node whose planar distance to the
    /// lateral boundary is below collar_radius * eps, on all vertical layers.
    struct DirichletClassSpec
    {
        /// Planar-affine datum g(x_alpha) = M x_alpha (m x (d - 1)).
        Eigen::MatrixXd M;
        /// Tabulated planar datum; overrides M when set.
        std::function<Eigen::VectorXd(const Eigen::VectorXd&)> datum;
        double collar_radius = 1.0;

        Eigen::VectorXd boundary_value(const Eigen::VectorXd& planar) const;
    };

    enum class CellShape
    {
        /// Q_1 x I: planar axes periodic, vertical axis (-1, 1) free.
        slab,
        /// Q_1^k: every axis periodic with unit period.
        torus
    };

    /// Affine part (M | b) plus a periodic corrector with zero mean.
    struct PeriodicClassSpec
    {
        Eigen::MatrixXd M;
        std::optional<Eigen::VectorXd> b;
        CellShape cell = CellShape::slab;

        /// Full affine part for a lattice of the given dimension.
        Eigen::MatrixXd slope(int lattice_dim) const;
    };

    /// Nodes held fixed by the Dirichlet class.
    std::vector<bool> dirichlet_fixed_mask(const Lattice& lattice, double collar_width);

    MinimizeReport minimize_dirichlet(const Density& density, const ScaleParams& scale, const LatticePtr& lattice,
                                      const DirichletClassSpec& spec, const InteractionStencil& stencil,
                                      const SolverOptions& opts = {});

    /// Cell energy with unit interactions: the stencil must be built with eps = 1 and
    /// gamma = 1 / delta (delta = 1 for tori).
    MinimizeReport minimize_periodic_cell(const Density& density, double delta, const PeriodicClassSpec& spec,
                                          const LatticePtr& lattice, const InteractionStencil& stencil,
                                          const SolverOptions& opts = {});

    struct VectorMinimum
    {
        Eigen::VectorXd argmin;
        double value = 0.0;
        double grad_norm = 0.0;
        int iterations = 0;
        bool converged = false;
    };

    /// Value of a smooth convex objective; writes the gradient into `grad`.
    using VectorObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

    /// Barzilai-Borwein descent with Armijo backtracking on a finite-dimensional objective.
    VectorMinimum minimize_vector(const VectorObjective& objective, Eigen::VectorXd x0, double tol = 1e-8,
                                  int max_iters = 500);

    struct SlopeSearchOptions
    {
        double tol = 1e-8;
        int max_iters = 200;
        double quadrature_relative = 1e-10;
    };

    struct SlopeRelaxation
    {
        Eigen::VectorXd b;
        double value = 0.0;
        int iterations = 0;
        bool converged = false;
    };

    /// inf over b of (delta v 1) times the integral of (2 - delta |xi_d|)_+ f(xi, (M | b) xi),
    /// computed by adaptive quadrature in xi without a lattice.
    SlopeRelaxation relax_vertical_slope(const Density& density, int d, double delta, const Eigen::MatrixXd& M,
                                         const SlopeSearchOptions& opts = {});
}
