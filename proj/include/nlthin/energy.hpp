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
#include "nlthin/lattice.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace nlthin
{
    /// Horizon eps, half-thickness gamma and their ratio delta = eps / gamma.
    class ScaleParams
    {
    public:
        /// Positive scales; unit-interaction cell problems use eps = 1 and gamma = 1 / delta.
        ScaleParams(double eps, double gamma);

        /// Thin-film scales, eps and gamma in (0, 1].
        static ScaleParams thin_film(double eps, double gamma);
        /// Unit interactions with vertical ratio delta: eps = 1, gamma = 1 / delta.
        static ScaleParams unit_cell(double delta);

        double eps() const { return m_eps; }
        double gamma() const { return m_gamma; }
        double delta() const { return m_delta; }
        /// max(eps / gamma^2, 1 / gamma).
        double prefactor_physical() const;
        /// max(eps / gamma, 1).
        double prefactor_rescaled() const;

    private:
        double m_eps;
        double m_gamma;
        double m_delta;
    };

    struct OffsetTerm
    {
        std::vector<int> offset;
        Eigen::VectorXd xi;
        double weight = 0.0;
        /// weight * sum_x c(x) f(xi, D u(x)).
        double partial = 0.0;
    };

    /// total = prefactor * node_measure * sum of partials.
    struct EnergyBreakdown
    {
        double total = 0.0;
        double prefactor = 1.0;
        double node_measure = 1.0;
        std::vector<OffsetTerm> per_offset;
    };

    /// Global cap on worker threads used by energy evaluation (default 1).
    void set_thread_count(int threads);
    int thread_count();

    struct InteractionOptions
    {
        /// Affine part A (m x dim): differences gain A * (k .* h), the unwrapped displacement.
        const Eigen::MatrixXd* slope = nullptr;
        const PlanarRegion* region = nullptr;
        bool gradient = false;
        bool slope_gradient = false;
    };

    /// Raw stencil sums S = sum_xi w sum_x c(x) f(xi, (u(x + k) - u(x) + A k h) / eps) and their
    /// derivatives with respect to the nodal values and to A.
    struct InteractionResult
    {
        std::vector<double> partials;
        double sum = 0.0;
        Eigen::MatrixXd gradient;
        Eigen::MatrixXd slope_gradient;
    };

    InteractionResult interaction_terms(const Lattice& lattice, const Eigen::MatrixXd& values, const Density& density,
                                        const InteractionStencil& stencil, double eps,
                                        const InteractionOptions& opts = {});

    /// Rescaled energy on omega x I; the localized energy on region x I when a region is given.
    EnergyBreakdown energy_rescaled(const Field& u, const Density& density, const ScaleParams& scale,
                                    const InteractionStencil& stencil,
                                    const std::optional<PlanarRegion>& region = std::nullopt);

    /// Energy on the physical film omega x (-gamma, gamma); the stencil is the one built on the
    /// rescaled lattice with the same node counts.
    EnergyBreakdown energy_physical(const Field& v, const Density& density, const ScaleParams& scale,
                                    const InteractionStencil& stencil);

    /// Rescaled energy restricted to interactions with |xi_alpha| < T.
    EnergyBreakdown energy_truncated(const Field& u, const Density& density, const ScaleParams& scale,
                                     const InteractionStencil& stencil, double T);

    /// Gradient of energy_rescaled with respect to the nodal values, zero on masked nodes.
    Field gradient_rescaled(const Field& u, const Density& density, const ScaleParams& scale,
                            const InteractionStencil& stencil, const std::optional<PlanarRegion>& region = std::nullopt,
                            const std::vector<bool>& fixed_mask = {});

    /// The purely convolutive energy chi_{C_r} |z|^p written three ways: over xi, over node
    /// pairs (x, y), and over lattice displacements z = y - x.
    struct ConvolutionForms
    {
        double xi_form = 0.0;
        double xy_form = 0.0;
        double z_form = 0.0;
    };

    ConvolutionForms conv_energy_forms_check(const Field& u, double r, const ScaleParams& scale, double p = 2.0);
}
