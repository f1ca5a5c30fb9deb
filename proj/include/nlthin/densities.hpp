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

#include "nlthin/kernels.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nlthin
{
    /// Structural metadata of an integrand f(x, xi, z).
    struct DensityTraits
    {
        bool convex_in_z = true;
        bool depends_on_x = false;
        bool depends_on_vertical_x = false;
        bool depends_on_vertical_xi = true;
        /// f(x, xi_alpha, -xi_d, z) == f(x, xi_alpha, xi_d, z).
        bool vertical_xi_even = true;
        /// Period lengths when f is periodic in x; x-independent densities leave it empty.
        std::optional<Eigen::VectorXd> periodic_cell;
    };

    /// p-growth envelope c1 (psi |z|^p - rho) <= f <= c2 (psi |z|^p + rho), with psi and rho
    /// carried by `kernel`.
    struct GrowthEnvelope
    {
        double c1 = 1.0;
        double c2 = 1.0;
        double p = 2.0;
        Kernel kernel;
    };

    /// Axis-aligned box used to steer random sampling towards small support components.
    struct SampleBox
    {
        Eigen::VectorXd center;
        Eigen::VectorXd half_width;
    };

    /// Pointwise integrand f(x, xi, z) >= 0. Built-in densities do not depend on x, so the
    /// batched interface takes a single xi and many difference quotients z (one per column).
    class Density
    {
    public:
        Density(std::string family, Kernel support, DensityTraits traits, std::optional<GrowthEnvelope> growth,
                double exponent);
        virtual ~Density() = default;

        /// values(j) = f(xi, z.col(j)); when grads is non-null its first z.cols() columns receive
        /// the z-gradients (subgradient 0 at kinks).
        virtual void evaluate(const XiRef& xi, const Eigen::Ref<const Eigen::MatrixXd>& z,
                              Eigen::Ref<Eigen::VectorXd> values, Eigen::MatrixXd* grads) const = 0;

        /// Required dimension of xi, or 0 when any dimension is accepted.
        virtual int required_dim() const { return 0; }
        /// Required codomain dimension m, or 0 when any is accepted.
        virtual int required_codomain() const { return 0; }
        /// Regions that random samplers should visit in addition to the support bounding box.
        virtual std::vector<SampleBox> sample_boxes(int d) const;

        double value(const XiRef& xi, const XiRef& z) const;
        Eigen::VectorXd grad_z(const XiRef& xi, const XiRef& z) const;

        const std::string& family() const { return m_family; }
        /// Kernel whose support contains the xi-support of f; stencils are built from it.
        const Kernel& support() const { return m_support; }
        const DensityTraits& traits() const { return m_traits; }
        const std::optional<GrowthEnvelope>& growth() const { return m_growth; }
        double exponent() const { return m_exponent; }

    private:
        std::string m_family;
        Kernel m_support;
        DensityTraits m_traits;
        std::optional<GrowthEnvelope> m_growth;
        double m_exponent;
    };

    using DensityPtr = std::shared_ptr<const Density>;

    /// chi_{C_r}(xi) |z|^p.
    DensityPtr pure_convolution(double r, double p);
    /// a(xi) |z|^p.
    DensityPtr homogeneous_convex(Kernel a, double p);
    /// chi_{C_1}(xi) |(|z|/|xi|) - 1|^p + |C_eta|^{-1} sum_{i=1,2} chi_{C_eta(e_i +- e_d)}(xi) |z - e_i|^p,
    /// with |C_eta| the measure of a single cylinder. Not convex in z.
    DensityPtr rotation_example(double eta, double p, int d = 3);
    /// The two bump terms of rotation_example alone (convex).
    DensityPtr rotation_bumps(double eta, double p, int d = 3);
    /// xi_alpha -> f(xi_alpha, 0, z): the restriction used by surface cell problems.
    DensityPtr planar_cut(DensityPtr density);

    struct GrowthViolation
    {
        Eigen::VectorXd xi;
        Eigen::VectorXd z;
        double value = 0.0;
        double lower = 0.0;
        double upper = 0.0;
    };

    struct GrowthReport
    {
        bool pass = true;
        int samples = 0;
        int violations = 0;
        std::vector<GrowthViolation> witnesses;
    };

    /// Samples (xi, z) and checks both growth inequalities. `envelope` overrides the stored one.
    GrowthReport growth_check(const Density& density, int n_samples, std::uint64_t seed, int d = 0, int m = 0,
                              const std::optional<GrowthEnvelope>& envelope = std::nullopt);
}
