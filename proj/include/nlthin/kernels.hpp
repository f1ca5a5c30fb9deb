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

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nlthin
{
    inline constexpr double unbounded = std::numeric_limits<double>::infinity();

    using XiRef = Eigen::Ref<const Eigen::VectorXd>;

    enum class KernelFamily
    {
        cylinder_indicator,
        mollifier_over_norm_p,
        separable,
        vertical_singular,
        shifted_cylinder,
        planar_cut,
        custom
    };

    std::string to_string(KernelFamily family);

    /// Declared lower bound psi >= lower_bound on the cylinder C_radius.
    struct Coercivity
    {
        double radius;
        double lower_bound;
    };

    /// One-dimensional profile used by separable kernels.
    struct Profile
    {
        enum class Shape
        {
            gaussian,
            box
        };

        Shape shape = Shape::box;
        double scale = 1.0;

        static Profile gaussian(double sigma) { return {Shape::gaussian, sigma}; }
        static Profile box(double half_width) { return {Shape::box, half_width}; }

        double operator()(double t) const;
        double support() const { return shape == Shape::box ? scale : unbounded; }
    };

    /// Structural description of a kernel, consumed by stencil construction and quadrature.
    struct KernelTraits
    {
        KernelFamily family = KernelFamily::custom;
        std::string label;
        /// Ambient dimension d; 0 when the formula applies in every dimension.
        int dim = 0;
        double planar_radius = unbounded;
        double vertical_halfheight = unbounded;
        /// psi depends on xi_alpha only through |xi_alpha|.
        bool planar_radial = true;
        /// psi(xi_alpha, -xi_d) == psi(xi_alpha, xi_d).
        bool vertical_even = true;
        /// Every axis is planar (no distinguished vertical axis).
        bool all_axes_planar = false;
        bool singular_at_vertical_zero = false;
        /// Discontinuities of the radial profile in |xi_alpha|.
        std::vector<double> radial_breaks;
        /// Discontinuities or singularities in xi_d.
        std::vector<double> vertical_breaks;
        std::optional<Coercivity> coercivity;
    };

    /// Interaction kernel psi with zero-order envelope rho.
    class Kernel
    {
    public:
        using Function = std::function<double(const XiRef&)>;
        using WeightedFunction = std::function<double(const XiRef&, double)>;

        Kernel(KernelTraits traits, Function psi, Function rho = {}, WeightedFunction weighted = {});

        double psi(const XiRef& xi) const { return m_psi(xi); }
        double operator()(const XiRef& xi) const { return m_psi(xi); }
        double rho(const XiRef& xi) const { return m_rho ? m_rho(xi) : 0.0; }
        bool has_rho() const { return static_cast<bool>(m_rho); }

        /// psi(xi) |xi|^p, evaluated so that a norm singularity of psi cancels exactly.
        double weighted(const XiRef& xi, double p) const;

        const KernelTraits& traits() const { return m_traits; }
        KernelFamily family() const { return m_traits.family; }
        const std::string& label() const { return m_traits.label; }
        int dim() const { return m_traits.dim; }

    private:
        KernelTraits m_traits;
        Function m_psi;
        Function m_rho;
        WeightedFunction m_weighted;
    };

    /// chi of the open cylinder C_r = B_r x (-r, r).
    Kernel cylinder_indicator(double r, int d = 0);
    /// phi(xi) |xi|^{-p} with phi the standard C_c^infinity bump on B_1, phi(0) = 1.
    Kernel mollifier_over_norm_p(double p, int d = 0);
    /// psi_planar(|xi_alpha|) psi_vertical(xi_d) |xi|^{-p}.
    Kernel separable(Profile planar, Profile vertical, double p, int d = 0);
    /// chi_{C_1}(xi) |xi_d|^{-beta}.
    Kernel vertical_singular(double beta, int d = 0);
    /// chi_{C_r}(xi - center e_d).
    Kernel shifted_cylinder(double r, double center, int d = 0);
    /// Restriction xi_alpha -> psi(xi_alpha, 0), a kernel on R^{d-1} with all axes planar.
    Kernel planar_cut(const Kernel& kernel);

    /// Volume of the unit ball in R^k.
    double unit_ball_volume(int k);
    /// Measure of the cylinder C_r in R^d.
    double cylinder_volume(int d, double r);

    /// Integral with a divergence verdict.
    struct IntegralEstimate
    {
        double value = 0.0;
        bool divergent = false;
        /// (location, contribution) pairs documenting a divergence.
        std::vector<std::pair<double, double>> witness;
    };

    struct MomentOptions
    {
        double relative_tolerance = 1e-7;
        int max_shells = 120;
    };

    /// Integral of psi |xi|^p over R^d.
    IntegralEstimate moment_p(const Kernel& kernel, double p, int d = 0, const MomentOptions& opts = {});
    /// Integral of psi |xi|^p + rho over {|xi_alpha| > r}.
    IntegralEstimate tail_moment(const Kernel& kernel, double p, double r, int d = 0,
                                 const MomentOptions& opts = {});
    /// Integral over xi_alpha (restricted to |xi_alpha| > tail_radius) of psi |xi|^p + rho at fixed xi_d.
    double vertical_slice(const Kernel& kernel, double p, double xi_d, double tail_radius = 0.0, int d = 0);

    struct SliceSupOptions
    {
        /// Uniform slice samples on each side of (0, 2).
        int base_samples = 64;
        /// Number of factor-2 refinements of the sample grid towards xi_d = 0.
        int refinements = 12;
        /// Growth of the supremum across the last two refinements that flags divergence.
        double growth_threshold = 1.5;
    };

    /// Supremum over sampled |xi_d| < 2 of the vertical slice integral.
    IntegralEstimate vertical_slice_sup(const Kernel& kernel, double p,
                                        std::optional<double> tail_radius = std::nullopt, int d = 0,
                                        const SliceSupOptions& opts = {});

    struct HypothesisEntry
    {
        std::string name;
        bool pass = false;
        double statistic = 0.0;
        double tolerance = 0.0;
        bool divergent = false;
        /// Radii r_eta found for each level of the eta ladder (H2, H4).
        std::vector<double> radii;
        std::vector<std::pair<double, double>> witness;
        std::string note;
    };

    struct HypothesisReport
    {
        std::string kernel;
        double p = 0.0;
        int dim = 0;
        std::vector<double> eta_ladder;
        std::vector<HypothesisEntry> entries;

        bool all_pass() const;
        const HypothesisEntry& entry(const std::string& name) const;
    };

    /// Audits (H0)-(H4) on fixed sample grids and a fixed eta ladder.
    HypothesisReport audit_hypotheses(const Kernel& kernel, double p, int d = 0);
}
