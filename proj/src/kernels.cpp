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

#include "nlthin/kernels.hpp"

#include "nlthin/error.hpp"
#include "nlthin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nlthin
{
    namespace
    {
        double planar_norm(const XiRef& xi) { return xi.head(xi.size() - 1).norm(); }
        double vertical_part(const XiRef& xi) { return xi(xi.size() - 1); }

        std::string format_label(const std::string& family, const std::string& args)
        {
            return family + "(" + args + ")";
        }

        std::string num(double v)
        {
            std::ostringstream os;
            os << v;
            return os.str();
        }

        void require_positive(double v, const char* what)
        {
            if (!(v > 0.0) || !std::isfinite(v))
            {
                throw ValidationError(std::string(what) + " must be positive and finite");
            }
        }

        double bump(double norm_sq)
        {
            return norm_sq < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - norm_sq)) : 0.0;
        }

        int resolve_dim(const Kernel& kernel, int d)
        {
            const int dim = d > 0 ? d : kernel.dim();
            if (dim < 2)
            {
                throw ValidationError("kernel statistics need an ambient dimension d >= 2");
            }
            if (!kernel.traits().planar_radial || kernel.traits().all_axes_planar)
            {
                throw ValidationError("kernel statistics need a planar-radial thin-film kernel: " +
                                      kernel.label());
            }
            return dim;
        }

        double sphere_area(int k) { return k * unit_ball_volume(k); }

        const quadrature::Tolerance inner_tolerance{1e-14, 1e-10, 4000};
    }

    std::string to_string(KernelFamily family)
    {
        switch (family)
        {
        case KernelFamily::cylinder_indicator: return "cylinder_indicator";
        case KernelFamily::mollifier_over_norm_p: return "mollifier_over_norm_p";
        case KernelFamily::separable: return "separable";
        case KernelFamily::vertical_singular: return "vertical_singular";
        case KernelFamily::shifted_cylinder: return "shifted_cylinder";
        case KernelFamily::planar_cut: return "planar_cut";
        case KernelFamily::custom: return "custom";
        }
        return "custom";
    }

    double Profile::operator()(double t) const
    {
        switch (shape)
        {
        case Shape::gaussian: return std::exp(-0.5 * t * t / (scale * scale));
        case Shape::box: return std::abs(t) < scale ? 1.0 : 0.0;
        }
        return 0.0;
    }

    Kernel::Kernel(KernelTraits traits, Function psi, Function rho, WeightedFunction weighted)
        : m_traits(std::move(traits))
        , m_psi(std::move(psi))
        , m_rho(std::move(rho))
        , m_weighted(std::move(weighted))
    {
        if (!m_psi)
        {
            throw ValidationError("kernel requires an evaluation function");
        }
    }

    double Kernel::weighted(const XiRef& xi, double p) const
    {
        if (m_weighted)
        {
            return m_weighted(xi, p);
        }
        const double value = m_psi(xi);
        return value == 0.0 ? 0.0 : value * std::pow(xi.norm(), p);
    }

    double unit_ball_volume(int k)
    {
        return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
    }

    double cylinder_volume(int d, double r) { return unit_ball_volume(d - 1) * std::pow(r, d - 1) * 2.0 * r; }

    Kernel cylinder_indicator(double r, int d)
    {
        require_positive(r, "cylinder radius r");
        KernelTraits traits;
        traits.family = KernelFamily::cylinder_indicator;
        traits.label = format_label("cylinder_indicator", "r=" + num(r));
        traits.dim = d;
        traits.planar_radius = r;
        traits.vertical_halfheight = r;
        traits.radial_breaks = {r};
        traits.vertical_breaks = {-r, r};
        traits.coercivity = Coercivity{r, 1.0};
        return Kernel(std::move(traits), [r](const XiRef& xi) {
            return planar_norm(xi) < r && std::abs(vertical_part(xi)) < r ? 1.0 : 0.0;
        });
    }

    Kernel mollifier_over_norm_p(double p, int d)
    {
        require_positive(p, "mollifier exponent p");
        KernelTraits traits;
        traits.family = KernelFamily::mollifier_over_norm_p;
        traits.label = format_label("mollifier_over_norm_p", "p=" + num(p));
        traits.dim = d;
        traits.planar_radius = 1.0;
        traits.vertical_halfheight = 1.0;
        traits.coercivity = Coercivity{0.5, 0.3};
        auto psi = [p](const XiRef& xi) {
            const double n2 = xi.squaredNorm();
            const double b = bump(n2);
            if (b == 0.0)
            {
                return 0.0;
            }
            return n2 == 0.0 ? unbounded : b * std::pow(n2, -0.5 * p);
        };
        auto weighted = [p](const XiRef& xi, double q) {
            const double n2 = xi.squaredNorm();
            const double b = bump(n2);
            if (b == 0.0)
            {
                return 0.0;
            }
            return b * std::pow(n2, 0.5 * (q - p));
        };
        return Kernel(std::move(traits), psi, {}, weighted);
    }

    Kernel separable(Profile planar, Profile vertical, double p, int d)
    {
        require_positive(planar.scale, "planar profile scale");
        require_positive(vertical.scale, "vertical profile scale");
        if (!(p >= 0.0))
        {
            throw ValidationError("separable kernel exponent must be nonnegative");
        }
        KernelTraits traits;
        traits.family = KernelFamily::separable;
        auto shape_name = [](const Profile& f) {
            return std::string(f.shape == Profile::Shape::gaussian ? "gaussian" : "box") + ":" + num(f.scale);
        };
        traits.label = format_label("separable", shape_name(planar) + "," + shape_name(vertical) + ",p=" + num(p));
        traits.dim = d;
        traits.planar_radius = planar.support();
        traits.vertical_halfheight = vertical.support();
        if (planar.shape == Profile::Shape::box)
        {
            traits.radial_breaks = {planar.scale};
        }
        if (vertical.shape == Profile::Shape::box)
        {
            traits.vertical_breaks = {-vertical.scale, vertical.scale};
        }
        const double r0 = 0.5 * std::min({1.0, planar.support(), vertical.support()});
        traits.coercivity =
            Coercivity{r0, 0.5 * planar(r0) * vertical(r0) * std::pow(r0 * std::sqrt(2.0), -p)};
        auto psi = [planar, vertical, p](const XiRef& xi) {
            const double v = planar(planar_norm(xi)) * vertical(vertical_part(xi));
            if (v == 0.0)
            {
                return 0.0;
            }
            const double n = xi.norm();
            return n == 0.0 ? unbounded : v * std::pow(n, -p);
        };
        auto weighted = [planar, vertical, p](const XiRef& xi, double q) {
            const double v = planar(planar_norm(xi)) * vertical(vertical_part(xi));
            return v == 0.0 ? 0.0 : v * std::pow(xi.norm(), q - p);
        };
        return Kernel(std::move(traits), psi, {}, weighted);
    }

    Kernel vertical_singular(double beta, int d)
    {
        if (!(beta >= 0.0) || !std::isfinite(beta))
        {
            throw ValidationError("vertical singularity exponent beta must be nonnegative");
        }
        KernelTraits traits;
        traits.family = KernelFamily::vertical_singular;
        traits.label = format_label("vertical_singular", "beta=" + num(beta));
        traits.dim = d;
        traits.planar_radius = 1.0;
        traits.vertical_halfheight = 1.0;
        traits.radial_breaks = {1.0};
        traits.vertical_breaks = {-1.0, 0.0, 1.0};
        traits.singular_at_vertical_zero = beta > 0.0;
        traits.coercivity = Coercivity{1.0, 1.0};
        return Kernel(std::move(traits), [beta](const XiRef& xi) {
            const double t = std::abs(vertical_part(xi));
            if (!(planar_norm(xi) < 1.0 && t < 1.0))
            {
                return 0.0;
            }
            return beta == 0.0 ? 1.0 : std::pow(t, -beta);
        });
    }

    Kernel shifted_cylinder(double r, double center, int d)
    {
        require_positive(r, "cylinder radius r");
        KernelTraits traits;
        traits.family = KernelFamily::shifted_cylinder;
        traits.label = format_label("shifted_cylinder", "r=" + num(r) + ",center=" + num(center));
        traits.dim = d;
        traits.planar_radius = r;
        traits.vertical_halfheight = std::abs(center) + r;
        traits.vertical_even = center == 0.0;
        traits.radial_breaks = {r};
        traits.vertical_breaks = {center - r, center + r};
        return Kernel(std::move(traits), [r, center](const XiRef& xi) {
            return planar_norm(xi) < r && std::abs(vertical_part(xi) - center) < r ? 1.0 : 0.0;
        });
    }

    Kernel planar_cut(const Kernel& kernel)
    {
        KernelTraits traits;
        traits.family = KernelFamily::planar_cut;
        traits.label = format_label("planar_cut", kernel.label());
        traits.dim = kernel.dim() > 0 ? kernel.dim() - 1 : 0;
        traits.planar_radius = kernel.traits().planar_radius;
        traits.vertical_halfheight = kernel.traits().planar_radius;
        traits.planar_radial = kernel.traits().planar_radial;
        traits.all_axes_planar = true;
        traits.radial_breaks = kernel.traits().radial_breaks;
        auto lift = [](const XiRef& xi) {
            Eigen::VectorXd full = Eigen::VectorXd::Zero(xi.size() + 1);
            full.head(xi.size()) = xi;
            return full;
        };
        auto psi = [kernel, lift](const XiRef& xi) { return kernel.psi(lift(xi)); };
        Kernel::Function rho;
        if (kernel.has_rho())
        {
            rho = [kernel, lift](const XiRef& xi) { return kernel.rho(lift(xi)); };
        }
        auto weighted = [kernel, lift](const XiRef& xi, double p) { return kernel.weighted(lift(xi), p); };
        return Kernel(std::move(traits), psi, rho, weighted);
    }

    namespace
    {
        /// Integrand of the planar slice: psi |xi|^p (+ rho) at xi = (rho e_1, xi_d).
        struct SliceIntegrand
        {
            const Kernel& kernel;
            int d;
            double p;
            double xi_d;
            bool with_rho;
            double area;

            double operator()(double radius) const
            {
                Eigen::VectorXd xi = Eigen::VectorXd::Zero(d);
                xi(0) = radius;
                xi(d - 1) = xi_d;
                double v = kernel.weighted(xi, p);
                if (with_rho)
                {
                    v += kernel.rho(xi);
                }
                return v == 0.0 ? 0.0 : area * std::pow(radius, d - 2) * v;
            }
        };

        /// Accumulates shell contributions until the geometric tail is negligible.
        class ShellSeries
        {
        public:
            ShellSeries(double relative_tolerance, int max_shells)
                : m_tol(relative_tolerance)
                , m_max(max_shells)
            {
            }

            /// Returns true once the series is resolved (converged or divergent).
            bool add(double location, double contribution, double base)
            {
                m_sum += contribution;
                m_witness.emplace_back(location, contribution);
                if (m_witness.size() > 8)
                {
                    m_witness.erase(m_witness.begin());
                }
                const bool growing = m_last >= 0.0 && contribution >= m_last && contribution > 0.0;
                m_growing = growing ? m_growing + 1 : 0;
                if (contribution == 0.0 && m_last == 0.0)
                {
                    m_done = true;
                }
                else if (m_last > 0.0 && contribution < m_last)
                {
                    const double q = contribution / m_last;
                    const double tail = contribution * q / (1.0 - q);
                    if (tail <= m_tol * std::abs(base + m_sum))
                    {
                        m_sum += tail;
                        m_done = true;
                    }
                }
                m_last = contribution;
                ++m_count;
                if (!m_done && (m_growing >= 6 || m_count >= m_max))
                {
                    m_divergent = true;
                    m_done = true;
                }
                return m_done;
            }

            double sum() const { return m_sum; }
            bool divergent() const { return m_divergent; }
            const std::vector<std::pair<double, double>>& witness() const { return m_witness; }

        private:
            double m_tol;
            int m_max;
            double m_sum = 0.0;
            double m_last = -1.0;
            int m_count = 0;
            int m_growing = 0;
            bool m_done = false;
            bool m_divergent = false;
            std::vector<std::pair<double, double>> m_witness;
        };

        /// Integral over [a, b] (b may be unbounded) with optional integrable singularity at a,
        /// using dyadic shells towards the singularity and towards infinity.
        template <typename F>
        IntegralEstimate integrate_axis(F&& g, double a, double b, std::vector<double> breaks,
                                        bool singular_at_a, const MomentOptions& opts,
                                        const quadrature::Tolerance& tol)
        {
            IntegralEstimate out;
            if (!(b > a))
            {
                return out;
            }
            std::sort(breaks.begin(), breaks.end());
            breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double t) { return !(t > a && t < b); }),
                         breaks.end());
            double start = a;
            if (singular_at_a)
            {
                const double first = breaks.empty() ? (std::isfinite(b) ? b : a + 1.0) : breaks.front();
                const double width = first - a;
                ShellSeries shells(opts.relative_tolerance, opts.max_shells);
                double rest = 0.0;
                for (int k = 0;; ++k)
                {
                    const double hi = a + width * std::ldexp(1.0, -k);
                    const double lo = a + width * std::ldexp(1.0, -k - 1);
                    const double piece = quadrature::integrate(g, lo, hi, tol).value;
                    if (shells.add(lo - a, piece, rest))
                    {
                        break;
                    }
                }
                out.value += shells.sum();
                if (shells.divergent())
                {
                    out.divergent = true;
                    out.witness = shells.witness();
                }
                start = first;
            }
            const double finite_end = std::isfinite(b) ? b : std::max({start + 1.0, breaks.empty() ? start : breaks.back(), 1.0});
            out.value += quadrature::integrate_piecewise(g, start, finite_end, breaks, tol).value;
            if (!std::isfinite(b))
            {
                ShellSeries shells(opts.relative_tolerance, opts.max_shells);
                const double base = out.value;
                for (int k = 0;; ++k)
                {
                    const double lo = finite_end * std::ldexp(1.0, k);
                    const double hi = 2.0 * lo;
                    const double piece = quadrature::integrate(g, lo, hi, tol).value;
                    if (shells.add(hi, piece, base))
                    {
                        break;
                    }
                }
                out.value += shells.sum();
                if (shells.divergent())
                {
                    out.divergent = true;
                    out.witness = shells.witness();
                }
            }
            return out;
        }

        double slice_value(const Kernel& kernel, int d, double p, double xi_d, double lower, bool with_rho)
        {
            const double upper = kernel.traits().planar_radius;
            if (lower >= upper)
            {
                return 0.0;
            }
            SliceIntegrand integrand{kernel, d, p, xi_d, with_rho, sphere_area(d - 1)};
            MomentOptions opts;
            opts.relative_tolerance = 1e-10;
            const auto est =
                integrate_axis(integrand, std::max(lower, 0.0), upper, kernel.traits().radial_breaks, false, opts,
                               inner_tolerance);
            return est.divergent ? unbounded : est.value;
        }

        IntegralEstimate vertical_integral(const Kernel& kernel, int d, double p, double lower, bool with_rho,
                                           const MomentOptions& opts)
        {
            const auto& traits = kernel.traits();
            const double height = traits.vertical_halfheight;
            quadrature::Tolerance tol{1e-14, 0.1 * opts.relative_tolerance, 4000};
            IntegralEstimate total;
            for (double sign : {1.0, -1.0})
            {
                std::vector<double> breaks;
                for (double t : traits.vertical_breaks)
                {
                    if (sign * t > 0.0)
                    {
                        breaks.push_back(sign * t);
                    }
                }
                auto g = [&](double t) { return slice_value(kernel, d, p, sign * t, lower, with_rho); };
                const auto half =
                    integrate_axis(g, 0.0, height, breaks, traits.singular_at_vertical_zero, opts, tol);
                total.value += half.value;
                if (half.divergent)
                {
                    total.divergent = true;
                    total.witness = half.witness;
                }
            }
            if (total.divergent)
            {
                total.value = unbounded;
            }
            return total;
        }
    }

    IntegralEstimate moment_p(const Kernel& kernel, double p, int d, const MomentOptions& opts)
    {
        return vertical_integral(kernel, resolve_dim(kernel, d), p, 0.0, false, opts);
    }

    IntegralEstimate tail_moment(const Kernel& kernel, double p, double r, int d, const MomentOptions& opts)
    {
        return vertical_integral(kernel, resolve_dim(kernel, d), p, std::max(r, 0.0), true, opts);
    }

    double vertical_slice(const Kernel& kernel, double p, double xi_d, double tail_radius, int d)
    {
        return slice_value(kernel, resolve_dim(kernel, d), p, xi_d, tail_radius, true);
    }

    IntegralEstimate vertical_slice_sup(const Kernel& kernel, double p, std::optional<double> tail_radius, int d,
                                        const SliceSupOptions& opts)
    {
        const int dim = resolve_dim(kernel, d);
        const double lower = tail_radius.value_or(0.0);
        auto slice = [&](double t) { return slice_value(kernel, dim, p, t, lower, true); };

        const double step = 2.0 / opts.base_samples;
        double sup = 0.0;
        for (int j = 0; j < opts.base_samples; ++j)
        {
            const double t = (j + 0.5) * step;
            sup = std::max({sup, slice(t), slice(-t)});
        }
        std::vector<double> level_sup{sup};
        IntegralEstimate out;
        for (int k = 1; k <= opts.refinements; ++k)
        {
            const double t = 0.5 * step * std::ldexp(1.0, -k);
            const double v = std::max(slice(t), slice(-t));
            out.witness.emplace_back(t, v);
            sup = std::max(sup, v);
            level_sup.push_back(sup);
        }
        out.value = sup;
        const std::size_t n = level_sup.size();
        if (!std::isfinite(sup))
        {
            out.divergent = true;
        }
        else if (n >= 3 && level_sup[n - 3] > 0.0 && level_sup[n - 1] / level_sup[n - 3] > opts.growth_threshold)
        {
            out.divergent = true;
        }
        return out;
    }

    bool HypothesisReport::all_pass() const
    {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
    }

    const HypothesisEntry& HypothesisReport::entry(const std::string& name) const
    {
        for (const auto& e : entries)
        {
            if (e.name == name)
            {
                return e;
            }
        }
        throw ValidationError("unknown hypothesis " + name);
    }

    namespace
    {
        HypothesisEntry audit_coercivity(const Kernel& kernel, int d)
        {
            HypothesisEntry h;
            h.name = "H0";
            const auto& coercivity = kernel.traits().coercivity;
            if (!coercivity)
            {
                h.note = "no coercivity pair declared";
                return h;
            }
            const double r0 = coercivity->radius;
            const int n = 16;
            const double step = 2.0 * r0 / n;
            double lowest = unbounded;
            std::vector<int> idx(d, 0);
            Eigen::VectorXd xi(d);
            while (true)
            {
                for (int a = 0; a < d; ++a)
                {
                    xi(a) = -r0 + (idx[a] + 0.5) * step;
                }
                if (xi.head(d - 1).norm() < r0)
                {
                    lowest = std::min(lowest, kernel.psi(xi));
                }
                int a = d - 1;
                while (a >= 0 && ++idx[a] == n)
                {
                    idx[a--] = 0;
                }
                if (a < 0)
                {
                    break;
                }
            }
            h.statistic = lowest;
            h.tolerance = coercivity->lower_bound;
            h.pass = lowest >= coercivity->lower_bound;
            h.note = "certified on a " + std::to_string(n) + "-point-per-axis sample grid of C_r0, r0 = " + num(r0);
            return h;
        }

        std::vector<double> radius_ladder()
        {
            std::vector<double> radii{0.0};
            for (int j = 0; j <= 20; ++j)
            {
                radii.push_back(std::ldexp(0.125, j));
            }
            return radii;
        }

        template <typename Statistic>
        HypothesisEntry audit_decay(const char* name, const std::vector<double>& etas, Statistic&& statistic)
        {
            HypothesisEntry h;
            h.name = name;
            h.tolerance = etas.back();
            const auto radii = radius_ladder();
            std::size_t next = 0;
            for (double eta : etas)
            {
                bool found = false;
                for (; next < radii.size(); ++next)
                {
                    const double v = statistic(radii[next]);
                    if (v < eta)
                    {
                        h.radii.push_back(radii[next]);
                        h.witness.emplace_back(radii[next], v);
                        found = true;
                        break;
                    }
                }
                if (!found)
                {
                    h.note = "no radius up to " + num(radii.back()) + " brings the tail below " + num(eta);
                    return h;
                }
            }
            h.statistic = h.radii.back();
            h.pass = true;
            return h;
        }
    }

    HypothesisReport audit_hypotheses(const Kernel& kernel, double p, int d)
    {
        const int dim = resolve_dim(kernel, d);
        HypothesisReport report;
        report.kernel = kernel.label();
        report.p = p;
        report.dim = dim;
        report.eta_ladder = {1e-1, 1e-2, 1e-3, 1e-4};

        report.entries.push_back(audit_coercivity(kernel, dim));

        const auto moment = moment_p(kernel, p, dim);
        HypothesisEntry h1;
        h1.name = "H1";
        h1.statistic = moment.value;
        h1.tolerance = 1e-4;
        h1.divergent = moment.divergent;
        h1.witness = moment.witness;
        h1.pass = !moment.divergent && std::isfinite(moment.value);
        report.entries.push_back(h1);

        auto h2 = audit_decay("H2", report.eta_ladder, [&](double r) {
            const auto t = tail_moment(kernel, p, r, dim);
            return t.divergent ? unbounded : t.value;
        });
        report.entries.push_back(h2);

        const auto slice_sup = vertical_slice_sup(kernel, p, std::nullopt, dim);
        HypothesisEntry h3;
        h3.name = "H3";
        h3.statistic = slice_sup.value;
        h3.tolerance = SliceSupOptions{}.growth_threshold;
        h3.divergent = slice_sup.divergent;
        h3.witness = slice_sup.witness;
        h3.pass = !slice_sup.divergent;
        if (slice_sup.divergent)
        {
            h3.note = "divergent slice sup";
        }
        report.entries.push_back(h3);

        auto h4 = audit_decay("H4", report.eta_ladder, [&](double r) {
            const auto s = vertical_slice_sup(kernel, p, r, dim);
            return s.divergent ? unbounded : s.value;
        });
        report.entries.push_back(h4);
        return report;
    }
}
