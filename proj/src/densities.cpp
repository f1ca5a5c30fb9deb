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

#include "nlthin/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace nlthin
{
    using Index = Eigen::Index;

    Density::Density(std::string family, Kernel support, DensityTraits traits, std::optional<GrowthEnvelope> growth,
                     double exponent)
        : m_family(std::move(family))
        , m_support(std::move(support))
        , m_traits(std::move(traits))
        , m_growth(std::move(growth))
        , m_exponent(exponent)
    {
    }

    std::vector<SampleBox> Density::sample_boxes(int d) const
    {
        const auto& t = m_support.traits();
        const double planar = std::isfinite(t.planar_radius) ? t.planar_radius : 3.0;
        const double vertical = std::isfinite(t.vertical_halfheight) ? t.vertical_halfheight : 3.0;
        SampleBox box{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Constant(d, planar)};
        if (!t.all_axes_planar)
        {
            box.half_width(d - 1) = vertical;
        }
        return {box};
    }

    double Density::value(const XiRef& xi, const XiRef& z) const
    {
        Eigen::VectorXd v(1);
        evaluate(xi, z, v, nullptr);
        return v(0);
    }

    Eigen::VectorXd Density::grad_z(const XiRef& xi, const XiRef& z) const
    {
        Eigen::VectorXd v(1);
        Eigen::MatrixXd g(z.size(), 1);
        evaluate(xi, z, v, &g);
        return g.col(0);
    }

    namespace
    {
        void require_exponent(double p)
        {
            if (!(p > 1.0) || !std::isfinite(p))
            {
                throw ValidationError("growth exponent must satisfy p > 1", "density.p");
            }
        }

        /// a(xi) |z|^p.
        class PowerDensity final : public Density
        {
        public:
            PowerDensity(std::string family, Kernel a, double p)
                : Density(std::move(family), a, make_traits(a), GrowthEnvelope{1.0, 1.0, p, a}, p)
                , m_weight(std::move(a))
                , m_p(p)
            {
            }

            void evaluate(const XiRef& xi, const Eigen::Ref<const Eigen::MatrixXd>& z, Eigen::Ref<Eigen::VectorXd> values,
                          Eigen::MatrixXd* grads) const override
            {
                const Index n = z.cols();
                const double a = m_weight.psi(xi);
                if (a == 0.0)
                {
                    values.head(n).setZero();
                    if (grads)
                    {
                        grads->leftCols(n).setZero();
                    }
                    return;
                }
                if (m_p == 2.0)
                {
                    values.head(n) = a * z.colwise().squaredNorm().transpose();
                    if (grads)
                    {
                        grads->leftCols(n) = (2.0 * a) * z;
                    }
                    return;
                }
                for (Index j = 0; j < n; ++j)
                {
                    const double norm = z.col(j).norm();
                    values(j) = a * std::pow(norm, m_p);
                    if (grads)
                    {
                        if (norm > 0.0)
                        {
                            grads->col(j) = (a * m_p * std::pow(norm, m_p - 2.0)) * z.col(j);
                        }
                        else
                        {
                            grads->col(j).setZero();
                        }
                    }
                }
            }

        private:
            static DensityTraits make_traits(const Kernel& a)
            {
                DensityTraits t;
                t.vertical_xi_even = a.traits().vertical_even;
                t.depends_on_vertical_xi = !a.traits().all_axes_planar;
                return t;
            }

            Kernel m_weight;
            double m_p;
        };

        struct RotationGeometry
        {
            double eta;
            double p;
            int d;
            double inv_volume;

            bool in_unit_cylinder(const XiRef& xi) const
            {
                return xi.head(d - 1).norm() < 1.0 && std::abs(xi(d - 1)) < 1.0;
            }

            /// Whether xi lies in C_eta(e_i + e_d) or C_eta(e_i - e_d); i is a planar axis.
            bool in_bump(const XiRef& xi, int i) const
            {
                Eigen::VectorXd planar = xi.head(d - 1);
                planar(i) -= 1.0;
                const double t = xi(d - 1);
                return planar.norm() < eta && (std::abs(t - 1.0) < eta || std::abs(t + 1.0) < eta);
            }
        };

        /// Shared implementation of the rotation example and its convex bump part.
        class RotationDensity final : public Density
        {
        public:
            RotationDensity(double eta, double p, int d, bool with_radial_term)
                : Density(with_radial_term ? "rotation_example" : "rotation_bumps",
                          support_kernel(eta, d, with_radial_term), make_traits(with_radial_term),
                          envelope(eta, p, d, with_radial_term), p)
                , m_geo{eta, p, d, 1.0 / cylinder_volume(d, eta)}
                , m_radial(with_radial_term)
            {
            }

            int required_dim() const override { return m_geo.d; }
            int required_codomain() const override { return m_geo.d; }

            std::vector<SampleBox> sample_boxes(int d) const override
            {
                auto boxes = Density::sample_boxes(d);
                for (int i = 0; i < 2; ++i)
                {
                    for (double s : {1.0, -1.0})
                    {
                        SampleBox b{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Constant(d, m_geo.eta)};
                        b.center(i) = 1.0;
                        b.center(d - 1) = s;
                        boxes.push_back(b);
                    }
                }
                return boxes;
            }

            void evaluate(const XiRef& xi, const Eigen::Ref<const Eigen::MatrixXd>& z, Eigen::Ref<Eigen::VectorXd> values,
                          Eigen::MatrixXd* grads) const override
            {
                const Index n = z.cols();
                const int m = static_cast<int>(z.rows());
                if (xi.size() != m_geo.d || m != m_geo.d)
                {
                    throw ValidationError("rotation example needs xi and z in R^d with d = m = " +
                                          std::to_string(m_geo.d));
                }
                const bool radial = m_radial && m_geo.in_unit_cylinder(xi);
                const bool bump[2] = {m_geo.in_bump(xi, 0), m_geo.in_bump(xi, 1)};
                const double xi_norm = xi.norm();
                if (radial && xi_norm == 0.0)
                {
                    throw ValidationError("rotation example is undefined at xi = 0");
                }
                const double p = m_geo.p;
                const bool square = p == 2.0;
                if (square && m == 3 && radial && !bump[0] && !bump[1])
                {
                    radial_square3(xi_norm, z, values, grads);
                    return;
                }
                if (!radial && !bump[0] && !bump[1])
                {
                    values.head(n).setZero();
                    if (grads)
                    {
                        grads->leftCols(n).setZero();
                    }
                    return;
                }
                for (Index j = 0; j < n; ++j)
                {
                    const double* zj = z.col(j).data();
                    double* gj = grads ? grads->col(j).data() : nullptr;
                    double v = 0.0;
                    if (gj)
                    {
                        std::fill(gj, gj + m, 0.0);
                    }
                    if (radial)
                    {
                        double nz2 = 0.0;
                        for (int c = 0; c < m; ++c)
                        {
                            nz2 += zj[c] * zj[c];
                        }
                        const double nz = std::sqrt(nz2);
                        const double s = nz / xi_norm - 1.0;
                        v += square ? s * s : std::pow(std::abs(s), p);
                        if (gj && nz > 0.0)
                        {
                            const double ds = square ? 2.0 * s : p * std::pow(std::abs(s), p - 1.0) * (s < 0 ? -1.0 : 1.0);
                            const double scale = ds / (xi_norm * nz);
                            for (int c = 0; c < m; ++c)
                            {
                                gj[c] += scale * zj[c];
                            }
                        }
                    }
                    for (int i = 0; i < 2; ++i)
                    {
                        if (!bump[i])
                        {
                            continue;
                        }
                        double nw2 = 0.0;
                        for (int c = 0; c < m; ++c)
                        {
                            const double w = zj[c] - (c == i ? 1.0 : 0.0);
                            nw2 += w * w;
                        }
                        const double nw = std::sqrt(nw2);
                        v += m_geo.inv_volume * (square ? nw2 : std::pow(nw, p));
                        if (gj && nw > 0.0)
                        {
                            const double scale = m_geo.inv_volume * (square ? 2.0 : p * std::pow(nw, p - 2.0));
                            for (int c = 0; c < m; ++c)
                            {
                                gj[c] += scale * (zj[c] - (c == i ? 1.0 : 0.0));
                            }
                        }
                    }
                    values(j) = v;
                }
            }

        private:
            /// (|z| / |xi| - 1)^2 for z in R^3.
            static void radial_square3(double xi_norm, const Eigen::Ref<const Eigen::MatrixXd>& z,
                                       Eigen::Ref<Eigen::VectorXd> values, Eigen::MatrixXd* grads)
            {
                const Index n = z.cols();
                const double inv = 1.0 / xi_norm;
                const double* zp = z.data();
                const Index stride = z.outerStride();
                double* vp = values.data();
                if (!grads)
                {
                    for (Index j = 0; j < n; ++j)
                    {
                        const double* zj = zp + j * stride;
                        const double s = std::sqrt(zj[0] * zj[0] + zj[1] * zj[1] + zj[2] * zj[2]) * inv - 1.0;
                        vp[j] = s * s;
                    }
                    return;
                }
                double* gp = grads->data();
                for (Index j = 0; j < n; ++j)
                {
                    const double* zj = zp + j * stride;
                    double* gj = gp + 3 * j;
                    const double nz = std::sqrt(zj[0] * zj[0] + zj[1] * zj[1] + zj[2] * zj[2]);
                    const double s = nz * inv - 1.0;
                    vp[j] = s * s;
                    const double scale = nz > 0.0 ? 2.0 * inv * (inv - 1.0 / nz) : 0.0;
                    gj[0] = scale * zj[0];
                    gj[1] = scale * zj[1];
                    gj[2] = scale * zj[2];
                }
            }

            static DensityTraits make_traits(bool radial)
            {
                DensityTraits t;
                t.convex_in_z = !radial;
                return t;
            }

            static Kernel support_kernel(double eta, int d, bool radial)
            {
                RotationGeometry geo{eta, 2.0, d, 0.0};
                KernelTraits t;
                t.family = KernelFamily::custom;
                t.label = std::string(radial ? "rotation_support" : "rotation_bump_support") + "(eta=" +
                          std::to_string(eta) + ")";
                t.dim = d;
                t.planar_radius = 1.0 + eta;
                t.vertical_halfheight = 1.0 + eta;
                t.planar_radial = false;
                return Kernel(t, [geo, radial](const XiRef& xi) {
                    return (radial && geo.in_unit_cylinder(xi)) || geo.in_bump(xi, 0) || geo.in_bump(xi, 1) ? 1.0
                                                                                                           : 0.0;
                });
            }

            /// psi = chi_{C_1} |xi|^{-p} + |C_eta|^{-1} chi_bumps, rho = 2^{p-1} (chi_{C_1} + |C_eta|^{-1} chi_bumps),
            /// c1 = 2^{1-p}, c2 = 2^{p-1}: the convexity bounds
            /// 2^{1-p} |a|^p - |b|^p <= |a - b|^p <= 2^{p-1} (|a|^p + |b|^p) applied termwise.
            static GrowthEnvelope envelope(double eta, double p, int d, bool radial)
            {
                RotationGeometry geo{eta, p, d, 1.0 / cylinder_volume(d, eta)};
                auto bumps = [geo](const XiRef& xi) {
                    return geo.inv_volume * ((geo.in_bump(xi, 0) ? 1.0 : 0.0) + (geo.in_bump(xi, 1) ? 1.0 : 0.0));
                };
                auto psi = [geo, bumps, radial](const XiRef& xi) {
                    double v = bumps(xi);
                    if (radial && geo.in_unit_cylinder(xi))
                    {
                        v += std::pow(xi.norm(), -geo.p);
                    }
                    return v;
                };
                const double scale = std::pow(2.0, p - 1.0);
                auto rho = [geo, bumps, radial, scale](const XiRef& xi) {
                    return scale * ((radial && geo.in_unit_cylinder(xi) ? 1.0 : 0.0) + bumps(xi));
                };
                KernelTraits t;
                t.label = "rotation_growth_envelope";
                t.dim = d;
                t.planar_radius = 1.0 + eta;
                t.vertical_halfheight = 1.0 + eta;
                t.planar_radial = false;
                return GrowthEnvelope{std::pow(2.0, 1.0 - p), scale, p, Kernel(t, psi, rho)};
            }

            RotationGeometry m_geo;
            bool m_radial;
        };

        class PlanarCutDensity final : public Density
        {
        public:
            explicit PlanarCutDensity(DensityPtr parent)
                : Density("planar_cut", nlthin::planar_cut(parent->support()), make_traits(*parent), std::nullopt,
                          parent->exponent())
                , m_parent(std::move(parent))
            {
            }

            int required_dim() const override
            {
                return m_parent->required_dim() > 0 ? m_parent->required_dim() - 1 : 0;
            }
            int required_codomain() const override { return m_parent->required_codomain(); }

            void evaluate(const XiRef& xi, const Eigen::Ref<const Eigen::MatrixXd>& z, Eigen::Ref<Eigen::VectorXd> values,
                          Eigen::MatrixXd* grads) const override
            {
                Eigen::VectorXd full = Eigen::VectorXd::Zero(xi.size() + 1);
                full.head(xi.size()) = xi;
                m_parent->evaluate(full, z, values, grads);
            }

        private:
            static DensityTraits make_traits(const Density& parent)
            {
                if (parent.traits().depends_on_vertical_x)
                {
                    throw ValidationError("planar cut requires a density independent of x_d");
                }
                DensityTraits t = parent.traits();
                t.depends_on_vertical_xi = false;
                t.vertical_xi_even = true;
                return t;
            }

            DensityPtr m_parent;
        };
    }

    DensityPtr pure_convolution(double r, double p)
    {
        require_exponent(p);
        return std::make_shared<PowerDensity>("pure_convolution", cylinder_indicator(r), p);
    }

    DensityPtr homogeneous_convex(Kernel a, double p)
    {
        require_exponent(p);
        return std::make_shared<PowerDensity>("homogeneous_convex", std::move(a), p);
    }

    DensityPtr rotation_example(double eta, double p, int d)
    {
        require_exponent(p);
        if (d < 3)
        {
            throw ValidationError("rotation example needs d = m >= 3", "density.d");
        }
        if (!(eta > 0.0 && eta < 0.5))
        {
            throw ValidationError("eta must lie in (0, 1/2)", "density.eta");
        }
        return std::make_shared<RotationDensity>(eta, p, d, true);
    }

    DensityPtr rotation_bumps(double eta, double p, int d)
    {
        require_exponent(p);
        if (d < 3)
        {
            throw ValidationError("rotation example needs d = m >= 3", "density.d");
        }
        if (!(eta > 0.0 && eta < 0.5))
        {
            throw ValidationError("eta must lie in (0, 1/2)", "density.eta");
        }
        return std::make_shared<RotationDensity>(eta, p, d, false);
    }

    DensityPtr planar_cut(DensityPtr density) { return std::make_shared<PlanarCutDensity>(std::move(density)); }

    GrowthReport growth_check(const Density& density, int n_samples, std::uint64_t seed, int d, int m,
                              const std::optional<GrowthEnvelope>& envelope)
    {
        const auto& growth = envelope ? envelope : density.growth();
        if (!growth)
        {
            throw ValidationError("density carries no growth envelope");
        }
        const int dim = d > 0 ? d : (density.required_dim() > 0 ? density.required_dim() : 3);
        const int codim = m > 0 ? m : (density.required_codomain() > 0 ? density.required_codomain() : 1);
        const auto boxes = density.sample_boxes(dim);

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, boxes.size() - 1);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double z_scales[] = {0.1, 1.0, 10.0};

        GrowthReport report;
        Eigen::VectorXd xi(dim);
        Eigen::VectorXd z(codim);
        for (int s = 0; s < n_samples; ++s)
        {
            const auto& box = boxes[s % 2 == 0 ? 0 : pick(rng)];
            for (int a = 0; a < dim; ++a)
            {
                xi(a) = box.center(a) + box.half_width(a) * unit(rng);
            }
            const double z_scale = z_scales[s % 3];
            for (int c = 0; c < codim; ++c)
            {
                z(c) = z_scale * normal(rng);
            }
            if (xi.norm() < 1e-12)
            {
                continue;
            }
            ++report.samples;
            const double f = density.value(xi, z);
            const double psi_term = growth->kernel.psi(xi) * std::pow(z.norm(), growth->p);
            const double rho = growth->kernel.rho(xi);
            const double lower = growth->c1 * (psi_term - rho);
            const double upper = growth->c2 * (psi_term + rho);
            const double slack = 1e-12 * (1.0 + std::abs(f));
            if (lower > f + slack || f > upper + slack)
            {
                ++report.violations;
                report.pass = false;
                if (report.witnesses.size() < 10)
                {
                    report.witnesses.push_back({xi, z, f, lower, upper});
                }
            }
        }
        return report;
    }
}
