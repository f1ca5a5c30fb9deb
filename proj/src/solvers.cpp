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

#include "nlthin/solvers.hpp"

#include "nlthin/error.hpp"
#include "nlthin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace nlthin
{
    namespace
    {
        constexpr double armijo_c = 1e-4;
        constexpr int max_backtracks = 60;
        constexpr int power_iterations = 8;
        constexpr int certificate_restarts = 5;
        constexpr int default_nonconvex_starts = 4;

        /// Energy of a nodal matrix together with its feasibility projections.
        struct NodalProblem
        {
            std::function<double(const Eigen::MatrixXd&, Eigen::MatrixXd*)> evaluate;
            std::function<void(Eigen::MatrixXd&)> project;
            std::function<void(Eigen::MatrixXd&)> project_gradient;
            double node_measure = 1.0;
        };

        struct DescentResult
        {
            Eigen::MatrixXd x;
            double value = 0.0;
            double grad_norm = 0.0;
            int iterations = 0;
            bool converged = false;
            std::vector<IterationRecord> history;
        };

        double scaled_norm(const Eigen::MatrixXd& g, double node_measure) { return g.norm() / std::sqrt(node_measure); }

        /// Largest curvature of the energy at x, by power iteration on finite-difference
        /// Hessian-vector products.
        double curvature_estimate(const NodalProblem& problem, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g,
                                  std::uint64_t seed)
        {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> normal;
            Eigen::MatrixXd v = Eigen::MatrixXd::NullaryExpr(x.rows(), x.cols(), [&]() { return normal(rng); });
            problem.project_gradient(v);
            double norm = v.norm();
            if (norm == 0.0)
            {
                return 1.0;
            }
            v /= norm;
            const double tau = 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff());
            double estimate = 0.0;
            Eigen::MatrixXd gp;
            for (int it = 0; it < power_iterations; ++it)
            {
                problem.evaluate(x + tau * v, &gp);
                problem.project_gradient(gp);
                Eigen::MatrixXd hv = (gp - g) / tau;
                norm = hv.norm();
                if (!(norm > 0.0) || !std::isfinite(norm))
                {
                    break;
                }
                estimate = norm;
                v = hv / norm;
            }
            return estimate > 0.0 ? estimate : 1.0;
        }

        DescentResult descend(const NodalProblem& problem, Eigen::MatrixXd x, const SolverOptions& opts,
                              std::uint64_t seed)
        {
            DescentResult out;
            problem.project(x);
            Eigen::MatrixXd g;
            double f = problem.evaluate(x, &g);
            if (!std::isfinite(f))
            {
                throw NumericalError("non-finite energy at the starting point", x);
            }
            problem.project_gradient(g);
            double gn = scaled_norm(g, problem.node_measure);
            double step = 0.0;
            double last_step = 0.0;
            if (opts.on_iterate)
            {
                opts.on_iterate(x);
            }
            Eigen::MatrixXd x_new;
            Eigen::MatrixXd g_new;
            while (true)
            {
                out.history.push_back(IterationRecord{f, last_step, gn});
                if (gn <= opts.tol_g * (1.0 + std::abs(f)))
                {
                    out.converged = true;
                    break;
                }
                if (out.iterations >= opts.max_iters)
                {
                    break;
                }
                if (step == 0.0)
                {
                    step = 1.0 / curvature_estimate(problem, x, g, seed);
                }
                const double gg = g.squaredNorm();
                double t = step;
                bool accepted = false;
                double f_new = f;
                for (int k = 0; k < max_backtracks; ++k, t *= 0.5)
                {
                    x_new = x - t * g;
                    problem.project(x_new);
                    try
                    {
                        f_new = problem.evaluate(x_new, &g_new);
                    }
                    catch (const NumericalError&)
                    {
                        continue;
                    }
                    if (std::isfinite(f_new) && f_new <= f - armijo_c * t * gg)
                    {
                        accepted = true;
                        break;
                    }
                }
                if (!accepted)
                {
                    break;
                }
                problem.project_gradient(g_new);
                const double sy = (x_new - x).cwiseProduct(g_new - g).sum();
                const double ss = (x_new - x).squaredNorm();
                step = sy > 0.0 ? ss / sy : 2.0 * t;
                last_step = t;
                x.swap(x_new);
                g.swap(g_new);
                f = f_new;
                if (opts.on_iterate)
                {
                    opts.on_iterate(x);
                }
                gn = scaled_norm(g, problem.node_measure);
                ++out.iterations;
            }
            out.x = std::move(x);
            out.value = f;
            out.grad_norm = gn;
            return out;
        }

        /// Uniform nodal noise plus a random linear term in the vertical coordinate.
        Eigen::MatrixXd perturbation(const Lattice& lattice, int m, double amplitude, bool vertical_ramp,
                                     std::uint64_t seed)
        {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> uniform(-amplitude, amplitude);
            Eigen::MatrixXd noise = Eigen::MatrixXd::NullaryExpr(m, lattice.size(), [&]() { return uniform(rng); });
            if (vertical_ramp)
            {
                Eigen::VectorXd ramp = Eigen::VectorXd::NullaryExpr(m, [&]() { return uniform(rng); });
                const int vertical = lattice.dim() - 1;
                for (Index i = 0; i < lattice.size(); ++i)
                {
                    noise.col(i) += ramp * lattice.coordinate(i)(vertical);
                }
            }
            return noise;
        }

        struct StartPlan
        {
            int extra = 0;
            bool certify = false;
            bool upper_bound = false;
            std::optional<std::string> warning;
        };

        StartPlan plan_starts(const Density& density, const SolverOptions& opts)
        {
            StartPlan plan;
            if (density.traits().convex_in_z)
            {
                plan.extra = std::max(0, opts.multistart);
                plan.certify = opts.certify;
            }
            else
            {
                plan.extra = opts.multistart > 0 ? opts.multistart : default_nonconvex_starts;
                plan.upper_bound = true;
                plan.warning = "density " + density.family() +
                               " is not convex in z; the reported value is the best of " +
                               std::to_string(plan.extra + 1) + " starts and only an upper bound";
            }
            return plan;
        }

        MinimizeReport run_starts(const NodalProblem& problem, const LatticePtr& lattice, const Eigen::MatrixXd& x0,
                                  const StartPlan& plan, const SolverOptions& opts, bool vertical_ramp)
        {
            const int m = static_cast<int>(x0.rows());
            DescentResult best = descend(problem, x0, opts, opts.seed);
            const double affine_value = best.history.front().value;
            std::vector<double> values{best.value};
            const int starts = plan.extra + (plan.certify ? certificate_restarts : 0);
            double spread = 0.0;
            for (int s = 0; s < starts; ++s)
            {
                const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(s) + 1;
                Eigen::MatrixXd start = x0 + perturbation(*lattice, m, opts.perturbation, vertical_ramp, seed);
                DescentResult run = descend(problem, std::move(start), opts, seed);
                values.push_back(run.value);
                if (plan.certify && s >= plan.extra)
                {
                    spread = std::max(spread, std::abs(run.value - values.front()) /
                                                  std::max(std::abs(values.front()), 1.0));
                }
                if (run.value < best.value)
                {
                    best = std::move(run);
                }
            }
            MinimizeReport report(Field(lattice, std::move(best.x)));
            report.value = best.value;
            report.iterations = best.iterations;
            report.grad_norm = best.grad_norm;
            report.converged = best.converged;
            report.history = std::move(best.history);
            report.affine_value = affine_value;
            report.upper_bound = plan.upper_bound;
            report.warning = plan.warning;
            report.start_values = std::move(values);
            if (plan.certify)
            {
                report.certificate_spread = spread;
            }
            if (report.value < 0.0 || report.value > affine_value)
            {
                throw NumericalError("minimum violates the bounds 0 <= value <= affine value",
                                     report.field.values());
            }
            return report;
        }

        double planar_boundary_distance(const Lattice& lattice, Index node)
        {
            const auto idx = lattice.multi_index(node);
            double dist = std::numeric_limits<double>::infinity();
            for (int a = 0; a + 1 < lattice.dim(); ++a)
            {
                const double lo = idx[a] * lattice.spacing(a);
                const double hi = (lattice.count(a) - 1 - idx[a]) * lattice.spacing(a);
                dist = std::min({dist, lo, hi});
            }
            return dist;
        }
    }

    Eigen::VectorXd DirichletClassSpec::boundary_value(const Eigen::VectorXd& planar) const
    {
        if (datum)
        {
            return datum(planar);
        }
        return M * planar;
    }

    Eigen::MatrixXd PeriodicClassSpec::slope(int lattice_dim) const
    {
        const auto k = M.cols();
        if (lattice_dim == k + 1)
        {
            Eigen::MatrixXd a(M.rows(), lattice_dim);
            a.leftCols(k) = M;
            a.col(k) = b ? *b : Eigen::VectorXd::Zero(M.rows());
            if (a.col(k).size() != M.rows())
            {
                throw ValidationError("vertical slope b must have one entry per codomain component", "b");
            }
            return a;
        }
        if (lattice_dim == k && !b)
        {
            return M;
        }
        throw ValidationError("slope M with " + std::to_string(k) + " columns does not fit a " +
                                  std::to_string(lattice_dim) + "-dimensional cell",
                              "M");
    }

    std::vector<bool> dirichlet_fixed_mask(const Lattice& lattice, double collar_width)
    {
        const double threshold = collar_width * (1.0 - 1e-12);
        std::vector<bool> mask(lattice.size());
        for (Index i = 0; i < lattice.size(); ++i)
        {
            mask[i] = planar_boundary_distance(lattice, i) < threshold;
        }
        return mask;
    }

    MinimizeReport minimize_dirichlet(const Density& density, const ScaleParams& scale, const LatticePtr& lattice,
                                      const DirichletClassSpec& spec, const InteractionStencil& stencil,
                                      const SolverOptions& opts)
    {
        const Lattice& grid = *lattice;
        const int d = grid.dim();
        if (d < 2)
        {
            throw ValidationError("Dirichlet problems need a lattice with planar and vertical axes");
        }
        for (int a = 0; a < d; ++a)
        {
            if (grid.periodic(a))
            {
                throw ValidationError("Dirichlet problems need a non-periodic lattice");
            }
        }
        if (!spec.datum && spec.M.cols() != d - 1)
        {
            throw ValidationError("boundary slope must have d - 1 columns", "M");
        }
        const double collar = spec.collar_radius * scale.eps();
        for (int a = 0; a + 1 < d; ++a)
        {
            if (!(collar < 0.5 * grid.extent(a)))
            {
                throw ValidationError("collar width must be below half the planar extent", "collar_radius");
            }
        }
        if (!stencil.matches(grid))
        {
            throw ValidationError("stencil was built for a different lattice");
        }

        const auto mask = dirichlet_fixed_mask(grid, collar);
        Eigen::MatrixXd boundary;
        for (Index i = 0; i < grid.size(); ++i)
        {
            const Eigen::VectorXd g = spec.boundary_value(grid.coordinate(i).head(d - 1));
            if (i == 0)
            {
                boundary.resize(g.size(), grid.size());
            }
            boundary.col(i) = g;
        }

        const double scale_factor = scale.prefactor_rescaled() * grid.node_measure();
        NodalProblem problem;
        problem.node_measure = grid.node_measure();
        problem.evaluate = [&](const Eigen::MatrixXd& u, Eigen::MatrixXd* grad) {
            InteractionOptions io;
            io.gradient = grad != nullptr;
            auto terms = interaction_terms(grid, u, density, stencil, scale.eps(), io);
            if (grad)
            {
                *grad = scale_factor * terms.gradient;
            }
            return scale_factor * terms.sum;
        };
        problem.project = [&](Eigen::MatrixXd& u) {
            for (Index i = 0; i < grid.size(); ++i)
            {
                if (mask[i])
                {
                    u.col(i) = boundary.col(i);
                }
            }
        };
        problem.project_gradient = [&](Eigen::MatrixXd& g) {
            for (Index i = 0; i < grid.size(); ++i)
            {
                if (mask[i])
                {
                    g.col(i).setZero();
                }
            }
        };
        return run_starts(problem, lattice, boundary, plan_starts(density, opts), opts, true);
    }

    MinimizeReport minimize_periodic_cell(const Density& density, double delta, const PeriodicClassSpec& spec,
                                          const LatticePtr& lattice, const InteractionStencil& stencil,
                                          const SolverOptions& opts)
    {
        const Lattice& grid = *lattice;
        const int d = grid.dim();
        const bool slab = spec.cell == CellShape::slab;
        for (int a = 0; a < d; ++a)
        {
            const bool vertical_free = slab && a + 1 == d;
            if (grid.periodic(a) == vertical_free)
            {
                throw ValidationError(slab ? "slab cells need periodic planar axes and a free vertical axis"
                                           : "torus cells need every axis periodic",
                                      "cell");
            }
        }
        if (!(delta > 0.0) || !std::isfinite(delta))
        {
            throw ValidationError("delta must be positive and finite", "delta");
        }
        if (!stencil.matches(grid) || stencil.eps != 1.0 || std::abs(stencil.gamma * delta - 1.0) > 1e-12)
        {
            throw ValidationError("cell stencil must use unit interactions with gamma = 1 / delta");
        }
        const Eigen::MatrixXd slope = spec.slope(d);
        const int m = static_cast<int>(slope.rows());

        const double scale_factor = std::max(delta, 1.0) * grid.node_measure();
        NodalProblem problem;
        problem.node_measure = grid.node_measure();
        problem.evaluate = [&](const Eigen::MatrixXd& u, Eigen::MatrixXd* grad) {
            InteractionOptions io;
            io.slope = &slope;
            io.gradient = grad != nullptr;
            auto terms = interaction_terms(grid, u, density, stencil, 1.0, io);
            if (grad)
            {
                *grad = scale_factor * terms.gradient;
            }
            return scale_factor * terms.sum;
        };
        problem.project = [](Eigen::MatrixXd& u) { u.colwise() -= u.rowwise().mean(); };
        problem.project_gradient = problem.project;

        auto report = run_starts(problem, lattice, Eigen::MatrixXd::Zero(m, grid.size()), plan_starts(density, opts),
                                 opts, slab);
        InteractionOptions io;
        io.slope = &slope;
        io.slope_gradient = true;
        const auto terms = interaction_terms(grid, report.field.values(), density, stencil, 1.0, io);
        report.slope = slope;
        report.slope_gradient = scale_factor * terms.slope_gradient;
        return report;
    }

    VectorMinimum minimize_vector(const VectorObjective& objective, Eigen::VectorXd x0, double tol, int max_iters)
    {
        VectorMinimum out;
        Eigen::VectorXd x = std::move(x0);
        Eigen::VectorXd g(x.size());
        double f = objective(x, g);
        if (!std::isfinite(f))
        {
            throw NumericalError("non-finite objective at the starting point");
        }
        double step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(x.size());
        while (true)
        {
            if (g.norm() <= tol * (1.0 + std::abs(f)))
            {
                out.converged = true;
                break;
            }
            if (out.iterations >= max_iters)
            {
                break;
            }
            const double gg = g.squaredNorm();
            double t = step;
            bool accepted = false;
            double f_new = f;
            for (int k = 0; k < max_backtracks; ++k, t *= 0.5)
            {
                x_new = x - t * g;
                f_new = objective(x_new, g_new);
                if (std::isfinite(f_new) && f_new <= f - armijo_c * t * gg)
                {
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
            {
                break;
            }
            const double sy = (x_new - x).dot(g_new - g);
            step = sy > 0.0 ? (x_new - x).squaredNorm() / sy : 2.0 * t;
            x.swap(x_new);
            g.swap(g_new);
            f = f_new;
            ++out.iterations;
        }
        out.argmin = std::move(x);
        out.value = f;
        out.grad_norm = g.norm();
        return out;
    }

    namespace
    {
        /// Value and b-gradient of the weighted integrand at one xi.
        class SlopeIntegrand
        {
        public:
            SlopeIntegrand(const Density& density, double delta, const Eigen::MatrixXd& M, const Eigen::VectorXd& b)
                : m_density(density)
                , m_delta(delta)
                , m_slope(M.rows(), M.cols() + 1)
                , m_z(M.rows(), 1)
                , m_value(1)
                , m_grad(M.rows(), 1)
                , m_out(M.rows() + 1)
            {
                m_slope.leftCols(M.cols()) = M;
                m_slope.col(M.cols()) = b;
            }

            const Eigen::VectorXd& operator()(const Eigen::VectorXd& xi)
            {
                const double vertical = xi(xi.size() - 1);
                const double weight = 2.0 - m_delta * std::abs(vertical);
                if (weight <= 0.0)
                {
                    m_out.setZero();
                    return m_out;
                }
                m_z.col(0) = m_slope * xi;
                m_density.evaluate(xi, m_z, m_value, &m_grad);
                m_out(0) = weight * m_value(0);
                m_out.tail(m_z.rows()) = (weight * vertical) * m_grad.col(0);
                return m_out;
            }

        private:
            const Density& m_density;
            double m_delta;
            Eigen::MatrixXd m_slope;
            Eigen::MatrixXd m_z;
            Eigen::VectorXd m_value;
            Eigen::MatrixXd m_grad;
            Eigen::VectorXd m_out;
        };

        std::vector<double> symmetric_breaks(const std::vector<double>& radii)
        {
            std::vector<double> out{0.0};
            for (double r : radii)
            {
                out.push_back(r);
                out.push_back(-r);
            }
            return out;
        }
    }

    SlopeRelaxation relax_vertical_slope(const Density& density, int d, double delta, const Eigen::MatrixXd& M,
                                         const SlopeSearchOptions& opts)
    {
        if (d != 2 && d != 3)
        {
            throw ValidationError("vertical slope relaxation supports d = 2 and d = 3", "dimension");
        }
        if (!density.traits().convex_in_z || density.traits().depends_on_x)
        {
            throw ValidationError("vertical slope relaxation needs an x-independent convex density", "density");
        }
        if (!(delta > 0.0) || !std::isfinite(delta))
        {
            throw ValidationError("delta must be positive and finite", "delta");
        }
        if (M.cols() != d - 1)
        {
            throw ValidationError("slope M must have d - 1 columns", "M");
        }
        const auto& support = density.support().traits();
        const double planar = support.planar_radius;
        if (!std::isfinite(planar))
        {
            throw ValidationError("the integral over xi diverges: kernel support " + density.support().label() +
                                      " is unbounded in the planar directions",
                                  "density");
        }
        const double vertical = std::min(2.0 / delta, support.vertical_halfheight);
        std::vector<double> vertical_breaks = support.vertical_breaks;
        vertical_breaks.push_back(0.0);
        const std::vector<double> radial_breaks = support.radial_breaks;
        const quadrature::Tolerance tol{1e-14, opts.quadrature_relative, 4000};
        const int m = static_cast<int>(M.rows());
        const double prefactor = std::max(delta, 1.0);

        auto integral = [&](const Eigen::VectorXd& b) {
            SlopeIntegrand integrand(density, delta, M, b);
            Eigen::VectorXd xi(d);
            auto slice = [&](double xi_d) -> Eigen::VectorXd {
                xi(d - 1) = xi_d;
                if (d == 2)
                {
                    auto inner = [&](double t) -> Eigen::VectorXd {
                        xi(0) = t;
                        return integrand(xi);
                    };
                    return quadrature::integrate_piecewise(inner, -planar, planar, symmetric_breaks(radial_breaks),
                                                           tol)
                        .value;
                }
                if (support.planar_radial)
                {
                    auto radial = [&](double rho) -> Eigen::VectorXd {
                        auto angular = [&](double phi) -> Eigen::VectorXd {
                            xi(0) = rho * std::cos(phi);
                            xi(1) = rho * std::sin(phi);
                            return integrand(xi);
                        };
                        return rho * quadrature::integrate(angular, 0.0, 2.0 * std::numbers::pi, tol).value;
                    };
                    return quadrature::integrate_piecewise(radial, 0.0, planar, radial_breaks, tol).value;
                }
                auto row = [&](double s) -> Eigen::VectorXd {
                    auto column = [&](double t) -> Eigen::VectorXd {
                        xi(0) = s;
                        xi(1) = t;
                        return integrand(xi);
                    };
                    return quadrature::integrate_piecewise(column, -planar, planar, symmetric_breaks(radial_breaks),
                                                           tol)
                        .value;
                };
                return quadrature::integrate_piecewise(row, -planar, planar, symmetric_breaks(radial_breaks), tol)
                    .value;
            };
            const auto result = quadrature::integrate_piecewise(slice, -vertical, vertical, vertical_breaks, tol);
            if (!std::isfinite(result.value(0)))
            {
                throw NumericalError("non-finite integral for kernel support " + density.support().label());
            }
            return Eigen::VectorXd(prefactor * result.value);
        };

        VectorObjective objective = [&](const Eigen::VectorXd& b, Eigen::VectorXd& grad) {
            const Eigen::VectorXd v = integral(b);
            grad = v.tail(m);
            return v(0);
        };
        const auto best = minimize_vector(objective, Eigen::VectorXd::Zero(m), opts.tol, opts.max_iters);
        SlopeRelaxation out;
        out.b = best.argmin;
        out.value = best.value;
        out.iterations = best.iterations;
        out.converged = best.converged;
        return out;
    }
}
