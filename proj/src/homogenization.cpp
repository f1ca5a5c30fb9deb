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

#include "nlthin/homogenization.hpp"

#include "nlthin/energy.hpp"
#include "nlthin/error.hpp"
#include "nlthin/lattice.hpp"
#include "nlthin/quadrature.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace nlthin
{
    namespace
    {
        using Clock = std::chrono::steady_clock;

        double seconds_since(Clock::time_point start)
        {
            return std::chrono::duration<double>(Clock::now() - start).count();
        }

        void require_ladder(const std::vector<int>& ladder)
        {
            if (ladder.empty())
            {
                throw ValidationError("resolution ladder is empty", "ladder");
            }
            for (std::size_t i = 0; i < ladder.size(); ++i)
            {
                if (ladder[i] < 2 || (i > 0 && ladder[i] <= ladder[i - 1]))
                {
                    throw ValidationError("resolution ladder must be increasing and at least 2", "ladder");
                }
            }
        }

        void require_slope(const Eigen::MatrixXd& M, int d)
        {
            if (d < 2)
            {
                throw ValidationError("dimension must be at least 2", "dimension");
            }
            if (M.cols() != d - 1 || M.rows() < 1)
            {
                throw ValidationError("slope M must be m x (d - 1)", "M");
            }
        }

        /// Q_1 x (-1, 1) with n nodes per unit length.
        LatticePtr slab_lattice(int d, int n)
        {
            CylinderSpec spec;
            spec.ambient_dim = d;
            spec.planar_box.assign(d - 1, Interval{0.0, 1.0});
            spec.half_thickness = 1.0;
            std::vector<Index> counts(d, n);
            counts.back() = 2 * n + 1;
            std::vector<bool> periodic(d, true);
            periodic.back() = false;
            return std::make_shared<Lattice>(build_lattice(spec, counts, periodic));
        }

        /// Unit torus [0, 1)^k with n nodes per axis.
        LatticePtr torus_lattice(int k, int n)
        {
            return std::make_shared<Lattice>(Eigen::VectorXd::Zero(k), Eigen::VectorXd::Constant(k, 1.0 / n),
                                             std::vector<Index>(k, n), std::vector<bool>(k, true));
        }

        LadderPoint ladder_point(int n, const MinimizeReport& report, double value, Clock::time_point start)
        {
            LadderPoint point;
            point.resolution = n;
            point.spacing = 1.0 / n;
            point.value = value;
            point.runtime_s = seconds_since(start);
            point.grad_norm = report.grad_norm;
            point.iterations = report.iterations;
            point.converged = report.converged;
            point.history = report.history;
            return point;
        }

        void finish(HomogenizationEstimate& estimate, const CellOptions& opts)
        {
            estimate.value = estimate.ladder.back().value;
            if (opts.extrapolate)
            {
                auto [value, rate] = richardson(estimate.ladder);
                estimate.observed_rate = rate;
                if (value)
                {
                    estimate.extrapolated = value;
                    estimate.value = *value;
                }
            }
        }

        std::string describe_ladder(const char* cell, const std::vector<int>& ladder)
        {
            std::string out = std::string(cell) + " n=";
            for (std::size_t i = 0; i < ladder.size(); ++i)
            {
                out += (i ? "," : "") + std::to_string(ladder[i]);
            }
            return out;
        }
    }

    std::string Regime::label() const
    {
        switch (kind)
        {
        case Kind::zero:
            return "zero";
        case Kind::infinity:
            return "infinity";
        case Kind::finite:
            break;
        }
        return "delta";
    }

    double theta(double delta, double r)
    {
        if (!(r > 0.0) || !std::isfinite(r))
        {
            throw ValidationError("radius r must be positive", "r");
        }
        if (!(delta >= 0.0))
        {
            throw ValidationError("delta must be nonnegative", "delta");
        }
        if (std::isinf(delta))
        {
            return 4.0;
        }
        if (delta == 0.0)
        {
            return 4.0 * r;
        }
        const double reach = std::min(r, 2.0 / delta);
        return std::max(delta, 1.0) * reach * (4.0 - delta * reach);
    }

    double planar_moment(const Eigen::MatrixXd& M, double r, double p)
    {
        if (!(r > 0.0) || !(p >= 1.0))
        {
            throw ValidationError("planar moment needs r > 0 and p >= 1");
        }
        const auto k = M.cols();
        if (p == 2.0)
        {
            return M.squaredNorm() * unit_ball_volume(static_cast<int>(k)) * std::pow(r, k + 2.0) / (k + 2.0);
        }
        if (k == 1)
        {
            return std::pow(M.norm(), p) * 2.0 * std::pow(r, p + 1.0) / (p + 1.0);
        }
        if (k == 2)
        {
            auto angular = [&](double phi) {
                const Eigen::Vector2d dir(std::cos(phi), std::sin(phi));
                return std::pow((M * dir).norm(), p);
            };
            const auto result = quadrature::integrate(angular, 0.0, 2.0 * std::numbers::pi);
            return result.value * std::pow(r, p + 2.0) / (p + 2.0);
        }
        throw ValidationError("planar moments for p != 2 are available for d - 1 <= 2", "M");
    }

    double oracle_pure_conv(const Eigen::MatrixXd& M, double r, double p, const Regime& regime)
    {
        const double delta = regime.kind == Regime::Kind::zero       ? 0.0
                             : regime.kind == Regime::Kind::infinity ? unbounded
                                                                     : regime.delta;
        return theta(delta, r) * planar_moment(M, r, p);
    }

    std::pair<std::optional<double>, std::optional<double>> richardson(const std::vector<LadderPoint>& ladder)
    {
        const std::size_t k = ladder.size();
        if (k < 3)
        {
            return {std::nullopt, std::nullopt};
        }
        const auto& a = ladder[k - 3];
        const auto& b = ladder[k - 2];
        const auto& c = ladder[k - 1];
        const double rate = std::log(std::abs(a.value - b.value) / std::abs(b.value - c.value)) /
                            std::log(b.spacing / c.spacing);
        if (!std::isfinite(rate))
        {
            return {std::nullopt, std::nullopt};
        }
        if (rate < 0.5)
        {
            return {std::nullopt, rate};
        }
        const double value = c.value + (c.value - b.value) * c.spacing / (b.spacing - c.spacing);
        return {value, rate};
    }

    HomogenizationEstimate cell_formula_delta(const Density& density, int d, double delta, const Eigen::MatrixXd& M,
                                              const CellOptions& opts)
    {
        require_slope(M, d);
        require_ladder(opts.ladder);
        if (!(delta > 0.0) || !std::isfinite(delta))
        {
            throw ValidationError("delta must be positive and finite", "delta");
        }
        HomogenizationEstimate estimate;
        estimate.M = M;
        estimate.regime = Regime::finite(delta);
        estimate.grid = describe_ladder("Q1xI", opts.ladder);
        PeriodicClassSpec spec{M, std::nullopt, CellShape::slab};
        for (int n : opts.ladder)
        {
            const auto start = Clock::now();
            const auto lattice = slab_lattice(d, n);
            const auto stencil = build_stencil(density.support(), 1.0, 1.0 / delta, *lattice);
            const auto report = minimize_periodic_cell(density, delta, spec, lattice, stencil, opts.solver);
            estimate.ladder.push_back(ladder_point(n, report, report.value, start));
        }
        finish(estimate, opts);
        return estimate;
    }

    HomogenizationEstimate cell_formula_zero(const Density& density, int d, const Eigen::MatrixXd& M,
                                             const CellOptions& opts)
    {
        require_slope(M, d);
        require_ladder(opts.ladder);
        if (!density.traits().convex_in_z)
        {
            throw ValidationError("the zero regime of a non-convex density needs a quasiconvex envelope, which is "
                                  "not computable here",
                                  "density");
        }
        const int m = static_cast<int>(M.rows());
        HomogenizationEstimate estimate;
        estimate.M = M;
        estimate.regime = Regime::zero();
        estimate.grid = describe_ladder("Q1^d", opts.ladder);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
        for (int n : opts.ladder)
        {
            const auto start = Clock::now();
            const auto lattice = torus_lattice(d, n);
            const auto stencil = build_stencil(density.support(), 1.0, 1.0, *lattice);
            std::optional<MinimizeReport> last;
            VectorObjective objective = [&](const Eigen::VectorXd& slope, Eigen::VectorXd& grad) {
                PeriodicClassSpec spec{M, slope, CellShape::torus};
                last.emplace(minimize_periodic_cell(density, 1.0, spec, lattice, stencil, opts.solver));
                grad = 2.0 * last->slope_gradient.col(d - 1);
                return 2.0 * last->value;
            };
            const auto best = minimize_vector(objective, b, opts.slope_tol, opts.slope_max_iters);
            b = best.argmin;
            PeriodicClassSpec spec{M, b, CellShape::torus};
            const auto report = minimize_periodic_cell(density, 1.0, spec, lattice, stencil, opts.solver);
            auto point = ladder_point(n, report, 2.0 * report.value, start);
            point.converged = point.converged && best.converged;
            estimate.ladder.push_back(point);
        }
        estimate.vertical_slope = b;
        finish(estimate, opts);
        return estimate;
    }

    HomogenizationEstimate cell_formula_infinity(const Density& planar_density, int d, const Eigen::MatrixXd& M,
                                                 const CellOptions& opts)
    {
        require_slope(M, d);
        require_ladder(opts.ladder);
        const auto& traits = planar_density.traits();
        if (traits.depends_on_vertical_xi || traits.depends_on_vertical_x ||
            !planar_density.support().traits().all_axes_planar)
        {
            throw ValidationError("the infinity regime requires planar density (independent of x_d and xi_d); "
                                  "pass its planar cut",
                                  "density");
        }
        HomogenizationEstimate estimate;
        estimate.M = M;
        estimate.regime = Regime::infinity();
        estimate.grid = describe_ladder("Q1^(d-1)", opts.ladder);
        PeriodicClassSpec spec{M, std::nullopt, CellShape::torus};
        for (int n : opts.ladder)
        {
            const auto start = Clock::now();
            const auto lattice = torus_lattice(d - 1, n);
            const auto stencil = build_stencil(planar_density.support(), 1.0, 1.0, *lattice);
            const auto report = minimize_periodic_cell(planar_density, 1.0, spec, lattice, stencil, opts.solver);
            estimate.ladder.push_back(ladder_point(n, report, 4.0 * report.value, start));
        }
        finish(estimate, opts);
        return estimate;
    }

    Index aligned_intervals(double length, double reach, int half_cells)
    {
        if (!(length > 0.0) || !(reach > 0.0) || half_cells < 0)
        {
            throw ValidationError("aligned spacing needs positive length and reach");
        }
        const double spacing = 2.0 * reach / (2.0 * half_cells + 1.0);
        return std::max<Index>(1, std::lround(length / spacing));
    }

    std::vector<AsymptoticPoint> asymptotic_formula(const Density& density, int d, double delta,
                                                    const Eigen::MatrixXd& M, const AsymptoticOptions& opts)
    {
        require_slope(M, d);
        if (!(delta > 0.0) || !std::isfinite(delta))
        {
            throw ValidationError("delta must be positive and finite", "delta");
        }
        for (std::size_t i = 0; i < opts.R.size(); ++i)
        {
            if (!(opts.R[i] > 0.0) || (i > 0 && opts.R[i] <= opts.R[i - 1]))
            {
                throw ValidationError("R sequence must be positive and increasing", "R");
            }
        }
        const auto& support = density.support().traits();
        if (!std::isfinite(support.planar_radius))
        {
            throw ValidationError("asymptotic formula needs a kernel with bounded planar support", "kernel");
        }
        const double vertical_reach = delta * support.vertical_halfheight;
        const Index vertical_intervals = vertical_reach < 2.0
                                             ? aligned_intervals(2.0, vertical_reach, opts.vertical_cells)
                                             : 2 * opts.vertical_cells + 1;
        const auto scale = ScaleParams::unit_cell(delta);
        DirichletClassSpec spec;
        spec.M = M;
        spec.collar_radius = opts.collar_radius;

        std::vector<AsymptoticPoint> out;
        for (double R : opts.R)
        {
            const auto start = Clock::now();
            CylinderSpec cylinder;
            cylinder.ambient_dim = d;
            cylinder.planar_box.assign(d - 1, Interval{0.0, R});
            cylinder.half_thickness = 1.0;
            cylinder.codomain_dim = static_cast<int>(M.rows());
            std::vector<Index> counts(d, aligned_intervals(R, support.planar_radius, opts.planar_cells) + 1);
            counts.back() = vertical_intervals + 1;
            const auto lattice =
                std::make_shared<Lattice>(build_lattice(cylinder, counts, std::vector<bool>(d, false)));
            const auto stencil = build_stencil(density.support(), scale.eps(), scale.gamma(), *lattice);
            const auto report = minimize_dirichlet(density, scale, lattice, spec, stencil, opts.solver);
            AsymptoticPoint point;
            point.R = R;
            point.minimum = report.value;
            point.value = report.value / std::pow(R, d - 1);
            point.spacing = lattice->spacing(0);
            point.runtime_s = seconds_since(start);
            point.grad_norm = report.grad_norm;
            point.converged = report.converged;
            point.history = report.history;
            out.push_back(point);
        }
        return out;
    }

    double indicator_vertical_factor(double eps, double gamma)
    {
        return 2.0 * gamma < eps ? 4.0 * gamma * gamma / eps : 4.0 * gamma - eps;
    }

    namespace
    {
        double sinusoid(const Eigen::VectorXd& x) { return std::sin(2.0 * std::numbers::pi * x(0)); }

        /// Planar factor: interaction integral of the sinusoid over the periodic unit interval.
        double planar_factor(const DensityPtr& density, double eps, Index nodes)
        {
            const auto planar = planar_cut(density);
            const auto lattice = torus_lattice(1, static_cast<int>(nodes));
            const auto field = Field::from_function(lattice, 1, [](const Eigen::VectorXd& x) {
                return Eigen::VectorXd::Constant(1, sinusoid(x));
            });
            const auto stencil = build_stencil(planar->support(), eps, 1.0, *lattice);
            const auto terms = interaction_terms(*lattice, field.values(), *planar, stencil, eps);
            return terms.sum * lattice->node_measure();
        }

        struct FilmProbe
        {
            LatticePtr rescaled;
            LatticePtr physical;
        };

        FilmProbe film_lattices(Index planar_nodes, Index vertical_nodes, double gamma)
        {
            CylinderSpec spec;
            spec.ambient_dim = 2;
            spec.planar_box = {Interval{0.0, 1.0}};
            const std::vector<Index> counts{planar_nodes, vertical_nodes};
            const std::vector<bool> periodic{true, false};
            FilmProbe probe;
            spec.half_thickness = 1.0;
            probe.rescaled = std::make_shared<Lattice>(build_lattice(spec, counts, periodic));
            spec.half_thickness = gamma;
            probe.physical = std::make_shared<Lattice>(build_lattice(spec, counts, periodic));
            return probe;
        }

        double film_energy(const Density& density, const ScaleParams& scale, const FilmProbe& probe,
                           const InteractionStencil& stencil)
        {
            const auto field = Field::from_function(probe.physical, 1, [](const Eigen::VectorXd& x) {
                return Eigen::VectorXd::Constant(1, sinusoid(x));
            });
            return energy_physical(field, density, scale, stencil).total / scale.prefactor_physical();
        }

        /// Integral of |t|^{-beta} over [a, b].
        double singular_cell_integral(double a, double b, double beta)
        {
            auto primitive = [beta](double t) {
                return std::copysign(std::pow(std::abs(t), 1.0 - beta) / (1.0 - beta), t);
            };
            return primitive(b) - primitive(a);
        }
    }

    ScalingTable scaling_probe(const ScalingProbeSpec& spec)
    {
        if (spec.planar_steps < 1 || spec.vertical_steps < 1)
        {
            throw ValidationError("lattice steps per unit of xi must be positive", "scaling");
        }
        if (!(spec.beta > 0.0 && spec.beta < 1.0))
        {
            throw ValidationError("singular exponent beta must lie in (0, 1)", "scaling.beta");
        }
        ScalingTable table;
        table.beta = spec.beta;
        const auto density = pure_convolution(1.0, spec.p);

        for (const auto& [eps, gamma] : spec.indicator_pairs)
        {
            const auto scale = ScaleParams(eps, gamma);
            const Index planar_nodes = std::lround(spec.planar_steps / eps);
            const Index vertical_nodes = std::lround(2.0 * gamma * spec.vertical_steps / eps) + 1;
            const auto probe = film_lattices(planar_nodes, vertical_nodes, gamma);
            const auto stencil = build_stencil(density->support(), eps, gamma, *probe.rescaled);
            ScalingRow row;
            row.eps = eps;
            row.gamma = gamma;
            row.raw_energy = film_energy(*density, scale, probe, stencil);
            row.planar_factor = planar_factor(density, eps, planar_nodes);
            row.vertical_factor = row.raw_energy / row.planar_factor;
            row.predicted = indicator_vertical_factor(eps, gamma);
            row.ratio = row.vertical_factor / row.predicted;
            table.max_relative_error = std::max(table.max_relative_error, std::abs(row.ratio - 1.0));
            table.indicator_rows.push_back(row);
        }

        const double eps = spec.singular_eps;
        const Index planar_nodes = std::lround(spec.planar_steps / eps);
        const double planar = planar_factor(density, eps, planar_nodes);
        std::vector<double> xs;
        std::vector<double> ys;
        for (double q : spec.singular_ratios)
        {
            const double gamma = eps / q;
            const auto scale = ScaleParams(eps, gamma);
            const auto probe = film_lattices(planar_nodes, spec.singular_vertical_nodes, gamma);
            auto stencil = build_stencil(density->support(), eps, gamma, *probe.rescaled);
            const double planar_step = probe.rescaled->spacing(0) / eps;
            const double vertical_step = probe.rescaled->spacing(1) * gamma / eps;
            for (auto& entry : stencil.entries)
            {
                const double center = entry.offset[1] * vertical_step;
                const double lo = std::max(-1.0, center - 0.5 * vertical_step);
                const double hi = std::min(1.0, center + 0.5 * vertical_step);
                entry.weight = planar_step * singular_cell_integral(lo, hi, spec.beta);
            }
            ScalingRow row;
            row.eps = eps;
            row.gamma = gamma;
            row.raw_energy = film_energy(*density, scale, probe, stencil);
            row.planar_factor = planar;
            row.vertical_factor = row.raw_energy / planar;
            row.predicted = gamma * std::pow(std::max(q, 1.0), spec.beta - 1.0);
            row.ratio = row.vertical_factor / row.predicted;
            table.singular_rows.push_back(row);
            xs.push_back(std::log(q));
            ys.push_back(std::log(row.vertical_factor / gamma));
        }
        if (xs.size() >= 2)
        {
            const Eigen::Map<const Eigen::VectorXd> x(xs.data(), static_cast<Index>(xs.size()));
            const Eigen::Map<const Eigen::VectorXd> y(ys.data(), static_cast<Index>(ys.size()));
            const Eigen::VectorXd xc = x.array() - x.mean();
            table.fitted_exponent = xc.dot(y.array().matrix() - Eigen::VectorXd::Constant(y.size(), y.mean())) /
                                    xc.squaredNorm();
        }
        return table;
    }

    namespace
    {
        Eigen::MatrixXd embedded_identity(int d)
        {
            return Eigen::MatrixXd::Identity(d, d - 1);
        }

        Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
        {
            std::normal_distribution<double> normal;
            const Eigen::Matrix3d g = Eigen::Matrix3d::NullaryExpr([&]() { return normal(rng); });
            const Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
            Eigen::Matrix3d q = qr.householderQ();
            const Eigen::Vector3d sign = qr.matrixQR().diagonal().array().sign();
            q = q * sign.asDiagonal();
            if (q.determinant() < 0.0)
            {
                q.col(0) *= -1.0;
            }
            return q;
        }

        LatticePtr rotation_lattice(int planar_nodes, int vertical_nodes)
        {
            CylinderSpec spec;
            spec.ambient_dim = 3;
            spec.codomain_dim = 3;
            spec.planar_box.assign(2, Interval{0.0, 1.0});
            spec.half_thickness = 1.0;
            const std::vector<Index> counts{planar_nodes, planar_nodes, vertical_nodes};
            return std::make_shared<Lattice>(build_lattice(spec, counts, {true, true, false}));
        }
    }

    SolverOptions rotation_solver_defaults()
    {
        SolverOptions opts;
        opts.tol_g = 1e-6;
        opts.max_iters = 40;
        opts.multistart = 2;
        return opts;
    }

    RotationReport rotation_invariance_experiment(const RotationSpec& spec)
    {
        constexpr int d = 3;
        if (!(spec.eta > 0.0 && spec.eta < 0.5))
        {
            throw ValidationError("eta must lie in (0, 1/2)", "eta");
        }
        if (!(spec.delta > 0.0 && spec.delta < 1.0))
        {
            throw ValidationError("the asymmetry test needs delta < 1", "delta");
        }
        if (!(spec.delta_invariance > 4.0))
        {
            throw ValidationError("the invariance test needs delta > 4", "delta_invariance");
        }
        if (spec.resolution < 2 || spec.invariance_vertical_resolution < 1 || spec.rotations < 1)
        {
            throw ValidationError("resolutions and rotation count must be positive", "resolution");
        }
        const double p = spec.p;
        const double eta = spec.eta;
        const auto density = rotation_example(eta, p, d);
        RotationReport report;

        const auto plus_lattice = rotation_lattice(spec.resolution, 2 * spec.resolution + 1);
        const auto plus_stencil = build_stencil(density->support(), 1.0, 1.0 / spec.delta, *plus_lattice);
        SolverOptions solver = spec.solver;
        solver.seed = spec.seed;
        const PeriodicClassSpec plus{embedded_identity(d), std::nullopt, CellShape::slab};
        const auto plus_run = minimize_periodic_cell(*density, spec.delta, plus, plus_lattice, plus_stencil, solver);
        report.value_plus = plus_run.value;
        report.value_plus_starts = plus_run.start_values;

        VectorObjective bumps = [p](const Eigen::VectorXd& b, Eigen::VectorXd& grad) {
            grad.setZero(b.size());
            double value = 0.0;
            for (int i = 0; i < 2; ++i)
            {
                const Eigen::VectorXd v = b - 2.0 * Eigen::VectorXd::Unit(b.size(), i);
                const double norm = v.norm();
                value += std::pow(norm, p);
                if (norm > 0.0)
                {
                    grad += p * std::pow(norm, p - 2.0) * v;
                }
            }
            return value;
        };
        const auto inner = minimize_vector(bumps, Eigen::VectorXd::Zero(d), 1e-12, 1000);
        report.optimal_b = inner.argmin;
        report.value_minus_lower_bound = 2.0 * (2.0 - spec.delta * (1.0 + eta)) * inner.value;
        report.uniform_lower_bound = (1.0 - eta) * std::pow(2.0, 2.0 + p / 2.0);
        report.analytic_upper_bound = 4.0 + 8.0 * p * eta * std::pow(1.0 + 2.0 * eta, p - 1.0);
        report.asymmetric = report.value_plus < report.value_minus_lower_bound;

        Eigen::MatrixXd base = spec.invariance_M;
        if (base.size() == 0)
        {
            base.resize(d, d - 1);
            base << 1.0, 0.3, 0.0, 0.7, 0.2, 0.0;
        }
        if (base.rows() != d || base.cols() != d - 1)
        {
            throw ValidationError("invariance slope must be 3 x 2", "invariance_M");
        }
        const auto inv_lattice = rotation_lattice(spec.resolution, 2 * spec.invariance_vertical_resolution + 1);
        const auto inv_stencil = build_stencil(density->support(), 1.0, 1.0 / spec.delta_invariance, *inv_lattice);
        std::mt19937_64 rng(spec.seed);
        report.rotated_slopes.push_back(base);
        for (int j = 0; j < spec.rotations; ++j)
        {
            report.rotated_slopes.push_back(random_rotation(rng) * base);
        }
        for (const auto& slope : report.rotated_slopes)
        {
            const PeriodicClassSpec cell{slope, std::nullopt, CellShape::slab};
            const auto run =
                minimize_periodic_cell(*density, spec.delta_invariance, cell, inv_lattice, inv_stencil, solver);
            report.invariance_values.push_back(run.value);
        }
        const auto [lo, hi] = std::minmax_element(report.invariance_values.begin(), report.invariance_values.end());
        report.invariance_spread = (*hi - *lo) / std::max(std::abs(*hi), 1e-300);
        report.invariant = report.invariance_spread <= 0.05;
        return report;
    }
}
