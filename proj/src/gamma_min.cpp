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

#include "nlthin/cli.hpp"

#include "nlthin/energy.hpp"
#include "nlthin/error.hpp"
#include "nlthin/lattice.hpp"

#include <chrono>
#include <cmath>
#include <memory>

namespace nlthin
{
    namespace
    {
        using Clock = std::chrono::steady_clock;

        ScaleParams trajectory_scales(Trajectory trajectory, double eps, double delta)
        {
            switch (trajectory)
            {
            case Trajectory::constant_delta:
                return ScaleParams::thin_film(eps, eps / delta);
            case Trajectory::eps_is_gamma_squared:
                return ScaleParams::thin_film(eps, std::sqrt(eps));
            case Trajectory::gamma_is_eps_squared:
                return ScaleParams::thin_film(eps, eps * eps);
            }
            throw ValidationError("unknown trajectory", "trajectory");
        }

        Regime limit_regime(Trajectory trajectory, double delta)
        {
            switch (trajectory)
            {
            case Trajectory::constant_delta:
                return Regime::finite(delta);
            case Trajectory::eps_is_gamma_squared:
                return Regime::zero();
            case Trajectory::gamma_is_eps_squared:
                return Regime::infinity();
            }
            throw ValidationError("unknown trajectory", "trajectory");
        }
    }

    std::string to_string(Trajectory trajectory)
    {
        switch (trajectory)
        {
        case Trajectory::constant_delta:
            return "constant_delta";
        case Trajectory::eps_is_gamma_squared:
            return "eps_is_gamma_squared";
        case Trajectory::gamma_is_eps_squared:
            return "gamma_is_eps_squared";
        }
        return "unknown";
    }

    Trajectory trajectory_from_string(const std::string& tag)
    {
        for (auto t : {Trajectory::constant_delta, Trajectory::eps_is_gamma_squared, Trajectory::gamma_is_eps_squared})
        {
            if (to_string(t) == tag)
            {
                return t;
            }
        }
        throw ValidationError("unknown trajectory '" + tag +
                                  "' (available: constant_delta, eps_is_gamma_squared, gamma_is_eps_squared)",
                              "trajectory");
    }

    GammaMinTable gamma_min_sweep(const GammaMinSpec& spec)
    {
        if (!spec.density)
        {
            throw ValidationError("density is required", "density");
        }
        const Density& density = *spec.density;
        if (density.family() != "pure_convolution")
        {
            throw ValidationError("the sweep oracle needs the pure_convolution density", "density.family");
        }
        if (spec.d < 2)
        {
            throw ValidationError("ambient dimension must be at least 2", "d");
        }
        if (spec.M.cols() != spec.d - 1 || spec.M.rows() < 1)
        {
            throw ValidationError("slope must have d - 1 columns", "M");
        }
        if (spec.trajectory == Trajectory::constant_delta && !(spec.delta > 0.0 && std::isfinite(spec.delta)))
        {
            throw ValidationError("delta must be positive and finite", "delta");
        }
        if (spec.eps.empty())
        {
            throw ValidationError("at least one eps is required", "eps");
        }
        if (spec.planar_cells < 0 || spec.vertical_cells < 0)
        {
            throw ValidationError("cell counts must be non-negative", "planar_cells");
        }

        const auto& support = density.support().traits();
        const double radius = support.planar_radius;
        GammaMinTable table;
        table.trajectory = spec.trajectory;
        table.regime = limit_regime(spec.trajectory, spec.delta);
        const double oracle = oracle_pure_conv(spec.M, radius, density.exponent(), table.regime);

        DirichletClassSpec dirichlet;
        dirichlet.M = spec.M;
        dirichlet.collar_radius = spec.collar_radius;

        for (double eps : spec.eps)
        {
            const auto start = Clock::now();
            const auto scale = trajectory_scales(spec.trajectory, eps, spec.delta);
            const double vertical_reach = scale.delta() * support.vertical_halfheight;
            const Index vertical_intervals = vertical_reach < 2.0
                                                 ? aligned_intervals(2.0, vertical_reach, spec.vertical_cells)
                                                 : 2 * spec.vertical_cells + 1;

            CylinderSpec cylinder;
            cylinder.ambient_dim = spec.d;
            cylinder.planar_box.assign(spec.d - 1, Interval{0.0, 1.0});
            cylinder.half_thickness = 1.0;
            cylinder.codomain_dim = static_cast<int>(spec.M.rows());
            std::vector<Index> counts(spec.d, aligned_intervals(1.0, radius * eps, spec.planar_cells) + 1);
            counts.back() = vertical_intervals + 1;
            const auto lattice =
                std::make_shared<Lattice>(build_lattice(cylinder, counts, std::vector<bool>(spec.d, false)));
            const auto stencil = build_stencil(density.support(), scale.eps(), scale.gamma(), *lattice);
            const auto report = minimize_dirichlet(density, scale, lattice, dirichlet, stencil, spec.solver);

            GammaMinRow row;
            row.eps = scale.eps();
            row.gamma = scale.gamma();
            row.delta = scale.delta();
            row.value = report.value;
            row.oracle = oracle;
            row.gap = oracle != 0.0 ? std::abs(row.value - oracle) / std::abs(oracle) : std::abs(row.value);
            row.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
            row.grad_norm = report.grad_norm;
            row.iterations = report.iterations;
            row.converged = report.converged;
            row.history = report.history;
            table.rows.push_back(std::move(row));
        }
        return table;
    }
}
