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
#include "nlthin/densities.hpp"
#include "nlthin/energy.hpp"
#include "nlthin/homogenization.hpp"
#include "nlthin/kernels.hpp"
#include "nlthin/lattice.hpp"
#include "nlthin/solvers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace nlthin;

namespace
{
    using Clock = std::chrono::steady_clock;

    struct Verdict
    {
        bool pass = false;
        std::string detail;
    };

    double seconds_since(Clock::time_point start)
    {
        return std::chrono::duration<double>(Clock::now() - start).count();
    }

    double relative_gap(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

    std::string fmt(const char* format, double a)
    {
        char buffer[64];
        std::snprintf(buffer, sizeof buffer, format, a);
        return buffer;
    }

    /// Gaps decrease in trend: the last gap is the smallest and no gap rises by more than 1%.
    bool decreasing_in_trend(const std::vector<double>& gaps)
    {
        for (std::size_t i = 1; i < gaps.size(); ++i)
        {
            if (gaps[i] > gaps[i - 1] * 1.01)
            {
                return false;
            }
        }
        return gaps.back() <= *std::min_element(gaps.begin(), gaps.end());
    }

    std::string join(const std::vector<double>& values, const char* format)
    {
        std::string out;
        for (double v : values)
        {
            out += (out.empty() ? "" : " ") + fmt(format, v);
        }
        return out;
    }

    Verdict theta_limit()
    {
        set_thread_count(1);
        const auto start = Clock::now();
        CellOptions opts;
        opts.ladder = {16, 32, 64};
        const auto estimate = cell_formula_delta(*pure_convolution(1.0, 2.0), 2, 1.0, Eigen::MatrixXd::Ones(1, 1), opts);
        const double runtime = seconds_since(start);
        const double gap = relative_gap(estimate.value, 2.0);
        Verdict v;
        v.pass = gap <= 0.03 && runtime <= 60.0;
        v.detail = "value " + fmt("%.5f", estimate.value) + " vs 2.0, gap " + fmt("%.4f", gap) + " (<= 0.03), finest " +
                   fmt("%.5f", estimate.ladder.back().value) + ", runtime " + fmt("%.1f", runtime) + " s (<= 60)";
        return v;
    }

    Verdict regime_formulas()
    {
        const auto density = pure_convolution(2.0, 2.0);
        const Eigen::MatrixXd M = Eigen::MatrixXd::Ones(1, 1);

        auto start = Clock::now();
        const auto zero = cell_formula_zero(*density, 2, M);
        const double zero_time = seconds_since(start);
        start = Clock::now();
        const auto infinity = cell_formula_infinity(*planar_cut(density), 2, M);
        const double infinity_time = seconds_since(start);

        const double zero_gap = relative_gap(zero.value, 128.0 / 3.0);
        const double infinity_gap = relative_gap(infinity.value, 64.0 / 3.0);
        Verdict v;
        v.pass = zero_gap <= 0.05 && infinity_gap <= 0.05 && zero_time <= 300.0 && infinity_time <= 300.0;
        v.detail = "zero " + fmt("%.4f", zero.value) + " vs 128/3 gap " + fmt("%.4f", zero_gap) + " in " +
                   fmt("%.1f", zero_time) + " s; infinity " + fmt("%.4f", infinity.value) + " vs 64/3 gap " +
                   fmt("%.4f", infinity_gap) + " in " + fmt("%.1f", infinity_time) + " s (each <= 0.05, <= 300 s)";
        return v;
    }

    Verdict scaling_law()
    {
        const auto table = scaling_probe();
        const double exponent_error = std::abs(table.fitted_exponent + 0.5);
        Verdict v;
        v.pass = table.indicator_rows.size() == 6 && table.max_relative_error <= 0.01 && exponent_error <= 0.05;
        v.detail = "indicator max relative error " + fmt("%.5f", table.max_relative_error) + " over " +
                   std::to_string(table.indicator_rows.size()) + " pairs (<= 0.01); fitted exponent " +
                   fmt("%.4f", table.fitted_exponent) + " (-0.5 +- 0.05)";
        return v;
    }

    Verdict separation_of_scales()
    {
        const auto start = Clock::now();
        const auto density = pure_convolution(2.0, 2.0);
        const Eigen::MatrixXd M = Eigen::MatrixXd::Ones(1, 1);
        const double reference = cell_formula_zero(*density, 2, M).value;
        std::vector<double> values;
        std::vector<double> gaps;
        for (double delta : {1.0, 0.5, 0.25, 0.125})
        {
            values.push_back(cell_formula_delta(*density, 2, delta, M).value);
            gaps.push_back(relative_gap(values.back(), reference));
        }
        const double runtime = seconds_since(start);
        Verdict v;
        v.pass = decreasing_in_trend(gaps) && gaps.back() <= 0.05 && runtime <= 600.0;
        v.detail = "zero-regime value " + fmt("%.4f", reference) + "; delta 1, 1/2, 1/4, 1/8 values " +
                   join(values, "%.4f") + ", gaps " + join(gaps, "%.4f") + " (final <= 0.05), runtime " +
                   fmt("%.1f", runtime) + " s (<= 600)";
        return v;
    }

    Verdict rotation_example_check()
    {
        const auto start = Clock::now();
        const auto report = rotation_invariance_experiment();
        const double runtime = seconds_since(start);
        const bool upper = report.value_plus <= 4.88 * 1.05;
        const bool lower = report.value_minus_lower_bound >= 7.6 * 0.95;
        const bool invariant = report.invariance_spread <= 0.05;
        Verdict v;
        v.pass = upper && lower && report.asymmetric && invariant && runtime <= 1200.0;
        v.detail = "value_plus " + fmt("%.4f", report.value_plus) + " (<= 5.124), value_minus_lower_bound " +
                   fmt("%.4f", report.value_minus_lower_bound) + " (>= 7.22), verdict " +
                   (report.asymmetric ? "asymmetric" : "inconclusive") + ", rotated values " +
                   join(report.invariance_values, "%.5f") + " spread " + fmt("%.4f", report.invariance_spread) +
                   " (<= 0.05), runtime " + fmt("%.0f", runtime) + " s (<= 1200)";
        return v;
    }

    Verdict gamma_min_convergence()
    {
        GammaMinSpec spec;
        spec.density = pure_convolution(1.0, 2.0);
        spec.M = Eigen::MatrixXd::Ones(1, 1);
        spec.eps = {0.125, 0.0625, 0.03125};
        const auto table = gamma_min_sweep(spec);
        std::vector<double> gaps;
        std::vector<double> values;
        for (const auto& row : table.rows)
        {
            gaps.push_back(row.gap);
            values.push_back(row.value);
        }
        Verdict v;
        v.pass = decreasing_in_trend(gaps) && gaps.back() <= 0.05;
        v.detail = "min/|A| " + join(values, "%.5f") + " vs oracle " + fmt("%.4f", table.rows.front().oracle) +
                   ", gaps " + join(gaps, "%.4f") + " (final <= 0.05)";
        return v;
    }

    // Property suites.

    LatticePtr film(Index planar, Index vertical, double half_thickness = 1.0)
    {
        CylinderSpec spec;
        spec.half_thickness = half_thickness;
        const std::vector<Index> counts{planar, vertical};
        return std::make_shared<Lattice>(build_lattice(spec, counts, {false, false}));
    }

    Eigen::MatrixXd random_values(int m, Index n, std::mt19937_64& rng)
    {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        return Eigen::MatrixXd::NullaryExpr(m, n, [&]() { return u(rng); });
    }

    struct Property
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    Property rescaling_identity(std::mt19937_64& rng)
    {
        const auto density = pure_convolution(1.0, 2.5);
        double worst = 0.0;
        for (const auto& [eps, gamma] :
             std::vector<std::pair<double, double>>{{0.5, 0.5}, {0.25, 0.5}, {0.5, 0.125}, {0.125, 0.0625}})
        {
            const auto scale = ScaleParams::thin_film(eps, gamma);
            const auto rescaled = film(17, 9);
            const auto physical = film(17, 9, gamma);
            const auto stencil = build_stencil(density->support(), eps, gamma, *rescaled);
            for (int s = 0; s < 5; ++s)
            {
                const Eigen::MatrixXd values = random_values(2, rescaled->size(), rng);
                const double a = energy_rescaled(Field(rescaled, values), *density, scale, stencil).total;
                const double b = energy_physical(Field(physical, values), *density, scale, stencil).total;
                worst = std::max(worst, relative_gap(b, a));
            }
        }
        return {"rescaling identity", worst <= 1e-13, "max relative difference " + fmt("%.2e", worst)};
    }

    Property convolution_forms(std::mt19937_64& rng)
    {
        double worst = 0.0;
        for (const auto& [eps, gamma, p] : std::vector<std::tuple<double, double, double>>{
                 {0.5, 0.5, 2.0}, {0.25, 0.5, 3.0}, {0.5, 0.125, 2.0}, {0.125, 0.0625, 1.5}})
        {
            const auto lattice = film(21, 11);
            const Field u(lattice, random_values(1, lattice->size(), rng));
            const auto forms = conv_energy_forms_check(u, 1.0, ScaleParams::thin_film(eps, gamma), p);
            worst = std::max({worst, relative_gap(forms.xy_form, forms.xi_form),
                              relative_gap(forms.z_form, forms.xi_form)});
        }
        return {"three convolution forms", worst <= 1e-12, "max relative difference " + fmt("%.2e", worst)};
    }

    Property truncation_monotone(std::mt19937_64& rng)
    {
        const auto density = pure_convolution(1.0, 2.0);
        const auto scale = ScaleParams::thin_film(0.25, 0.25);
        const auto lattice = film(33, 9);
        const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
        bool monotone = true;
        bool reaches_full = true;
        for (int s = 0; s < 10; ++s)
        {
            const Field u(lattice, random_values(1, lattice->size(), rng));
            double previous = 0.0;
            for (double T : {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0})
            {
                const double value = energy_truncated(u, *density, scale, stencil, T).total;
                monotone = monotone && value >= previous;
                previous = value;
            }
            reaches_full = reaches_full && previous == energy_rescaled(u, *density, scale, stencil).total;
        }
        return {"truncation monotone", monotone && reaches_full,
                std::string("monotone in T: ") + (monotone ? "yes" : "no") + ", T = 1 equals full energy: " +
                    (reaches_full ? "yes" : "no")};
    }

    Property gradient_check(std::mt19937_64& rng)
    {
        const std::vector<DensityPtr> densities{pure_convolution(1.0, 3.0),
                                                homogeneous_convex(mollifier_over_norm_p(2.0), 2.5)};
        const auto scale = ScaleParams::thin_film(0.5, 0.25);
        const auto lattice = film(11, 7);
        double worst = 0.0;
        int samples = 0;
        for (const auto& density : densities)
        {
            const auto stencil = build_stencil(density->support(), 0.5, 0.25, *lattice);
            const Field u(lattice, random_values(2, lattice->size(), rng));
            const Eigen::MatrixXd g = gradient_rescaled(u, *density, scale, stencil).values();
            std::uniform_int_distribution<Index> node(0, lattice->size() - 1);
            std::uniform_int_distribution<int> component(0, 1);
            for (int s = 0; s < 500; ++s, ++samples)
            {
                const Index i = node(rng);
                const int c = component(rng);
                const double h = 1e-5;
                Eigen::MatrixXd plus = u.values();
                Eigen::MatrixXd minus = u.values();
                plus(c, i) += h;
                minus(c, i) -= h;
                const double fd = (energy_rescaled(Field(lattice, plus), *density, scale, stencil).total -
                                   energy_rescaled(Field(lattice, minus), *density, scale, stencil).total) /
                                  (2.0 * h);
                worst = std::max(worst, std::abs(fd - g(c, i)) / std::max({std::abs(g(c, i)), std::abs(fd), 1e-8}));
            }
        }
        return {"gradient vs finite differences", samples == 1000 && worst <= 1e-5,
                std::to_string(samples) + " samples, max relative error " + fmt("%.2e", worst)};
    }

    Property convexity_midpoint(std::mt19937_64& rng)
    {
        const auto density = pure_convolution(1.0, 2.5);
        const auto scale = ScaleParams::thin_film(0.5, 0.25);
        const auto lattice = film(9, 7);
        const auto stencil = build_stencil(density->support(), 0.5, 0.25, *lattice);
        int violations = 0;
        for (int s = 0; s < 100; ++s)
        {
            const Eigen::MatrixXd u = random_values(2, lattice->size(), rng);
            const Eigen::MatrixXd v = random_values(2, lattice->size(), rng);
            const double fu = energy_rescaled(Field(lattice, u), *density, scale, stencil).total;
            const double fv = energy_rescaled(Field(lattice, v), *density, scale, stencil).total;
            const double fm = energy_rescaled(Field(lattice, 0.5 * (u + v)), *density, scale, stencil).total;
            violations += fm > 0.5 * (fu + fv) * (1.0 + 1e-12) ? 1 : 0;
        }
        return {"convexity midpoint", violations == 0, "100 pairs, " + std::to_string(violations) + " violations"};
    }

    Property dirichlet_feasibility()
    {
        const auto density = pure_convolution(1.0, 2.5);
        const auto scale = ScaleParams::thin_film(0.25, 0.25);
        const auto lattice = film(25, 9);
        const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
        DirichletClassSpec spec;
        spec.datum = [](const Eigen::VectorXd& x) {
            return Eigen::Vector2d(std::sin(3.0 * x(0)), x(0) * x(0));
        };
        const auto mask = dirichlet_fixed_mask(*lattice, spec.collar_radius * scale.eps());
        SolverOptions opts;
        opts.multistart = 2;
        opts.max_iters = 300;
        long iterates = 0;
        long violations = 0;
        opts.on_iterate = [&](const Eigen::MatrixXd& x) {
            ++iterates;
            for (Index i = 0; i < lattice->size(); ++i)
            {
                if (mask[i] && x.col(i) != spec.boundary_value(lattice->coordinate(i).head(1)))
                {
                    ++violations;
                }
            }
        };
        minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
        return {"Dirichlet feasibility", iterates > 0 && violations == 0,
                std::to_string(iterates) + " iterates, " + std::to_string(violations) + " collar violations"};
    }

    Property restart_certificate()
    {
        const auto density = pure_convolution(1.0, 3.0);
        const auto scale = ScaleParams::thin_film(0.25, 0.25);
        const auto lattice = film(25, 9);
        const auto stencil = build_stencil(density->support(), 0.25, 0.25, *lattice);
        DirichletClassSpec spec;
        spec.datum = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::sin(3.0 * x(0))); };
        SolverOptions opts;
        opts.certify = true;
        opts.tol_g = 1e-10;
        const auto report = minimize_dirichlet(*density, scale, lattice, spec, stencil, opts);
        const double spread = report.certificate_spread.value_or(std::numeric_limits<double>::infinity());
        return {"convex 5-restart agreement", report.start_values.size() == 6 && spread <= 1e-6,
                std::to_string(report.start_values.size() - 1) + " restarts, spread " + fmt("%.2e", spread)};
    }

    Property auditor()
    {
        const bool cylinder = audit_hypotheses(cylinder_indicator(1.0), 2.0, 2).all_pass();
        const bool mollifier = audit_hypotheses(mollifier_over_norm_p(2.0), 2.0, 2).all_pass();
        const auto singular = audit_hypotheses(vertical_singular(0.5), 2.0, 2);
        const bool h3_fails = !singular.entry("H3").pass;
        return {"hypothesis auditor", cylinder && mollifier && h3_fails,
                std::string("cylinder ") + (cylinder ? "passes" : "fails") + ", mollifier " +
                    (mollifier ? "passes" : "fails") + ", vertical_singular(0.5) H3 " +
                    (h3_fails ? "fails" : "passes")};
    }

    Verdict property_suites()
    {
        std::mt19937_64 rng(20260101);
        std::vector<Property> properties;
        properties.push_back(rescaling_identity(rng));
        properties.push_back(convolution_forms(rng));
        properties.push_back(truncation_monotone(rng));
        properties.push_back(gradient_check(rng));
        properties.push_back(convexity_midpoint(rng));
        properties.push_back(dirichlet_feasibility());
        properties.push_back(restart_certificate());
        properties.push_back(auditor());
        Verdict v;
        v.pass = std::all_of(properties.begin(), properties.end(), [](const Property& p) { return p.pass; });
        for (const auto& p : properties)
        {
            v.detail += (v.detail.empty() ? "" : "; ") + p.name + " " + (p.pass ? "ok" : "FAILED") + " (" + p.detail + ")";
        }
        return v;
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-7)")->check(CLI::Range(1, 7));
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria{
        {1, {"theta-limit reproduction", theta_limit}},
        {2, {"regime formulas", regime_formulas}},
        {3, {"scaling law", scaling_law}},
        {4, {"separation of scales", separation_of_scales}},
        {5, {"rotation example", rotation_example_check}},
        {6, {"gamma-min convergence", gamma_min_convergence}},
        {7, {"property suites", property_suites}}};

    bool all = true;
    for (const auto& [id, criterion] : criteria)
    {
        if (only != 0 && id != only)
        {
            continue;
        }
        Verdict verdict;
        try
        {
            verdict = criterion.second();
        }
        catch (const std::exception& e)
        {
            verdict.detail = std::string("error: ") + e.what();
        }
        std::printf("criterion %d %s: %s: %s\n", id, verdict.pass ? "PASS" : "FAIL", criterion.first.c_str(),
                    verdict.detail.c_str());
        std::fflush(stdout);
        all = all && verdict.pass;
    }
    return all ? 0 : 1;
}
