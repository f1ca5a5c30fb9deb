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
#include "nlthin/homogenization.hpp"
#include "nlthin/io.hpp"
#include "nlthin/kernels.hpp"
#include "nlthin/lattice.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace nlthin
{
    namespace
    {
        using io::json;

        /// Read-only view of one JSON object that records which keys were consumed, so that
        /// leftovers can be reported as unknown fields with their full path.
        class ConfigNode
        {
        public:
            ConfigNode(const json& node, std::string path)
                : m_node(&node)
                , m_path(std::move(path))
            {
                if (!m_node->is_object())
                {
                    throw ValidationError("expected an object", m_path.empty() ? "config" : m_path);
                }
            }

            std::string path_of(const std::string& key) const { return m_path.empty() ? key : m_path + "." + key; }

            bool has(const std::string& key) const { return m_node->contains(key); }

            const json& raw(const std::string& key) const
            {
                if (!has(key))
                {
                    throw ValidationError("missing required field", path_of(key));
                }
                m_used.insert(key);
                return m_node->at(key);
            }

            template <typename T>
            T get(const std::string& key) const
            {
                return convert<T>(raw(key), path_of(key));
            }

            template <typename T>
            T get_or(const std::string& key, T fallback) const
            {
                return has(key) ? get<T>(key) : fallback;
            }

            ConfigNode child(const std::string& key) const { return ConfigNode(raw(key), path_of(key)); }

            Eigen::MatrixXd matrix(const std::string& key) const { return to_matrix(raw(key), path_of(key)); }

            void finish() const
            {
                for (const auto& item : m_node->items())
                {
                    if (!m_used.contains(item.key()))
                    {
                        throw ValidationError("unknown field", path_of(item.key()));
                    }
                }
            }

            template <typename T>
            static T convert(const json& value, const std::string& path)
            {
                if constexpr (std::is_same_v<T, bool>)
                {
                    if (!value.is_boolean())
                    {
                        throw ValidationError("expected a boolean", path);
                    }
                    return value.get<bool>();
                }
                else if constexpr (std::is_same_v<T, std::string>)
                {
                    if (!value.is_string())
                    {
                        throw ValidationError("expected a string", path);
                    }
                    return value.get<std::string>();
                }
                else if constexpr (std::is_floating_point_v<T>)
                {
                    if (!value.is_number())
                    {
                        throw ValidationError("expected a number", path);
                    }
                    return value.get<T>();
                }
                else if constexpr (std::is_integral_v<T>)
                {
                    if (!value.is_number_integer())
                    {
                        throw ValidationError("expected an integer", path);
                    }
                    if (std::is_unsigned_v<T> && value.is_number_integer() && !value.is_number_unsigned() &&
                        value.get<long long>() < 0)
                    {
                        throw ValidationError("expected a non-negative integer", path);
                    }
                    return value.get<T>();
                }
                else
                {
                    if (!value.is_array())
                    {
                        throw ValidationError("expected an array", path);
                    }
                    T out;
                    for (std::size_t i = 0; i < value.size(); ++i)
                    {
                        out.push_back(convert<typename T::value_type>(value[i], path + "[" + std::to_string(i) + "]"));
                    }
                    return out;
                }
            }

            /// A number is a 1 x 1 matrix, a flat array a single row, an array of arrays a row list.
            static Eigen::MatrixXd to_matrix(const json& value, const std::string& path)
            {
                if (value.is_number())
                {
                    return Eigen::MatrixXd::Constant(1, 1, value.get<double>());
                }
                if (!value.is_array() || value.empty())
                {
                    throw ValidationError("expected a number or a non-empty array", path);
                }
                if (!value[0].is_array())
                {
                    const auto row = convert<std::vector<double>>(value, path);
                    return Eigen::Map<const Eigen::MatrixXd>(row.data(), 1, static_cast<Index>(row.size()));
                }
                const auto rows = convert<std::vector<std::vector<double>>>(value, path);
                Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
                for (std::size_t i = 0; i < rows.size(); ++i)
                {
                    if (rows[i].size() != rows[0].size())
                    {
                        throw ValidationError("rows must have equal length", path);
                    }
                    for (std::size_t j = 0; j < rows[i].size(); ++j)
                    {
                        out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
                    }
                }
                return out;
            }

        private:
            const json* m_node;
            std::string m_path;
            mutable std::set<std::string> m_used;
        };

        Profile read_profile(const ConfigNode& node)
        {
            const auto shape = node.get<std::string>("shape");
            const auto scale = node.get<double>("scale");
            node.finish();
            if (shape == "gaussian")
            {
                return Profile::gaussian(scale);
            }
            if (shape == "box")
            {
                return Profile::box(scale);
            }
            throw ValidationError("unknown profile shape '" + shape + "' (available: gaussian, box)",
                                  node.path_of("shape"));
        }

        Kernel read_kernel(const ConfigNode& node)
        {
            const auto family = node.get<std::string>("family");
            const int d = node.get_or<int>("d", 0);
            auto make = [&]() -> Kernel {
                if (family == "cylinder_indicator")
                {
                    return cylinder_indicator(node.get_or<double>("r", 1.0), d);
                }
                if (family == "mollifier_over_norm_p")
                {
                    return mollifier_over_norm_p(node.get<double>("p"), d);
                }
                if (family == "separable")
                {
                    return separable(read_profile(node.child("planar")), read_profile(node.child("vertical")),
                                     node.get<double>("p"), d);
                }
                if (family == "vertical_singular")
                {
                    return vertical_singular(node.get<double>("beta"), d);
                }
                if (family == "shifted_cylinder")
                {
                    return shifted_cylinder(node.get_or<double>("r", 1.0), node.get<double>("center"), d);
                }
                if (family == "planar_cut")
                {
                    return planar_cut(read_kernel(node.child("kernel")));
                }
                throw ValidationError("unknown kernel family '" + family +
                                          "' (available: cylinder_indicator, mollifier_over_norm_p, separable, "
                                          "vertical_singular, shifted_cylinder, planar_cut)",
                                      node.path_of("family"));
            };
            auto kernel = make();
            node.finish();
            return kernel;
        }

        DensityPtr read_density(const ConfigNode& node)
        {
            const auto family = node.get<std::string>("family");
            auto make = [&]() -> DensityPtr {
                if (family == "pure_convolution")
                {
                    return pure_convolution(node.get_or<double>("r", 1.0), node.get<double>("p"));
                }
                if (family == "homogeneous_convex")
                {
                    return homogeneous_convex(read_kernel(node.child("kernel")), node.get<double>("p"));
                }
                if (family == "rotation_example")
                {
                    return rotation_example(node.get<double>("eta"), node.get<double>("p"), node.get_or<int>("d", 3));
                }
                if (family == "rotation_bumps")
                {
                    return rotation_bumps(node.get<double>("eta"), node.get<double>("p"), node.get_or<int>("d", 3));
                }
                if (family == "planar_cut")
                {
                    return planar_cut(read_density(node.child("density")));
                }
                throw ValidationError("unknown density family '" + family +
                                          "' (available: pure_convolution, homogeneous_convex, rotation_example, "
                                          "rotation_bumps, planar_cut)",
                                      node.path_of("family"));
            };
            auto density = make();
            node.finish();
            return density;
        }

        SolverOptions read_solver(const ConfigNode& root, SolverOptions opts)
        {
            opts.seed = root.get_or<std::uint64_t>("seed", opts.seed);
            if (!root.has("solver"))
            {
                return opts;
            }
            const auto node = root.child("solver");
            opts.tol_g = node.get_or<double>("tol_g", opts.tol_g);
            opts.max_iters = node.get_or<int>("max_iters", opts.max_iters);
            opts.multistart = node.get_or<int>("multistart", opts.multistart);
            opts.seed = node.get_or<std::uint64_t>("seed", opts.seed);
            opts.certify = node.get_or<bool>("certify", opts.certify);
            opts.perturbation = node.get_or<double>("perturbation", opts.perturbation);
            node.finish();
            if (!(opts.tol_g > 0.0) || opts.max_iters < 0 || opts.multistart < 0 || !(opts.perturbation >= 0.0))
            {
                throw ValidationError("tolerance must be positive and counts non-negative", node.path_of("solver"));
            }
            return opts;
        }

        /// Sets a dotted path to a scalar; the value is parsed as JSON and kept as a string otherwise.
        void apply_override(json& config, const std::string& assignment)
        {
            const auto eq = assignment.find('=');
            if (eq == std::string::npos || eq == 0)
            {
                throw ValidationError("override must have the form key=value", assignment);
            }
            const auto key = assignment.substr(0, eq);
            const auto text = assignment.substr(eq + 1);
            json value = json::parse(text, nullptr, false);
            if (value.is_discarded())
            {
                value = text;
            }
            if (value.is_structured())
            {
                throw ValidationError("overrides only accept scalar values", key);
            }
            json* node = &config;
            std::stringstream parts(key);
            std::string part;
            std::vector<std::string> path;
            while (std::getline(parts, part, '.'))
            {
                if (part.empty())
                {
                    throw ValidationError("empty path component", key);
                }
                path.push_back(part);
            }
            for (std::size_t i = 0; i + 1 < path.size(); ++i)
            {
                if (!node->contains(path[i]))
                {
                    (*node)[path[i]] = json::object();
                }
                node = &(*node)[path[i]];
                if (!node->is_object())
                {
                    throw ValidationError("override path crosses a non-object value", key);
                }
            }
            (*node)[path.back()] = value;
        }

        struct Invocation
        {
            std::string command;
            json config = json::object();
            std::string stem;
            bool trace = false;
        };

        Eigen::MatrixXd slope_or_unit(const ConfigNode& root, int d)
        {
            if (root.has("M"))
            {
                return root.matrix("M");
            }
            return Eigen::MatrixXd::Ones(1, d - 1);
        }

        void run_audit(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            const auto kernel = read_kernel(root.child("kernel"));
            const double p = root.get<double>("p");
            const int d = root.get_or<int>("d", kernel.dim() > 0 ? kernel.dim() : 2);
            root.finish();
            const auto report = audit_hypotheses(kernel, p, d);

            io::write_json(inv.stem + ".json", io::to_json(report));
            io::CsvWriter csv(inv.stem + ".csv", {"hypothesis", "pass", "statistic", "tolerance", "divergent"});
            for (const auto& e : report.entries)
            {
                csv.row({e.name, static_cast<long long>(e.pass), e.statistic, e.tolerance,
                         static_cast<long long>(e.divergent)});
            }
            std::cout << report.kernel << ": " << (report.all_pass() ? "all hypotheses pass" : "some hypotheses fail")
                      << '\n';
        }

        void run_energy(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            const auto density = read_density(root.child("density"));
            const auto scale_node = root.child("scale");
            const auto scale = ScaleParams::thin_film(scale_node.get<double>("eps"), scale_node.get<double>("gamma"));
            scale_node.finish();

            const auto domain = root.child("domain");
            CylinderSpec cylinder;
            cylinder.ambient_dim = domain.get_or<int>("d", 2);
            cylinder.codomain_dim = domain.get_or<int>("m", 1);
            cylinder.half_thickness = domain.get_or<double>("half_thickness", 1.0);
            cylinder.planar_box.assign(cylinder.ambient_dim - 1 > 0 ? cylinder.ambient_dim - 1 : 1, Interval{});
            if (domain.has("planar_box"))
            {
                const auto box = domain.get<std::vector<std::vector<double>>>("planar_box");
                cylinder.planar_box.clear();
                for (const auto& side : box)
                {
                    if (side.size() != 2)
                    {
                        throw ValidationError("each side needs [lo, hi]", domain.path_of("planar_box"));
                    }
                    cylinder.planar_box.push_back(Interval{side[0], side[1]});
                }
            }
            const auto nodes = domain.get<std::vector<Index>>("nodes");
            const auto periodic =
                domain.get_or<std::vector<bool>>("periodic", std::vector<bool>(nodes.size(), false));
            domain.finish();
            cylinder.validate();
            const auto lattice = std::make_shared<Lattice>(build_lattice(cylinder, nodes, periodic));

            const auto field_node = root.child("field");
            const auto kind = field_node.get<std::string>("kind");
            auto field = [&]() {
                if (kind == "affine")
                {
                    const Eigen::MatrixXd slope = field_node.matrix("slope");
                    if (slope.rows() != cylinder.codomain_dim || slope.cols() != lattice->dim())
                    {
                        throw ValidationError("slope must be m x d", field_node.path_of("slope"));
                    }
                    return Field::from_function(lattice, cylinder.codomain_dim,
                                                [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return slope * x; });
                }
                if (kind == "csv")
                {
                    return io::read_field_csv(field_node.get<std::string>("path"), lattice);
                }
                throw ValidationError("unknown field kind '" + kind + "' (available: affine, csv)",
                                      field_node.path_of("kind"));
            }();
            field_node.finish();
            const double truncation = root.get_or<double>("truncation", unbounded);
            root.finish();

            const auto stencil = build_stencil(density->support(), scale.eps(), scale.gamma(), *lattice);
            const auto breakdown = std::isfinite(truncation) ? energy_truncated(field, *density, scale, stencil, truncation)
                                                             : energy_rescaled(field, *density, scale, stencil);

            json doc = {{"density", density->family()},
                        {"eps", scale.eps()},
                        {"gamma", scale.gamma()},
                        {"delta", scale.delta()},
                        {"lattice", io::to_json(*lattice)},
                        {"stencil", io::to_json(stencil)},
                        {"energy", io::to_json(breakdown)}};
            io::write_json(inv.stem + ".json", doc);
            std::vector<std::string> columns{"offset"};
            for (int a = 0; a < lattice->dim(); ++a)
            {
                columns.push_back("xi" + std::to_string(a));
            }
            columns.push_back("weight");
            columns.push_back("partial");
            io::CsvWriter csv(inv.stem + ".csv", columns);
            for (std::size_t i = 0; i < breakdown.per_offset.size(); ++i)
            {
                const auto& term = breakdown.per_offset[i];
                std::vector<io::Cell> cells{static_cast<long long>(i)};
                for (Index a = 0; a < term.xi.size(); ++a)
                {
                    cells.emplace_back(term.xi(a));
                }
                cells.emplace_back(term.weight);
                cells.emplace_back(term.partial);
                csv.row(cells);
            }
            std::cout << io::format_real(breakdown.total) << '\n';
        }

        void run_scaling(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            ScalingProbeSpec spec;
            spec.p = root.get_or<double>("p", spec.p);
            if (root.has("indicator_pairs"))
            {
                spec.indicator_pairs.clear();
                for (const auto& pair : root.get<std::vector<std::vector<double>>>("indicator_pairs"))
                {
                    if (pair.size() != 2)
                    {
                        throw ValidationError("each pair needs [eps, gamma]", root.path_of("indicator_pairs"));
                    }
                    spec.indicator_pairs.emplace_back(pair[0], pair[1]);
                }
            }
            spec.planar_steps = root.get_or<int>("planar_steps", spec.planar_steps);
            spec.vertical_steps = root.get_or<int>("vertical_steps", spec.vertical_steps);
            spec.beta = root.get_or<double>("beta", spec.beta);
            spec.singular_eps = root.get_or<double>("singular_eps", spec.singular_eps);
            spec.singular_ratios = root.get_or<std::vector<double>>("singular_ratios", spec.singular_ratios);
            spec.singular_vertical_nodes = root.get_or<int>("singular_vertical_nodes", spec.singular_vertical_nodes);
            root.finish();
            const auto table = scaling_probe(spec);

            io::write_json(inv.stem + ".json", io::to_json(table));
            io::CsvWriter csv(inv.stem + ".csv", {"kernel", "eps", "gamma", "raw_energy", "planar_factor",
                                                  "vertical_factor", "predicted", "ratio"});
            auto emit = [&](const std::string& label, const std::vector<ScalingRow>& rows) {
                for (const auto& r : rows)
                {
                    csv.row({label, r.eps, r.gamma, r.raw_energy, r.planar_factor, r.vertical_factor, r.predicted,
                             r.ratio});
                }
            };
            emit("indicator", table.indicator_rows);
            emit("vertical_singular", table.singular_rows);
            std::cout << "max relative error " << io::format_real(table.max_relative_error) << ", fitted exponent "
                      << io::format_real(table.fitted_exponent) << '\n';
        }

        Regime read_regime(const ConfigNode& root)
        {
            const auto kind = root.get_or<std::string>("regime", "finite");
            if (kind == "finite")
            {
                return Regime::finite(root.get_or<double>("delta", 1.0));
            }
            if (kind == "zero")
            {
                return Regime::zero();
            }
            if (kind == "infinity")
            {
                return Regime::infinity();
            }
            throw ValidationError("unknown regime '" + kind + "' (available: finite, zero, infinity)",
                                  root.path_of("regime"));
        }

        void run_cell(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            auto density = read_density(root.child("density"));
            const int d = root.get_or<int>("d", 2);
            const Eigen::MatrixXd M = slope_or_unit(root, d);
            const auto regime = read_regime(root);
            CellOptions opts;
            opts.ladder = root.get_or<std::vector<int>>("ladder", opts.ladder);
            opts.extrapolate = root.get_or<bool>("extrapolate", opts.extrapolate);
            opts.slope_tol = root.get_or<double>("slope_tol", opts.slope_tol);
            opts.slope_max_iters = root.get_or<int>("slope_max_iters", opts.slope_max_iters);
            opts.solver = read_solver(root, opts.solver);
            root.finish();

            HomogenizationEstimate estimate;
            switch (regime.kind)
            {
            case Regime::Kind::finite:
                estimate = cell_formula_delta(*density, d, regime.delta, M, opts);
                break;
            case Regime::Kind::zero:
                estimate = cell_formula_zero(*density, d, M, opts);
                break;
            case Regime::Kind::infinity:
                if (!density->support().traits().all_axes_planar)
                {
                    density = planar_cut(density);
                }
                estimate = cell_formula_infinity(*density, d, M, opts);
                break;
            }

            io::write_json(inv.stem + ".json", io::to_json(estimate, inv.trace));
            io::CsvWriter csv(inv.stem + ".csv", {"resolution", "value", "runtime_s", "grad_norm"});
            for (const auto& point : estimate.ladder)
            {
                csv.row({static_cast<long long>(point.resolution), point.value, point.runtime_s, point.grad_norm});
            }
            std::cout << io::format_real(estimate.value) << '\n';
        }

        void run_asymptotic(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            const auto density = read_density(root.child("density"));
            const int d = root.get_or<int>("d", 2);
            const Eigen::MatrixXd M = slope_or_unit(root, d);
            const double delta = root.get_or<double>("delta", 1.0);
            AsymptoticOptions opts;
            opts.R = root.get_or<std::vector<double>>("R", opts.R);
            opts.planar_cells = root.get_or<int>("planar_cells", opts.planar_cells);
            opts.vertical_cells = root.get_or<int>("vertical_cells", opts.vertical_cells);
            opts.collar_radius = root.get_or<double>("collar_radius", opts.collar_radius);
            opts.solver = read_solver(root, opts.solver);
            root.finish();
            const auto points = asymptotic_formula(*density, d, delta, M, opts);

            json doc = {{"density", density->family()},
                        {"d", d},
                        {"delta", delta},
                        {"M", io::to_json(M)},
                        {"points", io::to_json(points, inv.trace)}};
            io::write_json(inv.stem + ".json", doc);
            io::CsvWriter csv(inv.stem + ".csv", {"R", "value", "runtime_s", "grad_norm"});
            for (const auto& point : points)
            {
                csv.row({point.R, point.value, point.runtime_s, point.grad_norm});
            }
            std::cout << io::format_real(points.empty() ? 0.0 : points.back().value) << '\n';
        }

        void run_gamma_min(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            GammaMinSpec spec;
            spec.density = read_density(root.child("density"));
            spec.d = root.get_or<int>("d", spec.d);
            spec.M = slope_or_unit(root, spec.d);
            spec.trajectory = trajectory_from_string(root.get_or<std::string>("trajectory", "constant_delta"));
            spec.delta = root.get_or<double>("delta", spec.delta);
            spec.eps = root.get_or<std::vector<double>>("eps", spec.eps);
            spec.planar_cells = root.get_or<int>("planar_cells", spec.planar_cells);
            spec.vertical_cells = root.get_or<int>("vertical_cells", spec.vertical_cells);
            spec.collar_radius = root.get_or<double>("collar_radius", spec.collar_radius);
            spec.solver = read_solver(root, spec.solver);
            root.finish();
            const auto table = gamma_min_sweep(spec);

            json rows = json::array();
            for (const auto& r : table.rows)
            {
                rows.push_back({{"eps", r.eps},
                                {"gamma", r.gamma},
                                {"delta", r.delta},
                                {"value", r.value},
                                {"oracle", r.oracle},
                                {"gap", r.gap},
                                {"runtime_s", r.runtime_s},
                                {"grad_norm", r.grad_norm},
                                {"iterations", r.iterations},
                                {"converged", r.converged}});
                if (inv.trace)
                {
                    rows.back()["history"] = io::history_json(r.history);
                }
            }
            json doc = {{"density", spec.density->family()},
                        {"trajectory", to_string(table.trajectory)},
                        {"regime", table.regime.label()},
                        {"M", io::to_json(spec.M)},
                        {"rows", rows}};
            io::write_json(inv.stem + ".json", doc);
            io::CsvWriter csv(inv.stem + ".csv", {"eps", "gamma", "delta", "value", "oracle", "gap", "runtime_s"});
            for (const auto& r : table.rows)
            {
                csv.row({r.eps, r.gamma, r.delta, r.value, r.oracle, r.gap, r.runtime_s});
            }
            std::cout << "final gap " << io::format_real(table.rows.back().gap) << '\n';
        }

        void run_rotation(const Invocation& inv)
        {
            const ConfigNode root(inv.config, "");
            RotationSpec spec;
            spec.eta = root.get_or<double>("eta", spec.eta);
            spec.p = root.get_or<double>("p", spec.p);
            spec.delta = root.get_or<double>("delta", spec.delta);
            spec.delta_invariance = root.get_or<double>("delta_invariance", spec.delta_invariance);
            spec.resolution = root.get_or<int>("resolution", spec.resolution);
            spec.invariance_vertical_resolution =
                root.get_or<int>("invariance_vertical_resolution", spec.invariance_vertical_resolution);
            spec.rotations = root.get_or<int>("rotations", spec.rotations);
            if (root.has("invariance_M"))
            {
                spec.invariance_M = root.matrix("invariance_M");
            }
            spec.seed = root.get_or<std::uint64_t>("seed", spec.seed);
            spec.solver = read_solver(root, spec.solver);
            root.finish();
            const auto report = rotation_invariance_experiment(spec);

            io::write_json(inv.stem + ".json", io::to_json(report));
            io::CsvWriter csv(inv.stem + ".csv", {"quantity", "index", "value"});
            csv.row({std::string("value_plus"), 0LL, report.value_plus});
            for (std::size_t i = 0; i < report.value_plus_starts.size(); ++i)
            {
                csv.row({std::string("value_plus_start"), static_cast<long long>(i), report.value_plus_starts[i]});
            }
            csv.row({std::string("analytic_upper_bound"), 0LL, report.analytic_upper_bound});
            csv.row({std::string("value_minus_lower_bound"), 0LL, report.value_minus_lower_bound});
            csv.row({std::string("uniform_lower_bound"), 0LL, report.uniform_lower_bound});
            for (std::size_t i = 0; i < report.invariance_values.size(); ++i)
            {
                csv.row({std::string("invariance_value"), static_cast<long long>(i), report.invariance_values[i]});
            }
            csv.row({std::string("invariance_spread"), 0LL, report.invariance_spread});
            std::cout << (report.asymmetric ? "asymmetric" : "inconclusive") << '\n';
        }

        void run_oracle(const Invocation& inv, const std::vector<double>& theta_args)
        {
            json doc;
            if (!theta_args.empty())
            {
                const double value = theta(theta_args[0], theta_args[1]);
                doc = {{"theta", value}, {"delta", theta_args[0]}, {"r", theta_args[1]}};
                std::cout << io::format_real(value) << '\n';
            }
            else
            {
                const ConfigNode root(inv.config, "");
                const int d = root.get_or<int>("d", 2);
                const Eigen::MatrixXd M = slope_or_unit(root, d);
                const double r = root.get_or<double>("r", 1.0);
                const double p = root.get<double>("p");
                const auto regime = read_regime(root);
                root.finish();
                const double value = oracle_pure_conv(M, r, p, regime);
                doc = {{"oracle_pure_conv", value}, {"regime", regime.label()}, {"r", r}, {"p", p}};
                std::cout << io::format_real(value) << '\n';
            }
            if (!inv.stem.empty())
            {
                io::write_json(inv.stem + ".json", doc);
                io::CsvWriter csv(inv.stem + ".csv", {"quantity", "value"});
                for (const auto& item : doc.items())
                {
                    if (item.value().is_number())
                    {
                        csv.row({item.key(), item.value().get<double>()});
                    }
                }
            }
        }

        json load_config(const std::string& path)
        {
            std::ifstream in(path);
            if (!in)
            {
                throw ValidationError("cannot open config file '" + path + "'", "config");
            }
            json config = json::parse(in, nullptr, false);
            if (config.is_discarded())
            {
                throw ValidationError("config file '" + path + "' is not valid JSON", "config");
            }
            if (!config.is_object())
            {
                throw ValidationError("config must be a JSON object", "config");
            }
            return config;
        }

        int thread_setting(std::optional<int> flag)
        {
            if (flag)
            {
                return *flag;
            }
            if (const char* env = std::getenv("NLTHIN_THREADS"))
            {
                try
                {
                    std::size_t used = 0;
                    const int value = std::stoi(env, &used);
                    if (used == std::string(env).size())
                    {
                        return value;
                    }
                }
                catch (const std::exception&)
                {
                }
                throw ValidationError("NLTHIN_THREADS must be an integer", "threads");
            }
            return 1;
        }
    }

    int run(int argc, const char* const* argv)
    {
        CLI::App app{"Numerical experiments for nonlocal thin-film energies", "nlthin"};
        app.require_subcommand(1);
        app.fallthrough();

        std::string config_path;
        std::vector<std::string> overrides;
        std::optional<int> threads;
        bool trace = false;
        std::string out;
        app.add_option("--config", config_path, "JSON experiment configuration");
        app.add_option("--set", overrides, "Override a scalar field: dotted.path=value")->take_all();
        app.add_option("--threads", threads, "Worker thread cap (default: NLTHIN_THREADS or 1)")
            ->check(CLI::PositiveNumber);
        app.add_flag("--trace", trace, "Include solver histories in the JSON report");
        app.add_option("--out", out, "Output path stem for <stem>.json and <stem>.csv");

        const std::vector<std::pair<std::string, std::string>> commands{
            {"audit", "Audit kernel hypotheses"},
            {"energy", "Evaluate one discrete energy with its per-offset breakdown"},
            {"scaling", "Energy scaling probe in (eps, gamma)"},
            {"cell", "Homogenized density from the cell formula"},
            {"asymptotic", "Homogenized density from Dirichlet problems on growing cubes"},
            {"gamma-min", "Discrete minima along an (eps, gamma) trajectory against the oracle"},
            {"rotation", "Rotation example: asymmetry and rotation invariance"},
            {"oracle", "Closed-form homogenized values"}};
        for (const auto& [name, help] : commands)
        {
            app.add_subcommand(name, help);
        }
        std::vector<double> theta_args;
        app.get_subcommand("oracle")
            ->add_option("--theta", theta_args, "Evaluate theta(delta, r)")
            ->expected(2);

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError& e)
        {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        try
        {
            Invocation inv;
            inv.command = app.get_subcommands().front()->get_name();
            inv.trace = trace;
            if (!config_path.empty())
            {
                inv.config = load_config(config_path);
            }
            for (const auto& assignment : overrides)
            {
                apply_override(inv.config, assignment);
            }
            if (inv.config.contains("output"))
            {
                inv.stem = ConfigNode::convert<std::string>(inv.config["output"], "output");
                inv.config.erase("output");
            }
            if (!out.empty())
            {
                inv.stem = out;
            }
            if (inv.stem.empty() && inv.command != "oracle")
            {
                inv.stem = "nlthin-" + inv.command;
            }
            set_thread_count(thread_setting(threads));

            if (inv.command == "audit")
            {
                run_audit(inv);
            }
            else if (inv.command == "energy")
            {
                run_energy(inv);
            }
            else if (inv.command == "scaling")
            {
                run_scaling(inv);
            }
            else if (inv.command == "cell")
            {
                run_cell(inv);
            }
            else if (inv.command == "asymptotic")
            {
                run_asymptotic(inv);
            }
            else if (inv.command == "gamma-min")
            {
                run_gamma_min(inv);
            }
            else if (inv.command == "rotation")
            {
                run_rotation(inv);
            }
            else
            {
                if (theta_args.empty() && config_path.empty() && overrides.empty())
                {
                    throw ValidationError("oracle needs --theta DELTA R or a configuration", "oracle");
                }
                run_oracle(inv, theta_args);
            }
            return 0;
        }
        catch (const ValidationError& e)
        {
            std::cerr << "nlthin: invalid input: " << e.what() << '\n';
            return 2;
        }
        catch (const NumericalError& e)
        {
            std::cerr << "nlthin: numerical failure: " << e.what() << '\n';
            return 3;
        }
        catch (const std::exception& e)
        {
            std::cerr << "nlthin: error: " << e.what() << '\n';
            return 1;
        }
    }
}
