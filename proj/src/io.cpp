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

#include "nlthin/io.hpp"

#include "nlthin/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>

namespace nlthin
{
    namespace io
    {
        namespace
        {
            std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out)
            {
                if (path.has_parent_path())
                {
                    std::filesystem::create_directories(path.parent_path());
                }
                std::ofstream out(path, mode);
                if (!out)
                {
                    throw Error("cannot open " + path.string() + " for writing");
                }
                return out;
            }

            std::string cell_text(const Cell& cell)
            {
                if (const auto* real = std::get_if<double>(&cell))
                {
                    return format_real(*real);
                }
                if (const auto* integer = std::get_if<long long>(&cell))
                {
                    return std::to_string(*integer);
                }
                return std::get<std::string>(cell);
            }

            json real_or_null(const std::optional<double>& value)
            {
                return value ? json(*value) : json(nullptr);
            }

            json entries_json(const std::vector<HypothesisEntry>& entries)
            {
                json out = json::array();
                for (const auto& e : entries)
                {
                    json witness = json::array();
                    for (const auto& [where, what] : e.witness)
                    {
                        witness.push_back({where, what});
                    }
                    out.push_back({{"name", e.name},
                                   {"pass", e.pass},
                                   {"statistic", e.statistic},
                                   {"tolerance", e.tolerance},
                                   {"divergent", e.divergent},
                                   {"radii", e.radii},
                                   {"witness", witness},
                                   {"note", e.note}});
                }
                return out;
            }
        }

        std::string format_real(double value)
        {
            if (std::isnan(value))
            {
                return "nan";
            }
            if (std::isinf(value))
            {
                return value > 0 ? "inf" : "-inf";
            }
            char buffer[32];
            const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
            std::string text(buffer, result.ptr);
            if (text.find_first_of(".e") == std::string::npos)
            {
                text += ".0";
            }
            return text;
        }

        CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
            : m_out(open_output(path))
            , m_columns(columns.size())
        {
            m_out << csv_tag << '\n';
            for (std::size_t i = 0; i < columns.size(); ++i)
            {
                m_out << (i ? "," : "") << columns[i];
            }
            m_out << '\n';
        }

        void CsvWriter::row(const std::vector<Cell>& cells)
        {
            if (cells.size() != m_columns)
            {
                throw Error("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(m_columns));
            }
            for (std::size_t i = 0; i < cells.size(); ++i)
            {
                m_out << (i ? "," : "") << cell_text(cells[i]);
            }
            m_out << '\n';
        }

        void write_json(const std::filesystem::path& path, const json& document)
        {
            auto out = open_output(path);
            out << document.dump(2) << '\n';
        }

        json to_json(const Eigen::MatrixXd& matrix)
        {
            json rows = json::array();
            for (Index i = 0; i < matrix.rows(); ++i)
            {
                json row = json::array();
                for (Index j = 0; j < matrix.cols(); ++j)
                {
                    row.push_back(matrix(i, j));
                }
                rows.push_back(row);
            }
            return rows;
        }

        json to_json(const Lattice& lattice)
        {
            std::vector<double> origin(lattice.origin().data(), lattice.origin().data() + lattice.dim());
            std::vector<double> spacing(lattice.spacings().data(), lattice.spacings().data() + lattice.dim());
            return {{"dim", lattice.dim()},
                    {"counts", lattice.counts()},
                    {"origin", origin},
                    {"spacing", spacing},
                    {"periodic", lattice.periodicity()},
                    {"node_order", "row-major, last (vertical) axis fastest"}};
        }

        json to_json(const InteractionStencil& stencil, bool with_entries)
        {
            json out = {{"kernel", stencil.kernel},
                        {"eps", stencil.eps},
                        {"gamma", stencil.gamma},
                        {"truncation", std::isfinite(stencil.truncation) ? json(stencil.truncation) : json(nullptr)},
                        {"entries", stencil.size()},
                        {"total_weight", stencil.total_weight()},
                        {"warning", stencil.warning ? json(*stencil.warning) : json(nullptr)}};
            if (with_entries)
            {
                json table = json::array();
                for (const auto& e : stencil.entries)
                {
                    table.push_back({{"offset", e.offset},
                                     {"xi", std::vector<double>(e.xi.data(), e.xi.data() + e.xi.size())},
                                     {"weight", e.weight}});
                }
                out["table"] = table;
            }
            return out;
        }

        json to_json(const EnergyBreakdown& breakdown)
        {
            json table = json::array();
            for (const auto& term : breakdown.per_offset)
            {
                table.push_back({{"offset", term.offset},
                                 {"xi", std::vector<double>(term.xi.data(), term.xi.data() + term.xi.size())},
                                 {"weight", term.weight},
                                 {"partial", term.partial}});
            }
            return {{"total", breakdown.total},
                    {"prefactor", breakdown.prefactor},
                    {"node_measure", breakdown.node_measure},
                    {"per_offset", table}};
        }

        json to_json(const HypothesisReport& report)
        {
            return {{"kernel", report.kernel},
                    {"p", report.p},
                    {"dim", report.dim},
                    {"eta_ladder", report.eta_ladder},
                    {"all_pass", report.all_pass()},
                    {"entries", entries_json(report.entries)}};
        }

        json history_json(const std::vector<IterationRecord>& history)
        {
            json out = json::array();
            for (const auto& h : history)
            {
                out.push_back({{"value", h.value}, {"step", h.step}, {"grad_norm", h.grad_norm}});
            }
            return out;
        }

        json to_json(const MinimizeReport& report, bool with_history)
        {
            json out = {{"value", report.value},
                        {"iterations", report.iterations},
                        {"grad_norm", report.grad_norm},
                        {"converged", report.converged},
                        {"affine_value", report.affine_value},
                        {"upper_bound", report.upper_bound},
                        {"warning", report.warning ? json(*report.warning) : json(nullptr)},
                        {"start_values", report.start_values},
                        {"certificate_spread", real_or_null(report.certificate_spread)}};
            if (report.slope.size() > 0)
            {
                out["slope"] = to_json(report.slope);
                out["slope_gradient"] = to_json(report.slope_gradient);
            }
            if (with_history)
            {
                out["history"] = history_json(report.history);
            }
            return out;
        }

        json to_json(const HomogenizationEstimate& estimate, bool with_history)
        {
            json ladder = json::array();
            for (const auto& p : estimate.ladder)
            {
                ladder.push_back({{"resolution", p.resolution},
                                  {"spacing", p.spacing},
                                  {"value", p.value},
                                  {"grad_norm", p.grad_norm},
                                  {"iterations", p.iterations},
                                  {"converged", p.converged}});
                if (with_history)
                {
                    ladder.back()["history"] = history_json(p.history);
                }
            }
            json out = {{"regime", estimate.regime.label()},
                        {"delta", std::isfinite(estimate.regime.delta) ? json(estimate.regime.delta) : json(nullptr)},
                        {"M", to_json(estimate.M)},
                        {"value", estimate.value},
                        {"grid", estimate.grid},
                        {"extrapolated", real_or_null(estimate.extrapolated)},
                        {"observed_rate", real_or_null(estimate.observed_rate)},
                        {"ladder", ladder}};
            if (estimate.vertical_slope)
            {
                const auto& b = *estimate.vertical_slope;
                out["vertical_slope"] = std::vector<double>(b.data(), b.data() + b.size());
            }
            return out;
        }

        json to_json(const std::vector<AsymptoticPoint>& points, bool with_history)
        {
            json out = json::array();
            for (const auto& p : points)
            {
                out.push_back({{"R", p.R},
                               {"value", p.value},
                               {"minimum", p.minimum},
                               {"spacing", p.spacing},
                               {"grad_norm", p.grad_norm},
                               {"converged", p.converged}});
                if (with_history)
                {
                    out.back()["history"] = history_json(p.history);
                }
            }
            return out;
        }

        json to_json(const ScalingTable& table)
        {
            auto rows = [](const std::vector<ScalingRow>& in) {
                json out = json::array();
                for (const auto& r : in)
                {
                    out.push_back({{"eps", r.eps},
                                   {"gamma", r.gamma},
                                   {"raw_energy", r.raw_energy},
                                   {"planar_factor", r.planar_factor},
                                   {"vertical_factor", r.vertical_factor},
                                   {"predicted", r.predicted},
                                   {"ratio", r.ratio}});
                }
                return out;
            };
            return {{"indicator", rows(table.indicator_rows)},
                    {"max_relative_error", table.max_relative_error},
                    {"singular", rows(table.singular_rows)},
                    {"beta", table.beta},
                    {"fitted_exponent", table.fitted_exponent},
                    {"expected_exponent", table.beta - 1.0}};
        }

        json to_json(const RotationReport& report)
        {
            json slopes = json::array();
            for (const auto& s : report.rotated_slopes)
            {
                slopes.push_back(to_json(s));
            }
            const auto& b = report.optimal_b;
            return {{"value_plus", report.value_plus},
                    {"value_plus_starts", report.value_plus_starts},
                    {"analytic_upper_bound", report.analytic_upper_bound},
                    {"value_minus_lower_bound", report.value_minus_lower_bound},
                    {"uniform_lower_bound", report.uniform_lower_bound},
                    {"optimal_b", std::vector<double>(b.data(), b.data() + b.size())},
                    {"verdict", report.asymmetric ? "asymmetric" : "inconclusive"},
                    {"rotated_slopes", slopes},
                    {"invariance_values", report.invariance_values},
                    {"invariance_spread", report.invariance_spread},
                    {"invariant", report.invariant}};
        }

        void write_field_csv(const std::filesystem::path& path, const Field& field)
        {
            const Lattice& lattice = field.lattice();
            std::vector<std::string> columns{"node"};
            for (int a = 0; a < lattice.dim(); ++a)
            {
                columns.push_back("x" + std::to_string(a));
            }
            for (int c = 0; c < field.codomain_dim(); ++c)
            {
                columns.push_back("u" + std::to_string(c));
            }
            CsvWriter csv(path, columns);
            std::vector<Cell> cells(columns.size());
            for (Index i = 0; i < lattice.size(); ++i)
            {
                const auto x = lattice.coordinate(i);
                cells[0] = static_cast<long long>(i);
                for (int a = 0; a < lattice.dim(); ++a)
                {
                    cells[1 + a] = x(a);
                }
                for (int c = 0; c < field.codomain_dim(); ++c)
                {
                    cells[1 + lattice.dim() + c] = field.values()(c, i);
                }
                csv.row(cells);
            }
        }

        Field read_field_csv(const std::filesystem::path& path, LatticePtr lattice)
        {
            std::ifstream in(path);
            if (!in)
            {
                throw ValidationError("cannot open field file " + path.string(), "field");
            }
            std::string line;
            std::getline(in, line);
            if (line != csv_tag)
            {
                throw ValidationError("field file lacks the " + std::string(csv_tag) + " tag", "field");
            }
            std::getline(in, line);
            const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
            const int m = columns - 1 - lattice->dim();
            if (m < 1)
            {
                throw ValidationError("field file has no value columns", "field");
            }
            Eigen::MatrixXd values(m, lattice->size());
            Index node = 0;
            while (std::getline(in, line))
            {
                if (line.empty())
                {
                    continue;
                }
                if (node >= lattice->size())
                {
                    throw ValidationError("field file has more rows than lattice nodes", "field");
                }
                std::stringstream row(line);
                std::string cell;
                for (int k = 0; k < columns; ++k)
                {
                    if (!std::getline(row, cell, ','))
                    {
                        throw ValidationError("short row in field file", "field");
                    }
                    if (k >= columns - m)
                    {
                        values(k - (columns - m), node) = std::stod(cell);
                    }
                }
                ++node;
            }
            if (node != lattice->size())
            {
                throw ValidationError("field file has fewer rows than lattice nodes", "field");
            }
            return Field(std::move(lattice), std::move(values));
        }

        void write_field_binary(const std::filesystem::path& path, const Field& field)
        {
            static_assert(std::endian::native == std::endian::little, "binary fields are little-endian");
            auto out = open_output(path, std::ios::out | std::ios::binary);
            const auto& v = field.values();
            out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
        }

        Field read_field_binary(const std::filesystem::path& path, LatticePtr lattice, int codomain_dim)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw ValidationError("cannot open field file " + path.string(), "field");
            }
            Eigen::MatrixXd values(codomain_dim, lattice->size());
            const auto bytes = static_cast<std::streamsize>(values.size() * sizeof(double));
            in.read(reinterpret_cast<char*>(values.data()), bytes);
            if (in.gcount() != bytes || in.peek() != std::char_traits<char>::eof())
            {
                throw ValidationError("binary field size does not match the lattice", "field");
            }
            return Field(std::move(lattice), std::move(values));
        }
    }
}
