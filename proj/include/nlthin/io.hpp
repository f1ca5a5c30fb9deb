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

#include "nlthin/energy.hpp"
#include "nlthin/homogenization.hpp"
#include "nlthin/kernels.hpp"
#include "nlthin/lattice.hpp"
#include "nlthin/solvers.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace nlthin
{
    namespace io
    {
        using json = nlohmann::ordered_json;

        /// Version tag written as the first line of every CSV file.
        inline constexpr const char* csv_tag = "# nlthin-v1";

        /// Shortest decimal form that reads back exactly and always looks like a real: "3.0", "0.5", "1e-07".
        std::string format_real(double value);

        using Cell = std::variant<double, long long, std::string>;

        /// CSV table with a version line and a fixed column header.
        class CsvWriter
        {
        public:
            CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);

            void row(const std::vector<Cell>& cells);

        private:
            std::ofstream m_out;
            std::size_t m_columns;
        };

        void write_json(const std::filesystem::path& path, const json& document);

        json to_json(const Eigen::MatrixXd& matrix);
        json to_json(const Lattice& lattice);
        json to_json(const InteractionStencil& stencil, bool with_entries = false);
        json to_json(const EnergyBreakdown& breakdown);
        json to_json(const HypothesisReport& report);
        json to_json(const MinimizeReport& report, bool with_history);
        json history_json(const std::vector<IterationRecord>& history);
        json to_json(const HomogenizationEstimate& estimate, bool with_history = false);
        json to_json(const std::vector<AsymptoticPoint>& points, bool with_history = false);
        json to_json(const ScalingTable& table);
        json to_json(const RotationReport& report);

        /// Node values as CSV: node index, coordinates x0..x{d-1}, values u0..u{m-1}, in row-major node order.
        void write_field_csv(const std::filesystem::path& path, const Field& field);
        Field read_field_csv(const std::filesystem::path& path, LatticePtr lattice);

        /// Raw little-endian doubles, the m values of node 0 first, nodes in row-major order.
        void write_field_binary(const std::filesystem::path& path, const Field& field);
        Field read_field_binary(const std::filesystem::path& path, LatticePtr lattice, int codomain_dim);
    }
}
