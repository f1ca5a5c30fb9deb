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

#include "nlthin/kernels.hpp"

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlthin
{
    using Index = Eigen::Index;

    struct Interval
    {
        double lo = 0.0;
        double hi = 1.0;

        double length() const { return hi - lo; }
    };

    /// omega x (-half_thickness, half_thickness) with omega an axis-aligned box in R^{d-1},
    /// together with the codomain dimension m.
    struct CylinderSpec
    {
        std::vector<Interval> planar_box{Interval{}};
        double half_thickness = 1.0;
        int ambient_dim = 2;
        int codomain_dim = 1;

        void validate() const;
    };

    /// Tensor grid. Axis a has count(a) nodes starting at origin(a) with step spacing(a);
    /// the last axis is the vertical one. Nodes are numbered row-major: the last axis varies
    /// fastest, flat = sum_a index_a * stride(a).
    class Lattice
    {
    public:
        Lattice(Eigen::VectorXd origin, Eigen::VectorXd spacing, std::vector<Index> counts,
                std::vector<bool> periodic);

        int dim() const { return static_cast<int>(m_counts.size()); }
        Index size() const { return m_size; }
        Index count(int axis) const { return m_counts[axis]; }
        const std::vector<Index>& counts() const { return m_counts; }
        double spacing(int axis) const { return m_spacing(axis); }
        const Eigen::VectorXd& spacings() const { return m_spacing; }
        const Eigen::VectorXd& origin() const { return m_origin; }
        bool periodic(int axis) const { return m_periodic[axis]; }
        const std::vector<bool>& periodicity() const { return m_periodic; }
        Index stride(int axis) const { return m_strides[axis]; }

        /// Length covered by the axis: count * spacing when periodic, (count - 1) * spacing otherwise.
        double extent(int axis) const;
        /// Product of the spacings.
        double node_measure() const { return m_spacing.prod(); }

        Index flat_index(std::span<const Index> multi) const;
        std::vector<Index> multi_index(Index flat) const;
        Eigen::VectorXd coordinate(Index flat) const;

        bool operator==(const Lattice& other) const;

    private:
        Eigen::VectorXd m_origin;
        Eigen::VectorXd m_spacing;
        std::vector<Index> m_counts;
        std::vector<bool> m_periodic;
        std::vector<Index> m_strides;
        Index m_size = 0;
    };

    using LatticePtr = std::shared_ptr<const Lattice>;

    /// Grid covering spec exactly: planar axes span the planar box, the last axis spans
    /// (-half_thickness, half_thickness).
    Lattice build_lattice(const CylinderSpec& spec, std::span<const Index> resolution,
                          const std::vector<bool>& periodic);

    /// Nodal values of an R^m-valued map on a lattice, stored as an m x N matrix.
    class Field
    {
    public:
        Field(LatticePtr lattice, Eigen::MatrixXd values);

        static Field zeros(LatticePtr lattice, int m);

        template <typename F>
        static Field from_function(LatticePtr lattice, int m, F&& f)
        {
            Eigen::MatrixXd values(m, lattice->size());
            for (Index i = 0; i < lattice->size(); ++i)
            {
                values.col(i) = f(lattice->coordinate(i));
            }
            return Field(std::move(lattice), std::move(values));
        }

        const Lattice& lattice() const { return *m_lattice; }
        const LatticePtr& lattice_ptr() const { return m_lattice; }
        const Eigen::MatrixXd& values() const { return m_values; }
        int codomain_dim() const { return static_cast<int>(m_values.rows()); }
        Index size() const { return m_values.cols(); }

    private:
        LatticePtr m_lattice;
        Eigen::MatrixXd m_values;
    };

    /// Sub-box of the planar box used by localized energies.
    struct PlanarRegion
    {
        std::vector<Interval> box;
    };

    struct StencilEntry
    {
        std::vector<int> offset;
        Eigen::VectorXd xi;
        double weight = 0.0;
    };

    /// Lattice-matched quadrature of the xi-integral. Planar shifts k map to xi = k h / eps,
    /// vertical shifts to xi_d = k h gamma / eps; weights are the matching cell volumes.
    /// Entries are ordered lexicographically by offset.
    struct InteractionStencil
    {
        std::vector<StencilEntry> entries;
        double eps = 1.0;
        double gamma = 1.0;
        double truncation = unbounded;
        /// False when every axis is planar (surface cell problems).
        bool vertical_axis = true;
        Eigen::VectorXd spacing;
        std::vector<Index> counts;
        std::vector<bool> periodic;
        std::string kernel;
        std::optional<std::string> warning;

        std::size_t size() const { return entries.size(); }
        bool empty() const { return entries.empty(); }
        double total_weight() const;
        bool matches(const Lattice& lattice) const;
    };

    /// xi image of an index shift under the stencil scaling.
    Eigen::VectorXd shift_to_xi(const Eigen::VectorXd& spacing, std::span<const int> offset, double eps, double gamma,
                                bool vertical_axis = true);

    InteractionStencil build_stencil(const Kernel& kernel, double eps, double gamma, const Lattice& lattice,
                                     double truncation_T = unbounded);

    /// Entries with |xi_alpha| < T.
    InteractionStencil truncate(const InteractionStencil& stencil, double T);

    /// Admissible index pairs along one axis for a given shift: node `from[i]` interacts with
    /// node `to[i]`; `factor[i]` is its composite-trapezoid weight on the admissible range
    /// (1/2 at the ends of a non-periodic range, 0 when the range is a single node).
    struct AxisPairs
    {
        std::vector<Index> from;
        std::vector<Index> to;
        std::vector<double> factor;
    };

    AxisPairs admissible_axis_pairs(const Lattice& lattice, int axis, Index shift,
                                    const PlanarRegion* region = nullptr);

    std::vector<AxisPairs> admissible_axis_pairs(const Lattice& lattice, std::span<const int> offset,
                                                 const PlanarRegion* region = nullptr);

    /// Nodes x with x + offset in the lattice (and both in the region), in row-major order.
    std::vector<Index> admissible_nodes(const Lattice& lattice, std::span<const int> offset,
                                        const std::optional<PlanarRegion>& region = std::nullopt);
}
