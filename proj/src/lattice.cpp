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

#include "nlthin/lattice.hpp"

#include "nlthin/error.hpp"

#include <algorithm>
#include <cmath>

namespace nlthin
{
    void CylinderSpec::validate() const
    {
        if (ambient_dim < 2)
        {
            throw ValidationError("ambient dimension must be at least 2", "dimension.d");
        }
        if (codomain_dim < 1)
        {
            throw ValidationError("codomain dimension must be at least 1", "dimension.m");
        }
        if (static_cast<int>(planar_box.size()) != ambient_dim - 1)
        {
            throw ValidationError("planar box needs d - 1 intervals", "domain.planar_box");
        }
        for (const auto& interval : planar_box)
        {
            if (!(interval.length() > 0.0) || !std::isfinite(interval.length()))
            {
                throw ValidationError("planar interval must have positive finite length", "domain.planar_box");
            }
        }
        if (!(half_thickness > 0.0) || !std::isfinite(half_thickness))
        {
            throw ValidationError("half thickness must be positive", "domain.half_thickness");
        }
    }

    Lattice::Lattice(Eigen::VectorXd origin, Eigen::VectorXd spacing, std::vector<Index> counts,
                     std::vector<bool> periodic)
        : m_origin(std::move(origin))
        , m_spacing(std::move(spacing))
        , m_counts(std::move(counts))
        , m_periodic(std::move(periodic))
    {
        const auto d = m_counts.size();
        if (d == 0 || m_origin.size() != static_cast<Index>(d) || m_spacing.size() != static_cast<Index>(d) ||
            m_periodic.size() != d)
        {
            throw ValidationError("lattice axis descriptors have inconsistent lengths");
        }
        m_strides.assign(d, 1);
        for (std::size_t a = d; a-- > 0;)
        {
            if (m_counts[a] < 2)
            {
                throw ValidationError("resolution below 2");
            }
            if (!(m_spacing(a) > 0.0) || !std::isfinite(m_spacing(a)))
            {
                throw ValidationError("lattice spacing must be positive");
            }
            if (a + 1 < d)
            {
                m_strides[a] = m_strides[a + 1] * m_counts[a + 1];
            }
        }
        m_size = m_strides[0] * m_counts[0];
    }

    double Lattice::extent(int axis) const
    {
        return m_spacing(axis) * static_cast<double>(m_periodic[axis] ? m_counts[axis] : m_counts[axis] - 1);
    }

    Index Lattice::flat_index(std::span<const Index> multi) const
    {
        Index flat = 0;
        for (int a = 0; a < dim(); ++a)
        {
            flat += multi[a] * m_strides[a];
        }
        return flat;
    }

    std::vector<Index> Lattice::multi_index(Index flat) const
    {
        std::vector<Index> multi(dim());
        for (int a = 0; a < dim(); ++a)
        {
            multi[a] = flat / m_strides[a];
            flat -= multi[a] * m_strides[a];
        }
        return multi;
    }

    Eigen::VectorXd Lattice::coordinate(Index flat) const
    {
        Eigen::VectorXd x(dim());
        for (int a = 0; a < dim(); ++a)
        {
            const Index i = flat / m_strides[a];
            flat -= i * m_strides[a];
            x(a) = m_origin(a) + static_cast<double>(i) * m_spacing(a);
        }
        return x;
    }

    bool Lattice::operator==(const Lattice& other) const
    {
        return m_counts == other.m_counts && m_periodic == other.m_periodic && m_origin == other.m_origin &&
               m_spacing == other.m_spacing;
    }

    Lattice build_lattice(const CylinderSpec& spec, std::span<const Index> resolution, const std::vector<bool>& periodic)
    {
        spec.validate();
        const int d = spec.ambient_dim;
        if (static_cast<int>(resolution.size()) != d || static_cast<int>(periodic.size()) != d)
        {
            throw ValidationError("resolution and periodicity need one entry per axis", "lattice.resolution");
        }
        Eigen::VectorXd origin(d);
        Eigen::VectorXd spacing(d);
        for (int a = 0; a < d; ++a)
        {
            if (resolution[a] < 2)
            {
                throw ValidationError("resolution below 2", "lattice.resolution");
            }
            const Interval interval =
                a + 1 < d ? spec.planar_box[a] : Interval{-spec.half_thickness, spec.half_thickness};
            origin(a) = interval.lo;
            const auto cells = static_cast<double>(periodic[a] ? resolution[a] : resolution[a] - 1);
            spacing(a) = interval.length() / cells;
        }
        return Lattice(origin, spacing, std::vector<Index>(resolution.begin(), resolution.end()), periodic);
    }

    Field::Field(LatticePtr lattice, Eigen::MatrixXd values)
        : m_lattice(std::move(lattice))
        , m_values(std::move(values))
    {
        if (!m_lattice)
        {
            throw ValidationError("field requires a lattice");
        }
        if (m_values.cols() != m_lattice->size() || m_values.rows() < 1)
        {
            throw ValidationError("field value count must equal the lattice node count");
        }
        if (!m_values.allFinite())
        {
            throw NumericalError("field contains non-finite values", m_values);
        }
    }

    Field Field::zeros(LatticePtr lattice, int m)
    {
        const Index n = lattice->size();
        return Field(std::move(lattice), Eigen::MatrixXd::Zero(m, n));
    }

    double InteractionStencil::total_weight() const
    {
        double total = 0.0;
        for (const auto& e : entries)
        {
            total += e.weight;
        }
        return total;
    }

    bool InteractionStencil::matches(const Lattice& lattice) const
    {
        return counts == lattice.counts() && periodic == lattice.periodicity() && spacing == lattice.spacings();
    }

    Eigen::VectorXd shift_to_xi(const Eigen::VectorXd& spacing, std::span<const int> offset, double eps, double gamma,
                                bool vertical_axis)
    {
        const auto d = spacing.size();
        Eigen::VectorXd xi(d);
        for (Index a = 0; a < d; ++a)
        {
            const bool vertical = vertical_axis && a + 1 == d;
            xi(a) = vertical ? offset[a] * spacing(a) * gamma / eps : offset[a] * spacing(a) / eps;
        }
        return xi;
    }

    namespace
    {
        double planar_norm(const Eigen::VectorXd& xi, bool vertical_axis)
        {
            return vertical_axis ? xi.head(xi.size() - 1).norm() : xi.norm();
        }
    }

    InteractionStencil build_stencil(const Kernel& kernel, double eps, double gamma, const Lattice& lattice,
                                     double truncation_T)
    {
        if (!(eps > 0.0) || !(gamma > 0.0) || !std::isfinite(eps) || !std::isfinite(gamma))
        {
            throw ValidationError("stencil scales eps and gamma must be positive");
        }
        if (!(truncation_T >= 0.0))
        {
            throw ValidationError("truncation radius must be nonnegative");
        }
        const auto& traits = kernel.traits();
        const int d = lattice.dim();
        if (traits.dim != 0 && traits.dim != d)
        {
            throw ValidationError("kernel dimension does not match the lattice dimension");
        }
        InteractionStencil stencil;
        stencil.eps = eps;
        stencil.gamma = gamma;
        stencil.truncation = truncation_T;
        stencil.vertical_axis = !traits.all_axes_planar;
        stencil.spacing = lattice.spacings();
        stencil.counts = lattice.counts();
        stencil.periodic = lattice.periodicity();
        stencil.kernel = kernel.label();

        std::vector<int> reach(d);
        double weight = 1.0;
        for (int a = 0; a < d; ++a)
        {
            const bool vertical = stencil.vertical_axis && a + 1 == d;
            const double step = vertical ? lattice.spacing(a) * gamma / eps : lattice.spacing(a) / eps;
            weight *= step;
            double bound = vertical ? traits.vertical_halfheight : std::min(traits.planar_radius, truncation_T);
            if (!vertical && !stencil.vertical_axis)
            {
                bound = std::min(traits.planar_radius, truncation_T);
            }
            const Index limit = lattice.periodic(a) ? std::numeric_limits<Index>::max() : lattice.count(a) - 2;
            if (!std::isfinite(bound) && lattice.periodic(a))
            {
                throw ValidationError("kernel support is unbounded along a periodic axis; set a finite truncation");
            }
            const double candidates = std::isfinite(bound) ? std::floor(bound / step) + 1.0 : static_cast<double>(limit);
            const double capped = std::min(candidates, static_cast<double>(limit));
            if (capped > 1e6)
            {
                throw ValidationError("stencil reach exceeds 1e6 shifts along an axis");
            }
            reach[a] = static_cast<int>(std::max(capped, 0.0));
        }

        std::vector<int> offset(d);
        for (int a = 0; a < d; ++a)
        {
            offset[a] = -reach[a];
        }
        while (true)
        {
            const bool zero = std::all_of(offset.begin(), offset.end(), [](int k) { return k == 0; });
            if (!zero)
            {
                Eigen::VectorXd xi = shift_to_xi(lattice.spacings(), offset, eps, gamma, stencil.vertical_axis);
                if (planar_norm(xi, stencil.vertical_axis) < truncation_T && kernel.psi(xi) > 0.0)
                {
                    stencil.entries.push_back(StencilEntry{offset, std::move(xi), weight});
                }
            }
            int a = d - 1;
            while (a >= 0 && offset[a] == reach[a])
            {
                offset[a] = -reach[a];
                --a;
            }
            if (a < 0)
            {
                break;
            }
            ++offset[a];
        }
        if (stencil.entries.empty())
        {
            stencil.warning = "empty stencil: kernel support is smaller than one lattice cell";
        }
        return stencil;
    }

    InteractionStencil truncate(const InteractionStencil& stencil, double T)
    {
        InteractionStencil out = stencil;
        out.truncation = std::min(stencil.truncation, T);
        out.entries.clear();
        for (const auto& e : stencil.entries)
        {
            if (planar_norm(e.xi, stencil.vertical_axis) < T)
            {
                out.entries.push_back(e);
            }
        }
        if (out.entries.empty())
        {
            out.warning = "empty stencil: truncation removes every interaction";
        }
        return out;
    }

    namespace
    {
        Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

        /// Index range [lo, hi] of nodes whose coordinate lies in the interval.
        std::pair<Index, Index> region_range(const Lattice& lattice, int axis, const Interval& interval)
        {
            const double h = lattice.spacing(axis);
            const double x0 = lattice.origin()(axis);
            const double tol = 1e-9;
            auto lo = static_cast<Index>(std::ceil((interval.lo - x0) / h - tol));
            auto hi = static_cast<Index>(std::floor((interval.hi - x0) / h + tol));
            return {std::max<Index>(lo, 0), std::min<Index>(hi, lattice.count(axis) - 1)};
        }
    }

    AxisPairs admissible_axis_pairs(const Lattice& lattice, int axis, Index shift, const PlanarRegion* region)
    {
        const int d = lattice.dim();
        if (region && static_cast<int>(region->box.size()) != d - 1)
        {
            throw ValidationError("region needs one interval per planar axis");
        }
        const Index n = lattice.count(axis);
        const bool restricted = region && axis + 1 < d;
        AxisPairs pairs;
        if (lattice.periodic(axis))
        {
            if (restricted)
            {
                throw ValidationError("regions are only supported on non-periodic planar axes");
            }
            pairs.from.resize(n);
            pairs.to.resize(n);
            pairs.factor.assign(n, 1.0);
            for (Index i = 0; i < n; ++i)
            {
                pairs.from[i] = i;
                pairs.to[i] = wrap(i + shift, n);
            }
            return pairs;
        }
        Index lo_r = 0;
        Index hi_r = n - 1;
        if (restricted)
        {
            std::tie(lo_r, hi_r) = region_range(lattice, axis, region->box[axis]);
        }
        const Index lo = std::max(lo_r, lo_r - shift);
        const Index hi = std::min(hi_r, hi_r - shift);
        for (Index i = lo; i <= hi; ++i)
        {
            pairs.from.push_back(i);
            pairs.to.push_back(i + shift);
            pairs.factor.push_back(lo == hi ? 0.0 : (i == lo || i == hi ? 0.5 : 1.0));
        }
        return pairs;
    }

    std::vector<AxisPairs> admissible_axis_pairs(const Lattice& lattice, std::span<const int> offset,
                                                 const PlanarRegion* region)
    {
        const int d = lattice.dim();
        if (static_cast<int>(offset.size()) != d)
        {
            throw ValidationError("offset dimension does not match the lattice");
        }
        std::vector<AxisPairs> axes;
        axes.reserve(d);
        for (int a = 0; a < d; ++a)
        {
            axes.push_back(admissible_axis_pairs(lattice, a, offset[a], region));
        }
        return axes;
    }

    std::vector<Index> admissible_nodes(const Lattice& lattice, std::span<const int> offset,
                                        const std::optional<PlanarRegion>& region)
    {
        const auto axes = admissible_axis_pairs(lattice, offset, region ? &*region : nullptr);
        std::vector<Index> nodes;
        for (const auto& axis : axes)
        {
            if (axis.from.empty())
            {
                return nodes;
            }
        }
        const int d = lattice.dim();
        std::vector<std::size_t> pos(d, 0);
        while (true)
        {
            Index flat = 0;
            for (int a = 0; a < d; ++a)
            {
                flat += axes[a].from[pos[a]] * lattice.stride(a);
            }
            nodes.push_back(flat);
            int a = d - 1;
            while (a >= 0 && ++pos[a] == axes[a].from.size())
            {
                pos[a--] = 0;
            }
            if (a < 0)
            {
                break;
            }
        }
        return nodes;
    }
}
