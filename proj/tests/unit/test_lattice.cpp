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

#include "nlthin/error.hpp"
#include "nlthin/kernels.hpp"
#include "nlthin/lattice.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace nlthin;

namespace
{
    Lattice unit_slab(Index planar, Index vertical, bool periodic)
    {
        CylinderSpec spec;
        const std::vector<Index> counts{planar, vertical};
        return build_lattice(spec, counts, {periodic, false});
    }
}

TEST_CASE("build_lattice covers the cylinder exactly")
{
    const auto open = unit_slab(5, 9, false);
    CHECK(open.size() == 45);
    CHECK(open.spacing(0) == doctest::Approx(0.25));
    CHECK(open.spacing(1) == doctest::Approx(0.25));
    CHECK(open.coordinate(0)(1) == doctest::Approx(-1.0));
    CHECK(open.coordinate(open.size() - 1)(0) == doctest::Approx(1.0));
    CHECK(open.coordinate(open.size() - 1)(1) == doctest::Approx(1.0));

    const auto torus = unit_slab(4, 9, true);
    CHECK(torus.spacing(0) == doctest::Approx(0.25));
    CHECK(torus.extent(0) == doctest::Approx(1.0));
    CHECK(torus.extent(1) == doctest::Approx(2.0));
}

TEST_CASE("flat and multi indices round-trip with the last axis fastest")
{
    CylinderSpec spec;
    spec.ambient_dim = 3;
    spec.planar_box = {Interval{0.0, 1.0}, Interval{0.0, 2.0}};
    const std::vector<Index> counts{3, 4, 5};
    const auto lattice = build_lattice(spec, counts, {false, true, false});
    CHECK(lattice.stride(2) == 1);
    CHECK(lattice.stride(1) == 5);
    CHECK(lattice.stride(0) == 20);
    for (Index i = 0; i < lattice.size(); ++i)
    {
        const auto multi = lattice.multi_index(i);
        CHECK(lattice.flat_index(multi) == i);
    }
}

TEST_CASE("build_lattice rejects invalid resolutions")
{
    CylinderSpec spec;
    const std::vector<Index> too_coarse{1, 4};
    CHECK_THROWS_AS(build_lattice(spec, too_coarse, {false, false}), ValidationError);
    const std::vector<Index> wrong_rank{4};
    CHECK_THROWS_AS(build_lattice(spec, wrong_rank, {false}), ValidationError);
    spec.half_thickness = 0.0;
    const std::vector<Index> fine{4, 4};
    CHECK_THROWS_AS(build_lattice(spec, fine, {false, false}), ValidationError);
}

TEST_CASE("cylinder stencils are symmetric and inside the support")
{
    const auto lattice = unit_slab(64, 65, true);
    const auto stencil = build_stencil(cylinder_indicator(1.0), 0.25, 0.25, lattice);
    REQUIRE_FALSE(stencil.empty());
    std::set<std::vector<int>> offsets;
    for (const auto& e : stencil.entries)
    {
        offsets.insert(e.offset);
        CHECK(std::abs(e.xi(0)) < 1.0);
        CHECK(std::abs(e.xi(1)) < 1.0);
    }
    for (const auto& e : stencil.entries)
    {
        std::vector<int> negated(e.offset);
        for (int& k : negated)
        {
            k = -k;
        }
        CHECK(offsets.contains(negated));
    }
    // Midpoint quadrature of |C_1| = 4 minus the excluded origin cell.
    CHECK(stencil.total_weight() == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("vertical shifts are scaled by gamma over eps")
{
    const auto lattice = unit_slab(16, 17, true);
    const std::vector<int> offset{1, 2};
    const auto xi = shift_to_xi(lattice.spacings(), offset, 0.5, 0.25);
    CHECK(xi(0) == doctest::Approx(lattice.spacing(0) / 0.5));
    CHECK(xi(1) == doctest::Approx(2.0 * lattice.spacing(1) * 0.25 / 0.5));
}

TEST_CASE("truncation keeps exactly the entries with small planar shift")
{
    const auto lattice = unit_slab(64, 33, true);
    const auto stencil = build_stencil(cylinder_indicator(1.0), 0.25, 0.25, lattice);
    const auto cut = truncate(stencil, 0.5);
    CHECK(cut.size() < stencil.size());
    std::size_t expected = 0;
    for (const auto& e : stencil.entries)
    {
        expected += std::abs(e.xi(0)) < 0.5 ? 1 : 0;
    }
    CHECK(cut.size() == expected);
    for (const auto& e : cut.entries)
    {
        CHECK(std::abs(e.xi(0)) < 0.5);
    }
}

TEST_CASE("admissible pairs carry trapezoid end weights on open axes")
{
    const auto lattice = unit_slab(6, 5, false);
    const auto pairs = admissible_axis_pairs(lattice, 0, 2);
    REQUIRE(pairs.from.size() == 4);
    CHECK(pairs.factor.front() == doctest::Approx(0.5));
    CHECK(pairs.factor.back() == doctest::Approx(0.5));
    CHECK(pairs.factor[1] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < pairs.from.size(); ++i)
    {
        CHECK(pairs.to[i] - pairs.from[i] == 2);
    }

    const auto torus = unit_slab(6, 5, true);
    const auto wrapped = admissible_axis_pairs(torus, 0, 2);
    CHECK(wrapped.from.size() == 6);
    CHECK(std::all_of(wrapped.factor.begin(), wrapped.factor.end(), [](double f) { return f == 1.0; }));
}

TEST_CASE("admissible nodes keep both endpoints in the lattice")
{
    const auto lattice = unit_slab(5, 5, false);
    const std::vector<int> offset{1, -2};
    const auto nodes = admissible_nodes(lattice, offset);
    CHECK(nodes.size() == 4 * 3);
    for (Index n : nodes)
    {
        const auto idx = lattice.multi_index(n);
        CHECK(idx[0] + 1 < 5);
        CHECK(idx[1] - 2 >= 0);
    }
}

TEST_CASE("fields validate their shape")
{
    const auto lattice = std::make_shared<Lattice>(unit_slab(4, 4, false));
    CHECK_THROWS_AS(Field(lattice, Eigen::MatrixXd::Zero(1, 3)), ValidationError);
    const auto f = Field::from_function(lattice, 2, [](const Eigen::VectorXd& x) { return Eigen::Vector2d(x(0), x(1)); });
    CHECK(f.codomain_dim() == 2);
    CHECK(f.values()(1, f.size() - 1) == doctest::Approx(1.0));
}
