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

#include "nlthin/energy.hpp"

#include "nlthin/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace nlthin
{
    namespace
    {
        std::atomic<int> g_threads{1};

        void require_scale(double v, const char* what)
        {
            if (!(v > 0.0) || !std::isfinite(v))
            {
                throw ValidationError(std::string(what) + " must be positive and finite");
            }
        }

        /// Admissible pairs along every axis for every shift that occurs in the stencil.
        class AxisPairCache
        {
        public:
            AxisPairCache(const Lattice& lattice, const InteractionStencil& stencil, const PlanarRegion* region)
            {
                const int d = lattice.dim();
                m_min.assign(d, 0);
                m_pairs.resize(d);
                for (int a = 0; a < d; ++a)
                {
                    int lo = 0;
                    int hi = 0;
                    for (const auto& e : stencil.entries)
                    {
                        lo = std::min(lo, e.offset[a]);
                        hi = std::max(hi, e.offset[a]);
                    }
                    m_min[a] = lo;
                    for (int k = lo; k <= hi; ++k)
                    {
                        m_pairs[a].push_back(admissible_axis_pairs(lattice, a, k, region));
                    }
                }
            }

            const AxisPairs& get(int axis, int shift) const { return m_pairs[axis][shift - m_min[axis]]; }

        private:
            std::vector<int> m_min;
            std::vector<std::vector<AxisPairs>> m_pairs;
        };

        struct Workspace
        {
            std::vector<Index> xs;
            std::vector<Index> ys;
            std::vector<double> cs;
            Eigen::MatrixXd z;
            Eigen::VectorXd values;
            Eigen::MatrixXd grads;
            Eigen::MatrixXd gradient;
            Eigen::MatrixXd slope_gradient;

            Workspace(int m, Index n, int d, bool gradient_wanted, bool slope_wanted)
                : xs(n)
                , ys(n)
                , cs(n)
                , z(m, n)
                , values(n)
            {
                if (gradient_wanted || slope_wanted)
                {
                    grads.resize(m, n);
                }
                if (gradient_wanted)
                {
                    gradient = Eigen::MatrixXd::Zero(m, n);
                }
                if (slope_wanted)
                {
                    slope_gradient = Eigen::MatrixXd::Zero(m, d);
                }
            }
        };

        template <int Rows>
        void accumulate_range(const Lattice& lattice, const Eigen::MatrixXd& u, const Density& density,
                              const InteractionStencil& stencil, double eps, const InteractionOptions& opts,
                              const AxisPairCache& cache, std::size_t begin, std::size_t end, Workspace& ws,
                              std::vector<double>& partials)
        {
            const int d = lattice.dim();
            const int m = Rows > 0 ? Rows : static_cast<int>(u.rows());
            const double inv_eps = 1.0 / eps;
            const bool want_grads = opts.gradient || opts.slope_gradient;
            const double* U = u.data();
            std::vector<const AxisPairs*> axes(d);
            std::vector<std::size_t> pos(d, 0);
            Eigen::VectorXd shift = Eigen::VectorXd::Zero(m);
            Eigen::VectorXd displacement(d);
            Eigen::VectorXd grad_sum(m);

            for (std::size_t e = begin; e < end; ++e)
            {
                const auto& entry = stencil.entries[e];
                bool empty = false;
                for (int a = 0; a < d; ++a)
                {
                    axes[a] = &cache.get(a, entry.offset[a]);
                    empty = empty || axes[a]->from.empty();
                    displacement(a) = entry.offset[a] * lattice.spacing(a);
                }
                partials[e] = 0.0;
                if (empty)
                {
                    continue;
                }
                if (opts.slope)
                {
                    shift = (*opts.slope * displacement) * inv_eps;
                }

                Index n = 0;
                const AxisPairs& last = *axes[d - 1];
                const std::size_t n_last = last.from.size();
                std::fill(pos.begin(), pos.end(), 0);
                while (true)
                {
                    Index base_x = 0;
                    Index base_y = 0;
                    double c_base = 1.0;
                    for (int a = 0; a + 1 < d; ++a)
                    {
                        base_x += axes[a]->from[pos[a]] * lattice.stride(a);
                        base_y += axes[a]->to[pos[a]] * lattice.stride(a);
                        c_base *= axes[a]->factor[pos[a]];
                    }
                    if (c_base != 0.0)
                    {
                        for (std::size_t j = 0; j < n_last; ++j)
                        {
                            const double c = c_base * last.factor[j];
                            if (c == 0.0)
                            {
                                continue;
                            }
                            ws.xs[n] = base_x + last.from[j];
                            ws.ys[n] = base_y + last.to[j];
                            ws.cs[n] = c;
                            ++n;
                        }
                    }
                    int a = d - 2;
                    while (a >= 0 && ++pos[a] == axes[a]->from.size())
                    {
                        pos[a--] = 0;
                    }
                    if (a < 0)
                    {
                        break;
                    }
                }
                if (n == 0)
                {
                    continue;
                }

                double* Z = ws.z.data();
                for (Index j = 0; j < n; ++j)
                {
                    const double* uy = U + ws.ys[j] * m;
                    const double* ux = U + ws.xs[j] * m;
                    double* zj = Z + j * m;
                    for (int c = 0; c < m; ++c)
                    {
                        zj[c] = (uy[c] - ux[c]) * inv_eps + shift(c);
                    }
                }
                density.evaluate(entry.xi, ws.z.leftCols(n), ws.values, want_grads ? &ws.grads : nullptr);

                double acc = 0.0;
                for (Index j = 0; j < n; ++j)
                {
                    acc += ws.cs[j] * ws.values(j);
                }
                partials[e] = entry.weight * acc;
                if (!std::isfinite(partials[e]))
                {
                    throw NumericalError("non-finite energy contribution", u);
                }

                if (opts.gradient)
                {
                    double* g = ws.gradient.data();
                    const double* G = ws.grads.data();
                    for (Index j = 0; j < n; ++j)
                    {
                        const double coef = entry.weight * ws.cs[j] * inv_eps;
                        double* gy = g + ws.ys[j] * m;
                        double* gx = g + ws.xs[j] * m;
                        const double* Gj = G + j * m;
                        for (int c = 0; c < m; ++c)
                        {
                            gy[c] += coef * Gj[c];
                            gx[c] -= coef * Gj[c];
                        }
                    }
                }
                if (opts.slope_gradient)
                {
                    grad_sum.setZero();
                    for (Index j = 0; j < n; ++j)
                    {
                        grad_sum += ws.cs[j] * ws.grads.col(j);
                    }
                    ws.slope_gradient += (entry.weight * inv_eps) * grad_sum * displacement.transpose();
                }
            }
        }

        void accumulate_dispatch(const Lattice& lattice, const Eigen::MatrixXd& u, const Density& density,
                                 const InteractionStencil& stencil, double eps, const InteractionOptions& opts,
                                 const AxisPairCache& cache, std::size_t begin, std::size_t end, Workspace& ws,
                                 std::vector<double>& partials)
        {
            switch (u.rows())
            {
            case 1:
                return accumulate_range<1>(lattice, u, density, stencil, eps, opts, cache, begin, end, ws, partials);
            case 2:
                return accumulate_range<2>(lattice, u, density, stencil, eps, opts, cache, begin, end, ws, partials);
            case 3:
                return accumulate_range<3>(lattice, u, density, stencil, eps, opts, cache, begin, end, ws, partials);
            default:
                return accumulate_range<0>(lattice, u, density, stencil, eps, opts, cache, begin, end, ws, partials);
            }
        }

        void check_stencil(const Lattice& lattice, const InteractionStencil& stencil)
        {
            if (!stencil.matches(lattice))
            {
                throw ValidationError("stencil was built for a different lattice");
            }
        }

        EnergyBreakdown make_breakdown(const InteractionStencil& stencil, const InteractionResult& terms,
                                       double prefactor, double node_measure)
        {
            EnergyBreakdown out;
            out.prefactor = prefactor;
            out.node_measure = node_measure;
            out.total = prefactor * terms.sum * node_measure;
            out.per_offset.reserve(stencil.size());
            for (std::size_t e = 0; e < stencil.size(); ++e)
            {
                const auto& entry = stencil.entries[e];
                out.per_offset.push_back(OffsetTerm{entry.offset, entry.xi, entry.weight, terms.partials[e]});
            }
            return out;
        }
    }

    ScaleParams::ScaleParams(double eps, double gamma)
        : m_eps(eps)
        , m_gamma(gamma)
        , m_delta(eps / gamma)
    {
        require_scale(eps, "eps");
        require_scale(gamma, "gamma");
    }

    ScaleParams ScaleParams::thin_film(double eps, double gamma)
    {
        if (!(eps > 0.0 && eps <= 1.0))
        {
            throw ValidationError("eps must lie in (0, 1]", "scale.eps");
        }
        if (!(gamma > 0.0 && gamma <= 1.0))
        {
            throw ValidationError("gamma must lie in (0, 1]", "scale.gamma");
        }
        return ScaleParams(eps, gamma);
    }

    ScaleParams ScaleParams::unit_cell(double delta)
    {
        require_scale(delta, "delta");
        return ScaleParams(1.0, 1.0 / delta);
    }

    double ScaleParams::prefactor_physical() const { return std::max(m_eps / (m_gamma * m_gamma), 1.0 / m_gamma); }

    double ScaleParams::prefactor_rescaled() const { return std::max(m_eps / m_gamma, 1.0); }

    void set_thread_count(int threads) { g_threads = std::max(1, threads); }

    int thread_count() { return g_threads; }

    InteractionResult interaction_terms(const Lattice& lattice, const Eigen::MatrixXd& values, const Density& density,
                                        const InteractionStencil& stencil, double eps, const InteractionOptions& opts)
    {
        const int d = lattice.dim();
        const int m = static_cast<int>(values.rows());
        const Index n_nodes = lattice.size();
        if (values.cols() != n_nodes)
        {
            throw ValidationError("field size does not match the lattice");
        }
        if (stencil.counts != lattice.counts() || stencil.periodic != lattice.periodicity())
        {
            throw ValidationError("stencil was built for a different lattice");
        }
        if (density.required_codomain() > 0 && density.required_codomain() != m)
        {
            throw ValidationError("density expects codomain dimension " + std::to_string(density.required_codomain()));
        }
        if (opts.slope && (opts.slope->rows() != m || opts.slope->cols() != d))
        {
            throw ValidationError("affine slope must be an m x d matrix");
        }
        if (opts.slope_gradient && !opts.slope)
        {
            throw ValidationError("slope gradient requested without an affine slope");
        }

        const AxisPairCache cache(lattice, stencil, opts.region);
        InteractionResult result;
        result.partials.assign(stencil.size(), 0.0);

        const std::size_t entries = stencil.size();
        const int threads = static_cast<int>(std::min<std::size_t>(std::max(1, thread_count()), std::max<std::size_t>(entries, 1)));
        std::vector<Workspace> workspaces;
        workspaces.reserve(threads);
        for (int t = 0; t < threads; ++t)
        {
            workspaces.emplace_back(m, n_nodes, d, opts.gradient, opts.slope_gradient);
        }
        auto chunk = [&](int t) {
            return std::pair<std::size_t, std::size_t>(entries * t / threads, entries * (t + 1) / threads);
        };
        if (threads == 1)
        {
            accumulate_dispatch(lattice, values, density, stencil, eps, opts, cache, 0, entries, workspaces[0],
                             result.partials);
        }
        else
        {
            std::vector<std::exception_ptr> errors(threads);
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t)
            {
                pool.emplace_back([&, t]() {
                    try
                    {
                        const auto [begin, end] = chunk(t);
                        accumulate_dispatch(lattice, values, density, stencil, eps, opts, cache, begin, end,
                                         workspaces[t], result.partials);
                    }
                    catch (...)
                    {
                        errors[t] = std::current_exception();
                    }
                });
            }
            for (auto& worker : pool)
            {
                worker.join();
            }
            for (const auto& error : errors)
            {
                if (error)
                {
                    std::rethrow_exception(error);
                }
            }
        }

        for (double partial : result.partials)
        {
            result.sum += partial;
        }
        if (opts.gradient)
        {
            result.gradient = std::move(workspaces[0].gradient);
            for (int t = 1; t < threads; ++t)
            {
                result.gradient += workspaces[t].gradient;
            }
        }
        if (opts.slope_gradient)
        {
            result.slope_gradient = std::move(workspaces[0].slope_gradient);
            for (int t = 1; t < threads; ++t)
            {
                result.slope_gradient += workspaces[t].slope_gradient;
            }
        }
        return result;
    }

    EnergyBreakdown energy_rescaled(const Field& u, const Density& density, const ScaleParams& scale,
                                    const InteractionStencil& stencil, const std::optional<PlanarRegion>& region)
    {
        check_stencil(u.lattice(), stencil);
        InteractionOptions opts;
        opts.region = region ? &*region : nullptr;
        const auto terms = interaction_terms(u.lattice(), u.values(), density, stencil, scale.eps(), opts);
        return make_breakdown(stencil, terms, scale.prefactor_rescaled(), u.lattice().node_measure());
    }

    EnergyBreakdown energy_physical(const Field& v, const Density& density, const ScaleParams& scale,
                                    const InteractionStencil& stencil)
    {
        const Lattice& lattice = v.lattice();
        const int d = lattice.dim();
        bool compatible = stencil.counts == lattice.counts() && stencil.periodic == lattice.periodicity();
        for (int a = 0; compatible && a < d; ++a)
        {
            const double expected = a + 1 < d ? stencil.spacing(a) : stencil.spacing(a) * scale.gamma();
            compatible = std::abs(lattice.spacing(a) - expected) <= 1e-12 * expected;
        }
        if (!compatible)
        {
            throw ValidationError("physical lattice is not the vertical rescaling of the stencil lattice");
        }
        const auto terms = interaction_terms(lattice, v.values(), density, stencil, scale.eps());
        return make_breakdown(stencil, terms, scale.prefactor_physical(), lattice.node_measure());
    }

    EnergyBreakdown energy_truncated(const Field& u, const Density& density, const ScaleParams& scale,
                                     const InteractionStencil& stencil, double T)
    {
        return energy_rescaled(u, density, scale, truncate(stencil, T));
    }

    Field gradient_rescaled(const Field& u, const Density& density, const ScaleParams& scale,
                            const InteractionStencil& stencil, const std::optional<PlanarRegion>& region,
                            const std::vector<bool>& fixed_mask)
    {
        check_stencil(u.lattice(), stencil);
        InteractionOptions opts;
        opts.region = region ? &*region : nullptr;
        opts.gradient = true;
        auto terms = interaction_terms(u.lattice(), u.values(), density, stencil, scale.eps(), opts);
        Eigen::MatrixXd g = (scale.prefactor_rescaled() * u.lattice().node_measure()) * terms.gradient;
        if (!fixed_mask.empty())
        {
            if (static_cast<Index>(fixed_mask.size()) != u.size())
            {
                throw ValidationError("fixed mask size does not match the lattice");
            }
            for (Index i = 0; i < u.size(); ++i)
            {
                if (fixed_mask[i])
                {
                    g.col(i).setZero();
                }
            }
        }
        return Field(u.lattice_ptr(), std::move(g));
    }

    namespace
    {
        /// Composite-trapezoid weight of node i for shift k on a non-periodic axis with n nodes.
        double pair_factor(Index i, Index k, Index n)
        {
            const Index lo = std::max<Index>(0, -k);
            const Index hi = std::min<Index>(n - 1, n - 1 - k);
            if (i < lo || i > hi)
            {
                return 0.0;
            }
            if (lo == hi)
            {
                return 0.0;
            }
            return i == lo || i == hi ? 0.5 : 1.0;
        }

        double power_difference(const Eigen::MatrixXd& u, Index x, Index y, double eps, double p)
        {
            const double norm = (u.col(y) - u.col(x)).norm() / eps;
            return p == 2.0 ? norm * norm : std::pow(norm, p);
        }
    }

    ConvolutionForms conv_energy_forms_check(const Field& u, double r, const ScaleParams& scale, double p)
    {
        const Lattice& lattice = u.lattice();
        const int d = lattice.dim();
        for (int a = 0; a < d; ++a)
        {
            if (lattice.periodic(a))
            {
                throw ValidationError("convolution form check needs a non-periodic lattice");
            }
        }
        const double eps = scale.eps();
        const double gamma = scale.gamma();
        ConvolutionForms out;

        const auto density = pure_convolution(r, p);
        const auto stencil = build_stencil(cylinder_indicator(r), eps, gamma, lattice);
        out.xi_form = energy_rescaled(u, *density, scale, stencil).total;

        const double prefactor = std::max(eps, gamma) / std::pow(eps, d);
        const double measure = lattice.node_measure();
        const Eigen::MatrixXd& values = u.values();
        auto inside = [&](const std::vector<Index>& k) {
            double planar = 0.0;
            for (int a = 0; a + 1 < d; ++a)
            {
                const double disp = k[a] * lattice.spacing(a);
                planar += disp * disp;
            }
            const double vertical = std::abs(k[d - 1] * lattice.spacing(d - 1));
            return std::sqrt(planar) < eps * r && vertical < eps * r / gamma && vertical < 2.0;
        };

        double xy = 0.0;
        for (Index x = 0; x < lattice.size(); ++x)
        {
            const auto ix = lattice.multi_index(x);
            for (Index y = 0; y < lattice.size(); ++y)
            {
                if (x == y)
                {
                    continue;
                }
                const auto iy = lattice.multi_index(y);
                std::vector<Index> k(d);
                double c = 1.0;
                for (int a = 0; a < d; ++a)
                {
                    k[a] = iy[a] - ix[a];
                    c *= pair_factor(ix[a], k[a], lattice.count(a));
                }
                if (c != 0.0 && inside(k))
                {
                    xy += c * power_difference(values, x, y, eps, p);
                }
            }
        }
        out.xy_form = prefactor * xy * measure * measure;

        double zsum = 0.0;
        std::vector<Index> k(d);
        std::vector<Index> reach(d);
        for (int a = 0; a < d; ++a)
        {
            reach[a] = lattice.count(a) - 1;
            k[a] = -reach[a];
        }
        while (true)
        {
            const bool zero = std::all_of(k.begin(), k.end(), [](Index v) { return v == 0; });
            if (!zero && inside(k))
            {
                double inner = 0.0;
                for (Index x = 0; x < lattice.size(); ++x)
                {
                    const auto ix = lattice.multi_index(x);
                    double c = 1.0;
                    std::vector<Index> iy(d);
                    for (int a = 0; a < d && c != 0.0; ++a)
                    {
                        c *= pair_factor(ix[a], k[a], lattice.count(a));
                        iy[a] = ix[a] + k[a];
                    }
                    if (c != 0.0)
                    {
                        inner += c * power_difference(values, x, lattice.flat_index(iy), eps, p);
                    }
                }
                zsum += measure * inner;
            }
            int a = d - 1;
            while (a >= 0 && k[a] == reach[a])
            {
                k[a] = -reach[a];
                --a;
            }
            if (a < 0)
            {
                break;
            }
            ++k[a];
        }
        out.z_form = prefactor * zsum * measure;
        return out;
    }
}
