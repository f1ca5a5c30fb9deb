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

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <type_traits>
#include <utility>
#include <vector>

namespace nlthin
{
    namespace quadrature
    {
        struct Tolerance
        {
            double absolute = 1e-13;
            double relative = 1e-10;
            int max_segments = 4000;
        };

        template <typename T>
        struct Result
        {
            T value;
            double error = 0.0;
            bool converged = true;
            long evaluations = 0;
        };

        template <typename T>
        double magnitude(const T& v)
        {
            if constexpr (std::is_arithmetic_v<T>)
            {
                return std::abs(v);
            }
            else
            {
                return v.size() == 0 ? 0.0 : v.template lpNorm<Eigen::Infinity>();
            }
        }

        namespace detail
        {
            // 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
            inline constexpr std::array<double, 8> kronrod_nodes = {
                0.991455371120812639206854697526329,
                0.949107912342758524526189684047851,
                0.864864423359769072789712788640926,
                0.741531185599394439863864773280788,
                0.586087235467691130294144845693013,
                0.405845151377397166906606412076961,
                0.207784955007898467600689403773245,
                0.000000000000000000000000000000000};
            inline constexpr std::array<double, 8> kronrod_weights = {
                0.022935322010529224963732008058970,
                0.063092092629978553290700663189204,
                0.104790010322250183839876322541518,
                0.140653259715525918745189590510238,
                0.169004726639267902826583426598550,
                0.190350578064785409913256402421014,
                0.204432940075298892414161999234649,
                0.209482141084727828012999174891714};
            inline constexpr std::array<double, 4> gauss_weights = {
                0.129484966168869693270611432679082,
                0.279705391489276667901467771423780,
                0.381830050505118944950369775488975,
                0.417959183673469387755102040816327};

            template <typename T>
            struct Segment
            {
                double a;
                double b;
                T value;
                double error;
            };

            template <typename F>
            auto gauss_kronrod_15(F& f, double a, double b)
            {
                const double center = 0.5 * (a + b);
                const double half = 0.5 * (b - a);
                auto fc = f(center);
                using T = decltype(fc);
                T kronrod = fc * kronrod_weights[7];
                T gauss = fc * gauss_weights[3];
                for (int j = 0; j < 7; ++j)
                {
                    const double dx = half * kronrod_nodes[j];
                    T sum = f(center - dx) + f(center + dx);
                    kronrod += sum * kronrod_weights[j];
                    if (j % 2 == 1)
                    {
                        gauss += sum * gauss_weights[j / 2];
                    }
                }
                T value = kronrod * half;
                T diff = (kronrod - gauss) * half;
                return Segment<T>{a, b, std::move(value), magnitude(diff)};
            }
        }

        /// Globally adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b].
        /// f may return a scalar or an Eigen vector; the error is measured in the max norm.
        /// The integrand is never evaluated at the endpoints, so integrable endpoint
        /// singularities are admissible.
        template <typename F>
        auto integrate(F&& f, double a, double b, const Tolerance& tol = {})
        {
            using T = std::decay_t<decltype(f(a))>;
            std::vector<detail::Segment<T>> segments;
            segments.push_back(detail::gauss_kronrod_15(f, a, b));
            long evaluations = 15;

            auto total = [&segments]() {
                T value = segments.front().value;
                double error = segments.front().error;
                for (std::size_t i = 1; i < segments.size(); ++i)
                {
                    value += segments[i].value;
                    error += segments[i].error;
                }
                return std::pair<T, double>(std::move(value), error);
            };

            auto [value, error] = total();
            while (error > std::max(tol.absolute, tol.relative * magnitude(value)) &&
                   static_cast<int>(segments.size()) < tol.max_segments)
            {
                auto worst = std::max_element(
                    segments.begin(), segments.end(),
                    [](const auto& l, const auto& r) { return l.error < r.error; });
                const double mid = 0.5 * (worst->a + worst->b);
                if (!(mid > worst->a && mid < worst->b))
                {
                    break;
                }
                auto left = detail::gauss_kronrod_15(f, worst->a, mid);
                auto right = detail::gauss_kronrod_15(f, mid, worst->b);
                evaluations += 30;
                *worst = std::move(left);
                segments.insert(worst + 1, std::move(right));
                std::tie(value, error) = total();
            }
            const bool converged = error <= std::max(tol.absolute, tol.relative * magnitude(value));
            return Result<T>{std::move(value), error, converged, evaluations};
        }

        /// Integrates over [a, b] split at the given interior break points.
        template <typename F>
        auto integrate_piecewise(F&& f, double a, double b, std::vector<double> breaks,
                                 const Tolerance& tol = {})
        {
            breaks.push_back(a);
            breaks.push_back(b);
            std::sort(breaks.begin(), breaks.end());
            std::vector<double> knots;
            for (double t : breaks)
            {
                if (t >= a && t <= b && (knots.empty() || t > knots.back()))
                {
                    knots.push_back(t);
                }
            }
            using T = std::decay_t<decltype(f(a))>;
            std::optional<Result<T>> acc;
            for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            {
                auto piece = integrate(f, knots[i], knots[i + 1], tol);
                if (!acc)
                {
                    acc = std::move(piece);
                }
                else
                {
                    acc->value += piece.value;
                    acc->error += piece.error;
                    acc->converged = acc->converged && piece.converged;
                    acc->evaluations += piece.evaluations;
                }
            }
            if (!acc)
            {
                T zero = f(0.5 * (a + b)) * 0.0;
                return Result<T>{zero, 0.0, true, 1};
            }
            return *acc;
        }
    }
}
