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

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace nlthin
{
    /// Base class of every error raised by the library.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Invalid input: bad configuration value, mismatched shapes, violated precondition.
    /// `field()` names the offending configuration path when one applies (e.g. "density.p").
    class ValidationError : public Error
    {
    public:
        explicit ValidationError(const std::string& message, std::string field = {})
            : Error(field.empty() ? message : field + ": " + message)
            , m_field(std::move(field))
        {
        }

        const std::string& field() const { return m_field; }

    private:
        std::string m_field;
    };

    /// Numerical breakdown (non-finite energy, failed quadrature). Carries the last
    /// iterate when raised from inside a minimization so callers can dump it.
    class NumericalError : public Error
    {
    public:
        explicit NumericalError(const std::string& message,
                                std::optional<Eigen::MatrixXd> iterate = std::nullopt)
            : Error(message)
            , m_iterate(std::move(iterate))
        {
        }

        const std::optional<Eigen::MatrixXd>& iterate() const { return m_iterate; }

    private:
        std::optional<Eigen::MatrixXd> m_iterate;
    };
}
