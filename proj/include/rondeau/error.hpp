// Copyright 2026 The Rondeau Authors
//
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

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rondeau {

/// Base class for every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error report.
class Error : public std::runtime_error {
   public:
    Error(std::string kind, const std::string &msg) : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string &kind() const noexcept { return kind_; }

   private:
    std::string kind_;
};

#define RONDEAU_DEFINE_ERROR(Name, tag)                                    \
    class Name : public Error {                                            \
       public:                                                             \
        explicit Name(const std::string &msg) : Error(tag, msg) {}         \
    };

RONDEAU_DEFINE_ERROR(ArgumentError, "argument")
RONDEAU_DEFINE_ERROR(CapacityError, "capacity")
RONDEAU_DEFINE_ERROR(PackingInfeasibleError, "packing_infeasible")
RONDEAU_DEFINE_ERROR(NormalizationError, "normalization")
RONDEAU_DEFINE_ERROR(DimensionError, "dimension")
RONDEAU_DEFINE_ERROR(NumericalIntegrityError, "numerical_integrity")
RONDEAU_DEFINE_ERROR(InsufficientDataError, "insufficient_data")
RONDEAU_DEFINE_ERROR(ConfigurationError, "configuration")
RONDEAU_DEFINE_ERROR(EncodingError, "encoding")
RONDEAU_DEFINE_ERROR(ParseError, "parse")

#undef RONDEAU_DEFINE_ERROR

/// Nonlinear fit failed to converge; carries the final residual norm.
class FitError : public Error {
   public:
    FitError(const std::string &msg, double residual) : Error("fit", msg), residual_(residual) {}
    double residual() const noexcept { return residual_; }

   private:
    double residual_;
};

/// Decoder refused one or more half-period samples whose magnitude is below
/// the significance threshold.
class LowConfidenceError : public Error {
   public:
    LowConfidenceError(const std::string &msg, std::vector<std::size_t> cycles)
        : Error("low_confidence", msg), cycles_(std::move(cycles)) {}
    const std::vector<std::size_t> &cycles() const noexcept { return cycles_; }

   private:
    std::vector<std::size_t> cycles_;
};

}  // namespace rondeau
