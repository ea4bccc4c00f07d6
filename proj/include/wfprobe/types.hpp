// Copyright 2026 The wfprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Common scalar/matrix aliases and the exception hierarchy shared by all
 * wfprobe modules.
 */

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace wfprobe {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value (bad matrix, negative gamma, ...).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// An operation was invoked out of protocol order (pointer not ready, probe
/// attached after the friend measured, ...).
class ProtocolError : public Error {
  public:
    using Error::Error;
};

/// Post-selection onto a state orthogonal to the pre-selected one.
class OrthogonalPostSelection : public Error {
  public:
    using Error::Error;
};

/// Conditioning on an outcome that has zero probability or no samples.
class ConditioningError : public Error {
  public:
    using Error::Error;
};

} // namespace wfprobe
