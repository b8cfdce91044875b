// Copyright 2026 The octoarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace octoarm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidArgument"; }
};

class NonConvergence : public Error {
 public:
  NonConvergence(std::size_t element, double residual)
      : Error("equilibrium solve did not converge at element " +
              std::to_string(element) +
              " (residual " + std::to_string(residual) + ")"),
        element_(element),
        residual_(residual) {}
  const char* kind() const noexcept override { return "NonConvergence"; }
  std::size_t element() const { return element_; }
  double residual() const { return residual_; }

 private:
  std::size_t element_;
  double residual_;
};

class SingularJacobian : public Error {
 public:
  explicit SingularJacobian(std::size_t element)
      : Error("equilibrium Jacobian is singular at element " +
              std::to_string(element)),
        element_(element) {}
  const char* kind() const noexcept override { return "SingularJacobian"; }
  std::size_t element() const { return element_; }

 private:
  std::size_t element_;
};

class DegenerateFrame : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "DegenerateFrame"; }
};

class Instability : public Error {
 public:
  Instability(double time, const std::string& what)
      : Error("simulation blew up at t = " + std::to_string(time) + " s: " +
              what),
        time_(time) {}
  const char* kind() const noexcept override { return "Instability"; }
  double time() const { return time_; }

 private:
  double time_;
};

// Raised by the forward-backward loop; carries the iteration that failed.
class SolverFailure : public Error {
 public:
  SolverFailure(std::size_t iteration, const std::string& what)
      : Error("forward-backward iteration " + std::to_string(iteration) +
              ": " + what),
        iteration_(iteration) {}
  const char* kind() const noexcept override { return "SolverFailure"; }
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what),
        field_(std::move(field)) {}
  const char* kind() const noexcept override { return "ConfigError"; }
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace octoarm
