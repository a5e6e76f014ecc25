/* Copyright 2026 The qbcf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#ifndef QBCF_ERROR_HPP
#define QBCF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qbcf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Cholesky pivot was not strictly positive.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error("not positive definite: " + what) {}
};

class InvalidInterval : public Error {
 public:
  explicit InvalidInterval(const std::string& what) : Error("invalid interval: " + what) {}
};

/// More than the tolerated share of first-stage evaluation points had no
/// kernel mass at the selected bandwidth.
class DegenerateFirstStage : public Error {
 public:
  explicit DegenerateFirstStage(const std::string& what) : Error("degenerate first stage: " + what) {}
};

class InsufficientReplications : public Error {
 public:
  explicit InsufficientReplications(const std::string& what)
      : Error("insufficient replications: " + what) {}
};

class ZeroStandardError : public Error {
 public:
  explicit ZeroStandardError(const std::string& what) : Error("zero standard error: " + what) {}
};

/// Design I regression function is singular at z = -1.
class SingularPoint : public Error {
 public:
  explicit SingularPoint(const std::string& what) : Error("singular point: " + what) {}
};

/// Too many bootstrap or Monte Carlo replications failed.
class FailureThresholdExceeded : public Error {
 public:
  explicit FailureThresholdExceeded(const std::string& what)
      : Error("failure threshold exceeded: " + what) {}
};

/// Malformed dataset or configuration input.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("schema error: " + what) {}
};

}  // namespace qbcf

#endif  // QBCF_ERROR_HPP
