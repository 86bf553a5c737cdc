// Copyright 2025 The gp2bnn Authors
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

#ifndef GP2BNN_ERRORS_HPP
#define GP2BNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gp2bnn {

struct DimMismatch : std::runtime_error {
  explicit DimMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

struct NotPSD : std::runtime_error {
  explicit NotPSD(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
  explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct BadKernelSpec : std::runtime_error {
  explicit BadKernelSpec(const std::string& what) : std::runtime_error(what) {}
};

struct BadActivationSpec : std::runtime_error {
  explicit BadActivationSpec(const std::string& what) : std::runtime_error(what) {}
};

struct TooFewSamples : std::runtime_error {
  explicit TooFewSamples(const std::string& what) : std::runtime_error(what) {}
};

struct InputSetMismatch : std::runtime_error {
  explicit InputSetMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateBatch : std::runtime_error {
  explicit DegenerateBatch(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

struct NonFinite : std::runtime_error {
  explicit NonFinite(const std::string& what) : std::runtime_error(what) {}
};

struct AllRestartsFailed : std::runtime_error {
  explicit AllRestartsFailed(const std::string& what) : std::runtime_error(what) {}
};

struct Diverged : std::runtime_error {
  explicit Diverged(const std::string& what) : std::runtime_error(what) {}
};

struct BadConfig : std::runtime_error {
  explicit BadConfig(const std::string& what) : std::runtime_error(what) {}
};

struct BadData : std::runtime_error {
  explicit BadData(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gp2bnn

#endif  // GP2BNN_ERRORS_HPP
