// Copyright 2026 The qafs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qafs {

/// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dataset could not be read or produced no usable rows.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem too large for the requested solver.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qafs
