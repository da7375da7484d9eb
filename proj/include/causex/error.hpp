// Copyright 2026 The causex Authors.
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

#ifndef CAUSEX_ERROR_HPP_
#define CAUSEX_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace causex {

// Error categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument,  // bad flag value, bad configuration
  kNotFound,         // missing file
  kIo,               // unreadable / unwritable file
  kSchema,           // data or file content violates its format
  kNumeric,          // non-finite values, solver failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const { return kind_; }
  // Name of the module that raised the error ("corpus", "model", ...).
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string_view module,
                              const std::string& message) {
  throw Error(kind, std::string(module), message);
}

}  // namespace causex

#endif  // CAUSEX_ERROR_HPP_
