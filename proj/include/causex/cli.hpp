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

#ifndef CAUSEX_CLI_HPP_
#define CAUSEX_CLI_HPP_

#include <iosfwd>

namespace causex {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;     // bad flags, bad values, unknown subcommand
inline constexpr int kExitIo = 3;        // missing or unreadable/unwritable file
inline constexpr int kExitSchema = 4;    // malformed input data
inline constexpr int kExitNumeric = 5;   // solver or training failure
inline constexpr int kExitMismatch = 6;  // --expect-manifest differs

// Entry point of the `causex` command line. Progress and errors go to
// `err`, help text to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace causex

#endif  // CAUSEX_CLI_HPP_
