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

#ifndef CAUSEX_CSV_HPP_
#define CAUSEX_CSV_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace causex::csv {

using Row = std::vector<std::string>;

// Parses RFC-4180 text: comma separated, double-quote quoting with "" as an
// escaped quote, LF or CRLF record terminators. A trailing newline does not
// produce an empty record. Throws Error(kSchema) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

// Joins escaped fields with commas and terminates the record with "\n".
std::string format_row(const Row& row);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
// Whole-field decimal parse; Error(kSchema) naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

}  // namespace causex::csv

#endif  // CAUSEX_CSV_HPP_
