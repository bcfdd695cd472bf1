/*
 * Copyright 2026 the riskscreen authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace riskscreen::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index for `name`, or nullopt.
  std::optional<std::size_t> column(const std::string& name) const;
};

// RFC-4180-ish: comma delimiter, double-quote escaping, CRLF tolerated.
// Every data row is padded/validated to header width; a wider row is an error.
Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);

std::string escape_field(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace riskscreen::csv
