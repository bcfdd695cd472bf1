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
#include "riskscreen/csv.hpp"

#include <fstream>
#include <sstream>

#include "riskscreen/common.hpp"

namespace riskscreen::csv {

std::optional<std::size_t> Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

// Parses one logical record (quoted fields may span physical lines).
// Returns false at end of stream with no data consumed.
bool read_record(std::istream& in, std::vector<std::string>& out) {
  out.clear();
  int c = in.get();
  if (c == EOF) return false;

  std::string field;
  bool in_quotes = false;
  bool saw_any = false;
  while (true) {
    if (c == EOF) {
      if (in_quotes) throw DataError("csv: unterminated quoted field");
      break;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      in_quotes = true;
      saw_any = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
      saw_any = true;
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(ch);
      saw_any = true;
    }
    c = in.get();
  }
  out.push_back(std::move(field));
  (void)saw_any;
  return true;
}

bool blank_record(const std::vector<std::string>& r) {
  return r.size() == 1 && r[0].empty();
}

}  // namespace

Table read_csv(std::istream& in) {
  Table t;
  std::vector<std::string> record;
  if (!read_record(in, record) || blank_record(record)) {
    throw DataError("csv: missing header row");
  }
  t.header = record;
  std::size_t line = 1;
  while (read_record(in, record)) {
    ++line;
    if (blank_record(record)) continue;  // trailing blank line
    if (record.size() > t.header.size()) {
      throw DataError("csv: row " + std::to_string(line) + " has " +
                      std::to_string(record.size()) + " fields, header has " +
                      std::to_string(t.header.size()));
    }
    record.resize(t.header.size());
    t.rows.push_back(record);
  }
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  return read_csv(f);
}

std::string escape_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape_field(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace riskscreen::csv
