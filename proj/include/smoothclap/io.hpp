// Copyright 2026 The SmoothCLAP Authors.
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

// File plumbing: base64 tensors, CSV/JSONL reading, and the metadata
// header every written artifact carries.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothclap/error.hpp"
#include "smoothclap/numeric.hpp"

namespace smoothclap {

inline constexpr std::string_view kMetaKey = "_meta";

// base64 ---------------------------------------------------------------------

inline std::string base64_encode(std::span<const unsigned char> in) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == in.size()) {
    const std::uint32_t v = in[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(std::string_view in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (in.size() % 4 != 0) fail(ErrorCode::ParseError, "base64 length is not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(in.size() / 4 * 3);
  for (std::size_t i = 0; i < in.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      if (in[i + k] == '=') {
        v[k] = 0;
        ++pad;
      } else {
        v[k] = value(in[i + k]);
        if (v[k] < 0 || pad > 0) fail(ErrorCode::ParseError, "invalid base64 character");
      }
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<unsigned char>(w >> 16));
    if (pad < 2) out.push_back(static_cast<unsigned char>((w >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<unsigned char>(w & 0xFF));
  }
  return out;
}

/// float64 values as little-endian bytes, base64 encoded.
inline std::string encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t u;
    std::memcpy(&u, &values[i], 8);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>((u >> (8 * b)) & 0xFF);
  }
  return base64_encode(bytes);
}

inline std::vector<double> decode_doubles(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) fail(ErrorCode::ParseError, "tensor payload is not a whole number of float64s");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    std::memcpy(&out[i], &u, 8);
  }
  return out;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_doubles(m.data())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  return Matrix(rows, cols, decode_doubles(j.at("data").get<std::string>()));
}

// text files -----------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/// JSONL objects, skipping blank lines and metadata lines.
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  std::size_t lineNo = 0;
  for (const auto& line : split_lines(read_text_file(path))) {
    ++lineNo;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineNo) + ": " + e.what());
    }
    if (j.is_object() && j.contains(kMetaKey)) continue;
    out.push_back(std::move(j));
  }
  return out;
}

inline std::string jsonl_meta_line(const nlohmann::json& meta) {
  return nlohmann::json{{std::string(kMetaKey), meta}}.dump() + "\n";
}

/// One-line CSV comment carrying the metadata object.
inline std::string csv_meta_line(const nlohmann::json& meta) { return "# " + meta.dump() + "\n"; }

inline std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lineNumbers;
};

/// Comma-separated table with a header row; '#' lines and blank lines are skipped.
inline CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable t;
  std::size_t lineNo = 0;
  for (const auto& line : split_lines(read_text_file(path))) {
    ++lineNo;
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv_row(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    t.rows.push_back(std::move(cells));
    t.lineNumbers.push_back(lineNo);
  }
  if (t.header.empty()) fail(ErrorCode::ParseError, path.string() + ": missing header row");
  return t;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct IdMatrix {
  std::vector<std::string> ids;
  Matrix values;
};

/// `id,x0..xN` CSV into a matrix, rows in file order. Rows are returned as
/// stored; callers normalize if they need to.
inline IdMatrix read_id_matrix_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.header.front() != "id") {
    fail(ErrorCode::ParseError, path.string() + ": header must be id,<columns...>");
  }
  if (t.rows.empty()) fail(ErrorCode::EmptyInput, path.string() + ": no data rows");
  const std::size_t width = t.header.size() - 1;
  IdMatrix out;
  std::vector<double> data;
  data.reserve(t.rows.size() * width);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path.string() + ":" + std::to_string(t.lineNumbers[r]);
    if (row.size() != width + 1) {
      fail(ErrorCode::RaggedRows, where + ": expected " + std::to_string(width + 1) + " cells, got " +
                                      std::to_string(row.size()));
    }
    if (!seen.insert(row[0]).second) fail(ErrorCode::DuplicateId, where + ": duplicate id '" + row[0] + "'");
    out.ids.push_back(row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      double v;
      if (!parse_double(row[c], v)) {
        fail(ErrorCode::NonNumericCell,
             where + ": row '" + row[0] + "' column '" + t.header[c] + "' is not a number: '" + row[c] + "'");
      }
      data.push_back(v);
    }
  }
  out.values = Matrix(out.ids.size(), width, std::move(data));
  return out;
}

inline std::string id_matrix_csv(const std::vector<std::string>& ids, const Matrix& m, std::string_view prefix) {
  std::string out = "id";
  for (std::size_t c = 0; c < m.cols(); ++c) out += "," + std::string(prefix) + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += ids[r];
    for (double v : m.row(r)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace smoothclap
