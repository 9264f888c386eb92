// Copyright 2026 The sadsid Authors. All Rights Reserved.
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

#include "sadsid/io.h"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sadsid/error.h"

namespace sadsid {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kUnsupportedFormat: return "unsupported-format";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kArchitecture: return "architecture";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kChecksum: return "checksum";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kScoring: return "scoring";
    case ErrorKind::kTask: return "task";
  }
  return "unknown";
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path,
                     std::string_view text) {
  write_file_bytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()),
                                   text.size()));
}

std::vector<TextLine> read_text_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<TextLine> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    lines.push_back({number, line});
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t begin = 0;
  while (true) {
    const size_t tab = line.find('\t', begin);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, tab - begin));
    begin = tab + 1;
  }
}

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::kFormat, "bad number for " + std::string(what) +
                                        ": '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  long long value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::kFormat, "bad integer for " + std::string(what) +
                                        ": '" + std::string(text) + "'");
  }
  return value;
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  std::string out(buf);
  if (out.starts_with("-") && out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);  // no "-0.000"
  }
  return out;
}

void ByteWriter::u32(uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<uint32_t>(v)); }

void ByteWriter::f64(double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    bytes_.push_back(static_cast<uint8_t>(bits >> (8 * i)));
  }
}

void ByteWriter::raw(std::span<const uint8_t> data) {
  bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<uint32_t>(s.size()));
  raw(std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

void ByteReader::need(size_t n, std::string_view what) const {
  if (bytes_.size() - offset_ < n) {
    throw Error(ErrorKind::kTruncation,
                "truncated while reading " + std::string(what) +
                    " at byte offset " + std::to_string(offset_) + " (need " +
                    std::to_string(n) + " bytes, " +
                    std::to_string(bytes_.size() - offset_) + " left)");
  }
}

uint8_t ByteReader::u8(std::string_view what) {
  need(1, what);
  return bytes_[offset_++];
}

uint32_t ByteReader::u32(std::string_view what) {
  need(4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t{bytes_[offset_ + i]} << (8 * i);
  offset_ += 4;
  return v;
}

float ByteReader::f32(std::string_view what) {
  return std::bit_cast<float>(u32(what));
}

double ByteReader::f64(std::string_view what) {
  need(8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t{bytes_[offset_ + i]} << (8 * i);
  offset_ += 8;
  return std::bit_cast<double>(v);
}

std::span<const uint8_t> ByteReader::raw(size_t n, std::string_view what) {
  need(n, what);
  auto out = bytes_.subspan(offset_, n);
  offset_ += n;
  return out;
}

std::string ByteReader::str(std::string_view what) {
  const uint32_t n = u32(what);
  auto data = raw(n, what);
  return std::string(data.begin(), data.end());
}

}  // namespace sadsid
