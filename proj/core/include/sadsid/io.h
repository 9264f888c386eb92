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

// Small file and text helpers shared by the readers and writers.

#ifndef SADSID_IO_H_
#define SADSID_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sadsid {

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const uint8_t> bytes);
void write_text_file(const std::filesystem::path& path,
                     std::string_view text);

// Lines of a text file with trailing '\r' stripped; empty lines and lines
// starting with '#' are skipped. Each element keeps its 1-based line number.
struct TextLine {
  int number = 0;
  std::string text;
};
std::vector<TextLine> read_text_lines(const std::filesystem::path& path);

std::vector<std::string_view> split_tabs(std::string_view line);

// Strict numeric parsing; throws ErrorKind::kFormat mentioning `what`.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

// Fixed-point decimal text, e.g. format_fixed(1.5, 3) == "1.500".
std::string format_fixed(double value, int digits);

// Little-endian byte writer / bounds-checked reader for the binary formats.
class ByteWriter {
 public:
  void u8(uint8_t v) { bytes_.push_back(v); }
  void u32(uint32_t v);
  void f32(float v);
  void f64(double v);
  void raw(std::span<const uint8_t> data);
  void str(std::string_view s);  // u32 length + bytes

  const std::vector<uint8_t>& bytes() const { return bytes_; }
  std::vector<uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

// Every read names what it is reading; running past the end throws
// ErrorKind::kTruncation with that name and the byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t u8(std::string_view what);
  uint32_t u32(std::string_view what);
  float f32(std::string_view what);
  double f64(std::string_view what);
  std::span<const uint8_t> raw(size_t n, std::string_view what);
  std::string str(std::string_view what);

  size_t offset() const { return offset_; }
  size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void need(size_t n, std::string_view what) const;

  std::span<const uint8_t> bytes_;
  size_t offset_ = 0;
};

}  // namespace sadsid

#endif  // SADSID_IO_H_
