// SPDX-License-Identifier: Apache-2.0
//
// csipos - CSI-based user positioning toolkit for massive MIMO
// Copyright (C) 2026 The csipos authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "csipos/npy.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "csipos/error.hpp"

namespace csipos::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::string dict_value(const std::string& header, const std::string& key) {
  const auto pos = header.find("'" + key + "'");
  if (pos == std::string::npos) throw MalformedManifestError("npy header lacks key " + key);
  auto colon = header.find(':', pos);
  if (colon == std::string::npos) throw MalformedManifestError("npy header malformed near " + key);
  ++colon;
  while (colon < header.size() && header[colon] == ' ') ++colon;
  if (header[colon] == '(') {
    const auto end = header.find(')', colon);
    return header.substr(colon, end - colon + 1);
  }
  if (header[colon] == '\'') {
    const auto end = header.find('\'', colon + 1);
    return header.substr(colon + 1, end - colon - 1);
  }
  const auto end = header.find_first_of(",}", colon);
  return header.substr(colon, end - colon);
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
  std::vector<std::size_t> shape;
  std::size_t i = 1;
  while (i < tuple.size()) {
    while (i < tuple.size() && (tuple[i] == ' ' || tuple[i] == ',')) ++i;
    if (i >= tuple.size() || tuple[i] == ')') break;
    std::size_t value = 0;
    bool any = false;
    while (i < tuple.size() && tuple[i] >= '0' && tuple[i] <= '9') {
      value = value * 10 + static_cast<std::size_t>(tuple[i] - '0');
      ++i;
      any = true;
    }
    if (!any) throw MalformedManifestError("npy shape malformed: " + tuple);
    shape.push_back(value);
  }
  return shape;
}

// Index permutation from row-major position to storage position.
std::size_t storage_index(std::size_t row_major, const std::vector<std::size_t>& shape, bool fortran) {
  if (!fortran || shape.size() < 2) return row_major;
  std::size_t idx = 0;
  std::size_t stride = 1;
  std::size_t rem = row_major;
  std::vector<std::size_t> coord(shape.size());
  for (std::size_t d = shape.size(); d-- > 0;) {
    coord[d] = rem % shape[d];
    rem /= shape[d];
  }
  for (std::size_t d = 0; d < shape.size(); ++d) {
    idx += coord[d] * stride;
    stride *= shape[d];
  }
  return idx;
}

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

std::size_t Array::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t Array::item_size() const {
  if (descr == "<f4") return 4;
  if (descr == "<f8" || descr == "<c8" || descr == "<i8") return 8;
  if (descr == "<c16") return 16;
  throw ShapeMismatchError("unsupported npy dtype " + descr);
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0) throw MalformedManifestError("not an npy file: " + path.string());
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (b[1] << 8);
  } else if (version[0] == 2 || version[0] == 3) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  } else {
    throw VersionMismatchError("unsupported npy version " + std::to_string(version[0]));
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw TruncationError("npy header truncated: " + path.string());

  Array out;
  out.descr = dict_value(header, "descr");
  out.fortran_order = dict_value(header, "fortran_order").find("True") != std::string::npos;
  out.shape = parse_shape(dict_value(header, "shape"));
  const std::size_t n_bytes = out.element_count() * out.item_size();
  out.bytes.resize(n_bytes);
  in.read(out.bytes.data(), static_cast<std::streamsize>(n_bytes));
  if (static_cast<std::size_t>(in.gcount()) != n_bytes) {
    throw TruncationError("npy payload truncated: " + path.string());
  }
  return out;
}

void write(const std::filesystem::path& path, const Array& array) {
  std::string shape = "(";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    shape += std::to_string(array.shape[i]);
    if (array.shape.size() == 1 || i + 1 < array.shape.size()) shape += ", ";
  }
  shape += ")";
  std::string header = "{'descr': '" + array.descr + "', 'fortran_order': " +
                       (array.fortran_order ? "True" : "False") + ", 'shape': " + shape + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 6);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const unsigned char len[2] = {static_cast<unsigned char>(header.size() & 0xff),
                                static_cast<unsigned char>(header.size() >> 8)};
  out.write(reinterpret_cast<const char*>(len), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(array.bytes.data(), static_cast<std::streamsize>(array.bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::complex<double>> as_complex(const Array& array) {
  const std::size_t n = array.element_count();
  const std::size_t item = array.item_size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = array.bytes.data() + storage_index(i, array.shape, array.fortran_order) * item;
    if (array.descr == "<c16") {
      out[i] = {load<double>(p), load<double>(p + 8)};
    } else if (array.descr == "<c8") {
      out[i] = {load<float>(p), load<float>(p + 4)};
    } else if (array.descr == "<f8") {
      out[i] = {load<double>(p), 0.0};
    } else if (array.descr == "<f4") {
      out[i] = {load<float>(p), 0.0};
    } else {
      throw ShapeMismatchError("npy dtype " + array.descr + " is not convertible to complex");
    }
  }
  return out;
}

std::vector<double> as_real(const Array& array) {
  const std::size_t n = array.element_count();
  const std::size_t item = array.item_size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = array.bytes.data() + storage_index(i, array.shape, array.fortran_order) * item;
    if (array.descr == "<f8") {
      out[i] = load<double>(p);
    } else if (array.descr == "<f4") {
      out[i] = load<float>(p);
    } else if (array.descr == "<i8") {
      out[i] = static_cast<double>(load<std::int64_t>(p));
    } else {
      throw ShapeMismatchError("npy dtype " + array.descr + " is not convertible to real");
    }
  }
  return out;
}

}  // namespace csipos::npy
