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

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace csipos::npy {

// Minimal reader/writer for NumPy .npy files (format versions 1-3, little
// endian, C or Fortran order). Supported dtypes: <f4 <f8 <c8 <c16 <i8.
struct Array {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::vector<char> bytes;

  std::size_t element_count() const;
  std::size_t item_size() const;
};

Array read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Array& array);

// Converts to row-major values; throws ShapeMismatchError on unsupported dtype.
std::vector<std::complex<double>> as_complex(const Array& array);
std::vector<double> as_real(const Array& array);

}  // namespace csipos::npy
