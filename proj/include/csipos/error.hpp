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

#include <stdexcept>
#include <string>

namespace csipos {

enum class ErrorKind {
  kConfig,
  kCoincidentGeometry,
  kEmptyGrid,
  kSplit,
  kNormaliser,
  kVersionMismatch,
  kTruncated,
  kMalformedManifest,
  kCorrupt,
  kUnknownAdapter,
  kShapeMismatch,
  kLengthMismatch,
  kEmptyInput,
  kDivergence,
  kGridMismatch,
  kIo,
};

const char* to_string(ErrorKind kind);

// Base class for every error raised by the library. The kind is what callers
// (and the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CSIPOS_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

CSIPOS_DEFINE_ERROR(ConfigError, kConfig)
CSIPOS_DEFINE_ERROR(CoincidentGeometryError, kCoincidentGeometry)
CSIPOS_DEFINE_ERROR(EmptyGridError, kEmptyGrid)
CSIPOS_DEFINE_ERROR(SplitError, kSplit)
CSIPOS_DEFINE_ERROR(NormaliserError, kNormaliser)
CSIPOS_DEFINE_ERROR(VersionMismatchError, kVersionMismatch)
CSIPOS_DEFINE_ERROR(TruncationError, kTruncated)
CSIPOS_DEFINE_ERROR(MalformedManifestError, kMalformedManifest)
CSIPOS_DEFINE_ERROR(CorruptionError, kCorrupt)
CSIPOS_DEFINE_ERROR(UnknownAdapterError, kUnknownAdapter)
CSIPOS_DEFINE_ERROR(ShapeMismatchError, kShapeMismatch)
CSIPOS_DEFINE_ERROR(LengthMismatchError, kLengthMismatch)
CSIPOS_DEFINE_ERROR(EmptyInputError, kEmptyInput)
CSIPOS_DEFINE_ERROR(GridMismatchError, kGridMismatch)
CSIPOS_DEFINE_ERROR(IoError, kIo)

#undef CSIPOS_DEFINE_ERROR

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error(ErrorKind::kDivergence, what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace csipos
