// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autocam {

/// Error classes raised by the library. Each maps to a distinct CLI exit code.
enum class Errc {
  InvalidArgument = 2,
  ImageTooSmall = 3,
  DegenerateStack = 4,
  NonMonotoneFit = 5,
  OutOfRange = 6,
  SingularKernel = 7,
  CaptureFailed = 8,
  IoError = 9,
  MissingSidecar = 10,
  CorruptImage = 11,
  InvalidConfig = 12,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::DegenerateStack: return "DegenerateStack";
    case Errc::NonMonotoneFit: return "NonMonotoneFit";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::SingularKernel: return "SingularKernel";
    case Errc::CaptureFailed: return "CaptureFailed";
    case Errc::IoError: return "IoError";
    case Errc::MissingSidecar: return "MissingSidecar";
    case Errc::CorruptImage: return "CorruptImage";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  Errc code_;
};

}  // namespace autocam
