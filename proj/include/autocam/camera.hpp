// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

#pragma once

#include "autocam/image.hpp"

namespace autocam {

/// Frame source driven by the controller. Implementations must return an
/// image whose metadata echoes the requested attributes.
class CameraInterface {
 public:
  virtual ~CameraInterface() = default;

  virtual Image capture(const CameraAttributes& attrs) = 0;
  virtual AttributeBounds bounds() const = 0;
};

}  // namespace autocam
