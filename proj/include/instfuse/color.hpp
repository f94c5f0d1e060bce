// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "instfuse/point_cloud.hpp"

namespace instfuse {

inline Vec3 hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

/// Stable distinctive color per instance id via the golden-ratio hue walk;
/// unassigned points (-1) come out black.
inline Vec3 instance_color(int label) {
  if (label < 0) return Vec3::Zero();
  const double hue = std::fmod((label + 1) * 0.6180339887498949, 1.0);
  return hsv_to_rgb(hue, 0.72, 0.95);
}

}  // namespace instfuse
