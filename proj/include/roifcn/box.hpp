#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

namespace roifcn {

// Axis-aligned box with inclusive integer coordinates, 0-indexed, x = column,
// y = row. The grid it lives on (image or feature) is stated per use.
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool operator==(const Box&) const = default;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  long long area() const {
    if (x1 < x0 || y1 < y0) return 0;
    return static_cast<long long>(width()) * height();
  }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

inline std::string box_str(const Box& b) {
  return "(" + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," + std::to_string(b.x1) +
         "," + std::to_string(b.y1) + ")";
}

inline Box clip_box(const Box& b, int height, int width) {
  return Box{std::clamp(b.x0, 0, width - 1), std::clamp(b.y0, 0, height - 1),
             std::clamp(b.x1, 0, width - 1), std::clamp(b.y1, 0, height - 1)};
}

inline long long intersection_area(const Box& a, const Box& b) {
  const int ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
  if (ix1 < ix0 || iy1 < iy0) return 0;
  return static_cast<long long>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
}

// Inclusive-pixel IoU: a box's width counts x1-x0+1 pixels.
inline double iou(const Box& a, const Box& b) {
  const long long inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace roifcn
