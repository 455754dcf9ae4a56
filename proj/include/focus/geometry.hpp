#pragma once

#include <algorithm>
#include <cstdint>

namespace focus {

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::int64_t area() const {
    return width() <= 0 || height() <= 0 ? 0 : std::int64_t{width()} * height();
  }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
  friend auto operator<=>(const PixelRect&, const PixelRect&) = default;
};

// Inclusive grid rectangle; a 3x3 region has area 9.
struct GridRect {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;

  int height() const { return bottom - top + 1; }
  int width() const { return right - left + 1; }
  std::int64_t area() const {
    return height() <= 0 || width() <= 0 ? 0 : std::int64_t{height()} * width();
  }
  bool contains(int row, int col) const {
    return row >= top && row <= bottom && col >= left && col <= right;
  }
  bool contains(const GridRect& o) const {
    return o.top >= top && o.bottom <= bottom && o.left >= left && o.right <= right;
  }

  friend bool operator==(const GridRect&, const GridRect&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

inline PixelRect intersect(const PixelRect& a, const PixelRect& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
          std::min(a.y1, b.y1)};
}

inline PixelRect bounding_box(const PixelRect& a, const PixelRect& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
          std::max(a.y1, b.y1)};
}

inline double iou(const PixelRect& a, const PixelRect& b) {
  const std::int64_t inter = intersect(a, b).area();
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni <= 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::int64_t intersection_area(const GridRect& a, const GridRect& b) {
  const GridRect r{std::max(a.top, b.top), std::max(a.left, b.left),
                   std::min(a.bottom, b.bottom), std::min(a.right, b.right)};
  return r.area();
}

inline double iou(const GridRect& a, const GridRect& b) {
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni <= 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace focus
