#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "focus/geometry.hpp"

namespace focus {

// 8-bit RGB, row-major, tightly packed.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// PNG or JPEG, detected from the signature. Throws on anything else.
Image decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& image);

Image crop(const Image& image, const PixelRect& rect);
// Nearest-neighbour resample of `src` into `dst_rect` of `dst`.
void paste_scaled(const Image& src, Image& dst, const PixelRect& dst_rect);
void stroke_rect(Image& image, const PixelRect& rect, int width, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b);

}  // namespace focus
