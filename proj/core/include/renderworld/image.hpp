#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace renderworld {

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 255;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Owning 8-bit RGBA raster, row-major, no padding.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgba fill = {255, 255, 255, 255});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  Rgba at(int x, int y) const;
  void set(int x, int y, Rgba color);
  void fill_rect(int x, int y, int w, int h, Rgba color);

  /// Source-over blend of an opaque color with the given coverage alpha.
  void blend(int x, int y, Rgba color, double alpha);

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> png);

/// Reads width/height from the IHDR chunk without decoding pixels.
struct PngSize {
  int width = 0;
  int height = 0;
};
PngSize png_dimensions(std::span<const std::uint8_t> png);

/// Area-average downscale (or nearest upscale) to the requested size.
Image resize_box(const Image& image, int width, int height);

}  // namespace renderworld
