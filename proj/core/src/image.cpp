#include "renderworld/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "renderworld/error.hpp"

namespace renderworld {

Image::Image(int width, int height, Rgba fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
    pixels_[i + 3] = fill.a;
  }
}

Rgba Image::at(int x, int y) const {
  const auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  return {p[0], p[1], p[2], p[3]};
}

void Image::set(int x, int y, Rgba color) {
  auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  p[0] = color.r;
  p[1] = color.g;
  p[2] = color.b;
  p[3] = color.a;
}

void Image::fill_rect(int x, int y, int w, int h, Rgba color) {
  const int x0 = std::max(x, 0), y0 = std::max(y, 0);
  const int x1 = std::min(x + w, width_), y1 = std::min(y + h, height_);
  for (int yy = y0; yy < y1; ++yy)
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, color);
}

void Image::blend(int x, int y, Rgba color, double alpha) {
  const Rgba bg = at(x, y);
  auto mix = [alpha](std::uint8_t fg, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(alpha * fg + (1.0 - alpha) * b));
  };
  set(x, y, {mix(color.r, bg.r), mix(color.g, bg.g), mix(color.b, bg.b), bg.a});
}

namespace {

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

// Fast deflate with the "up" filter: screenshots are mostly flat regions, so
// this stays small while encoding several times faster than the defaults.
std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw Error(ErrorCode::IoError, "png encode failed: empty image");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "png encode failed: out of memory");
  }
  const auto stride = static_cast<std::size_t>(image.width()) * 4;
  const std::uint8_t* base = image.bytes().data();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "png encode failed");
  }
  png_set_write_fn(png, &out, write_to_vector, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_UP);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(base + stride * static_cast<std::size_t>(y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::span<const std::uint8_t> png) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, png.data(), png.size()))
    throw Error(ErrorCode::InvalidArgument, std::string("not a PNG: ") + img.message);
  img.format = PNG_FORMAT_RGBA;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::InvalidArgument, std::string("png decode failed: ") + img.message);
  }
  return out;
}

PngSize png_dimensions(std::span<const std::uint8_t> png) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (png.size() < 24 || !std::equal(std::begin(kSignature), std::end(kSignature), png.begin()) ||
      !std::equal(png.begin() + 12, png.begin() + 16, "IHDR"))
    throw Error(ErrorCode::InvalidArgument, "not a PNG image");
  auto be32 = [&](std::size_t off) {
    return static_cast<int>((std::uint32_t{png[off]} << 24) | (std::uint32_t{png[off + 1]} << 16) |
                            (std::uint32_t{png[off + 2]} << 8) | std::uint32_t{png[off + 3]});
  };
  return {be32(16), be32(20)};
}

Image resize_box(const Image& image, int width, int height) {
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    const int y0 = static_cast<int>(static_cast<long long>(y) * image.height() / height);
    const int y1 = std::max(y0 + 1, static_cast<int>(static_cast<long long>(y + 1) * image.height() / height));
    for (int x = 0; x < width; ++x) {
      const int x0 = static_cast<int>(static_cast<long long>(x) * image.width() / width);
      const int x1 = std::max(x0 + 1, static_cast<int>(static_cast<long long>(x + 1) * image.width() / width));
      double acc[4] = {0, 0, 0, 0};
      for (int yy = y0; yy < y1; ++yy)
        for (int xx = x0; xx < x1; ++xx) {
          const Rgba p = image.at(xx, yy);
          acc[0] += p.r;
          acc[1] += p.g;
          acc[2] += p.b;
          acc[3] += p.a;
        }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      out.set(x, y,
              {static_cast<std::uint8_t>(std::lround(acc[0] / n)), static_cast<std::uint8_t>(std::lround(acc[1] / n)),
               static_cast<std::uint8_t>(std::lround(acc[2] / n)), static_cast<std::uint8_t>(std::lround(acc[3] / n))});
    }
  }
  return out;
}

}  // namespace renderworld
