#include "renderworld/types.hpp"

#include <algorithm>
#include <cctype>

#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

std::string_view to_string(ImageOrigin origin) noexcept {
  switch (origin) {
    case ImageOrigin::ground_truth: return "ground_truth";
    case ImageOrigin::rendered: return "rendered";
    case ImageOrigin::annotated: return "annotated";
  }
  return "ground_truth";
}

UiState UiState::from_png(std::vector<std::uint8_t> png, ImageOrigin origin) {
  const PngSize size = png_dimensions(png);
  if (size.width <= 0 || size.height <= 0) throw Error(ErrorCode::InvalidArgument, "screenshot has zero area");
  UiState s;
  s.width_ = size.width;
  s.height_ = size.height;
  s.origin_ = origin;
  s.hash_ = sha256_hex(png);
  s.png_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(png));
  return s;
}

UiState UiState::from_image(const Image& image, ImageOrigin origin) {
  UiState s = from_png(encode_png(image), origin);
  s.pixels_ = std::make_shared<const Image>(image);
  return s;
}

Image UiState::decode() const {
  if (!png_) throw Error(ErrorCode::InvalidArgument, "empty UiState");
  if (pixels_) return *pixels_;
  return decode_png(*png_);
}

TaskGoal::TaskGoal(std::string text) : text_(std::move(text)) {
  if (std::all_of(text_.begin(), text_.end(), [](unsigned char c) { return std::isspace(c); }))
    throw Error(ErrorCode::InvalidArgument, "task goal must be non-empty");
}

}  // namespace renderworld
