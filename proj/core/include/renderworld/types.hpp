#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "renderworld/action.hpp"
#include "renderworld/image.hpp"

namespace renderworld {

struct Viewport {
  int width = 1080;
  int height = 2400;

  friend bool operator==(const Viewport&, const Viewport&) = default;
};

enum class ImageOrigin { ground_truth, rendered, annotated };

std::string_view to_string(ImageOrigin origin) noexcept;

/// A screenshot held as PNG bytes. Immutable; copies share the byte buffer.
class UiState {
 public:
  UiState() = default;

  static UiState from_png(std::vector<std::uint8_t> png, ImageOrigin origin);
  static UiState from_image(const Image& image, ImageOrigin origin);

  const std::vector<std::uint8_t>& png() const noexcept { return *png_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ImageOrigin origin() const noexcept { return origin_; }
  const std::string& content_hash() const noexcept { return hash_; }
  bool valid() const noexcept { return png_ != nullptr; }

  Viewport viewport() const noexcept { return {width_, height_}; }
  Image decode() const;

 private:
  std::shared_ptr<const std::vector<std::uint8_t>> png_;
  std::shared_ptr<const Image> pixels_;  // kept when built from pixels, saves a decode
  int width_ = 0;
  int height_ = 0;
  ImageOrigin origin_ = ImageOrigin::ground_truth;
  std::string hash_;
};

class TaskGoal {
 public:
  explicit TaskGoal(std::string text);
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

struct HistoryEntry {
  GuiAction action;
  std::string description;
};

struct InteractionStep {
  TaskGoal goal;
  UiState before;
  GuiAction action;
  std::string semantic_description;
  std::optional<UiState> after;
  std::vector<HistoryEntry> history;
};

}  // namespace renderworld
