#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <renderworld/image.hpp>
#include <renderworld/types.hpp>

namespace rwtest {

/// Synthetic phone screen: a header bar, a list of cards and a bottom bar,
/// colored from the seed so that neighboring seeds differ visibly.
renderworld::Image make_screen(std::uint32_t seed, int width = 1080, int height = 2400);

/// Writes <dir>/steps.jsonl plus screenshots under <dir>/screens/ and returns
/// the steps file. Actions cycle through click, scroll, input_text, open_app,
/// navigate_back and long_press.
std::filesystem::path write_steps(const std::filesystem::path& dir, int count, std::uint32_t seed = 7);

/// The reference document that satisfies every structural rule.
std::string conforming_html(int width = 1080, int height = 2400);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Relative path -> SHA-256 for every file under dir. manifest.json files are
/// hashed with timestamps and argument lists removed.
std::map<std::string, std::string> directory_digest(const std::filesystem::path& dir);

/// Fresh empty directory under the build tree's temp area.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace rwtest
