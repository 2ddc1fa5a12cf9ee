#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rxnkit {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit raster with 1 (gray), 2 (gray+alpha), 3 (RGB) or 4 (RGBA) channels,
/// row-major, no padding.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 255);

  std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * channels]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * channels];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Integer luma (0.299, 0.587, 0.114); alpha is composited over white.
GrayImage to_gray(const Image& img);

/// Decodes any PNG to 8-bit samples. Palette images expand to RGB(A),
/// 16-bit samples are reduced to 8 bits, tRNS becomes an alpha channel.
Image decode_png(const std::vector<std::uint8_t>& bytes);
Image read_png(const std::string& path);

/// Deterministic encoding: no timestamps, fixed compression settings.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const std::string& path, const Image& img);

}  // namespace rxnkit
