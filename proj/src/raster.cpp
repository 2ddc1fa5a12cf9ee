#include "rxnkit/raster.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace rxnkit {

Image::Image(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill) {
  if (w <= 0 || h <= 0 || c < 1 || c > 4) throw ImageError("invalid image dimensions");
  if (c == 2 || c == 4) {
    for (std::size_t i = static_cast<std::size_t>(c) - 1; i < data.size(); i += static_cast<std::size_t>(c)) {
      data[i] = 255;
    }
  }
}

GrayImage to_gray(const Image& img) {
  GrayImage g{img.width, img.height, std::vector<std::uint8_t>(static_cast<std::size_t>(img.width) * img.height)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      unsigned v = 0;
      unsigned alpha = 255;
      switch (img.channels) {
        case 1: v = p[0]; break;
        case 2: v = p[0]; alpha = p[1]; break;
        case 3: v = (299u * p[0] + 587u * p[1] + 114u * p[2] + 500u) / 1000u; break;
        default:
          v = (299u * p[0] + 587u * p[1] + 114u * p[2] + 500u) / 1000u;
          alpha = p[3];
      }
      v = (v * alpha + 255u * (255u - alpha) + 127u) / 255u;
      g.data[static_cast<std::size_t>(y) * img.width + x] = static_cast<std::uint8_t>(v);
    }
  }
  return g;
}

namespace {

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + n > cur->bytes->size()) png_error(png, "truncated PNG data");
  std::memcpy(out, cur->bytes->data() + cur->offset, n);
  cur->offset += n;
}

void write_callback(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

void flush_callback(png_structp) {}

struct ErrorSink {
  char message[256] = "libpng error";
};

void error_callback(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof sink->message, "%s", msg);
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

}  // namespace

// libpng reports errors by longjmp; C++ objects are only created outside the
// setjmp-protected regions.
Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ImageError("not a PNG file");
  ErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, error_callback, warning_callback);
  if (png == nullptr) throw ImageError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("png_create_info_struct failed");
  }
  ReadCursor cur{&bytes, 0};
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  int c = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(sink.message);
  }
  png_set_read_fn(png, &cur, read_callback);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  c = png_get_channels(png, info);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("unsupported PNG dimensions");
  }

  Image img(static_cast<int>(w), static_cast<int>(h), c);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.pixel(0, static_cast<int>(y));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(sink.message);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  static constexpr int kColor[] = {0, PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                   PNG_COLOR_TYPE_RGB_ALPHA};
  if (img.channels < 1 || img.channels > 4 || img.width <= 0 || img.height <= 0 ||
      img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
    throw ImageError("cannot encode a malformed image");
  }
  std::vector<std::uint8_t> out;
  ErrorSink sink;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, error_callback, warning_callback);
  if (png == nullptr) throw ImageError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError(sink.message);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               kColor[img.channels], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) png_write_row(png, const_cast<png_bytep>(img.pixel(0, y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::string& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("write failed for " + path);
}

}  // namespace rxnkit
