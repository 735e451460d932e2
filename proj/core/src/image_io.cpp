#include "lumen/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace lumen {

namespace {

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& what) {
  throw InvalidInput(path.string() + ": " + what);
}

// Skips PPM whitespace and `#` comments, returns the next integer token.
int read_ppm_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) io_fail(path, "truncated PPM header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) io_fail(path, "malformed PPM header token");
  return value;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

RasterImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '6') io_fail(path, "not a binary PPM (P6) file");
  const int w = read_ppm_int(in, path);
  const int h = read_ppm_int(in, path);
  const int maxval = read_ppm_int(in, path);
  if (maxval != 255) io_fail(path, "only maxval 255 PPMs are supported");
  // The header terminator was consumed by the maxval token scan.
  RasterImage img = RasterImage::make_u8(w, h, 3);
  in.read(reinterpret_cast<char*>(img.u8().data()),
          static_cast<std::streamsize>(img.sample_count()));
  if (in.gcount() != static_cast<std::streamsize>(img.sample_count()))
    io_fail(path, "truncated PPM payload: expected " +
                      std::to_string(img.sample_count()) + " bytes, got " +
                      std::to_string(in.gcount()));
  return img;
}

void write_ppm(const RasterImage& img, const std::filesystem::path& path) {
  if (img.kind() != SampleKind::U8 || img.channels() != 3)
    throw InvalidInput("PPM output requires an 8-bit 3-channel image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.u8().data()),
            static_cast<std::streamsize>(img.sample_count()));
  if (!out) io_fail(path, "short write");
}

RasterImage read_png(const std::filesystem::path& path) {
  PngReadCloser c;
  c.fp = std::fopen(path.string().c_str(), "rb");
  if (!c.fp) io_fail(path, "cannot open for reading");
  c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!c.png) io_fail(path, "libpng init failed");
  c.info = png_create_info_struct(c.png);
  if (!c.info) io_fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(c.png))) io_fail(path, "PNG decode error");

  png_init_io(c.png, c.fp);
  png_read_info(c.png, c.info);

  png_set_expand(c.png);  // palette/gray/low bit depth -> 8-bit
  if (png_get_bit_depth(c.png, c.info) == 16) png_set_strip_16(c.png);
  png_set_strip_alpha(c.png);
  if (png_get_color_type(c.png, c.info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(c.png, c.info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(c.png);
  png_read_update_info(c.png, c.info);

  const int w = static_cast<int>(png_get_image_width(c.png, c.info));
  const int h = static_cast<int>(png_get_image_height(c.png, c.info));
  if (png_get_channels(c.png, c.info) != 3) io_fail(path, "unsupported PNG layout");

  RasterImage img = RasterImage::make_u8(w, h, 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<std::size_t>(y)] = img.u8().data() + img.index(0, y, 0);
  png_read_image(c.png, rows.data());
  png_read_end(c.png, nullptr);
  return img;
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  if (img.kind() != SampleKind::U8 || img.channels() != 3)
    throw InvalidInput("PNG output requires an 8-bit 3-channel image");
  PngWriteCloser c;
  c.fp = std::fopen(path.string().c_str(), "wb");
  if (!c.fp) io_fail(path, "cannot open for writing");
  c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!c.png) io_fail(path, "libpng init failed");
  c.info = png_create_info_struct(c.png);
  if (!c.info) io_fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(c.png))) io_fail(path, "PNG encode error");

  png_init_io(c.png, c.fp);
  png_set_IHDR(c.png, c.info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(c.png, c.info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(img.u8().data() + img.index(0, y, 0));
  png_write_image(c.png, rows.data());
  png_write_end(c.png, nullptr);
}

RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  in.close();
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  if (magic[0] == 0x89 && magic[1] == 'P') return read_png(path);
  io_fail(path, "unrecognised image format (expected PPM P6 or PNG)");
}

void write_image(const RasterImage& img, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ppm")
    write_ppm(img, path);
  else if (ext == ".png")
    write_png(img, path);
  else
    io_fail(path, "unsupported output extension (use .ppm or .png)");
}

}  // namespace lumen
