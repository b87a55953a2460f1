#include "mclf/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace mclf {
namespace {

unsigned char quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5));
}

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : b_(bytes) {}

  void skip_space_and_comments() {
    while (at_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[at_]))) {
        ++at_;
      } else if (b_[at_] == '#') {
        while (at_ < b_.size() && b_[at_] != '\n') ++at_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = at_;
    std::size_t v = 0;
    while (at_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[at_]))) {
      v = v * 10 + static_cast<std::size_t>(b_[at_] - '0');
      if (v > (1u << 24)) throw ParseError(std::string("implausible ") + what, start);
      ++at_;
    }
    if (at_ == start) throw ParseError(std::string("expected ") + what, start);
    return v;
  }

  std::size_t pos() const { return at_; }
  void advance() { ++at_; }

 private:
  const std::string& b_;
  std::size_t at_ = 0;
};

}  // namespace

std::string encode_pnm(const Tensor& image, ImageKind kind) {
  std::size_t channels = 1, H = 0, W = 0;
  switch (kind) {
    case ImageKind::ppm_rgb:
      if (image.rank() != 3 || image.dim(0) != 3) throw DimensionError("ppm expects 3 x H x W");
      channels = 3;
      H = image.dim(1);
      W = image.dim(2);
      break;
    case ImageKind::pgm_gray:
      if (image.rank() != 3 || image.dim(0) != 1) throw DimensionError("pgm expects 1 x H x W");
      H = image.dim(1);
      W = image.dim(2);
      break;
    case ImageKind::pgm_mask:
      if (image.rank() != 2) throw DimensionError("mask expects H x W");
      H = image.dim(0);
      W = image.dim(1);
      break;
  }
  std::string out = (kind == ImageKind::ppm_rgb ? "P6\n" : "P5\n") + std::to_string(W) + " " + std::to_string(H) +
                    "\n255\n";
  const std::size_t plane = H * W;
  out.reserve(out.size() + channels * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = image[c * plane + i];
      if (kind == ImageKind::pgm_mask) {
        if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
          throw DimensionError("mask value " + std::to_string(v) + " is not an integer in [0, 255]");
        }
        out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
      } else {
        out.push_back(static_cast<char>(quantize(v)));
      }
    }
  }
  return out;
}

Tensor decode_pnm(const std::string& bytes, ImageKind kind) {
  const char* magic = kind == ImageKind::ppm_rgb ? "P6" : "P5";
  if (bytes.size() < 2 || bytes.compare(0, 2, magic) != 0) {
    throw ParseError(std::string("expected magic ") + magic, 0);
  }
  HeaderReader r(bytes);
  r.advance();
  r.advance();
  const std::size_t width = r.number("width");
  const std::size_t height = r.number("height");
  const std::size_t maxval_at = r.pos();
  const std::size_t maxval = r.number("maxval");
  if (maxval != 255) throw ParseError("only maxval 255 is supported", maxval_at);
  if (width == 0 || height == 0) throw ParseError("zero image dimension", maxval_at);
  if (r.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos()]))) {
    throw ParseError("expected whitespace after maxval", r.pos());
  }
  const std::size_t payload = r.pos() + 1;
  const std::size_t channels = kind == ImageKind::ppm_rgb ? 3 : 1;
  const std::size_t plane = width * height;
  if (bytes.size() < payload + channels * plane) {
    throw ParseError("truncated payload: need " + std::to_string(channels * plane) + " bytes", bytes.size());
  }

  Tensor out = kind == ImageKind::pgm_mask ? Tensor(Shape{height, width}) : Tensor(Shape{channels, height, width});
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const auto byte = static_cast<unsigned char>(bytes[payload + i * channels + c]);
      out[c * plane + i] = kind == ImageKind::pgm_mask ? static_cast<double>(byte) : static_cast<double>(byte) / 255.0;
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_image(const std::filesystem::path& path, const Tensor& image, ImageKind kind) {
  write_file(path, encode_pnm(image, kind));
}

Tensor read_image(const std::filesystem::path& path, ImageKind kind) { return decode_pnm(read_file(path), kind); }

}  // namespace mclf
