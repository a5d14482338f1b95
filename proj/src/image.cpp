#include "image.hpp"

#include <cctype>
#include <fstream>

#include "kernels.hpp"

namespace td {

namespace {

// Header tokens are separated by whitespace; '#' starts a comment running to
// end of line.
struct HeaderReader {
  const std::string& buf;
  size_t pos = 0;

  void skip_space() {
    while (pos < buf.size()) {
      const char c = buf[pos];
      if (c == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space();
    size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])) &&
           buf[pos] != '#')
      ++pos;
    if (start == pos) fail(Errc::image_format, "PPM header ended unexpectedly");
    return buf.substr(start, pos - start);
  }

  int int_token(const char* what) {
    std::string t = token();
    int v = 0;
    for (char c : t) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail(Errc::image_format, std::string("PPM header: bad ") + what + " '" + t + "'");
      v = v * 10 + (c - '0');
      if (v > 1 << 24) fail(Errc::image_format, std::string("PPM header: ") + what + " too large");
    }
    return v;
  }
};

}  // namespace

Tensor decode_ppm(const std::string& bytes) {
  HeaderReader hdr{bytes};
  if (hdr.token() != "P6") fail(Errc::image_format, "not a binary PPM (expected magic P6)");
  const int width = hdr.int_token("width");
  const int height = hdr.int_token("height");
  const int maxval = hdr.int_token("maxval");
  if (width < 1 || height < 1) fail(Errc::image_format, "PPM header: empty image");
  if (maxval != 255)
    fail(Errc::image_format, "unsupported PPM maxval " + std::to_string(maxval) +
                                 " (only 255 is handled)");
  if (hdr.pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[hdr.pos])))
    fail(Errc::image_format, "PPM header: missing whitespace before pixel data");
  size_t data_at = hdr.pos + 1;
  const size_t need = size_t(width) * size_t(height) * 3;
  if (bytes.size() - data_at < need)
    fail(Errc::image_format, "PPM pixel data truncated: need " + std::to_string(need) +
                                 " bytes, have " + std::to_string(bytes.size() - data_at));

  Tensor img(1, 3, height, width);
  const unsigned char* px = reinterpret_cast<const unsigned char*>(bytes.data()) + data_at;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(0, c, y, x) = float(px[(size_t(y) * width + size_t(x)) * 3 + size_t(c)]);
  return img;
}

Tensor load_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open image file '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

Tensor preprocess_image(const Tensor& rgb, int target_h, int target_w,
                        const std::array<float, 3>& means) {
  if (rgb.c() != 3) fail(Errc::invalid_argument, "preprocess: expected a 3-channel image");
  Tensor resized = (rgb.h() == target_h && rgb.w() == target_w)
                       ? rgb
                       : bilinear_resample(rgb, target_h, target_w);
  // RGB -> BGR, then subtract the per-channel means
  Tensor out(resized.n(), 3, target_h, target_w);
  const int64_t pixels = int64_t(target_h) * target_w;
  for (int n = 0; n < resized.n(); ++n) {
    for (int c = 0; c < 3; ++c) {
      const float* src = resized.plane(n, 2 - c);
      float* dst = out.plane(n, c);
      const float mean = means[size_t(c)];
      for (int64_t p = 0; p < pixels; ++p) dst[p] = src[p] - mean;
    }
  }
  return out;
}

Tensor load_image_ppm(const std::string& path, int target_h, int target_w,
                      const std::array<float, 3>& means) {
  return preprocess_image(load_ppm_file(path), target_h, target_w, means);
}

}  // namespace td
