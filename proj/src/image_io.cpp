#include "tcpdm/image_io.hpp"

#include <png.h>

#include <cmath>

namespace tcpdm {

Image8 read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::IoError, "cannot read png " + path.string() + ": " + img.message);
  }
  const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out(static_cast<int>(img.height), static_cast<int>(img.width), gray ? 1 : 3);
  if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::IoError, "cannot decode png " + path.string() + ": " + img.message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::ChannelMismatch, "png export supports 1 or 3 channels");
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write png " + path.string() + ": " + img.message);
  }
}

FrameTensor to_model_range(const Image8& image) {
  FrameTensor out(image.height(), image.width(), image.channels());
  out.array() = 2.0f * (image.array().cast<float>() / 255.0f) - 1.0f;
  return out;
}

Image8 from_model_range(const FrameTensor& x) {
  Image8 out(x.height(), x.width(), x.channels());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double c = std::clamp(static_cast<double>(x.data()[i]), -1.0, 1.0);
    out.data()[i] = static_cast<std::uint8_t>(round_half_away((c + 1.0) * 0.5 * 255.0));
  }
  return out;
}

}  // namespace tcpdm
