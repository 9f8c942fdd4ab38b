#include "resdeconv/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace resdeconv {

namespace {

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Reads one PNM header integer, skipping whitespace and '#' comments.
long read_pnm_int(std::istream& in, const std::filesystem::path& path) {
  int ch = in.get();
  while (in && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      while (in && ch != '\n') ch = in.get();
    }
    ch = in.get();
  }
  if (!in || !std::isdigit(ch)) throw IoError("malformed PGM header in '" + path.string() + "'");
  long value = 0;
  while (in && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > std::numeric_limits<int>::max()) {
      throw IoError("PGM header value overflow in '" + path.string() + "'");
    }
    ch = in.get();
  }
  // Exactly one whitespace byte terminates the field; it has been consumed.
  return value;
}

ImageD load_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw IoError("'" + path.string() + "' is not a binary (P5) PGM file");
  }
  const long width = read_pnm_int(in, path);
  const long height = read_pnm_int(in, path);
  const long maxval = read_pnm_int(in, path);
  if (width < 1 || height < 1) throw IoError("PGM '" + path.string() + "' has empty dimensions");
  if (maxval < 1 || maxval > 65535) {
    throw IoError("PGM '" + path.string() + "': unsupported bit depth (maxval " +
                  std::to_string(maxval) + ")");
  }
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(std::size_t(width) * std::size_t(height) * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!in) throw IoError("PGM '" + path.string() + "' is truncated");

  ImageD img(height, width);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const std::size_t o = std::size_t(i) * bytes_per_sample;
    const unsigned v = bytes_per_sample == 2 ? (unsigned(raw[o]) << 8) | raw[o + 1] : raw[o];
    img.data()[i] = double(v) / double(maxval);
  }
  return img;
}

unsigned quantize(double v, unsigned maxval) {
  const double clamped = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  return static_cast<unsigned>(std::lround(clamped * double(maxval)));
}

void save_pgm(const ImageD& img, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw std::invalid_argument("PGM bit depth must be 8 or 16");
  }
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  std::vector<unsigned char> raw;
  raw.reserve(std::size_t(img.size()) * (bit_depth / 8));
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const unsigned q = quantize(img.data()[i], maxval);
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xffu));
  }
  std::ofstream out = open_output(path, std::ios::binary);
  out << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << maxval << '\n';
  out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<ImageD> load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw IoError("PNG '" + path.string() + "': unsupported bit depth (16 bit)");
  }
  if (image.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&image);
    throw IoError("PNG '" + path.string() + "': alpha channel not supported");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  std::vector<ImageD> planes(channels, ImageD(image.height, image.width));
  for (std::size_t i = 0; i < std::size_t(image.height) * image.width; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      planes[c].data()[i] = double(buffer[i * channels + c]) / 255.0;
    }
  }
  return planes;
}

void save_png(const ImageD& img, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.cols());
  image.height = static_cast<png_uint_32>(img.rows());
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(std::size_t(img.size()));
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    buffer[std::size_t(i)] = static_cast<png_byte>(quantize(img.data()[i], 255));
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

// "rows cols" followed by rows*cols numbers.
ImageD parse_text_matrix(const std::filesystem::path& path, const char* what) {
  std::ifstream in = open_input(path, std::ios::in);
  long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) {
    throw std::invalid_argument(std::string(what) + " '" + path.string() +
                                "': expected a 'rows cols' header");
  }
  ImageD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::string token;
    if (!(in >> token)) {
      throw std::invalid_argument(std::string(what) + " '" + path.string() + "': expected " +
                                  std::to_string(m.size()) + " values, got " + std::to_string(i));
    }
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " '" + path.string() + "': bad value '" +
                                  token + "'");
    }
    m.data()[i] = v;
  }
  std::string extra;
  if (in >> extra) {
    throw std::invalid_argument(std::string(what) + " '" + path.string() + "': trailing data");
  }
  return m;
}

void write_text_matrix(const ImageD& m, const std::filesystem::path& path) {
  std::ofstream out = open_output(path, std::ios::out);
  out << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << m(i, j) << (j + 1 == m.cols() ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

ImageFormat parse_image_format(const std::string& name) {
  if (name == "pgm") return ImageFormat::pgm;
  if (name == "png") return ImageFormat::png;
  if (name == "txt") return ImageFormat::txt;
  throw std::invalid_argument("unknown image format '" + name + "'");
}

ImageFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext.empty()) throw std::invalid_argument("'" + path.string() + "' has no file extension");
  return parse_image_format(ext.substr(1));
}

std::vector<ImageD> load_channels(const std::filesystem::path& path, ImageFormat format) {
  switch (format) {
    case ImageFormat::pgm:
      return {load_pgm(path)};
    case ImageFormat::png:
      return load_png(path);
    case ImageFormat::txt:
      return {parse_text_matrix(path, "image")};
  }
  throw std::invalid_argument("unsupported image format");
}

ImageD load_image(const std::filesystem::path& path, ImageFormat format) {
  std::vector<ImageD> planes = load_channels(path, format);
  if (planes.size() == 3) return rgb_to_luma(planes);
  return std::move(planes.front());
}

ImageD load_image(const std::filesystem::path& path) { return load_image(path, format_from_path(path)); }

void save_image(const ImageD& image, const std::filesystem::path& path, ImageFormat format,
                int bit_depth) {
  require_nonempty(image, "save_image");
  switch (format) {
    case ImageFormat::pgm:
      save_pgm(image, path, bit_depth);
      return;
    case ImageFormat::png:
      save_png(image, path);
      return;
    case ImageFormat::txt:
      write_text_matrix(image, path);
      return;
  }
}

void save_image(const ImageD& image, const std::filesystem::path& path) {
  save_image(image, path, format_from_path(path));
}

Kernel<double> load_kernel_text(const std::filesystem::path& path) {
  ImageD taps = parse_text_matrix(path, "kernel");
  detail::require_odd_taps(taps, "kernel");
  if ((taps.array() < 0.0).any()) {
    throw std::invalid_argument("kernel '" + path.string() + "': negative tap");
  }
  const double sum = taps.sum();
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("kernel '" + path.string() + "': taps sum to " +
                                std::to_string(sum) + ", expected 1");
  }
  if (sum != 1.0) taps /= sum;
  return Kernel<double>(std::move(taps));
}

void save_kernel_text(const Kernel<double>& k, const std::filesystem::path& path) {
  write_text_matrix(k.taps(), path);
}

PriorPatch<double> load_prior_patch_text(const std::filesystem::path& path) {
  return PriorPatch<double>(parse_text_matrix(path, "prior patch"));
}

ImageD load_matrix_text(const std::filesystem::path& path) { return parse_text_matrix(path, "matrix"); }

void save_matrix_text(const ImageD& m, const std::filesystem::path& path) { write_text_matrix(m, path); }

}  // namespace resdeconv
