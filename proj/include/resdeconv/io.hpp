#pragma once

#include "resdeconv/image.hpp"
#include "resdeconv/kernel.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace resdeconv {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ImageFormat {
  pgm,  ///< binary P5, 8 or 16 bit
  png,  ///< 8-bit gray or RGB
  txt,  ///< "rows cols" header then row-major values, 17 significant digits
};

ImageFormat parse_image_format(const std::string& name);
/// Format from the file extension (.pgm, .png, .txt).
ImageFormat format_from_path(const std::filesystem::path& path);

/// Channels of an image file, intensities mapped linearly to [0, 1].
/// One plane for gray files, three (R, G, B) for color PNG.
std::vector<ImageD> load_channels(const std::filesystem::path& path, ImageFormat format);

/// Single intensity plane; color images are reduced to BT.601 luma.
ImageD load_image(const std::filesystem::path& path, ImageFormat format);
ImageD load_image(const std::filesystem::path& path);

/// Values are clamped to [0, 1] and quantized for pgm/png; txt is lossless.
/// bit_depth applies to pgm (8 or 16); png is always 8 bit.
void save_image(const ImageD& image, const std::filesystem::path& path, ImageFormat format,
                int bit_depth = 16);
void save_image(const ImageD& image, const std::filesystem::path& path);

/// Plain-text kernel: first line "rows cols", then row-major taps. Taps
/// summing within 1e-6 of one are renormalized; anything else is rejected.
Kernel<double> load_kernel_text(const std::filesystem::path& path);
void save_kernel_text(const Kernel<double>& k, const std::filesystem::path& path);

/// Same text layout, no sum or sign constraint; must be centrally symmetric.
PriorPatch<double> load_prior_patch_text(const std::filesystem::path& path);

/// Generic matrix in the text layout.
ImageD load_matrix_text(const std::filesystem::path& path);
void save_matrix_text(const ImageD& m, const std::filesystem::path& path);

}  // namespace resdeconv
