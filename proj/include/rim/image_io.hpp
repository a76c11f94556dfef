#pragma once

#include <filesystem>

#include "rim/image.hpp"

namespace rim {

/// Decodes PNG, JPEG or binary PGM (P5), chosen by file signature.
/// Throws DataError on unreadable or unsupported files.
Image read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& img);
void write_pgm(const std::filesystem::path& path, const Image& img);

/// Picks the encoder from the extension (.png, .pgm).
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace rim
