#pragma once

#include <string>
#include <vector>

#include "defocuskit/image.hpp"

namespace dk {

// Grayscale PGM (P5 binary or P2 ascii, 8/16-bit). Intensities map linearly
// to [0,1] by the file's maxval; writing quantizes round-half-up.
Image load_pgm(const std::string& path);
void save_pgm(const Image& image, const std::string& path, int bit_depth = 16);

// One channel for PGM, three for binary PPM (P6).
std::vector<Image> load_image_channels(const std::string& path);
void save_image_channels(const std::vector<Image>& channels, const std::string& path, int bit_depth = 8);

}  // namespace dk
