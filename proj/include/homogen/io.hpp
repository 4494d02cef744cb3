#pragma once

#include <string>

#include "homogen/image.hpp"

namespace homogen {

// PNG (8-bit gray or RGB) and raw PGM/PPM (P5/P6). Format chosen by
// extension on save and by magic bytes on load. 8-bit conversion is
// round-half-up on [0,1] intensities.
ImageBuf load_image(const std::string& path);
void save_image(const ImageBuf& img, const std::string& path);

void save_mask(const PlaneMask& mask, const std::string& path);
PlaneMask load_mask(const std::string& path);

inline unsigned char to_u8(float v) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<unsigned char>(c * 255.0f + 0.5f);
}
inline float from_u8(unsigned char v) { return static_cast<float>(v) / 255.0f; }

}  // namespace homogen
