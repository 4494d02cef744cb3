#pragma once

#include "homogen/homography.hpp"
#include "homogen/image.hpp"

namespace homogen {

struct WarpResult {
    ImageBuf image;       // zero-filled outside the source
    PlaneMask validity;   // 1 interior, proportional coverage at borders, 0 outside
};

// Backward warping: output pixel p samples img at h^-1 * p with bilinear
// interpolation. Propagates SingularMatrix from the inversion.
WarpResult warp(const ImageBuf& img, const Homography& h, int out_w, int out_h);
inline WarpResult warp(const ImageBuf& img, const Homography& h) {
    return warp(img, h, img.width, img.height);
}

// Same contract applied to a single-channel weight raster.
PlaneMask warp_mask(const PlaneMask& mask, const Homography& h, int out_w, int out_h);
inline PlaneMask warp_mask(const PlaneMask& mask, const Homography& h) {
    return warp_mask(mask, h, mask.width, mask.height);
}

}  // namespace homogen
