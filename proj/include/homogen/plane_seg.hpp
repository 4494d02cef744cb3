#pragma once

#include "homogen/homography.hpp"
#include "homogen/image.hpp"

namespace homogen {

// Dominant-plane mask estimation from photometric residuals.
struct PlaneSegConfig {
    double rho = 0.06;       // residual threshold on [0,1] intensities
    int smooth_radius = 3;   // box filter applied to the residual
    int morph_radius = 2;    // open/close speckle removal
    int feather_radius = 2;  // linear edge feathering
};

// Threshold + morphology + feathering applied to a smoothed residual raster.
// Pixels outside `valid` get weight 0. Pointwise-monotone: increasing the
// residual anywhere never increases any output weight.
PlaneMask mask_from_residual(const ImageBuf& residual, const PlaneMask& valid,
                             const PlaneSegConfig& cfg = {});

struct MaskPair {
    PlaneMask m_s;
    PlaneMask m_t;
};

// M_s from the residual |W(I_t, H_ts) - I_s|; M_t symmetrically via the
// inverse warp. Inputs are converted to grayscale internally.
MaskPair estimate_masks(const ImageBuf& i_s, const ImageBuf& i_t, const Homography& h_ts,
                        const PlaneSegConfig& cfg = {});

}  // namespace homogen
