#include "homogen/plane_seg.hpp"

#include <algorithm>
#include <cmath>

#include "homogen/warp.hpp"

namespace homogen {

namespace {

// Box blur normalized over the valid domain only, so border values are not
// dragged toward the invalid zero padding.
PlaneMask valid_normalized_blur(const PlaneMask& m, const PlaneMask& valid, int radius) {
    if (radius <= 0) return m;
    PlaneMask weighted(m.width, m.height);
    for (std::size_t i = 0; i < m.w.size(); ++i) weighted.w[i] = m.w[i] * valid.w[i];
    const PlaneMask num = mask_box_blur(weighted, radius);
    const PlaneMask den = mask_box_blur(valid, radius);
    PlaneMask out(m.width, m.height);
    for (std::size_t i = 0; i < m.w.size(); ++i)
        out.w[i] = den.w[i] > 1e-6f ? num.w[i] / den.w[i] : 0.0f;
    return out;
}

enum class Morph { Erode, Dilate };

PlaneMask morph_op(const PlaneMask& m, const PlaneMask& valid, int radius, Morph op) {
    PlaneMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (valid.at(x, y) <= 0.5f) {
                out.at(x, y) = 0.0f;
                continue;
            }
            float extreme = op == Morph::Erode ? 1.0f : 0.0f;
            bool any = false;
            const int y0 = std::max(0, y - radius), y1 = std::min(m.height - 1, y + radius);
            const int x0 = std::max(0, x - radius), x1 = std::min(m.width - 1, x + radius);
            for (int yy = y0; yy <= y1; ++yy) {
                for (int xx = x0; xx <= x1; ++xx) {
                    if (valid.at(xx, yy) <= 0.5f) continue;
                    any = true;
                    extreme = op == Morph::Erode ? std::min(extreme, m.at(xx, yy))
                                                 : std::max(extreme, m.at(xx, yy));
                }
            }
            out.at(x, y) = any ? extreme : 0.0f;
        }
    }
    return out;
}

}  // namespace

PlaneMask mask_from_residual(const ImageBuf& residual, const PlaneMask& valid,
                             const PlaneSegConfig& cfg) {
    if (residual.channels != 1) throw Error("mask_from_residual expects single-channel residual");
    if (residual.width != valid.width || residual.height != valid.height)
        throw Error("mask_from_residual dimension mismatch");

    PlaneMask res(residual.width, residual.height);
    res.w.assign(residual.data.begin(), residual.data.end());
    const PlaneMask smooth = valid_normalized_blur(res, valid, cfg.smooth_radius);

    PlaneMask mask(residual.width, residual.height);
    for (std::size_t i = 0; i < mask.w.size(); ++i)
        mask.w[i] = (valid.w[i] > 0.5f && smooth.w[i] < static_cast<float>(cfg.rho)) ? 1.0f : 0.0f;

    // Open removes speckle, close fills pinholes.
    mask = morph_op(mask, valid, cfg.morph_radius, Morph::Erode);
    mask = morph_op(mask, valid, cfg.morph_radius, Morph::Dilate);
    mask = morph_op(mask, valid, cfg.morph_radius, Morph::Dilate);
    mask = morph_op(mask, valid, cfg.morph_radius, Morph::Erode);

    mask = valid_normalized_blur(mask, valid, cfg.feather_radius);
    for (std::size_t i = 0; i < mask.w.size(); ++i)
        if (valid.w[i] <= 0.5f) mask.w[i] = 0.0f;
    return mask;
}

MaskPair estimate_masks(const ImageBuf& i_s, const ImageBuf& i_t, const Homography& h_ts,
                        const PlaneSegConfig& cfg) {
    if (i_s.width != i_t.width || i_s.height != i_t.height)
        throw Error("estimate_masks expects images of equal dimensions");
    const ImageBuf gs = to_grayscale(i_s);
    const ImageBuf gt = to_grayscale(i_t);

    auto residual_mask = [&cfg](const ImageBuf& warped_other, const PlaneMask& validity,
                                const ImageBuf& reference) {
        ImageBuf res(reference.width, reference.height, 1);
        PlaneMask valid(reference.width, reference.height);
        for (int y = 0; y < reference.height; ++y) {
            for (int x = 0; x < reference.width; ++x) {
                const float v = validity.at(x, y);
                valid.at(x, y) = v > 0.99f ? 1.0f : 0.0f;
                res.at(x, y) = std::abs(warped_other.at(x, y) - reference.at(x, y));
            }
        }
        return mask_from_residual(res, valid, cfg);
    };

    const WarpResult ts = warp(gt, h_ts);
    const WarpResult st = warp(gs, invert(h_ts));

    MaskPair out;
    out.m_s = residual_mask(ts.image, ts.validity, gs);
    out.m_t = residual_mask(st.image, st.validity, gt);
    return out;
}

}  // namespace homogen
