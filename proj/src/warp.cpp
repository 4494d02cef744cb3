#include "homogen/warp.hpp"

#include <cmath>

namespace homogen {

namespace {

// Shared backward-mapping loop. `validity` gets the sum of bilinear tap
// weights that land inside the source, so it is 1 in the interior,
// fractional at borders, and 0 outside.
void backward_sample(const float* src, int sw, int sh, int ch, const Homography& hinv,
                     float* dst, PlaneMask& validity, int ow, int oh) {
    const auto& m = hinv.data();
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const double w = m[6] * x + m[7] * y + m[8];
            float* out_px = dst + (static_cast<std::size_t>(y) * ow + x) * ch;
            if (std::abs(w) < kDetFloor) {
                validity.at(x, y) = 0.0f;
                continue;
            }
            const double sx = (m[0] * x + m[1] * y + m[2]) / w;
            const double sy = (m[3] * x + m[4] * y + m[5]) / w;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            const double tw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
            double cover = 0.0;
            for (int t = 0; t < 4; ++t) {
                if (tw[t] == 0.0) continue;
                if (tx[t] < 0 || tx[t] >= sw || ty[t] < 0 || ty[t] >= sh) continue;
                cover += tw[t];
                const float* px = src + (static_cast<std::size_t>(ty[t]) * sw + tx[t]) * ch;
                for (int c = 0; c < ch; ++c)
                    out_px[c] += static_cast<float>(tw[t] * px[c]);
            }
            validity.at(x, y) = static_cast<float>(cover);
        }
    }
}

}  // namespace

WarpResult warp(const ImageBuf& img, const Homography& h, int out_w, int out_h) {
    const Homography hinv = invert(h);
    WarpResult res;
    res.image = ImageBuf(out_w, out_h, img.channels);
    res.image.normalized = img.normalized;
    res.validity = PlaneMask(out_w, out_h);
    backward_sample(img.data.data(), img.width, img.height, img.channels, hinv,
                    res.image.data.data(), res.validity, out_w, out_h);
    return res;
}

PlaneMask warp_mask(const PlaneMask& mask, const Homography& h, int out_w, int out_h) {
    const Homography hinv = invert(h);
    PlaneMask out(out_w, out_h);
    PlaneMask validity(out_w, out_h);
    backward_sample(mask.w.data(), mask.width, mask.height, 1, hinv, out.w.data(), validity,
                    out_w, out_h);
    return out;
}

}  // namespace homogen
