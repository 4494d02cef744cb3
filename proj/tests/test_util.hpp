#pragma once

#include <cstdint>
#include <random>

#include "homogen/image.hpp"

namespace homogen::testutil {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Smooth textured image: blurred uniform noise, stretched back to [0,1].
inline ImageBuf make_smooth_image(int w, int h, std::uint64_t seed, double sigma = 2.0) {
    std::mt19937_64 rng(seed);
    ImageBuf img(w, h, 1);
    for (auto& v : img.data) v = static_cast<float>(uniform01(rng));
    img = gaussian_blur(img, sigma);
    float lo = 1.0f, hi = 0.0f;
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = std::max(hi - lo, 1e-6f);
    for (auto& v : img.data) v = (v - lo) / span;
    return img;
}

// Smooth random mask in [0,1].
inline PlaneMask make_smooth_mask(int w, int h, std::uint64_t seed) {
    const ImageBuf img = make_smooth_image(w, h, seed, 4.0);
    PlaneMask m(w, h);
    m.w.assign(img.data.begin(), img.data.end());
    return m;
}

}  // namespace homogen::testutil
