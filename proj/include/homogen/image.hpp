#pragma once

#include <cstddef>
#include <vector>

#include "homogen/error.hpp"

namespace homogen {

// Dense float raster, row-major, channel-interleaved. Values live in [0,1]
// except when `normalized` is set (zero-mean/unit-std preprocessing output).
struct ImageBuf {
    int width = 0;
    int height = 0;
    int channels = 1;
    bool normalized = false;
    std::vector<float> data;

    ImageBuf() = default;
    ImageBuf(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Per-pixel weight in [0,1]; 1 = dominant plane (or valid / band member,
// depending on use).
struct PlaneMask {
    int width = 0;
    int height = 0;
    std::vector<float> w;

    PlaneMask() = default;
    PlaneMask(int width_, int height_, float fill = 0.0f)
        : width(width_), height(height_),
          w(static_cast<std::size_t>(width_) * height_, fill) {}

    float& at(int x, int y) { return w[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return w[static_cast<std::size_t>(y) * width + x]; }
    double mean() const;
};

// Stacked deterministic feature channels of an image.
struct FeatureMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

ImageBuf to_grayscale(const ImageBuf& img);                  // 0.299/0.587/0.114 weighting
ImageBuf center_crop(const ImageBuf& img, int w, int h);
ImageBuf normalize_intensity(const ImageBuf& img);           // zero-mean/unit-std, sets `normalized`
ImageBuf resize_bilinear(const ImageBuf& img, int w, int h);

ImageBuf box_blur(const ImageBuf& img, int radius);          // window clamped at borders
ImageBuf gaussian_blur(const ImageBuf& img, double sigma);
ImageBuf downsample2(const ImageBuf& img);                   // 2x2 average

// |d/dx| and |d/dy| central differences, per channel.
ImageBuf gradient_magnitude(const ImageBuf& img);

PlaneMask mask_box_blur(const PlaneMask& m, int radius);

// Gaussian-blurred intensity plus horizontal/vertical gradient magnitudes at
// two pyramid scales, upsampled to input size. Input must be single-channel.
FeatureMap feature_extract(const ImageBuf& img);

// Mean gradient magnitude of img restricted to the band weights.
// Throws EmptyBand when the band weights sum to zero.
double seam_energy(const ImageBuf& img, const PlaneMask& band);

}  // namespace homogen
