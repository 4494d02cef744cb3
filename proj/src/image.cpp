#include "homogen/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace homogen {

namespace {

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); }

// Separable box filter with the window clamped to the raster; normalization by
// the in-bounds count is exact because the clamped window stays rectangular.
void box_pass_h(const std::vector<float>& in, std::vector<float>& out, int w, int h, int ch,
                int radius) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            for (int c = 0; c < ch; ++c) {
                double sum = 0;
                for (int xx = x0; xx <= x1; ++xx)
                    sum += in[(static_cast<std::size_t>(y) * w + xx) * ch + c];
                out[(static_cast<std::size_t>(y) * w + x) * ch + c] =
                    static_cast<float>(sum / (x1 - x0 + 1));
            }
        }
    }
}

void box_pass_v(const std::vector<float>& in, std::vector<float>& out, int w, int h, int ch,
                int radius) {
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double sum = 0;
                for (int yy = y0; yy <= y1; ++yy)
                    sum += in[(static_cast<std::size_t>(yy) * w + x) * ch + c];
                out[(static_cast<std::size_t>(y) * w + x) * ch + c] =
                    static_cast<float>(sum / (y1 - y0 + 1));
            }
        }
    }
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

double PlaneMask::mean() const {
    if (w.empty()) return 0.0;
    return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

ImageBuf to_grayscale(const ImageBuf& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) throw Error("to_grayscale expects 1 or 3 channels");
    ImageBuf out(img.width, img.height, 1);
    out.normalized = img.normalized;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) +
                           0.114f * img.at(x, y, 2);
    return out;
}

ImageBuf center_crop(const ImageBuf& img, int w, int h) {
    if (w > img.width || h > img.height || w <= 0 || h <= 0)
        throw Error("center_crop size exceeds image");
    const int x0 = (img.width - w) / 2, y0 = (img.height - h) / 2;
    ImageBuf out(w, h, img.channels);
    out.normalized = img.normalized;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    return out;
}

ImageBuf normalize_intensity(const ImageBuf& img) {
    ImageBuf out = img;
    out.normalized = true;
    if (img.data.empty()) return out;
    double mean = 0;
    for (float v : img.data) mean += v;
    mean /= static_cast<double>(img.data.size());
    double var = 0;
    for (float v : img.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(img.data.size());
    const double denom = std::sqrt(var) + 1e-8;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<float>((img.data[i] - mean) / denom);
    return out;
}

ImageBuf resize_bilinear(const ImageBuf& img, int w, int h) {
    if (w <= 0 || h <= 0) throw Error("resize to non-positive size");
    if (w == img.width && h == img.height) return img;
    ImageBuf out(w, h, img.channels);
    out.normalized = img.normalized;
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int y = 0; y < h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = clampi(static_cast<int>(std::floor(fy)), 0, img.height - 1);
        const int y1 = clampi(y0 + 1, 0, img.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = clampi(static_cast<int>(std::floor(fx)), 0, img.width - 1);
            const int x1 = clampi(x0 + 1, 0, img.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < img.channels; ++c) {
                const double top = img.at(x0, y0, c) * (1 - wx) + img.at(x1, y0, c) * wx;
                const double bot = img.at(x0, y1, c) * (1 - wx) + img.at(x1, y1, c) * wx;
                out.at(x, y, c) = static_cast<float>(top * (1 - wy) + bot * wy);
            }
        }
    }
    return out;
}

ImageBuf box_blur(const ImageBuf& img, int radius) {
    if (radius <= 0) return img;
    ImageBuf tmp = img, out = img;
    box_pass_h(img.data, tmp.data, img.width, img.height, img.channels, radius);
    box_pass_v(tmp.data, out.data, img.width, img.height, img.channels, radius);
    return out;
}

ImageBuf gaussian_blur(const ImageBuf& img, double sigma) {
    if (sigma <= 0) return img;
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size()) / 2;
    ImageBuf tmp = img, out = img;
    // Horizontal pass, kernel renormalized over in-bounds taps.
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double sum = 0, wsum = 0;
                for (int i = -radius; i <= radius; ++i) {
                    const int xx = x + i;
                    if (xx < 0 || xx >= img.width) continue;
                    sum += k[i + radius] * img.at(xx, y, c);
                    wsum += k[i + radius];
                }
                tmp.at(x, y, c) = static_cast<float>(sum / wsum);
            }
        }
    }
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double sum = 0, wsum = 0;
                for (int i = -radius; i <= radius; ++i) {
                    const int yy = y + i;
                    if (yy < 0 || yy >= img.height) continue;
                    sum += k[i + radius] * tmp.at(x, yy, c);
                    wsum += k[i + radius];
                }
                out.at(x, y, c) = static_cast<float>(sum / wsum);
            }
        }
    }
    return out;
}

ImageBuf downsample2(const ImageBuf& img) {
    const int w = std::max(1, img.width / 2), h = std::max(1, img.height / 2);
    ImageBuf out(w, h, img.channels);
    out.normalized = img.normalized;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                const int x0 = std::min(2 * x, img.width - 1), x1 = std::min(2 * x + 1, img.width - 1);
                const int y0 = std::min(2 * y, img.height - 1), y1 = std::min(2 * y + 1, img.height - 1);
                out.at(x, y, c) = 0.25f * (img.at(x0, y0, c) + img.at(x1, y0, c) +
                                           img.at(x0, y1, c) + img.at(x1, y1, c));
            }
        }
    }
    return out;
}

ImageBuf gradient_magnitude(const ImageBuf& img) {
    ImageBuf out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int xm = std::max(0, x - 1), xp = std::min(img.width - 1, x + 1);
            const int ym = std::max(0, y - 1), yp = std::min(img.height - 1, y + 1);
            for (int c = 0; c < img.channels; ++c) {
                const double gx = 0.5 * (img.at(xp, y, c) - img.at(xm, y, c));
                const double gy = 0.5 * (img.at(x, yp, c) - img.at(x, ym, c));
                out.at(x, y, c) = static_cast<float>(std::hypot(gx, gy));
            }
        }
    }
    return out;
}

PlaneMask mask_box_blur(const PlaneMask& m, int radius) {
    if (radius <= 0) return m;
    PlaneMask tmp = m, out = m;
    box_pass_h(m.w, tmp.w, m.width, m.height, 1, radius);
    box_pass_v(tmp.w, out.w, m.width, m.height, 1, radius);
    return out;
}

namespace {

// 3x3 Sobel responses, magnitude per direction.
void sobel_mag(const ImageBuf& img, ImageBuf& gx_mag, ImageBuf& gy_mag) {
    gx_mag = ImageBuf(img.width, img.height, 1);
    gy_mag = ImageBuf(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        const int ym = std::max(0, y - 1), yp = std::min(img.height - 1, y + 1);
        for (int x = 0; x < img.width; ++x) {
            const int xm = std::max(0, x - 1), xp = std::min(img.width - 1, x + 1);
            const double gx = (img.at(xp, ym) + 2.0 * img.at(xp, y) + img.at(xp, yp)) -
                              (img.at(xm, ym) + 2.0 * img.at(xm, y) + img.at(xm, yp));
            const double gy = (img.at(xm, yp) + 2.0 * img.at(x, yp) + img.at(xp, yp)) -
                              (img.at(xm, ym) + 2.0 * img.at(x, ym) + img.at(xp, ym));
            gx_mag.at(x, y) = static_cast<float>(std::abs(gx) / 8.0);
            gy_mag.at(x, y) = static_cast<float>(std::abs(gy) / 8.0);
        }
    }
}

}  // namespace

FeatureMap feature_extract(const ImageBuf& img) {
    if (img.channels != 1) throw Error("feature_extract expects a grayscale image");
    const ImageBuf half = downsample2(img);

    ImageBuf gx0, gy0, gx1, gy1;
    const ImageBuf blur0 = gaussian_blur(img, 1.0);
    sobel_mag(img, gx0, gy0);
    const ImageBuf blur1_small = gaussian_blur(half, 1.0);
    sobel_mag(half, gx1, gy1);

    const ImageBuf blur1 = resize_bilinear(blur1_small, img.width, img.height);
    const ImageBuf gx1u = resize_bilinear(gx1, img.width, img.height);
    const ImageBuf gy1u = resize_bilinear(gy1, img.width, img.height);

    FeatureMap out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 6;
    out.data.resize(img.pixel_count() * 6);
    const ImageBuf* chans[6] = {&blur0, &gx0, &gy0, &blur1, &gx1u, &gy1u};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 6; ++c)
                out.data[(static_cast<std::size_t>(y) * img.width + x) * 6 + c] =
                    chans[c]->at(x, y);
    return out;
}

double seam_energy(const ImageBuf& img, const PlaneMask& band) {
    if (img.width != band.width || img.height != band.height)
        throw Error("seam_energy dimension mismatch");
    const ImageBuf grad = gradient_magnitude(img);
    double num = 0, den = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double w = band.at(x, y);
            if (w <= 0) continue;
            double g = 0;
            for (int c = 0; c < img.channels; ++c) g += grad.at(x, y, c);
            num += w * g / img.channels;
            den += w;
        }
    }
    if (den <= 0) throw EmptyBand("band weights sum to zero");
    return num / den;
}

}  // namespace homogen
