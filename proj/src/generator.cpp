#include "homogen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "homogen/warp.hpp"

namespace homogen {

namespace {

double draw_uniform(std::mt19937_64& rng, const Interval& iv) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return iv.lo + (iv.hi - iv.lo) * u;
}

void check_dims(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                const PlaneMask& m_t) {
    if (i_s.width != i_t.width || i_s.height != i_t.height || i_s.channels != i_t.channels)
        throw Error("generator: image dimensions differ");
    if (m_s.width != i_s.width || m_s.height != i_s.height || m_t.width != i_t.width ||
        m_t.height != i_t.height)
        throw Error("generator: mask dimensions differ from images");
}

ImageBuf apply_mask(const ImageBuf& img, const PlaneMask& m, bool complement) {
    ImageBuf out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float w = complement ? 1.0f - m.at(x, y) : m.at(x, y);
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x, y, c) * w;
        }
    }
    return out;
}

}  // namespace

Homography sample_disturbance(const DisturbanceRanges& ranges, double center_x, double center_y,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double tx = draw_uniform(rng, ranges.translation);
    const double ty = draw_uniform(rng, ranges.translation);
    const double th = draw_uniform(rng, ranges.rotation);
    const Homography rot_about_center = compose(
        Homography::translation(center_x, center_y),
        compose(Homography::rotation(th), Homography::translation(-center_x, -center_y)));
    return compose(Homography::translation(tx, ty), rot_about_center);
}

ImageBuf generate_naive(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                        const PlaneMask& m_t, const Homography& h_gt) {
    check_dims(i_s, i_t, m_s, m_t);
    ImageBuf fused = apply_mask(i_s, m_s, false);
    const ImageBuf non_dominant = apply_mask(i_t, m_t, true);
    for (std::size_t i = 0; i < fused.data.size(); ++i)
        fused.data[i] = std::min(1.0f, fused.data[i] + non_dominant.data[i]);
    return warp(fused, h_gt).image;
}

RealisticResult generate_realistic(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                                   const PlaneMask& m_t, const Homography& h_gt,
                                   const Homography& h_ts, double hole_floor) {
    check_dims(i_s, i_t, m_s, m_t);
    const Homography h_accum = compose(h_gt, h_ts);

    const WarpResult dominant = warp(apply_mask(i_s, m_s, false), h_gt);
    const PlaneMask w_dominant = warp_mask(m_s, h_gt);
    const WarpResult rest = warp(apply_mask(i_t, m_t, true), h_accum);
    PlaneMask w_rest(m_t.width, m_t.height);
    for (std::size_t i = 0; i < w_rest.w.size(); ++i) w_rest.w[i] = 1.0f - m_t.w[i];
    w_rest = warp_mask(w_rest, h_accum);
    const ImageBuf fill = warp(i_t, h_accum).image;

    RealisticResult res;
    res.image = ImageBuf(i_s.width, i_s.height, i_s.channels);
    res.dominant_weight = w_dominant;
    res.hole = PlaneMask(i_s.width, i_s.height);
    res.empty_dominant_plane = m_s.mean() < 0.05;

    for (int y = 0; y < i_s.height; ++y) {
        for (int x = 0; x < i_s.width; ++x) {
            const double total = w_dominant.at(x, y) + w_rest.at(x, y);
            if (total < hole_floor) {
                res.hole.at(x, y) = 1.0f;
                for (int c = 0; c < i_s.channels; ++c) res.image.at(x, y, c) = fill.at(x, y, c);
            } else {
                // Weights can overlap (>1) or dip at borders (<1); normalize
                // only the overlap so degenerate all-ones masks reduce to a
                // plain single warp.
                const double norm = std::max(total, 1.0);
                for (int c = 0; c < i_s.channels; ++c) {
                    const double v =
                        (dominant.image.at(x, y, c) + rest.image.at(x, y, c)) / norm;
                    res.image.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        }
    }
    return res;
}

RealisticResult make_disturbance(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                                 const PlaneMask& m_t, const Homography& h_gt,
                                 const Homography& h_ts, const DisturbanceRanges& ranges,
                                 std::uint64_t seed, double hole_floor) {
    const Homography dh =
        sample_disturbance(ranges, i_s.width / 2.0, i_s.height / 2.0, seed);
    return generate_realistic(i_s, i_t, m_s, m_t, h_gt, compose(dh, h_ts), hole_floor);
}

PlaneMask fusion_band(const PlaneMask& dominant_weight, int radius) {
    PlaneMask binary(dominant_weight.width, dominant_weight.height);
    for (std::size_t i = 0; i < binary.w.size(); ++i)
        binary.w[i] = dominant_weight.w[i] > 0.5f ? 1.0f : 0.0f;
    const PlaneMask spread = mask_box_blur(binary, radius);
    PlaneMask band(dominant_weight.width, dominant_weight.height);
    for (std::size_t i = 0; i < band.w.size(); ++i)
        band.w[i] = (spread.w[i] > 0.01f && spread.w[i] < 0.99f) ? 1.0f : 0.0f;
    return band;
}

TrainingSample assemble_sample(const ImageBuf& i_s, RealisticResult&& generated,
                               const Homography& h_gt, const Homography& h_ts,
                               const std::string& pair_id, int iteration, std::uint64_t seed) {
    TrainingSample sample;
    sample.i_s = i_s;
    sample.i_t_prime = std::move(generated.image);
    sample.h_gt = h_gt;
    sample.provenance.pair_id = pair_id;
    sample.provenance.iteration = iteration;
    sample.provenance.seed = seed;
    sample.provenance.h_ts = h_ts;
    sample.provenance.empty_dominant_plane = generated.empty_dominant_plane;
    return sample;
}

}  // namespace homogen
