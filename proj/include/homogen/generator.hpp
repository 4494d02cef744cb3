#pragma once

#include <cstdint>
#include <string>

#include "homogen/homography.hpp"
#include "homogen/image.hpp"

namespace homogen {

// Ranges for the homography that interferes with H_ts when building
// QAM negatives.
struct DisturbanceRanges {
    Interval translation{-8.0, 8.0};  // pixels
    Interval rotation{-0.05, 0.05};   // radians
};

// Disturbance homography about (center_x, center_y); deterministic in the seed.
Homography sample_disturbance(const DisturbanceRanges& ranges, double center_x, double center_y,
                              std::uint64_t seed);

// Single-warp fusion of the masked regions. Kept as the explicitly-worse
// baseline for seam-energy comparisons.
ImageBuf generate_naive(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                        const PlaneMask& m_t, const Homography& h_gt);

struct RealisticResult {
    ImageBuf image;
    PlaneMask dominant_weight;   // warped dominant-plane weight in the output frame
    PlaneMask hole;              // 1 where the blend weight fell below the floor
    bool empty_dominant_plane = false;  // mean(M_s) < 0.05; flagged, not rejected
};

// Two-homography fusion: dominant-plane content warped by H_gt, the rest by
// H_gt*H_ts; blended by warped mask weights, holes filled from
// W(I_t, H_gt*H_ts).
RealisticResult generate_realistic(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                                   const PlaneMask& m_t, const Homography& h_gt,
                                   const Homography& h_ts, double hole_floor = 0.05);

// generate_realistic with H_ts replaced by compose(dH, H_ts); the
// artifact-bearing negative for QAM training.
RealisticResult make_disturbance(const ImageBuf& i_s, const ImageBuf& i_t, const PlaneMask& m_s,
                                 const PlaneMask& m_t, const Homography& h_gt,
                                 const Homography& h_ts, const DisturbanceRanges& ranges,
                                 std::uint64_t seed, double hole_floor = 0.05);

// Neighborhood of the dominant/non-dominant fusion boundary, for seam-energy
// measurement.
PlaneMask fusion_band(const PlaneMask& dominant_weight, int radius = 2);

struct TrainingSample {
    ImageBuf i_s;
    ImageBuf i_t_prime;
    Homography h_gt;

    struct Provenance {
        std::string pair_id;
        int iteration = 0;
        std::uint64_t seed = 0;
        Homography h_ts;
        double quality_score = -1.0;  // filled by QAM
        bool accepted = false;
        bool empty_dominant_plane = false;
    } provenance;
};

TrainingSample assemble_sample(const ImageBuf& i_s, RealisticResult&& generated,
                               const Homography& h_gt, const Homography& h_ts,
                               const std::string& pair_id, int iteration, std::uint64_t seed);

}  // namespace homogen
