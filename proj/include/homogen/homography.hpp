#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "homogen/error.hpp"

namespace homogen {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Determinant magnitude below this is treated as singular.
inline constexpr double kDetFloor = 1e-12;

// 3x3 projective transform over pixel coordinates, stored row-major and
// normalized so the bottom-right entry equals 1 whenever it is nonzero.
class Homography {
public:
    Homography();  // identity

    static Homography from_row_major(const std::array<double, 9>& m);
    static Homography translation(double tx, double ty);
    static Homography scaling(double sx, double sy);
    static Homography rotation(double radians);

    double operator()(int row, int col) const { return m_[row * 3 + col]; }
    const std::array<double, 9>& data() const { return m_; }

    double det() const;
    bool is_invertible() const;

private:
    explicit Homography(const std::array<double, 9>& m) : m_(m) {}
    std::array<double, 9> m_;

    friend Homography normalize(const Homography& h);
};

// Rescales so that m22 == 1 (or unit Frobenius norm when m22 ~ 0). Idempotent.
Homography normalize(const Homography& h);

// Matrix product a*b, renormalized: apply b first, then a.
Homography compose(const Homography& a, const Homography& b);

// Inverse with renormalization. Throws SingularMatrix below the determinant floor.
Homography invert(const Homography& h);

// Perspective-divided image of p. Throws PointAtInfinity when w ~ 0.
Point transform_point(const Homography& h, Point p);

struct Correspondence {
    Point src;
    Point dst;
};

// Least-squares DLT with Hartley normalization on both point sets.
// Requires >= 4 correspondences with no 3 source points collinear.
Homography dlt_solve(const std::vector<Correspondence>& corr);

// Displacement of the 4 patch corners (TL, TR, BR, BL), in pixels.
// Corners sit at (0,0), (w-1,0), (w-1,h-1), (0,h-1).
struct CornerOffsets {
    std::array<double, 8> d{};  // dx0,dy0, dx1,dy1, dx2,dy2, dx3,dy3
    double frame_w = 0.0;
    double frame_h = 0.0;
};

std::array<Point, 4> frame_corners(double frame_w, double frame_h);

CornerOffsets homography_to_offsets(const Homography& h, double frame_w, double frame_h);
Homography offsets_to_homography(const CornerOffsets& d);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Small-baseline perturbation model for ground-truth homographies.
struct PerturbationRanges {
    Interval scaling{1.0, 1.0};        // multiplicative, around 1
    Interval shearing{0.0, 0.0};       // x-shear factor, around 0
    Interval rotation{0.0, 0.0};       // radians, around 0
    Interval translation{0.0, 0.0};    // pixels, around 0 (x and y drawn separately)
    Interval perspective{0.0, 0.0};    // inverse pixels, around 0 (two draws)

    static PerturbationRanges small_baseline();
    static PerturbationRanges neutral() { return PerturbationRanges{}; }
};

// Random ground-truth homography: scale, shear, rotation, perspective applied
// about (center_x, center_y), then translation; each factor drawn uniformly
// from its interval. Pure function of (ranges, center, seed).
Homography sample_gt(const PerturbationRanges& ranges, double center_x, double center_y,
                     std::uint64_t seed);

}  // namespace homogen
