#include "homogen/homography.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace homogen {

namespace {

Eigen::Matrix3d to_eigen(const Homography& h) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = h(r, c);
    return m;
}

Homography from_eigen(const Eigen::Matrix3d& m) {
    std::array<double, 9> a;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a[r * 3 + c] = m(r, c);
    return Homography::from_row_major(a);
}

void check_finite(const std::array<double, 9>& m) {
    for (double v : m) {
        if (!std::isfinite(v)) throw Error("homography entry is not finite");
    }
}

// Deterministic uniform draw, independent of stdlib distribution internals.
double draw_uniform(std::mt19937_64& rng, const Interval& iv) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    return iv.lo + (iv.hi - iv.lo) * u;
}

// Signed twice-area of the triangle (a, b, c).
double triangle_area2(Point a, Point b, Point c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

}  // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography Homography::from_row_major(const std::array<double, 9>& m) {
    check_finite(m);
    return normalize(Homography(m));
}

Homography Homography::translation(double tx, double ty) {
    return from_row_major({1, 0, tx, 0, 1, ty, 0, 0, 1});
}

Homography Homography::scaling(double sx, double sy) {
    return from_row_major({sx, 0, 0, 0, sy, 0, 0, 0, 1});
}

Homography Homography::rotation(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    return from_row_major({c, -s, 0, s, c, 0, 0, 0, 1});
}

double Homography::det() const { return to_eigen(*this).determinant(); }

bool Homography::is_invertible() const { return std::abs(det()) > kDetFloor; }

Homography normalize(const Homography& h) {
    std::array<double, 9> m = h.m_;
    const double w = m[8];
    if (std::abs(w) > kDetFloor) {
        for (double& v : m) v /= w;
        m[8] = 1.0;  // exact
    } else {
        double norm = 0.0;
        for (double v : m) norm += v * v;
        norm = std::sqrt(norm);
        if (norm <= kDetFloor) throw SingularMatrix("homography is numerically zero");
        for (double& v : m) v /= norm;
    }
    check_finite(m);
    return Homography(m);
}

Homography compose(const Homography& a, const Homography& b) {
    return from_eigen(to_eigen(a) * to_eigen(b));
}

Homography invert(const Homography& h) {
    const Eigen::Matrix3d m = to_eigen(h);
    const double d = m.determinant();
    if (std::abs(d) <= kDetFloor) throw SingularMatrix("determinant below invertibility floor");
    return from_eigen(m.inverse());
}

Point transform_point(const Homography& h, Point p) {
    const double x = h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2);
    const double y = h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2);
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    if (std::abs(w) < kDetFloor) throw PointAtInfinity("point maps to w ~ 0");
    return {x / w, y / w};
}

Homography dlt_solve(const std::vector<Correspondence>& corr) {
    const std::size_t n = corr.size();
    if (n < 4) throw DegenerateConfiguration("DLT needs at least 4 correspondences");

    // Reject collinear/duplicate source triples for the minimal case; larger
    // systems are caught by the rank check below.
    if (n == 4) {
        double scale = 0.0;
        for (const auto& c : corr) scale = std::max({scale, std::abs(c.src.x), std::abs(c.src.y)});
        const double area_floor = 1e-9 * std::max(1.0, scale * scale);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                for (int k = j + 1; k < 4; ++k)
                    if (std::abs(triangle_area2(corr[i].src, corr[j].src, corr[k].src)) < area_floor)
                        throw DegenerateConfiguration("3 source points are collinear");
    }

    // Hartley conditioning: translate centroid to origin, scale mean distance to sqrt(2).
    auto similarity = [](const std::vector<Point>& pts) -> Eigen::Matrix3d {
        double cx = 0, cy = 0;
        for (const auto& p : pts) {
            cx += p.x;
            cy += p.y;
        }
        cx /= static_cast<double>(pts.size());
        cy /= static_cast<double>(pts.size());
        double mean_dist = 0;
        for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
        mean_dist /= static_cast<double>(pts.size());
        const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
        Eigen::Matrix3d t;
        t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
        return t;
    };

    std::vector<Point> src(n), dst(n);
    for (std::size_t i = 0; i < n; ++i) {
        src[i] = corr[i].src;
        dst[i] = corr[i].dst;
    }
    const Eigen::Matrix3d t_src = similarity(src);
    const Eigen::Matrix3d t_dst = similarity(dst);
    auto apply = [](const Eigen::Matrix3d& t, Point p) -> Point {
        return {t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2), t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2)};
    };

    Eigen::MatrixXd a(2 * static_cast<Eigen::Index>(n), 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Point p = apply(t_src, src[i]);
        const Point q = apply(t_dst, dst[i]);
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
        a.row(r + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0 || sv(7) / sv(0) < 1e-10)
        throw DegenerateConfiguration("DLT system is rank deficient");
    const Eigen::VectorXd h = svd.matrixV().col(8);

    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    const Eigen::Matrix3d result = t_dst.inverse() * hn * t_src;
    if (std::abs(result.determinant()) <= kDetFloor)
        throw DegenerateConfiguration("recovered homography is singular");
    return from_eigen(result);
}

std::array<Point, 4> frame_corners(double frame_w, double frame_h) {
    return {Point{0, 0}, Point{frame_w - 1, 0}, Point{frame_w - 1, frame_h - 1},
            Point{0, frame_h - 1}};
}

CornerOffsets homography_to_offsets(const Homography& h, double frame_w, double frame_h) {
    if (frame_w <= 0 || frame_h <= 0) throw Error("frame dimensions must be positive");
    CornerOffsets out;
    out.frame_w = frame_w;
    out.frame_h = frame_h;
    const auto corners = frame_corners(frame_w, frame_h);
    for (int i = 0; i < 4; ++i) {
        const Point q = transform_point(h, corners[i]);
        out.d[2 * i] = q.x - corners[i].x;
        out.d[2 * i + 1] = q.y - corners[i].y;
    }
    return out;
}

Homography offsets_to_homography(const CornerOffsets& d) {
    if (d.frame_w <= 0 || d.frame_h <= 0) throw Error("frame dimensions must be positive");
    const auto corners = frame_corners(d.frame_w, d.frame_h);
    std::vector<Correspondence> corr(4);
    for (int i = 0; i < 4; ++i) {
        corr[i].src = corners[i];
        corr[i].dst = {corners[i].x + d.d[2 * i], corners[i].y + d.d[2 * i + 1]};
    }
    return dlt_solve(corr);
}

PerturbationRanges PerturbationRanges::small_baseline() {
    PerturbationRanges r;
    r.scaling = {0.9, 1.1};
    r.shearing = {-0.1, 0.1};
    r.rotation = {-0.1, 0.1};
    r.translation = {-16.0, 16.0};
    r.perspective = {-1e-4, 1e-4};
    return r;
}

Homography sample_gt(const PerturbationRanges& ranges, double center_x, double center_y,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // Fixed draw order keeps samples reproducible across platforms.
    const double s = draw_uniform(rng, ranges.scaling);
    const double sh = draw_uniform(rng, ranges.shearing);
    const double th = draw_uniform(rng, ranges.rotation);
    const double tx = draw_uniform(rng, ranges.translation);
    const double ty = draw_uniform(rng, ranges.translation);
    const double px = draw_uniform(rng, ranges.perspective);
    const double py = draw_uniform(rng, ranges.perspective);

    Eigen::Matrix3d scale;
    scale << s, 0, 0, 0, s, 0, 0, 0, 1;
    Eigen::Matrix3d shear;
    shear << 1, sh, 0, 0, 1, 0, 0, 0, 1;
    Eigen::Matrix3d rot;
    rot << std::cos(th), -std::sin(th), 0, std::sin(th), std::cos(th), 0, 0, 0, 1;
    Eigen::Matrix3d persp;
    persp << 1, 0, 0, 0, 1, 0, px, py, 1;
    Eigen::Matrix3d trans;
    trans << 1, 0, tx, 0, 1, ty, 0, 0, 1;
    Eigen::Matrix3d center;
    center << 1, 0, center_x, 0, 1, center_y, 0, 0, 1;
    Eigen::Matrix3d uncenter;
    uncenter << 1, 0, -center_x, 0, 1, -center_y, 0, 0, 1;

    // scale -> shear -> rotate -> perspective -> translate, about the center.
    const Eigen::Matrix3d h = center * trans * persp * rot * shear * scale * uncenter;
    return from_eigen(h);
}

}  // namespace homogen
