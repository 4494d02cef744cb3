#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "homogen/homography.hpp"
#include "homogen/image.hpp"

namespace homogen {

// Hand-marked matching points: p in the source image, q in the target.
struct CorrespondenceSet {
    std::vector<std::array<double, 4>> points;  // px, py, qx, qy
    std::string category;                        // optional tag (RE/LT/...)
};

struct PmeResult {
    double value = 0.0;  // mean Euclidean error over usable points
    int used = 0;
    int excluded = 0;    // points that mapped to infinity (reported, never silent)
};

// Mean distance between transform_point(h, p) and q. `h` maps source
// coordinates to target coordinates.
PmeResult pme(const Homography& h, const CorrespondenceSet& corr);

struct RobustnessCurve {
    std::vector<double> thresholds;
    std::vector<double> inlier_fraction;  // nondecreasing
};

// 30 log-spaced thresholds spanning [0.1, 3.0] by default.
std::vector<double> default_thresholds(int count = 30, double lo = 0.1, double hi = 3.0);

RobustnessCurve robustness_curve(const std::vector<double>& per_pair_errors,
                                 const std::vector<double>& thresholds);

struct TestPair {
    std::string id;
    ImageBuf i_s;
    ImageBuf i_t;
    CorrespondenceSet corr;
};

// Directory of pair subdirectories, each holding source/target images and a
// points.json with [[px,py,qx,qy], ...] and an optional "category".
std::vector<TestPair> load_test_set(const std::string& dir);

struct EvalReport {
    double overall_pme = 0.0;  // mean of per-pair PMEs
    std::vector<double> per_pair;
    std::map<std::string, double> category_pme;
    std::map<std::string, int> category_count;
    RobustnessCurve curve;
    int excluded_points = 0;
};

// `estimate_st` maps source coordinates to target coordinates for a pair.
EvalReport evaluate_pairs(
    const std::function<Homography(const ImageBuf&, const ImageBuf&)>& estimate_st,
    const std::vector<TestPair>& pairs,
    const std::vector<double>& thresholds = default_thresholds());

void write_eval_csv(const EvalReport& report, const std::string& path);
void write_curve_svg(const RobustnessCurve& curve, const std::string& path);

}  // namespace homogen
