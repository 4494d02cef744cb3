#include "homogen/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "homogen/io.hpp"

namespace homogen {

namespace fs = std::filesystem;
using nlohmann::json;

PmeResult pme(const Homography& h, const CorrespondenceSet& corr) {
    if (corr.points.empty()) throw Error("pme: empty correspondence set");
    PmeResult res;
    double sum = 0.0;
    for (const auto& p : corr.points) {
        try {
            const Point mapped = transform_point(h, {p[0], p[1]});
            sum += std::hypot(mapped.x - p[2], mapped.y - p[3]);
            ++res.used;
        } catch (const PointAtInfinity&) {
            ++res.excluded;
        }
    }
    if (res.used == 0) throw PointAtInfinity("all correspondence points mapped to infinity");
    res.value = sum / res.used;
    return res;
}

std::vector<double> default_thresholds(int count, double lo, double hi) {
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i)
        t[i] = lo * std::pow(hi / lo, count > 1 ? static_cast<double>(i) / (count - 1) : 0.0);
    t.front() = lo;
    t.back() = hi;
    return t;
}

RobustnessCurve robustness_curve(const std::vector<double>& per_pair_errors,
                                 const std::vector<double>& thresholds) {
    if (per_pair_errors.empty()) throw Error("robustness_curve: no errors");
    RobustnessCurve curve;
    curve.thresholds = thresholds;
    curve.inlier_fraction.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto inliers =
            std::count_if(per_pair_errors.begin(), per_pair_errors.end(),
                          [t](double e) { return e <= t; });
        curve.inlier_fraction.push_back(static_cast<double>(inliers) / per_pair_errors.size());
    }
    return curve;
}

std::vector<TestPair> load_test_set(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("test set directory not found: " + dir);
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());

    std::vector<TestPair> pairs;
    for (const auto& sub : subdirs) {
        const fs::path points_path = sub / "points.json";
        if (!fs::exists(points_path)) continue;
        TestPair pair;
        pair.id = sub.filename().string();
        for (const char* ext : {".png", ".pgm", ".ppm"}) {
            if (fs::exists(sub / ("source" + std::string(ext)))) {
                pair.i_s = load_image((sub / ("source" + std::string(ext))).string());
                pair.i_t = load_image((sub / ("target" + std::string(ext))).string());
                break;
            }
        }
        if (pair.i_s.data.empty()) throw IoError("missing source/target images in " + sub.string());

        std::ifstream in(points_path);
        json j;
        in >> j;
        for (const auto& row : j.at("points"))
            pair.corr.points.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                                        row.at(2).get<double>(), row.at(3).get<double>()});
        if (j.contains("category")) pair.corr.category = j["category"].get<std::string>();
        if (pair.corr.points.empty()) throw IoError("no points in " + points_path.string());
        pairs.push_back(std::move(pair));
    }
    if (pairs.empty()) throw EmptyDataset("no test pairs under " + dir);
    return pairs;
}

EvalReport evaluate_pairs(
    const std::function<Homography(const ImageBuf&, const ImageBuf&)>& estimate_st,
    const std::vector<TestPair>& pairs, const std::vector<double>& thresholds) {
    if (pairs.empty()) throw EmptyDataset("evaluate_pairs: no pairs");
    EvalReport report;
    double sum = 0.0;
    std::map<std::string, double> cat_sum;
    for (const auto& pair : pairs) {
        const Homography h = estimate_st(pair.i_s, pair.i_t);
        const PmeResult r = pme(h, pair.corr);
        report.per_pair.push_back(r.value);
        report.excluded_points += r.excluded;
        sum += r.value;
        const std::string cat = pair.corr.category.empty() ? "ALL" : pair.corr.category;
        cat_sum[cat] += r.value;
        report.category_count[cat] += 1;
    }
    // Per-pair average first, then across pairs.
    report.overall_pme = sum / pairs.size();
    for (const auto& [cat, s] : cat_sum)
        report.category_pme[cat] = s / report.category_count[cat];
    report.curve = robustness_curve(report.per_pair, thresholds);
    return report;
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "category,count,pme\n";
    for (const auto& [cat, v] : report.category_pme)
        out << cat << "," << report.category_count.at(cat) << "," << v << "\n";
    out << "AVG," << report.per_pair.size() << "," << report.overall_pme << "\n";
    out << "\nthreshold,inlier_fraction\n";
    for (std::size_t i = 0; i < report.curve.thresholds.size(); ++i)
        out << report.curve.thresholds[i] << "," << report.curve.inlier_fraction[i] << "\n";
}

void write_curve_svg(const RobustnessCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    const int w = 640, h = 480, margin = 50;
    const double t_lo = curve.thresholds.front(), t_hi = curve.thresholds.back();
    auto map_x = [&](double t) {
        return margin + (std::log(t) - std::log(t_lo)) / (std::log(t_hi) - std::log(t_lo)) *
                            (w - 2 * margin);
    };
    auto map_y = [&](double f) { return h - margin - f * (h - 2 * margin); };

    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << margin << "' y1='" << h - margin << "' x2='" << w - margin << "' y2='"
        << h - margin << "' stroke='black'/>\n";
    out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << h - margin << "' stroke='black'/>\n";
    out << "<polyline fill='none' stroke='steelblue' stroke-width='2' points='";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
        out << map_x(curve.thresholds[i]) << "," << map_y(curve.inlier_fraction[i]) << " ";
    out << "'/>\n";
    out << "<text x='" << w / 2 << "' y='" << h - 12
        << "' text-anchor='middle'>threshold (px)</text>\n";
    out << "<text x='14' y='" << h / 2 << "' transform='rotate(-90 14 " << h / 2
        << ")' text-anchor='middle'>inlier fraction</text>\n";
    out << "</svg>\n";
}

}  // namespace homogen
