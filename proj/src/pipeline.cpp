#include "homogen/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "homogen/io.hpp"
#include "homogen/warp.hpp"

namespace homogen {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t sample_seed(std::uint64_t master_seed, const std::string& pair_id, int iteration) {
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a
    auto mix = [&h](std::uint64_t byte) {
        h ^= byte;
        h *= 1099511628211ull;
    };
    for (int i = 0; i < 8; ++i) mix((master_seed >> (8 * i)) & 0xff);
    for (unsigned char c : pair_id) mix(c);
    for (int i = 0; i < 4; ++i) mix((static_cast<std::uint32_t>(iteration) >> (8 * i)) & 0xff);
    return h;
}

namespace {

double draw01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Smooth random texture: blurred uniform noise stretched to [0,1].
ImageBuf noise_texture(int w, int h, std::uint64_t seed, double sigma) {
    std::mt19937_64 rng(seed);
    ImageBuf img(w, h, 1);
    for (auto& v : img.data) v = static_cast<float>(draw01(rng));
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

void paste(ImageBuf& img, const ImageBuf& patch, int x0, int y0) {
    for (int y = 0; y < patch.height; ++y)
        for (int x = 0; x < patch.width; ++x)
            if (x0 + x >= 0 && y0 + y >= 0 && x0 + x < img.width && y0 + y < img.height)
                img.at(x0 + x, y0 + y) = patch.at(x, y);
}

void cut(PlaneMask& m, int x0, int y0, int side) {
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (x0 + x >= 0 && y0 + y >= 0 && x0 + x < m.width && y0 + y < m.height)
                m.at(x0 + x, y0 + y) = 0.0f;
}

bool in_rect(double x, double y, double rx, double ry, int side, double pad) {
    return x >= rx - pad && x <= rx + side - 1 + pad && y >= ry - pad && y <= ry + side - 1 + pad;
}

json homography_json(const Homography& h) {
    json a = json::array();
    for (double v : h.data()) a.push_back(v);
    return a;
}

Homography homography_from_json(const json& a) {
    std::array<double, 9> m;
    for (int i = 0; i < 9; ++i) m[i] = a.at(i).get<double>();
    return normalize(Homography::from_row_major(m));
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }
Interval interval_from_json(const json& a) { return {a.at(0).get<double>(), a.at(1).get<double>()}; }

}  // namespace

SynthSpec::SynthSpec() {
    camera.scaling = {0.97, 1.03};
    camera.shearing = {-0.02, 0.02};
    camera.rotation = {-0.04, 0.04};
    camera.translation = {-10.0, 10.0};
    camera.perspective = {-2e-5, 2e-5};
}

SynthScene make_scene(const SynthSpec& spec, const std::string& id, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SynthScene sc;
    sc.id = id;
    const int w = spec.width, h = spec.height, m = spec.margin;

    const ImageBuf world = noise_texture(w + 2 * m, h + 2 * m, rng(), 3.0);
    sc.h_st = sample_gt(spec.camera, (w - 1) / 2.0, (h - 1) / 2.0, rng());

    const Homography crop_world = Homography::translation(-m, -m);
    sc.i_s = warp(world, crop_world, w, h).image;
    sc.i_t = warp(world, compose(sc.h_st, crop_world), w, h).image;
    sc.plane_s = PlaneMask(w, h, 1.0f);
    sc.plane_t = PlaneMask(w, h, 1.0f);

    const int span = spec.max_objects - spec.min_objects;
    const int n_objects =
        spec.min_objects + (span > 0 ? static_cast<int>(rng() % (span + 1)) : 0);
    for (int i = 0; i < n_objects; ++i) {
        SynthObject obj;
        const int side_span = spec.max_object_side - spec.min_object_side;
        obj.side = spec.min_object_side +
                   (side_span > 0 ? static_cast<int>(rng() % (side_span + 1)) : 0);
        const int lo = 4, hi_x = w - obj.side - 4, hi_y = h - obj.side - 4;
        obj.src_x = lo + static_cast<int>(rng() % (hi_x - lo + 1));
        obj.src_y = lo + static_cast<int>(rng() % (hi_y - lo + 1));

        const double half = (obj.side - 1) / 2.0;
        const Point center_t =
            transform_point(sc.h_st, {obj.src_x + half, obj.src_y + half});
        const double dx = (2.0 * draw01(rng) - 1.0) * spec.max_object_shift;
        const double dy = (2.0 * draw01(rng) - 1.0) * spec.max_object_shift;
        obj.dst_x = std::clamp(std::round(center_t.x - half + dx), static_cast<double>(lo),
                               static_cast<double>(hi_x));
        obj.dst_y = std::clamp(std::round(center_t.y - half + dy), static_cast<double>(lo),
                               static_cast<double>(hi_y));

        const ImageBuf texture = noise_texture(obj.side, obj.side, rng(), 1.2);
        paste(sc.i_s, texture, static_cast<int>(obj.src_x), static_cast<int>(obj.src_y));
        paste(sc.i_t, texture, static_cast<int>(obj.dst_x), static_cast<int>(obj.dst_y));
        cut(sc.plane_s, static_cast<int>(obj.src_x), static_cast<int>(obj.src_y), obj.side);
        cut(sc.plane_t, static_cast<int>(obj.dst_x), static_cast<int>(obj.dst_y), obj.side);
        sc.objects.push_back(obj);
    }

    static const char* kCategories[] = {"RE", "LT", "LL", "SF", "LF"};
    sc.corr.category = kCategories[rng() % 5];
    int placed = 0, attempts = 0;
    while (placed < spec.points_per_pair && attempts < 500) {
        ++attempts;
        const double px = 8.0 + draw01(rng) * (w - 17.0);
        const double py = 8.0 + draw01(rng) * (h - 17.0);
        const Point q = transform_point(sc.h_st, {px, py});
        bool on_object = false;
        for (const auto& obj : sc.objects)
            on_object = on_object || in_rect(px, py, obj.src_x, obj.src_y, obj.side, 2.0) ||
                        in_rect(q.x, q.y, obj.dst_x, obj.dst_y, obj.side, 2.0);
        if (on_object || q.x < 1 || q.y < 1 || q.x > w - 2 || q.y > h - 2) continue;
        sc.corr.points.push_back({px, py, q.x, q.y});
        ++placed;
    }
    if (sc.corr.points.empty())
        throw DegenerateConfiguration("make_scene: could not place any plane point for " + id);
    return sc;
}

std::vector<SynthScene> synth_corpus(const SynthSpec& spec, int count,
                                     std::uint64_t master_seed) {
    std::vector<SynthScene> scenes;
    scenes.reserve(count);
    char buf[32];
    for (int i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof(buf), "%04d", i);
        scenes.push_back(make_scene(spec, buf, sample_seed(master_seed, buf, 0)));
    }
    return scenes;
}

void save_corpus(const std::vector<SynthScene>& scenes, const std::string& dir) {
    for (const auto& sc : scenes) {
        const fs::path sub = fs::path(dir) / sc.id;
        fs::create_directories(sub);
        save_image(sc.i_s, (sub / "source.png").string());
        save_image(sc.i_t, (sub / "target.png").string());

        json pts;
        pts["category"] = sc.corr.category;
        pts["points"] = json::array();
        for (const auto& p : sc.corr.points) pts["points"].push_back({p[0], p[1], p[2], p[3]});
        std::ofstream(sub / "points.json") << pts.dump(2) << "\n";

        json truth;
        truth["h_st"] = homography_json(sc.h_st);
        truth["objects"] = json::array();
        for (const auto& obj : sc.objects)
            truth["objects"].push_back({{"src_x", obj.src_x},
                                        {"src_y", obj.src_y},
                                        {"dst_x", obj.dst_x},
                                        {"dst_y", obj.dst_y},
                                        {"side", obj.side}});
        std::ofstream(sub / "truth.json") << truth.dump(2) << "\n";
    }
}

std::vector<TestPair> to_test_pairs(const std::vector<SynthScene>& scenes) {
    std::vector<TestPair> pairs;
    pairs.reserve(scenes.size());
    for (const auto& sc : scenes) {
        TestPair p;
        p.id = sc.id;
        p.i_s = sc.i_s;
        p.i_t = sc.i_t;
        p.corr = sc.corr;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// ---------------------------------------------------------------------------

GenConfig::GenConfig() {
    gt_ranges = PerturbationRanges::small_baseline();
    train.lr = 2e-3;
    train.epochs = 60;
}

std::string GenConfig::to_json() const {
    json j;
    j["iterations"] = iterations;
    j["master_seed"] = master_seed;
    j["threads"] = threads;
    j["use_ccm"] = use_ccm;
    j["use_qam"] = use_qam;
    j["save_masks"] = save_masks;
    j["lambda1"] = lambda1;
    j["lambda2"] = lambda2;
    j["tau"] = tau;
    j["hole_floor"] = hole_floor;
    j["gt_ranges"] = {{"scaling", interval_json(gt_ranges.scaling)},
                      {"shearing", interval_json(gt_ranges.shearing)},
                      {"rotation", interval_json(gt_ranges.rotation)},
                      {"translation", interval_json(gt_ranges.translation)},
                      {"perspective", interval_json(gt_ranges.perspective)}};
    j["disturbance"] = {{"translation", interval_json(disturbance.translation)},
                        {"rotation", interval_json(disturbance.rotation)}};
    j["plane_seg"] = {{"rho", plane_seg.rho},
                      {"smooth_radius", plane_seg.smooth_radius},
                      {"morph_radius", plane_seg.morph_radius},
                      {"feather_radius", plane_seg.feather_radius}};
    j["ccm"] = {{"artifact_threshold", ccm.artifact_threshold},
                {"smooth_radius", ccm.smooth_radius},
                {"feather_radius", ccm.feather_radius}};
    j["lk"] = {{"pyramid_levels", lk.pyramid_levels},
               {"max_iters", lk.max_iters},
               {"eps", lk.eps},
               {"damping", lk.damping}};
    j["qam"] = {{"epochs", qam_epochs}, {"lr", qam_lr}, {"holdout_fraction", qam_holdout_fraction}};
    j["regressor"] = {{"hidden", regressor_hidden},
                      {"crop", regressor_crop},
                      {"input_side", regressor_input_side}};
    j["train"] = {{"lr", train.lr},
                  {"final_lr_fraction", train.final_lr_fraction},
                  {"grad_clip", train.grad_clip},
                  {"epochs", train.epochs},
                  {"batch", train.batch},
                  {"seed", train.seed},
                  {"iteration_lr_decay", iteration_lr_decay}};
    return j.dump(2);
}

GenConfig GenConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    GenConfig c;
    try {
        c.iterations = j.value("iterations", c.iterations);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.threads = j.value("threads", c.threads);
        c.use_ccm = j.value("use_ccm", c.use_ccm);
        c.use_qam = j.value("use_qam", c.use_qam);
        c.save_masks = j.value("save_masks", c.save_masks);
        c.lambda1 = j.value("lambda1", c.lambda1);
        c.lambda2 = j.value("lambda2", c.lambda2);
        c.tau = j.value("tau", c.tau);
        c.hole_floor = j.value("hole_floor", c.hole_floor);
        if (j.contains("gt_ranges")) {
            const auto& g = j["gt_ranges"];
            c.gt_ranges.scaling = interval_from_json(g.at("scaling"));
            c.gt_ranges.shearing = interval_from_json(g.at("shearing"));
            c.gt_ranges.rotation = interval_from_json(g.at("rotation"));
            c.gt_ranges.translation = interval_from_json(g.at("translation"));
            c.gt_ranges.perspective = interval_from_json(g.at("perspective"));
        }
        if (j.contains("disturbance")) {
            c.disturbance.translation = interval_from_json(j["disturbance"].at("translation"));
            c.disturbance.rotation = interval_from_json(j["disturbance"].at("rotation"));
        }
        if (j.contains("plane_seg")) {
            const auto& p = j["plane_seg"];
            c.plane_seg.rho = p.value("rho", c.plane_seg.rho);
            c.plane_seg.smooth_radius = p.value("smooth_radius", c.plane_seg.smooth_radius);
            c.plane_seg.morph_radius = p.value("morph_radius", c.plane_seg.morph_radius);
            c.plane_seg.feather_radius = p.value("feather_radius", c.plane_seg.feather_radius);
        }
        if (j.contains("ccm")) {
            const auto& p = j["ccm"];
            c.ccm.artifact_threshold = p.value("artifact_threshold", c.ccm.artifact_threshold);
            c.ccm.smooth_radius = p.value("smooth_radius", c.ccm.smooth_radius);
            c.ccm.feather_radius = p.value("feather_radius", c.ccm.feather_radius);
        }
        if (j.contains("lk")) {
            const auto& p = j["lk"];
            c.lk.pyramid_levels = p.value("pyramid_levels", c.lk.pyramid_levels);
            c.lk.max_iters = p.value("max_iters", c.lk.max_iters);
            c.lk.eps = p.value("eps", c.lk.eps);
            c.lk.damping = p.value("damping", c.lk.damping);
        }
        if (j.contains("qam")) {
            const auto& p = j["qam"];
            c.qam_epochs = p.value("epochs", c.qam_epochs);
            c.qam_lr = p.value("lr", c.qam_lr);
            c.qam_holdout_fraction = p.value("holdout_fraction", c.qam_holdout_fraction);
        }
        if (j.contains("regressor")) {
            const auto& p = j["regressor"];
            c.regressor_hidden = p.value("hidden", c.regressor_hidden);
            c.regressor_crop = p.value("crop", c.regressor_crop);
            c.regressor_input_side = p.value("input_side", c.regressor_input_side);
        }
        if (j.contains("train")) {
            const auto& p = j["train"];
            c.train.lr = p.value("lr", c.train.lr);
            c.train.final_lr_fraction = p.value("final_lr_fraction", c.train.final_lr_fraction);
            c.train.grad_clip = p.value("grad_clip", c.train.grad_clip);
            c.train.epochs = p.value("epochs", c.train.epochs);
            c.train.batch = p.value("batch", c.train.batch);
            c.train.seed = p.value("seed", c.train.seed);
            c.iteration_lr_decay = p.value("iteration_lr_decay", c.iteration_lr_decay);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    if (c.iterations < 1 || c.threads < 1 || c.tau < 0.0 || c.tau > 1.0 || c.hole_floor < 0.0)
        throw ConfigError("config values out of range");
    return c;
}

GenConfig GenConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void GenConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path);
    out << to_json() << "\n";
}

// ---------------------------------------------------------------------------

SampleOutcome generate_one(const GenConfig& cfg, const std::string& pair_id, const ImageBuf& i_s,
                           const ImageBuf& i_t, const Homography& h_ts, int iteration) {
    const std::uint64_t seed = sample_seed(cfg.master_seed, pair_id, iteration);
    SampleOutcome out;
    out.masks = estimate_masks(i_s, i_t, h_ts, cfg.plane_seg);

    const double cx = (i_s.width - 1) / 2.0, cy = (i_s.height - 1) / 2.0;
    const Homography h_gt = sample_gt(cfg.gt_ranges, cx, cy, seed);
    RealisticResult gen = generate_realistic(i_s, i_t, out.masks.m_s, out.masks.m_t, h_gt, h_ts,
                                             cfg.hole_floor);
    out.sample = assemble_sample(i_s, std::move(gen), h_gt, h_ts, pair_id, iteration, seed);

    out.ccl_before = ccl_loss(out.sample.i_t_prime, i_t, h_gt, h_ts);
    out.ccl_after = out.ccl_before;
    if (cfg.use_ccm) {
        out.sample.i_t_prime = ccm_reconstruct(out.sample.i_t_prime, i_t, h_gt, h_ts, cfg.ccm);
        out.ccl_after = ccl_loss(out.sample.i_t_prime, i_t, h_gt, h_ts);
    }

    if (cfg.use_qam) {
        const WarpResult aligned_source = warp(i_s, invert(h_ts));
        out.qam_positive = qam_features(i_t, aligned_source.image, &aligned_source.validity);

        const RealisticResult disturbed =
            make_disturbance(i_s, i_t, out.masks.m_s, out.masks.m_t, h_gt, h_ts, cfg.disturbance,
                             seed ^ 0x9e3779b97f4a7c15ull, cfg.hole_floor);
        const WarpResult reference = warp(i_t, compose(h_gt, h_ts));
        out.qam_negative = qam_features(disturbed.image, reference.image, &reference.validity);
        out.qam_candidate =
            qam_features(out.sample.i_t_prime, reference.image, &reference.validity);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

json sample_meta(const TrainingSample& s) {
    json j;
    j["h_gt"] = homography_json(s.h_gt);
    j["h_ts_used"] = homography_json(s.provenance.h_ts);
    const CornerOffsets d = homography_to_offsets(s.h_gt, s.i_s.width, s.i_s.height);
    j["corner_offsets_gt"] = {{"d", d.d}, {"frame", {d.frame_w, d.frame_h}}};
    j["quality_score"] = s.provenance.quality_score;
    j["accepted"] = s.provenance.accepted;
    j["seed"] = s.provenance.seed;
    j["iteration"] = s.provenance.iteration;
    j["provenance"] = {{"pair_id", s.provenance.pair_id},
                       {"empty_dominant_plane", s.provenance.empty_dominant_plane}};
    return j;
}

}  // namespace

void save_shard(const std::vector<TrainingSample>& samples, const std::string& dir) {
    char buf[32];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%04zu", i);
        const fs::path sub = fs::path(dir) / buf;
        fs::create_directories(sub);
        save_image(samples[i].i_s, (sub / "source.png").string());
        save_image(samples[i].i_t_prime, (sub / "target.png").string());
        std::ofstream(sub / "meta.json") << sample_meta(samples[i]).dump(2) << "\n";
    }
}

std::vector<TrainingSample> load_shard(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("shard directory not found: " + dir);
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
            subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());

    std::vector<TrainingSample> samples;
    for (const auto& sub : subdirs) {
        TrainingSample s;
        s.i_s = load_image((sub / "source.png").string());
        s.i_t_prime = load_image((sub / "target.png").string());
        std::ifstream in(sub / "meta.json");
        json j;
        in >> j;
        s.h_gt = homography_from_json(j.at("h_gt"));
        s.provenance.h_ts = homography_from_json(j.at("h_ts_used"));
        s.provenance.quality_score = j.at("quality_score").get<double>();
        s.provenance.accepted = j.at("accepted").get<bool>();
        s.provenance.seed = j.at("seed").get<std::uint64_t>();
        s.provenance.iteration = j.at("iteration").get<int>();
        s.provenance.pair_id = j.at("provenance").at("pair_id").get<std::string>();
        s.provenance.empty_dominant_plane =
            j.at("provenance").at("empty_dominant_plane").get<bool>();
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw EmptyDataset("no samples under " + dir);
    return samples;
}

// ---------------------------------------------------------------------------

std::string IterationReport::to_json() const {
    json j;
    j["iteration"] = iteration;
    j["generated"] = generated;
    j["accepted"] = accepted;
    j["rejected"] = rejected;
    j["empty_dominant_plane"] = empty_dominant_plane;
    j["quarantined"] = quarantined;
    j["qam_accuracy"] = qam_accuracy;
    j["mean_quality"] = mean_quality;
    j["mean_ccl_before"] = mean_ccl_before;
    j["mean_ccl_after"] = mean_ccl_after;
    j["train_loss"] = train_loss;
    j["pme"] = pme;
    return j.dump(2);
}

IterationReport IterationReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    IterationReport r;
    r.iteration = j.at("iteration").get<int>();
    r.generated = j.at("generated").get<int>();
    r.accepted = j.at("accepted").get<int>();
    r.rejected = j.at("rejected").get<int>();
    r.empty_dominant_plane = j.at("empty_dominant_plane").get<int>();
    r.quarantined = j.at("quarantined").get<std::vector<std::string>>();
    r.qam_accuracy = j.at("qam_accuracy").get<double>();
    r.mean_quality = j.at("mean_quality").get<double>();
    r.mean_ccl_before = j.at("mean_ccl_before").get<double>();
    r.mean_ccl_after = j.at("mean_ccl_after").get<double>();
    r.train_loss = j.at("train_loss").get<std::vector<double>>();
    r.pme = j.at("pme").get<double>();
    return r;
}

std::string IterationReport::csv_header() {
    return "iteration,generated,accepted,rejected,empty_dominant_plane,quarantined,"
           "qam_accuracy,mean_quality,mean_ccl_before,mean_ccl_after,final_train_loss,pme";
}

std::string IterationReport::csv_row() const {
    std::ostringstream out;
    out.precision(10);
    out << iteration << "," << generated << "," << accepted << "," << rejected << ","
        << empty_dominant_plane << "," << quarantined.size() << "," << qam_accuracy << ","
        << mean_quality << "," << mean_ccl_before << "," << mean_ccl_after << ","
        << (train_loss.empty() ? 0.0 : train_loss.back()) << "," << pme;
    return out.str();
}

namespace {

struct PairWork {
    std::optional<SampleOutcome> outcome;
    std::string error;
};

void run_parallel(int threads, std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(count));
    for (int t = 0; t < n; ++t)
        pool.emplace_back([&fn, t, n, count] {
            for (std::size_t i = t; i < count; i += n) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

IterationReport run_iteration(const GenConfig& cfg, const std::vector<TestPair>& corpus,
                              const std::vector<TestPair>& eval_set, int iteration,
                              EstimatorState& state, const std::string& out_dir) {
    if (corpus.empty()) throw EmptyDataset("run_iteration: empty corpus");

    // Process in id order regardless of input order, so artifacts are stable.
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&corpus](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });

    IterationReport report;
    report.iteration = iteration;

    // G-phase: independent per pair, deterministic through per-sample seeds.
    std::vector<PairWork> work(corpus.size());
    const bool use_regressor = state.model_ready && iteration > 0;
    run_parallel(cfg.threads, order.size(), [&](std::size_t k) {
        const TestPair& pair = corpus[order[k]];
        try {
            // Photometric alignment provides H_ts; from the second iteration
            // on it starts from the current regressor's estimate.
            const Homography init =
                use_regressor ? estimate(state.model, pair.i_s, pair.i_t) : Homography{};
            const Homography h_ts = lk_align(pair.i_s, pair.i_t, cfg.lk, init).h_ts;
            work[k].outcome =
                generate_one(cfg, pair.id, pair.i_s, pair.i_t, h_ts, iteration);
        } catch (const std::exception& e) {
            work[k].error = e.what();
        }
    });

    std::vector<SampleOutcome> outcomes;
    for (std::size_t k = 0; k < work.size(); ++k) {
        if (work[k].outcome) {
            outcomes.push_back(std::move(*work[k].outcome));
        } else {
            report.quarantined.push_back(corpus[order[k]].id);
        }
    }
    if (outcomes.empty()) throw EmptyDataset("run_iteration: all pairs failed generation");

    report.generated = static_cast<int>(outcomes.size());
    for (const auto& oc : outcomes) {
        report.mean_ccl_before += oc.ccl_before;
        report.mean_ccl_after += oc.ccl_after;
        report.empty_dominant_plane += oc.sample.provenance.empty_dominant_plane;
    }
    report.mean_ccl_before /= report.generated;
    report.mean_ccl_after /= report.generated;

    // QAM: train on a deterministic 80/20 split, then score every candidate.
    bool filtering = cfg.use_qam;
    if (filtering) {
        std::vector<std::size_t> split(outcomes.size());
        for (std::size_t i = 0; i < split.size(); ++i) split[i] = i;
        std::mt19937_64 rng(sample_seed(cfg.master_seed, "qam-split", iteration));
        for (std::size_t i = split.size(); i > 1; --i)
            std::swap(split[i - 1], split[rng() % i]);
        const std::size_t holdout =
            std::min(outcomes.size() - 1,
                     static_cast<std::size_t>(
                         std::llround(cfg.qam_holdout_fraction * outcomes.size())));

        std::vector<std::vector<double>> pos, neg;
        for (std::size_t i = holdout; i < split.size(); ++i) {
            pos.push_back(outcomes[split[i]].qam_positive);
            neg.push_back(outcomes[split[i]].qam_negative);
        }
        if (pos.size() < 10) {
            filtering = false;  // too few pairs to fit a scorer; accept everything
        } else {
            const QamTrainResult trained =
                qam_train(pos, neg, cfg.qam_epochs, cfg.qam_lr,
                          sample_seed(cfg.master_seed, "qam-train", iteration));
            state.quality = trained.model;
            state.quality.tau = cfg.tau;
            if (holdout > 0) {
                int correct = 0;
                for (std::size_t i = 0; i < holdout; ++i) {
                    correct += state.quality.score(outcomes[split[i]].qam_positive) > 0.5;
                    correct += state.quality.score(outcomes[split[i]].qam_negative) <= 0.5;
                }
                report.qam_accuracy = correct / (2.0 * holdout);
            }
        }
    }

    double quality_sum = 0.0;
    for (auto& oc : outcomes) {
        if (filtering) {
            const double score = state.quality.score(oc.qam_candidate);
            oc.sample.provenance.quality_score = score;
            oc.sample.provenance.accepted = score > cfg.tau;
            quality_sum += score;
        } else {
            oc.sample.provenance.accepted = true;
        }
    }
    if (filtering) report.mean_quality = quality_sum / report.generated;

    std::vector<TrainingSample> accepted;
    std::vector<TrainingSample> all_samples;
    std::vector<PlaneMask> source_masks;
    for (auto& oc : outcomes) {
        if (oc.sample.provenance.accepted) accepted.push_back(oc.sample);
        all_samples.push_back(std::move(oc.sample));
        source_masks.push_back(std::move(oc.masks.m_s));
    }
    report.accepted = static_cast<int>(accepted.size());
    report.rejected = report.generated - report.accepted;
    if (accepted.empty()) throw EmptyDataset("run_iteration: QAM rejected every sample");

    // T-phase: continue training the same model across iterations.
    if (!state.model_ready) {
        state.model = RegressorModel::create(cfg.regressor_hidden, cfg.master_seed,
                                             cfg.regressor_crop, cfg.regressor_input_side);
        state.model_ready = true;
    }
    TrainConfig tc = cfg.train;
    tc.lr *= std::pow(cfg.iteration_lr_decay, iteration);
    tc.seed = sample_seed(cfg.master_seed, "train", iteration);
    report.train_loss = train_regressor(state.model, accepted, tc).loss_curve;

    if (!eval_set.empty()) {
        const EvalReport eval = evaluate_pairs(
            [&state](const ImageBuf& a, const ImageBuf& b) {
                return invert(estimate(state.model, a, b));
            },
            eval_set);
        report.pme = eval.overall_pme;
    } else {
        report.pme = -1.0;
    }

    if (!out_dir.empty()) {
        const fs::path iter_dir = fs::path(out_dir) / ("iteration_" + std::to_string(iteration));
        fs::create_directories(iter_dir);
        save_shard(all_samples, (iter_dir / "shard").string());
        std::ofstream(iter_dir / "report.json") << report.to_json() << "\n";
        std::ofstream(iter_dir / "report.csv")
            << IterationReport::csv_header() << "\n" << report.csv_row() << "\n";
        if (cfg.save_masks) {
            for (std::size_t i = 0; i < source_masks.size(); ++i) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%04zu", i);
                save_mask(source_masks[i],
                          (iter_dir / "shard" / buf / "mask_source.png").string());
            }
        }
    }
    return report;
}

PipelineResult run(const GenConfig& cfg, const std::vector<TestPair>& corpus,
                   const std::vector<TestPair>& eval_set, const std::string& out_dir) {
    PipelineResult result;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        cfg.save((fs::path(out_dir) / "config.json").string());
    }
    for (int it = 0; it < cfg.iterations; ++it)
        result.reports.push_back(run_iteration(cfg, corpus, eval_set, it, result.state, out_dir));
    if (!out_dir.empty()) {
        std::ofstream(fs::path(out_dir) / "model.json") << result.state.model.to_json() << "\n";
        if (result.state.quality.trained)
            std::ofstream(fs::path(out_dir) / "quality.json")
                << result.state.quality.to_json() << "\n";
        std::ofstream summary(fs::path(out_dir) / "summary.csv");
        summary << IterationReport::csv_header() << "\n";
        for (const auto& r : result.reports) summary << r.csv_row() << "\n";
    }
    return result;
}

}  // namespace homogen
