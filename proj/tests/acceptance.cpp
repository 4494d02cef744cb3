// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Kept self-contained so it can run as a single ctest entry.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "homogen/estimator.hpp"
#include "homogen/eval.hpp"
#include "homogen/generator.hpp"
#include "homogen/homography.hpp"
#include "homogen/image.hpp"
#include "homogen/pipeline.hpp"
#include "homogen/plane_seg.hpp"
#include "homogen/refine.hpp"
#include "homogen/warp.hpp"
#include "test_util.hpp"

using namespace homogen;
using testutil::make_smooth_image;
using testutil::uniform01;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++g_failures;
    std::printf("%s - criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

double max_abs_diff(const Homography& a, const Homography& b) {
    double m = 0.0;
    for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

PerturbationRanges wide_ranges() {
    PerturbationRanges r;
    r.scaling = {0.9, 1.1};
    r.shearing = {-0.05, 0.05};
    r.rotation = {-0.1, 0.1};
    r.translation = {-20.0, 20.0};
    r.perspective = {-1e-4, 1e-4};
    return r;
}

// ---------------------------------------------------------------------------
// 1. Homography algebra invariants and noiseless DLT recovery.

void criterion_algebra() {
    const auto t0 = std::chrono::steady_clock::now();
    const Homography id;
    double worst_inv = 0.0, worst_round = 0.0, worst_offsets = 0.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const Homography h = sample_gt(wide_ranges(), 63.5, 63.5, i);
        worst_inv = std::max(worst_inv, max_abs_diff(compose(h, invert(h)), id));
        worst_round = std::max(worst_round, max_abs_diff(invert(invert(h)), h));
        const CornerOffsets d = homography_to_offsets(h, 128.0, 128.0);
        worst_offsets = std::max(worst_offsets, max_abs_diff(offsets_to_homography(d), h));
    }
    double worst_dlt = 0.0;
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const Homography h = sample_gt(wide_ranges(), 63.5, 63.5, 50000 + trial);
        std::vector<Correspondence> corr;
        for (int k = 0; k < 8; ++k) {
            const Point p{uniform01(rng) * 128.0, uniform01(rng) * 128.0};
            corr.push_back({p, transform_point(h, p)});
        }
        worst_dlt = std::max(worst_dlt, max_abs_diff(dlt_solve(corr), h));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = worst_inv < 1e-9 && worst_round < 1e-9 && worst_offsets < 1e-6 &&
                    worst_dlt < 1e-6 && secs < 10.0;
    std::ostringstream d;
    d << "inv " << worst_inv << ", roundtrip " << worst_round << ", offsets " << worst_offsets
      << ", dlt " << worst_dlt << ", " << secs << " s";
    report(1, ok, "10k-homography algebra invariants and DLT recovery", d.str());
}

// ---------------------------------------------------------------------------
// 2. Warp oracles: identity/integer-translation/midpoint exact, composition
//    consistent on smooth images.

void criterion_warp_oracles() {
    const ImageBuf img = make_smooth_image(64, 64, 5);
    bool identity_ok = true, shift_ok = true, mid_ok = true;

    const WarpResult same = warp(img, Homography{});
    for (std::size_t i = 0; i < img.data.size(); ++i)
        if (same.image.data[i] != img.data[i]) identity_ok = false;

    const WarpResult shifted = warp(img, Homography::translation(3.0, 2.0));
    for (int y = 2; y < 64; ++y)
        for (int x = 3; x < 64; ++x)
            if (shifted.image.at(x, y) != img.at(x - 3, y - 2)) shift_ok = false;

    const WarpResult half = warp(img, Homography::translation(0.5, 0.0));
    for (int y = 1; y < 63; ++y)
        for (int x = 1; x < 63; ++x) {
            const float expect = 0.5f * (img.at(x - 1, y) + img.at(x, y));
            if (std::abs(half.image.at(x, y) - expect) > 1e-6f) mid_ok = false;
        }

    const Homography h1 = sample_gt(wide_ranges(), 63.5, 63.5, 71);
    const Homography h2 = sample_gt(wide_ranges(), 63.5, 63.5, 72);
    const ImageBuf smooth = make_smooth_image(128, 128, 6);
    const WarpResult step1 = warp(smooth, h1);
    const WarpResult twice = warp(step1.image, h2);
    const WarpResult direct = warp(smooth, compose(h2, h1));
    double sum = 0.0;
    std::size_t n = 0;
    const PlaneMask v1 = warp_mask(step1.validity, h2);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            if (v1.at(x, y) <= 0.999f || direct.validity.at(x, y) <= 0.999f) continue;
            sum += std::abs(twice.image.at(x, y) - direct.image.at(x, y));
            ++n;
        }
    const double comp_err = n ? sum / n : 1.0;
    const bool ok = identity_ok && shift_ok && mid_ok && comp_err < 0.02 && n > 2000;
    std::ostringstream d;
    d << "identity " << (identity_ok ? "exact" : "BAD") << ", shift "
      << (shift_ok ? "exact" : "BAD") << ", midpoint " << (mid_ok ? "exact" : "BAD")
      << ", composition " << comp_err;
    report(2, ok, "warp oracles and composition consistency", d.str());
}

// ---------------------------------------------------------------------------
// 3. Label criterion: with exact H_ts the generated target matches
//    W(I_s, H_gt) on the dominant plane.

void criterion_label() {
    GenConfig cfg;
    cfg.use_ccm = false;
    cfg.use_qam = false;
    const SynthSpec spec;
    int pass = 0;
    const int total = 200;
    double worst = 0.0;
    for (int i = 0; i < total; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "%04d", i);
        const SynthScene sc = make_scene(spec, id, 3000 + i);
        const Homography h_ts = invert(sc.h_st);
        const SampleOutcome out = generate_one(cfg, sc.id, sc.i_s, sc.i_t, h_ts, 0);

        const WarpResult plane = warp(sc.i_s, out.sample.h_gt);
        const PlaneMask w_plane = warp_mask(sc.plane_s, out.sample.h_gt);
        const PlaneMask w_plane_t = warp_mask(sc.plane_t, compose(out.sample.h_gt, h_ts));
        double sum = 0.0;
        std::size_t n = 0;
        for (int y = 0; y < plane.image.height; ++y)
            for (int x = 0; x < plane.image.width; ++x) {
                if (plane.validity.at(x, y) <= 0.99f || w_plane.at(x, y) < 0.999f) continue;
                if (w_plane_t.at(x, y) < 0.999f) continue;
                if (out.masks.m_s.at(x, y) < 0.1f) continue;
                sum += std::abs(plane.image.at(x, y) - out.sample.i_t_prime.at(x, y));
                ++n;
            }
        const double residual = n >= 500 ? sum / n : 1.0;
        worst = std::max(worst, residual);
        if (residual < 0.02) ++pass;
    }
    std::ostringstream d;
    d << pass << "/" << total << " below 0.02, worst " << worst;
    report(3, pass >= 196, "dominant plane aligned by the stored label", d.str());
}

// ---------------------------------------------------------------------------
// 4. Realism criterion: the moving object lands where the composed motion
//    H_gt * H_ts puts it, within 1 px.

void criterion_realism() {
    GenConfig cfg;
    cfg.use_ccm = false;
    cfg.use_qam = false;
    SynthSpec spec;
    spec.min_objects = 1;
    spec.max_objects = 1;
    int usable = 0, hit = 0;
    for (int i = 0; i < 200; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "%04d", i);
        const SynthScene sc = make_scene(spec, id, 4000 + i);
        const Homography h_ts = invert(sc.h_st);
        const SampleOutcome out = generate_one(cfg, sc.id, sc.i_s, sc.i_t, h_ts, 0);
        const Homography motion = compose(out.sample.h_gt, h_ts);

        const SynthObject& obj = sc.objects.front();
        const double half = (obj.side - 1) / 2.0;
        const Point center{obj.dst_x + half, obj.dst_y + half};
        const Point moved = transform_point(motion, center);
        // Template: the object interior as it appears in the real target.
        const int r = std::min(obj.side / 2 - 2, 10);
        const int tcx = static_cast<int>(std::lround(center.x));
        const int tcy = static_cast<int>(std::lround(center.y));
        const int bx = static_cast<int>(std::lround(moved.x));
        const int by = static_cast<int>(std::lround(moved.y));
        const ImageBuf& gen = out.sample.i_t_prime;
        if (tcx - r < 0 || tcy - r < 0 || tcx + r >= sc.i_t.width || tcy + r >= sc.i_t.height)
            continue;
        if (bx - r - 4 < 0 || by - r - 4 < 0 || bx + r + 4 >= gen.width ||
            by + r + 4 >= gen.height)
            continue;
        ++usable;

        double ssd[9][9];
        double best = 1e30;
        int best_dx = 0, best_dy = 0;
        for (int dy = -4; dy <= 4; ++dy)
            for (int dx = -4; dx <= 4; ++dx) {
                double s = 0.0;
                for (int y = -r; y <= r; ++y)
                    for (int x = -r; x <= r; ++x) {
                        const double diff =
                            gen.at(bx + dx + x, by + dy + y) - sc.i_t.at(tcx + x, tcy + y);
                        s += diff * diff;
                    }
                ssd[dy + 4][dx + 4] = s;
                if (s < best) {
                    best = s;
                    best_dx = dx;
                    best_dy = dy;
                }
            }
        // Sub-pixel refinement: parabola fit through the SSD minimum, so the
        // 1 px tolerance measures placement, not grid rounding.
        double fx = best_dx, fy = best_dy;
        if (best_dx > -4 && best_dx < 4) {
            const double a = ssd[best_dy + 4][best_dx + 3], b = ssd[best_dy + 4][best_dx + 4],
                         c = ssd[best_dy + 4][best_dx + 5];
            if (a - 2 * b + c > 1e-12) fx += 0.5 * (a - c) / (a - 2 * b + c);
        }
        if (best_dy > -4 && best_dy < 4) {
            const double a = ssd[best_dy + 3][best_dx + 4], b = ssd[best_dy + 4][best_dx + 4],
                         c = ssd[best_dy + 5][best_dx + 4];
            if (a - 2 * b + c > 1e-12) fy += 0.5 * (a - c) / (a - 2 * b + c);
        }
        const double err = std::hypot(bx + fx - moved.x, by + fy - moved.y);
        if (err <= 1.0) ++hit;
    }
    std::ostringstream d;
    d << hit << "/" << usable << " objects within 1 px of the composed motion";
    report(4, usable >= 150 && hit * 100 >= usable * 95,
           "moving objects keep realistic motion", d.str());
}

// ---------------------------------------------------------------------------
// 5. Two-homography fusion produces no worse seams than single-warp fusion.

void criterion_seam() {
    SynthSpec spec;
    spec.min_objects = 1;
    spec.max_objects = 1;
    spec.min_object_side = 28;
    spec.max_object_shift = 16.0;
    const PerturbationRanges gt = PerturbationRanges::small_baseline();
    int ok_count = 0;
    const int total = 200;
    for (int i = 0; i < total; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "%04d", i);
        const SynthScene sc = make_scene(spec, id, 5000 + i);
        const Homography h_ts = invert(sc.h_st);
        const double cx = spec.width / 2.0 - 0.5, cy = spec.height / 2.0 - 0.5;
        const Homography h_gt = sample_gt(gt, cx, cy, 6000 + i);

        const RealisticResult real =
            generate_realistic(sc.i_s, sc.i_t, sc.plane_s, sc.plane_t, h_gt, h_ts);
        const ImageBuf naive = generate_naive(sc.i_s, sc.i_t, sc.plane_s, sc.plane_t, h_gt);
        try {
            const PlaneMask band = fusion_band(real.dominant_weight);
            if (seam_energy(real.image, band) <= seam_energy(naive, band)) ++ok_count;
        } catch (const EmptyBand&) {
            ++ok_count;  // no fusion boundary at all: trivially seam-free
        }
    }
    std::ostringstream d;
    d << ok_count << "/" << total << " scenes with seam energy <= the naive fusion";
    report(5, ok_count * 100 >= total * 95, "fusion seams no worse than single-warp fusion",
           d.str());
}

// ---------------------------------------------------------------------------
// 6. Content-consistency refinement never hurts, and removes >= 20% of the
//    loss on artifact-injected fusions in the median.

struct RefineScene {
    ImageBuf i_s, i_t;
    PlaneMask m_s, m_t;
    Homography h_gt, h_ts;
};

RefineScene make_refine_scene(std::uint64_t seed) {
    RefineScene sc;
    const int side = 96;
    PerturbationRanges ranges;
    ranges.translation = {-5.0, 5.0};
    ranges.rotation = {-0.03, 0.03};
    const Homography h_st = sample_gt(ranges, side / 2.0 - 0.5, side / 2.0 - 0.5, seed + 3);
    sc.h_ts = invert(h_st);
    sc.h_gt = sample_gt(ranges, side / 2.0 - 0.5, side / 2.0 - 0.5, seed + 9);
    sc.i_s = make_smooth_image(side, side, seed, 3.0);
    sc.i_t = warp(sc.i_s, h_st).image;
    sc.m_s = PlaneMask(side, side, 1.0f);
    sc.m_t = PlaneMask(side, side, 1.0f);
    return sc;
}

// Fusion built with a wrong H_ts over a half-plane "moving" region, so the
// misalignment shows up as compositing artifacts.
ImageBuf artifact_fusion(const RefineScene& sc, std::uint64_t seed) {
    PlaneMask m_s = sc.m_s;
    for (int y = 0; y < m_s.height; ++y)
        for (int x = 0; x < m_s.width; ++x)
            if (x > m_s.width / 2) m_s.at(x, y) = 0.0f;
    return make_disturbance(sc.i_s, sc.i_t, m_s, m_s, sc.h_gt, sc.h_ts, DisturbanceRanges{},
                            seed)
        .image;
}

void criterion_ccm() {
    bool never_up = true;
    std::vector<double> drops;
    for (std::uint64_t i = 0; i < 60; ++i) {
        const RefineScene sc = make_refine_scene(7000 + i);
        const ImageBuf bad = artifact_fusion(sc, 7500 + i);
        const double before = ccl_loss(bad, sc.i_t, sc.h_gt, sc.h_ts);
        const ImageBuf fixed = ccm_reconstruct(bad, sc.i_t, sc.h_gt, sc.h_ts);
        const double after = ccl_loss(fixed, sc.i_t, sc.h_gt, sc.h_ts);
        if (after > before + 1e-6) never_up = false;
        drops.push_back(before > 0 ? (before - after) / before : 0.0);
    }
    for (std::uint64_t i = 0; i < 20; ++i) {
        const RefineScene sc = make_refine_scene(8000 + i);
        const ImageBuf clean =
            generate_realistic(sc.i_s, sc.i_t, sc.m_s, sc.m_t, sc.h_gt, sc.h_ts).image;
        const double before = ccl_loss(clean, sc.i_t, sc.h_gt, sc.h_ts);
        const double after = ccl_loss(ccm_reconstruct(clean, sc.i_t, sc.h_gt, sc.h_ts), sc.i_t,
                                      sc.h_gt, sc.h_ts);
        if (after > before + 1e-6) never_up = false;
    }
    std::sort(drops.begin(), drops.end());
    const double median = drops[drops.size() / 2];
    std::ostringstream d;
    d << "never increases: " << (never_up ? "yes" : "NO") << ", median artifact-loss drop "
      << median;
    report(6, never_up && median >= 0.20, "content-consistency refinement", d.str());
}

// ---------------------------------------------------------------------------
// 7. Quality model separates real targets from disturbed fusions; BCE at 0.5
//    equals ln 2 for every label.

void criterion_qam() {
    std::vector<std::vector<double>> pos, neg;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const RefineScene sc = make_refine_scene(9000 + i);
        const WarpResult ref = warp(sc.i_s, invert(sc.h_ts));
        pos.push_back(qam_features(sc.i_t, ref.image, &ref.validity));
        const ImageBuf bad = artifact_fusion(sc, 9500 + i);
        const WarpResult bad_ref = warp(sc.i_t, compose(sc.h_gt, sc.h_ts));
        neg.push_back(qam_features(bad, bad_ref.image, &bad_ref.validity));
    }
    const QamTrainResult res =
        qam_train({pos.begin(), pos.begin() + 35}, {neg.begin(), neg.begin() + 35}, 600, 0.5, 3);
    int correct = 0;
    for (int i = 35; i < 50; ++i) {
        correct += res.model.score(pos[i]) > 0.5;
        correct += res.model.score(neg[i]) <= 0.5;
    }
    const double acc = correct / 30.0;

    double worst_bce = 0.0;
    for (double label : {0.0, 0.3, 0.5, 1.0})
        worst_bce = std::max(worst_bce, std::abs(bce(0.5, label) - std::log(2.0)));

    std::ostringstream d;
    d << "held-out accuracy " << acc << ", |BCE(0.5,.) - ln 2| <= " << worst_bce;
    report(7, acc >= 0.90 && worst_bce <= 1e-12, "quality model and BCE identity", d.str());
}

// ---------------------------------------------------------------------------
// 8. Analytic gradients match central finite differences.

void criterion_gradients() {
    // Regressor gradient over a tiny model with a randomized head.
    RegressorModel model = RegressorModel::create({8, 6}, 21, 16, 8);
    std::mt19937_64 rng(77);
    auto& head_w = model.weights.back();
    for (auto& w : head_w) w = (uniform01(rng) - 0.5) * 0.2;
    for (auto& b : model.biases.back()) b = (uniform01(rng) - 0.5) * 0.2;

    const int in = model.sizes.front();
    std::vector<double> x_fwd(in), x_bwd(in);
    for (auto& v : x_fwd) v = uniform01(rng) * 2.0 - 1.0;
    for (auto& v : x_bwd) v = uniform01(rng) * 2.0 - 1.0;
    CornerOffsets gt_fwd, gt_bwd;
    gt_fwd.frame_w = gt_fwd.frame_h = gt_bwd.frame_w = gt_bwd.frame_h = 16.0;
    for (int i = 0; i < 8; ++i) {
        gt_fwd.d[i] = (uniform01(rng) - 0.5) * 4.0;
        gt_bwd.d[i] = (uniform01(rng) - 0.5) * 4.0;
    }

    RegressorGrads grads;
    regressor_loss_grad(model, x_fwd, x_bwd, gt_fwd, gt_bwd, &grads);
    double worst_reg = 0.0;
    const double eps = 1e-6;
    for (std::size_t layer = 0; layer < model.weights.size(); ++layer) {
        for (int probe = 0; probe < 12; ++probe) {
            const std::size_t idx = rng() % model.weights[layer].size();
            RegressorModel m2 = model;
            m2.weights[layer][idx] += eps;
            const double up = regressor_loss_grad(m2, x_fwd, x_bwd, gt_fwd, gt_bwd, nullptr);
            m2.weights[layer][idx] -= 2 * eps;
            const double dn = regressor_loss_grad(m2, x_fwd, x_bwd, gt_fwd, gt_bwd, nullptr);
            const double fd = (up - dn) / (2 * eps);
            const double an = grads.d_weights[layer][idx];
            worst_reg = std::max(
                worst_reg, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0}));
        }
    }

    // Quality-model gradient.
    std::vector<std::vector<double>> feats;
    std::vector<double> labels;
    for (int i = 0; i < 24; ++i) {
        std::vector<double> f(kQamFeatureCount);
        for (auto& v : f) v = uniform01(rng) * 2.0 - 1.0;
        feats.push_back(f);
        labels.push_back(i % 2 ? 1.0 : 0.0);
    }
    std::vector<double> w(kQamFeatureCount);
    for (auto& v : w) v = (uniform01(rng) - 0.5) * 2.0;
    const double b = 0.3;
    std::vector<double> gw;
    double gb = 0.0;
    qam_loss_grad(w, b, feats, labels, gw, gb);
    double worst_qam = 0.0;
    for (int i = 0; i < kQamFeatureCount; ++i) {
        std::vector<double> w2 = w;
        std::vector<double> tmp;
        double tmpb;
        w2[i] += eps;
        const double up = qam_loss_grad(w2, b, feats, labels, tmp, tmpb);
        w2[i] -= 2 * eps;
        const double dn = qam_loss_grad(w2, b, feats, labels, tmp, tmpb);
        const double fd = (up - dn) / (2 * eps);
        worst_qam = std::max(worst_qam,
                             std::abs(fd - gw[i]) / std::max({std::abs(fd), std::abs(gw[i]), 1.0}));
    }
    {
        std::vector<double> tmp;
        double tmpb;
        const double up = qam_loss_grad(w, b + eps, feats, labels, tmp, tmpb);
        const double dn = qam_loss_grad(w, b - eps, feats, labels, tmp, tmpb);
        const double fd = (up - dn) / (2 * eps);
        worst_qam =
            std::max(worst_qam, std::abs(fd - gb) / std::max({std::abs(fd), std::abs(gb), 1.0}));
    }

    std::ostringstream d;
    d << "regressor rel err " << worst_reg << " (tol 1e-4), quality rel err " << worst_qam
      << " (tol 1e-5)";
    report(8, worst_reg < 1e-4 && worst_qam < 1e-5, "finite-difference gradient checks", d.str());
}

// ---------------------------------------------------------------------------
// 9. Full two-iteration run at corpus size 500: held-out error does not
//    regress by more than 5%, inside the 10-minute budget.

void criterion_iteration_trend() {
    const auto t0 = std::chrono::steady_clock::now();
    const SynthSpec spec;
    const auto corpus = to_test_pairs(synth_corpus(spec, 500, 1234));
    const auto eval_set = to_test_pairs(synth_corpus(spec, 100, 9876));

    GenConfig cfg;
    cfg.master_seed = 7;
    cfg.threads = 1;
    cfg.iterations = 2;
    const PipelineResult res = run(cfg, corpus, eval_set, "");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double pme1 = res.reports[0].pme;
    const double pme2 = res.reports[1].pme;
    std::ostringstream d;
    d << "held-out PME " << pme1 << " -> " << pme2 << ", accepted " << res.reports[0].accepted
      << "/" << res.reports[1].accepted << ", " << secs << " s";
    report(9, pme2 <= 1.05 * pme1 && secs < 600.0,
           "two-iteration run at corpus size 500 keeps held-out error", d.str());
}

// ---------------------------------------------------------------------------
// 10. Byte-identical artifacts across two runs with the same master seed.

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        files[fs::relative(entry.path(), root).string()] = buf.str();
    }
    return files;
}

void criterion_determinism() {
    SynthSpec spec;
    spec.width = 96;
    spec.height = 96;
    spec.margin = 16;
    spec.min_object_side = 16;
    spec.max_object_side = 24;
    const auto corpus = to_test_pairs(synth_corpus(spec, 20, 55));
    const auto eval_set = to_test_pairs(synth_corpus(spec, 6, 56));

    GenConfig cfg;
    cfg.master_seed = 11;
    cfg.iterations = 2;
    cfg.regressor_hidden = {32, 16};
    cfg.regressor_crop = 64;
    cfg.regressor_input_side = 16;
    cfg.train.epochs = 10;
    cfg.qam_epochs = 200;

    const fs::path a = fs::temp_directory_path() / "homogen_accept_run_a";
    const fs::path b = fs::temp_directory_path() / "homogen_accept_run_b";
    fs::remove_all(a);
    fs::remove_all(b);
    run(cfg, corpus, eval_set, a.string());
    run(cfg, corpus, eval_set, b.string());
    const auto ta = read_tree(a);
    const auto tb = read_tree(b);
    const bool ok = !ta.empty() && ta == tb;
    std::ostringstream d;
    d << ta.size() << " files, trees " << (ok ? "byte-identical" : "DIFFER");
    fs::remove_all(a);
    fs::remove_all(b);
    report(10, ok, "same seed reproduces dataset shards and reports", d.str());
}

// ---------------------------------------------------------------------------
// 11. Evaluation semantics: identity error equals raw displacement, curves
//     monotone, threshold grid spans [0.1, 3.0].

void criterion_eval_semantics() {
    std::mt19937_64 rng(13);
    CorrespondenceSet corr;
    double expected_sum = 0.0;
    for (int i = 0; i < 40; ++i) {
        const double px = uniform01(rng) * 100, py = uniform01(rng) * 100;
        const double qx = px + uniform01(rng) * 6 - 3, qy = py + uniform01(rng) * 6 - 3;
        corr.points.push_back({px, py, qx, qy});
    }
    for (const auto& p : corr.points) expected_sum += std::hypot(p[0] - p[2], p[1] - p[3]);
    const PmeResult identity = pme(Homography{}, corr);
    const bool exact = identity.value == expected_sum / corr.points.size();

    std::vector<double> errors;
    for (int i = 0; i < 200; ++i) errors.push_back(uniform01(rng) * 4.0);
    const std::vector<double> thresholds = default_thresholds();
    const RobustnessCurve curve = robustness_curve(errors, thresholds);
    bool monotone = true;
    for (std::size_t i = 1; i < curve.inlier_fraction.size(); ++i)
        if (curve.inlier_fraction[i] < curve.inlier_fraction[i - 1]) monotone = false;
    const bool grid_ok = thresholds.size() == 30 && std::abs(thresholds.front() - 0.1) < 1e-12 &&
                         std::abs(thresholds.back() - 3.0) < 1e-12 &&
                         std::is_sorted(thresholds.begin(), thresholds.end());

    std::ostringstream d;
    d << "identity PME " << (exact ? "exact" : "INEXACT") << ", curve "
      << (monotone ? "monotone" : "NOT monotone") << ", grid [" << thresholds.front() << ", "
      << thresholds.back() << "] x" << thresholds.size();
    report(11, exact && monotone && grid_ok, "evaluation semantics", d.str());
}

}  // namespace

int main() {
    criterion_algebra();
    criterion_warp_oracles();
    criterion_label();
    criterion_realism();
    criterion_seam();
    criterion_ccm();
    criterion_qam();
    criterion_gradients();
    criterion_iteration_trend();
    criterion_determinism();
    criterion_eval_semantics();
    std::printf("%s: %d of 11 criteria failed\n", g_failures ? "FAIL" : "OK", g_failures);
    return g_failures ? 1 : 0;
}
