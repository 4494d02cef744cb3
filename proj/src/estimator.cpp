#include "homogen/estimator.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace homogen {

using nlohmann::json;

namespace {

double draw01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

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

bool bilinear_at(const ImageBuf& img, double x, double y, double& value) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    if (x0 < 0 || y0 < 0 || x0 + 1 >= img.width || y0 + 1 >= img.height) return false;
    const double fx = x - x0, fy = y - y0;
    value = (1 - fx) * (1 - fy) * img.at(x0, y0) + fx * (1 - fy) * img.at(x0 + 1, y0) +
            (1 - fx) * fy * img.at(x0, y0 + 1) + fx * fy * img.at(x0 + 1, y0 + 1);
    return true;
}

// One pyramid level of inverse-compositional alignment. `g` maps template
// (source) coordinates into the image (target); updated in place.
void lk_level(const ImageBuf& tmpl, const ImageBuf& img, const LKConfig& cfg,
              Eigen::Matrix3d& g, int& total_iters, bool& converged, double& final_error) {
    using Vec8 = Eigen::Matrix<double, 8, 1>;
    using Mat8 = Eigen::Matrix<double, 8, 8>;

    const int w = tmpl.width, h = tmpl.height;
    std::vector<Vec8> sd(static_cast<std::size_t>(w) * h, Vec8::Zero());
    Mat8 hessian = Mat8::Zero();
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double gx = 0.5 * (tmpl.at(x + 1, y) - tmpl.at(x - 1, y));
            const double gy = 0.5 * (tmpl.at(x, y + 1) - tmpl.at(x, y - 1));
            Vec8 j;
            // dW/dp at identity for H(p) = [[1+p0,p1,p2],[p3,1+p4,p5],[p6,p7,1]].
            j(0) = gx * x;
            j(1) = gx * y;
            j(2) = gx;
            j(3) = gy * x;
            j(4) = gy * y;
            j(5) = gy;
            j(6) = -x * (gx * x + gy * y);
            j(7) = -y * (gx * x + gy * y);
            sd[static_cast<std::size_t>(y) * w + x] = j;
            hessian += j * j.transpose();
        }
    }

    // Marquardt-style damping: relative to each parameter's own curvature, so
    // the wildly different scales of translation vs. perspective terms do not
    // leak into each other.
    Vec8 damp_diag = cfg.damping * hessian.diagonal().cwiseMax(1e-12);
    double level_error = 0.0;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        Vec8 b = Vec8::Zero();
        double err_sum = 0.0;
        std::size_t n = 0;
        for (int y = 1; y < h - 1; ++y) {
            for (int x = 1; x < w - 1; ++x) {
                const double denom = g(2, 0) * x + g(2, 1) * y + g(2, 2);
                if (std::abs(denom) < 1e-12) continue;
                const double mx = (g(0, 0) * x + g(0, 1) * y + g(0, 2)) / denom;
                const double my = (g(1, 0) * x + g(1, 1) * y + g(1, 2)) / denom;
                double sample = 0.0;
                if (!bilinear_at(img, mx, my, sample)) continue;
                const double r = sample - tmpl.at(x, y);
                b += sd[static_cast<std::size_t>(y) * w + x] * r;
                err_sum += std::abs(r);
                ++n;
            }
        }
        if (n < 32) {
            converged = false;
            return;
        }
        level_error = err_sum / static_cast<double>(n);
        final_error = level_error;

        Mat8 a = hessian;
        a.diagonal() += damp_diag;
        Vec8 dp = a.ldlt().solve(b);
        if (!dp.allFinite()) {
            // Singular Hessian: damp hard and retry once.
            a = hessian;
            a.diagonal() += 1e4 * damp_diag.cwiseMax(1e-8);
            dp = a.ldlt().solve(b);
            if (!dp.allFinite()) {
                converged = false;
                return;
            }
        }

        Eigen::Matrix3d delta;
        delta << 1 + dp(0), dp(1), dp(2), dp(3), 1 + dp(4), dp(5), dp(6), dp(7), 1;
        if (std::abs(delta.determinant()) < 1e-12) {
            converged = false;
            return;
        }
        g = g * delta.inverse();
        g /= g(2, 2);
        ++total_iters;
        if (dp.norm() < cfg.eps) {
            converged = true;
            return;
        }
    }
    converged = false;
}

}  // namespace

LKResult lk_align(const ImageBuf& i_s, const ImageBuf& i_t, const LKConfig& cfg,
                  const Homography& init) {
    if (i_s.width != i_t.width || i_s.height != i_t.height)
        throw Error("lk_align expects images of equal dimensions");
    const ImageBuf tmpl0 = to_grayscale(i_s);
    const ImageBuf img0 = to_grayscale(i_t);

    // Degenerate (textureless) input: nothing to align against.
    {
        double lo = 1.0, hi = 0.0;
        for (float v : tmpl0.data) {
            lo = std::min(lo, static_cast<double>(v));
            hi = std::max(hi, static_cast<double>(v));
        }
        if (hi - lo < 1e-6) {
            LKResult res;
            res.h_ts = init;
            res.converged = false;
            return res;
        }
    }

    int levels = cfg.pyramid_levels;
    while (levels > 1 && std::min(i_s.width, i_s.height) >> (levels - 1) < 24) --levels;

    std::vector<ImageBuf> tmpl_pyr{tmpl0}, img_pyr{img0};
    for (int l = 1; l < levels; ++l) {
        tmpl_pyr.push_back(downsample2(tmpl_pyr.back()));
        img_pyr.push_back(downsample2(img_pyr.back()));
    }

    // g maps source coords to target coords, i.e. h_ts^-1.
    Eigen::Matrix3d g = to_eigen(invert(init));

    LKResult res;
    for (int l = levels - 1; l >= 0; --l) {
        const double s = 1.0 / static_cast<double>(1 << l);
        Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
        scale(0, 0) = scale(1, 1) = s;
        Eigen::Matrix3d g_level = scale * g * scale.inverse();
        bool level_converged = false;
        lk_level(tmpl_pyr[l], img_pyr[l], cfg, g_level, res.iterations, level_converged,
                 res.final_error);
        g = scale.inverse() * g_level * scale;
        if (l == 0) res.converged = level_converged;
    }

    try {
        res.h_ts = invert(from_eigen(g));
    } catch (const SingularMatrix&) {
        res.h_ts = init;
        res.converged = false;
    }
    return res;
}

RegressorModel RegressorModel::create(const std::vector<int>& hidden_sizes, std::uint64_t seed,
                                      int crop, int input_side) {
    RegressorModel m;
    m.crop = crop;
    m.input_side = input_side;
    m.sizes.push_back(2 * input_side * input_side);
    for (int hsz : hidden_sizes) m.sizes.push_back(hsz);
    m.sizes.push_back(8);

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        const int fan_in = m.sizes[l], fan_out = m.sizes[l + 1];
        const bool last = l + 2 == m.sizes.size();
        const double scale = last ? 0.0 : std::sqrt(2.0 / fan_in);  // zero-init head
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (auto& v : w) v = scale * 2.0 * (draw01(rng) - 0.5);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

std::vector<double> preprocess_pair(const RegressorModel& model, const ImageBuf& first,
                                    const ImageBuf& second) {
    auto prep = [&model](const ImageBuf& img) {
        ImageBuf g = to_grayscale(img);
        if (g.width > model.crop && g.height > model.crop) g = center_crop(g, model.crop, model.crop);
        g = normalize_intensity(g);
        return resize_bilinear(g, model.input_side, model.input_side);
    };
    const ImageBuf a = prep(first), b = prep(second);
    std::vector<double> x;
    x.reserve(a.data.size() + b.data.size());
    for (float v : a.data) x.push_back(v);
    for (float v : b.data) x.push_back(v);
    return x;
}

namespace {

// Forward pass keeping pre-activations for backprop.
std::vector<std::vector<double>> mlp_forward(const RegressorModel& m,
                                             const std::vector<double>& x) {
    std::vector<std::vector<double>> acts;
    acts.push_back(x);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const int in = m.sizes[l], out = m.sizes[l + 1];
        std::vector<double> z(out);
        const auto& prev = acts.back();
        for (int o = 0; o < out; ++o) {
            double sum = m.biases[l][o];
            const double* wrow = m.weights[l].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) sum += wrow[i] * prev[i];
            z[o] = sum;
        }
        const bool last = l + 1 == m.weights.size();
        if (!last)
            for (auto& v : z) v = std::max(0.0, v);
        acts.push_back(std::move(z));
    }
    return acts;
}

// Backprop of d(loss)/d(output) through the net, accumulating into grads.
void mlp_backward(const RegressorModel& m, const std::vector<std::vector<double>>& acts,
                  std::vector<double> delta, RegressorGrads& grads) {
    for (int l = static_cast<int>(m.weights.size()) - 1; l >= 0; --l) {
        const int in = m.sizes[l], out = m.sizes[l + 1];
        const auto& prev = acts[l];
        for (int o = 0; o < out; ++o) {
            grads.d_biases[l][o] += delta[o];
            double* grow = grads.d_weights[l].data() + static_cast<std::size_t>(o) * in;
            const double d = delta[o];
            for (int i = 0; i < in; ++i) grow[i] += d * prev[i];
        }
        if (l == 0) break;
        std::vector<double> next(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double* wrow = m.weights[l].data() + static_cast<std::size_t>(o) * in;
            const double d = delta[o];
            for (int i = 0; i < in; ++i) next[i] += d * wrow[i];
        }
        for (int i = 0; i < in; ++i)
            if (acts[l][i] <= 0.0) next[i] = 0.0;  // relu gate
        delta = std::move(next);
    }
}

CornerOffsets offsets_from_output(const RegressorModel& m, const std::vector<double>& out) {
    CornerOffsets d;
    d.frame_w = m.crop;
    d.frame_h = m.crop;
    for (int i = 0; i < 8; ++i) d.d[i] = out[i] * m.output_scale;
    return d;
}

double corner_l1(const CornerOffsets& a, const CornerOffsets& b) {
    double sum = 0;
    for (int i = 0; i < 8; ++i) sum += std::abs(a.d[i] - b.d[i]);
    return sum / 4.0;  // mean over corners of the per-corner L1 norm
}

CornerOffsets invert_offsets(const CornerOffsets& d) {
    return homography_to_offsets(invert(offsets_to_homography(d)), d.frame_w, d.frame_h);
}

}  // namespace

CornerOffsets regressor_forward(const RegressorModel& model, const ImageBuf& i_s_patch,
                                const ImageBuf& i_t_patch) {
    const auto acts = mlp_forward(model, preprocess_pair(model, i_s_patch, i_t_patch));
    return offsets_from_output(model, acts.back());
}

double sup_loss(const CornerOffsets& d_pred_fwd, const CornerOffsets& d_pred_bwd,
                const CornerOffsets& d_gt) {
    return corner_l1(d_pred_fwd, d_gt) + corner_l1(d_pred_bwd, invert_offsets(d_gt));
}

double total_loss(double l_sup, double l_ccl, double l_qal, double lambda1, double lambda2) {
    return l_sup + lambda1 * l_ccl + lambda2 * l_qal;
}

double regressor_loss_grad(const RegressorModel& model, const std::vector<double>& x_fwd,
                           const std::vector<double>& x_bwd, const CornerOffsets& gt_fwd,
                           const CornerOffsets& gt_bwd, RegressorGrads* grads) {
    const auto acts_fwd = mlp_forward(model, x_fwd);
    const auto acts_bwd = mlp_forward(model, x_bwd);
    const CornerOffsets pred_fwd = offsets_from_output(model, acts_fwd.back());
    const CornerOffsets pred_bwd = offsets_from_output(model, acts_bwd.back());
    const double loss = corner_l1(pred_fwd, gt_fwd) + corner_l1(pred_bwd, gt_bwd);

    if (grads != nullptr) {
        if (grads->d_weights.empty()) {
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                grads->d_weights.emplace_back(model.weights[l].size(), 0.0);
                grads->d_biases.emplace_back(model.biases[l].size(), 0.0);
            }
        }
        auto delta_of = [&model](const CornerOffsets& pred, const CornerOffsets& gt) {
            std::vector<double> delta(8);
            for (int i = 0; i < 8; ++i) {
                const double diff = pred.d[i] - gt.d[i];
                const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
                delta[i] = sign * model.output_scale / 4.0;
            }
            return delta;
        };
        mlp_backward(model, acts_fwd, delta_of(pred_fwd, gt_fwd), *grads);
        mlp_backward(model, acts_bwd, delta_of(pred_bwd, gt_bwd), *grads);
    }
    return loss;
}

RegressorTrainResult train_regressor(RegressorModel& model,
                                     const std::vector<TrainingSample>& samples,
                                     const TrainConfig& cfg) {
    if (samples.empty()) throw EmptyDataset("train_regressor: no samples");

    struct Prepared {
        std::vector<double> x_fwd, x_bwd;
        CornerOffsets gt_fwd, gt_bwd;
    };
    std::vector<Prepared> prep(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        prep[i].x_fwd = preprocess_pair(model, s.i_s, s.i_t_prime);
        prep[i].x_bwd = preprocess_pair(model, s.i_t_prime, s.i_s);
        // Conjugate the full-frame homography into crop coordinates.
        const double ox = (s.i_s.width - model.crop) / 2.0;
        const double oy = (s.i_s.height - model.crop) / 2.0;
        const Homography h_crop = compose(Homography::translation(-ox, -oy),
                                          compose(s.h_gt, Homography::translation(ox, oy)));
        prep[i].gt_fwd = homography_to_offsets(h_crop, model.crop, model.crop);
        prep[i].gt_bwd = homography_to_offsets(invert(h_crop), model.crop, model.crop);
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    RegressorTrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);

        const double decay =
            cfg.epochs > 1 ? std::pow(cfg.final_lr_fraction,
                                      static_cast<double>(epoch) / (cfg.epochs - 1))
                           : 1.0;
        const double epoch_lr = cfg.lr * decay;

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            RegressorGrads grads;
            for (std::size_t k = start; k < end; ++k) {
                const auto& p = prep[order[k]];
                epoch_loss +=
                    regressor_loss_grad(model, p.x_fwd, p.x_bwd, p.gt_fwd, p.gt_bwd, &grads);
            }
            double scale = epoch_lr / static_cast<double>(end - start);
            if (cfg.grad_clip > 0.0) {
                double sq = 0.0;
                for (const auto& layer : grads.d_weights)
                    for (double v : layer) sq += v * v;
                for (const auto& layer : grads.d_biases)
                    for (double v : layer) sq += v * v;
                const double norm = std::sqrt(sq) / static_cast<double>(end - start);
                if (norm > cfg.grad_clip) scale *= cfg.grad_clip / norm;
            }
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                for (std::size_t k = 0; k < model.weights[l].size(); ++k)
                    model.weights[l][k] -= scale * grads.d_weights[l][k];
                for (std::size_t k = 0; k < model.biases[l].size(); ++k)
                    model.biases[l][k] -= scale * grads.d_biases[l][k];
            }
        }
        epoch_loss /= static_cast<double>(samples.size());
        if (!std::isfinite(epoch_loss)) throw NonFiniteLoss("train_regressor loss is not finite");
        result.loss_curve.push_back(epoch_loss);
    }
    return result;
}

Homography estimate(const RegressorModel& model, const ImageBuf& i_s, const ImageBuf& i_t) {
    const CornerOffsets pred = regressor_forward(model, i_s, i_t);
    const Homography h_crop = offsets_to_homography(pred);
    const double ox = (i_s.width - model.crop) / 2.0;
    const double oy = (i_s.height - model.crop) / 2.0;
    const Homography h_full = compose(Homography::translation(ox, oy),
                                      compose(h_crop, Homography::translation(-ox, -oy)));
    return invert(h_full);
}

std::string RegressorModel::to_json() const {
    json j;
    j["crop"] = crop;
    j["input_side"] = input_side;
    j["output_scale"] = output_scale;
    j["sizes"] = sizes;
    j["weights"] = weights;
    j["biases"] = biases;
    return j.dump();
}

RegressorModel RegressorModel::from_json(const std::string& text) {
    const json j = json::parse(text);
    RegressorModel m;
    m.crop = j.at("crop").get<int>();
    m.input_side = j.at("input_side").get<int>();
    m.output_scale = j.at("output_scale").get<double>();
    m.sizes = j.at("sizes").get<std::vector<int>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l)
        if (m.weights.at(l).size() !=
            static_cast<std::size_t>(m.sizes[l]) * static_cast<std::size_t>(m.sizes[l + 1]))
            throw ConfigError("regressor weight shape mismatch");
    return m;
}

}  // namespace homogen
