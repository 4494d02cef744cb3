#include "homogen/refine.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "homogen/warp.hpp"

namespace homogen {

using nlohmann::json;

namespace {

ImageBuf feature_image(const ImageBuf& img) {
    const FeatureMap f = feature_extract(to_grayscale(img));
    ImageBuf out(f.width, f.height, f.channels);
    out.data = f.data;
    return out;
}

// Channel-mean absolute difference; only meaningful where valid.
ImageBuf residual_image(const ImageBuf& a, const ImageBuf& b) {
    ImageBuf res(a.width, a.height, 1);
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            double sum = 0;
            for (int c = 0; c < a.channels; ++c) sum += std::abs(a.at(x, y, c) - b.at(x, y, c));
            res.at(x, y) = static_cast<float>(sum / a.channels);
        }
    }
    return res;
}

double sigmoid_clamped(double z) {
    const double p = 1.0 / (1.0 + std::exp(-z));
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

}  // namespace

double ccl_loss(const ImageBuf& i_hat, const ImageBuf& i_t, const Homography& h_gt,
                const Homography& h_ts) {
    if (i_hat.width != i_t.width || i_hat.height != i_t.height)
        throw Error("ccl_loss dimension mismatch");
    const Homography h_accum = compose(h_gt, h_ts);
    const ImageBuf f_hat = feature_image(i_hat);
    const ImageBuf f_t = feature_image(i_t);
    const WarpResult back = warp(f_hat, invert(h_accum));

    double sum = 0;
    std::size_t n = 0;
    for (int y = 0; y < i_t.height; ++y) {
        for (int x = 0; x < i_t.width; ++x) {
            if (back.validity.at(x, y) <= 0.99f) continue;
            for (int c = 0; c < f_t.channels; ++c)
                sum += std::abs(back.image.at(x, y, c) - f_t.at(x, y, c));
            ++n;
        }
    }
    if (n == 0) return 0.0;
    return sum / (static_cast<double>(n) * f_t.channels);
}

ImageBuf ccm_reconstruct(const ImageBuf& i_t_prime, const ImageBuf& i_t, const Homography& h_gt,
                         const Homography& h_ts, const CcmConfig& cfg) {
    if (i_t_prime.width != i_t.width || i_t_prime.height != i_t.height ||
        i_t_prime.channels != i_t.channels)
        throw Error("ccm_reconstruct dimension mismatch");

    const WarpResult ref = warp(i_t, compose(h_gt, h_ts));
    const ImageBuf residual = box_blur(residual_image(i_t_prime, ref.image), cfg.smooth_radius);

    PlaneMask replace(i_t.width, i_t.height);
    bool any = false;
    for (int y = 0; y < i_t.height; ++y) {
        for (int x = 0; x < i_t.width; ++x) {
            if (ref.validity.at(x, y) > 0.99f &&
                residual.at(x, y) > static_cast<float>(cfg.artifact_threshold)) {
                replace.at(x, y) = 1.0f;
                any = true;
            }
        }
    }
    if (!any) return i_t_prime;

    replace = mask_box_blur(replace, cfg.feather_radius);
    for (int y = 0; y < i_t.height; ++y)
        for (int x = 0; x < i_t.width; ++x)
            if (ref.validity.at(x, y) <= 0.99f) replace.at(x, y) = 0.0f;

    ImageBuf out = i_t_prime;
    for (int y = 0; y < i_t.height; ++y) {
        for (int x = 0; x < i_t.width; ++x) {
            const float m = replace.at(x, y);
            if (m <= 0.0f) continue;
            for (int c = 0; c < i_t.channels; ++c)
                out.at(x, y, c) = (1.0f - m) * i_t_prime.at(x, y, c) + m * ref.image.at(x, y, c);
        }
    }

    // The module contract is that reconstruction never raises the content
    // consistency loss; when the replacement would, keep the input.
    if (ccl_loss(out, i_t, h_gt, h_ts) > ccl_loss(i_t_prime, i_t, h_gt, h_ts))
        return i_t_prime;
    return out;
}

std::vector<double> qam_features(const ImageBuf& img, const ImageBuf& reference,
                                 const PlaneMask* reference_validity) {
    if (img.width != reference.width || img.height != reference.height)
        throw Error("qam_features dimension mismatch");

    const ImageBuf g_img = to_grayscale(img);
    const ImageBuf g_ref = to_grayscale(reference);
    const ImageBuf residual = residual_image(g_img, g_ref);
    const ImageBuf smooth_res = box_blur(residual, 1);

    auto valid_at = [&](int x, int y) {
        return reference_validity == nullptr || reference_validity->at(x, y) > 0.99f;
    };

    std::vector<double> valid_res;
    valid_res.reserve(g_img.pixel_count());
    PlaneMask band(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!valid_at(x, y)) continue;
            valid_res.push_back(residual.at(x, y));
            if (smooth_res.at(x, y) > 0.05f) band.at(x, y) = 1.0f;
        }
    }

    double band_energy = 0.0;
    try {
        band_energy = seam_energy(g_img, band);
    } catch (const EmptyBand&) {
        band_energy = 0.0;
    }

    double mean_res = 0.0, p95 = 0.0;
    if (!valid_res.empty()) {
        for (double v : valid_res) mean_res += v;
        mean_res /= static_cast<double>(valid_res.size());
        std::sort(valid_res.begin(), valid_res.end());
        p95 = valid_res[static_cast<std::size_t>(0.95 * (valid_res.size() - 1))];
    }

    const ImageBuf low = box_blur(g_img, 2);
    double hf = 0.0, total = 0.0;
    for (std::size_t i = 0; i < g_img.data.size(); ++i) {
        const double d = g_img.data[i] - low.data[i];
        hf += d * d;
        total += static_cast<double>(g_img.data[i]) * g_img.data[i];
    }
    const double hf_ratio = hf / (total + 1e-12);

    double hole_fraction = 0.0;
    if (reference_validity != nullptr) {
        std::size_t holes = 0;
        for (float v : reference_validity->w) holes += v <= 0.99f;
        hole_fraction = static_cast<double>(holes) / reference_validity->w.size();
    }

    return {band_energy, mean_res, p95, hf_ratio, hole_fraction};
}

double QualityModel::score(const std::vector<double>& features) const {
    if (features.size() != weights.size()) throw Error("feature/weight size mismatch");
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double std_i = feat_std.empty() ? 1.0 : feat_std[i];
        const double mean_i = feat_mean.empty() ? 0.0 : feat_mean[i];
        z += weights[i] * (features[i] - mean_i) / std_i;
    }
    return sigmoid_clamped(z);
}

double bce(double prediction, double label) {
    const double p = std::clamp(prediction, 1e-12, 1.0 - 1e-12);
    return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

double qam_loss_grad(const std::vector<double>& weights, double bias,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<double>& labels, std::vector<double>& grad_w,
                     double& grad_b) {
    grad_w.assign(weights.size(), 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        double z = bias;
        for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * features[i][k];
        const double p = sigmoid_clamped(z);
        loss += bce(p, labels[i]);
        const double err = p - labels[i];
        for (std::size_t k = 0; k < weights.size(); ++k) grad_w[k] += err * features[i][k];
        grad_b += err;
    }
    return loss;
}

QamTrainResult qam_train(const std::vector<std::vector<double>>& pos_features,
                         const std::vector<std::vector<double>>& neg_features, int epochs,
                         double lr, std::uint64_t seed) {
    if (pos_features.size() < 10 || neg_features.size() < 10)
        throw InsufficientData("qam_train needs >= 10 examples per class");
    const std::size_t dim = pos_features.front().size();

    std::vector<std::vector<double>> feats;
    std::vector<double> labels;
    for (const auto& f : pos_features) {
        feats.push_back(f);
        labels.push_back(1.0);
    }
    for (const auto& f : neg_features) {
        feats.push_back(f);
        labels.push_back(0.0);
    }

    QamTrainResult result;
    QualityModel& model = result.model;
    model.feat_mean.assign(dim, 0.0);
    model.feat_std.assign(dim, 0.0);
    for (const auto& f : feats)
        for (std::size_t k = 0; k < dim; ++k) model.feat_mean[k] += f[k];
    for (std::size_t k = 0; k < dim; ++k) model.feat_mean[k] /= static_cast<double>(feats.size());
    for (const auto& f : feats)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = f[k] - model.feat_mean[k];
            model.feat_std[k] += d * d;
        }
    for (std::size_t k = 0; k < dim; ++k)
        model.feat_std[k] = std::sqrt(model.feat_std[k] / static_cast<double>(feats.size())) + 1e-8;

    std::vector<std::vector<double>> std_feats = feats;
    for (auto& f : std_feats)
        for (std::size_t k = 0; k < dim; ++k) f[k] = (f[k] - model.feat_mean[k]) / model.feat_std[k];

    std::mt19937_64 rng(seed);
    model.weights.resize(dim);
    for (auto& w : model.weights)
        w = 0.01 * (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
    model.bias = 0.0;

    std::vector<double> grad_w;
    double grad_b = 0.0;
    const double scale = 1.0 / static_cast<double>(std_feats.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double loss =
            qam_loss_grad(model.weights, model.bias, std_feats, labels, grad_w, grad_b);
        if (!std::isfinite(loss)) throw NonFiniteLoss("qam_train loss is not finite");
        for (std::size_t k = 0; k < dim; ++k) model.weights[k] -= lr * grad_w[k] * scale;
        model.bias -= lr * grad_b * scale;
        result.loss_curve.push_back(loss * scale);
    }
    model.trained = true;
    return result;
}

QualityScore qam_score(const QualityModel& model, const ImageBuf& img, const ImageBuf& reference,
                       double tau, const PlaneMask* reference_validity) {
    QualityScore s;
    s.threshold = tau;
    s.value = model.score(qam_features(img, reference, reference_validity));
    s.accepted = s.value > tau;  // strict: a score exactly at tau is rejected
    return s;
}

std::string QualityModel::to_json() const {
    json j;
    j["feature_version"] = feature_version;
    j["weights"] = weights;
    j["bias"] = bias;
    j["feat_mean"] = feat_mean;
    j["feat_std"] = feat_std;
    j["trained"] = trained;
    j["tau"] = tau;
    return j.dump(2);
}

QualityModel QualityModel::from_json(const std::string& text) {
    const json j = json::parse(text);
    QualityModel m;
    m.feature_version = j.at("feature_version").get<int>();
    if (m.feature_version != kQamFeatureVersion)
        throw ConfigError("unsupported QAM feature version");
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.feat_mean = j.at("feat_mean").get<std::vector<double>>();
    m.feat_std = j.at("feat_std").get<std::vector<double>>();
    m.trained = j.at("trained").get<bool>();
    m.tau = j.at("tau").get<double>();
    return m;
}

}  // namespace homogen
