#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homogen/homography.hpp"
#include "homogen/image.hpp"

namespace homogen {

struct CcmConfig {
    double artifact_threshold = 0.10;  // on smoothed [0,1] residuals; 1.0 disables
    int smooth_radius = 1;             // 3x3 residual smoothing
    int feather_radius = 2;
};

// Reference-guided artifact removal: pixels of I'_t that disagree with
// R = W(I_t, H_gt*H_ts) beyond the threshold are replaced by R with feathered
// blending. Falls back to the input whenever the replacement would not lower
// the content consistency loss.
ImageBuf ccm_reconstruct(const ImageBuf& i_t_prime, const ImageBuf& i_t, const Homography& h_gt,
                         const Homography& h_ts, const CcmConfig& cfg = {});

// Mean L1 over valid pixels of W(F(i_hat), (H_gt*H_ts)^-1) versus F(I_t).
double ccl_loss(const ImageBuf& i_hat, const ImageBuf& i_t, const Homography& h_gt,
                const Homography& h_ts);

inline constexpr int kQamFeatureCount = 5;
inline constexpr int kQamFeatureVersion = 1;

// Handcrafted quality features of an image against its aligned reference:
// residual-band gradient energy, mean and 95th-percentile residual,
// high-frequency energy ratio, invalid-reference area fraction.
std::vector<double> qam_features(const ImageBuf& img, const ImageBuf& reference,
                                 const PlaneMask* reference_validity = nullptr);

// Logistic model over standardized QAM features. Scores lie in (0,1).
struct QualityModel {
    std::vector<double> weights;  // kQamFeatureCount entries
    double bias = 0.0;
    std::vector<double> feat_mean;
    std::vector<double> feat_std;
    bool trained = false;
    int feature_version = kQamFeatureVersion;
    double tau = 0.5;

    double score(const std::vector<double>& features) const;

    std::string to_json() const;
    static QualityModel from_json(const std::string& text);
};

double bce(double prediction, double label);

// Loss and gradient of the summed BCE objective over a labeled feature set;
// used by training and by finite-difference checks.
double qam_loss_grad(const std::vector<double>& weights, double bias,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<double>& labels, std::vector<double>& grad_w,
                     double& grad_b);

struct QamTrainResult {
    QualityModel model;
    std::vector<double> loss_curve;  // mean BCE per epoch
};

// Full-batch gradient descent on BCE(pos,1)+BCE(neg,0) over raw feature
// vectors. Requires >= 10 examples per class. Deterministic given the seed.
QamTrainResult qam_train(const std::vector<std::vector<double>>& pos_features,
                         const std::vector<std::vector<double>>& neg_features, int epochs,
                         double lr, std::uint64_t seed);

struct QualityScore {
    double value = 0.0;
    double threshold = 0.5;
    bool accepted = false;  // strictly value > threshold
};

QualityScore qam_score(const QualityModel& model, const ImageBuf& img, const ImageBuf& reference,
                       double tau, const PlaneMask* reference_validity = nullptr);

}  // namespace homogen
