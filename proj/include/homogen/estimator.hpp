#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homogen/generator.hpp"
#include "homogen/homography.hpp"
#include "homogen/image.hpp"

namespace homogen {

// Inverse-compositional Lucas-Kanade over an 8-parameter homography.
struct LKConfig {
    int pyramid_levels = 3;
    int max_iters = 50;
    double eps = 1e-6;       // convergence threshold on the update norm
    double damping = 1e-4;   // relative diagonal damping of the Hessian
};

struct LKResult {
    Homography h_ts;         // target -> source convention: W(i_t, h_ts) ~ i_s
    bool converged = false;
    int iterations = 0;      // total across pyramid levels
    double final_error = 0;  // mean absolute photometric residual
};

// Coarse-to-fine photometric alignment. Grayscale inputs of equal dims.
// Non-convergence is flagged, never thrown; the best iterate is returned.
LKResult lk_align(const ImageBuf& i_s, const ImageBuf& i_t, const LKConfig& cfg = {},
                  const Homography& init = {});

// Small MLP over two stacked, preprocessed grayscale patches; predicts the
// 4-corner offsets of the source->target homography over the crop frame.
struct RegressorModel {
    int crop = 128;            // central crop applied to both inputs
    int input_side = 32;       // downsample size fed to the MLP
    double output_scale = 10.0;
    std::vector<int> sizes;    // {input, hidden..., 8}
    std::vector<std::vector<double>> weights;  // per layer, out x in row-major
    std::vector<std::vector<double>> biases;

    static RegressorModel create(const std::vector<int>& hidden_sizes, std::uint64_t seed,
                                 int crop = 128, int input_side = 32);

    std::string to_json() const;
    static RegressorModel from_json(const std::string& text);
};

// Crop -> grayscale -> normalize -> downsample for both patches, stacked into
// one input vector.
std::vector<double> preprocess_pair(const RegressorModel& model, const ImageBuf& first,
                                    const ImageBuf& second);

CornerOffsets regressor_forward(const RegressorModel& model, const ImageBuf& i_s_patch,
                                const ImageBuf& i_t_patch);

// Bidirectional 4-corner loss. Each term is the mean over the 4 corners of
// the per-corner L1 norm; the backward target is derived from the inverse of
// the ground-truth homography reconstructed from d_gt.
double sup_loss(const CornerOffsets& d_pred_fwd, const CornerOffsets& d_pred_bwd,
                const CornerOffsets& d_gt);

double total_loss(double l_sup, double l_ccl, double l_qal, double lambda1 = 0.5,
                  double lambda2 = 0.1);

struct RegressorGrads {
    std::vector<std::vector<double>> d_weights;
    std::vector<std::vector<double>> d_biases;
};

// Loss and analytic gradients of the bidirectional loss for one sample, given
// already-preprocessed input vectors. Gradient target of the finite-difference
// checks.
double regressor_loss_grad(const RegressorModel& model, const std::vector<double>& x_fwd,
                           const std::vector<double>& x_bwd, const CornerOffsets& gt_fwd,
                           const CornerOffsets& gt_bwd, RegressorGrads* grads);

struct TrainConfig {
    double lr = 1e-3;
    double final_lr_fraction = 0.1;  // lr decays exponentially to lr*this
    double grad_clip = 10.0;         // global-norm clip per batch; <=0 disables
    int epochs = 50;
    int batch = 16;
    std::uint64_t seed = 0;
};

struct RegressorTrainResult {
    std::vector<double> loss_curve;  // mean L_sup per epoch
};

// Mini-batch SGD on the bidirectional loss; deterministic given the seed.
RegressorTrainResult train_regressor(RegressorModel& model,
                                     const std::vector<TrainingSample>& samples,
                                     const TrainConfig& cfg);

// Full-image front end: predicts over the central crop and lifts the result
// back to image coordinates. Returns H_ts (target -> source).
Homography estimate(const RegressorModel& model, const ImageBuf& i_s, const ImageBuf& i_t);

}  // namespace homogen
