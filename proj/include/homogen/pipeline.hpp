#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homogen/estimator.hpp"
#include "homogen/eval.hpp"
#include "homogen/generator.hpp"
#include "homogen/homography.hpp"
#include "homogen/image.hpp"
#include "homogen/plane_seg.hpp"
#include "homogen/refine.hpp"

namespace homogen {

// Per-sample seed: FNV-1a over (master_seed, pair_id, iteration), so the draw
// for a pair is independent of processing order and thread count.
std::uint64_t sample_seed(std::uint64_t master_seed, const std::string& pair_id, int iteration);

// ---------------------------------------------------------------------------
// Synthetic corpus: textured plane under a known homography plus independently
// moving textured objects, with ground truth persisted for oracle checks.

struct SynthSpec {
    int width = 160;
    int height = 160;
    int margin = 24;           // world-canvas border consumed by the camera motion
    int min_objects = 0;
    int max_objects = 3;
    int min_object_side = 20;
    int max_object_side = 36;
    double max_object_shift = 10.0;  // extra object motion on top of the plane's, px
    int points_per_pair = 8;
    PerturbationRanges camera;  // plane homography ranges; kept inside the margin

    SynthSpec();
};

struct SynthObject {
    double src_x = 0, src_y = 0;  // top-left corner in the source frame
    double dst_x = 0, dst_y = 0;  // top-left corner in the target frame
    int side = 0;
};

struct SynthScene {
    std::string id;
    ImageBuf i_s, i_t;
    Homography h_st;               // ground-truth plane homography, source -> target
    PlaneMask plane_s, plane_t;    // ground-truth dominant-plane supports
    std::vector<SynthObject> objects;
    CorrespondenceSet corr;        // plane points, q = h_st(p)
};

SynthScene make_scene(const SynthSpec& spec, const std::string& id, std::uint64_t seed);
std::vector<SynthScene> synth_corpus(const SynthSpec& spec, int count, std::uint64_t master_seed);

// Writes the eval-compatible layout (source/target/points.json) plus a
// truth.json per scene with the full ground truth.
void save_corpus(const std::vector<SynthScene>& scenes, const std::string& dir);
std::vector<TestPair> to_test_pairs(const std::vector<SynthScene>& scenes);

// ---------------------------------------------------------------------------
// Configuration: every numeric knob of the generation/training loop.

struct GenConfig {
    int iterations = 2;
    std::uint64_t master_seed = 0;
    int threads = 1;
    bool use_ccm = true;
    bool use_qam = true;
    bool save_masks = false;

    double lambda1 = 0.5;      // content-consistency weight in the total loss
    double lambda2 = 0.1;      // quality weight in the total loss
    double tau = 0.5;          // QAM acceptance threshold
    double hole_floor = 0.05;  // blend weight below which a pixel is hole-filled

    PerturbationRanges gt_ranges;  // H_gt sampling; small_baseline() by default
    DisturbanceRanges disturbance;
    PlaneSegConfig plane_seg;
    CcmConfig ccm;
    LKConfig lk;

    int qam_epochs = 600;
    double qam_lr = 0.5;
    double qam_holdout_fraction = 0.2;

    std::vector<int> regressor_hidden{128, 64};
    int regressor_crop = 128;
    int regressor_input_side = 32;
    TrainConfig train;
    double iteration_lr_decay = 0.5;  // lr multiplier applied per iteration

    GenConfig();

    std::string to_json() const;
    static GenConfig from_json(const std::string& text);
    static GenConfig load(const std::string& path);
    void save(const std::string& path) const;
};

// ---------------------------------------------------------------------------
// Single-sample G-phase: masks -> H_gt -> fusion -> optional CCM, plus the
// feature vectors the QAM stage needs.

struct SampleOutcome {
    TrainingSample sample;
    MaskPair masks;
    double ccl_before = 0.0;
    double ccl_after = 0.0;
    std::vector<double> qam_positive;   // real target vs. aligned source
    std::vector<double> qam_negative;   // disturbed fusion vs. clean reference
    std::vector<double> qam_candidate;  // the generated target vs. its reference
};

SampleOutcome generate_one(const GenConfig& cfg, const std::string& pair_id, const ImageBuf& i_s,
                           const ImageBuf& i_t, const Homography& h_ts, int iteration);

// ---------------------------------------------------------------------------
// Dataset persistence: shard/NNNN/{source.png, target.png, meta.json}.

void save_shard(const std::vector<TrainingSample>& samples, const std::string& dir);
std::vector<TrainingSample> load_shard(const std::string& dir);

// ---------------------------------------------------------------------------
// Iteration loop.

struct IterationReport {
    int iteration = 0;
    int generated = 0;
    int accepted = 0;
    int rejected = 0;
    int empty_dominant_plane = 0;
    std::vector<std::string> quarantined;  // pair ids that failed generation
    double qam_accuracy = -1.0;            // held-out; -1 when QAM is disabled
    double mean_quality = -1.0;
    double mean_ccl_before = 0.0;
    double mean_ccl_after = 0.0;
    std::vector<double> train_loss;
    double pme = 0.0;  // held-out evaluation after this iteration's T-phase

    std::string to_json() const;
    static IterationReport from_json(const std::string& text);
    std::string csv_row() const;
    static std::string csv_header();
};

struct EstimatorState {
    RegressorModel model;
    QualityModel quality;
    bool model_ready = false;
};

// One G-phase + T-phase pass over the corpus. Writes the shard and report
// under out_dir (skipped when out_dir is empty). Quarantines per-sample
// failures; throws EmptyDataset when the corpus or the accepted set is empty.
IterationReport run_iteration(const GenConfig& cfg, const std::vector<TestPair>& corpus,
                              const std::vector<TestPair>& eval_set, int iteration,
                              EstimatorState& state, const std::string& out_dir);

struct PipelineResult {
    std::vector<IterationReport> reports;
    EstimatorState state;
};

// Full loop over cfg.iterations; persists config, model, quality model, and
// per-iteration artifacts under out_dir (skipped when empty).
PipelineResult run(const GenConfig& cfg, const std::vector<TestPair>& corpus,
                   const std::vector<TestPair>& eval_set, const std::string& out_dir);

}  // namespace homogen
