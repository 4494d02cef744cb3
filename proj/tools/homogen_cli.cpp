// Command-line front end: synthetic corpus generation, dataset generation,
// the full iterative pipeline, evaluation, and sample inspection.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "homogen/io.hpp"
#include "homogen/pipeline.hpp"
#include "homogen/warp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace homogen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

struct GlobalOpts {
    bool json_output = false;
    bool quiet = false;
};

void emit(const GlobalOpts& opts, const json& payload, const std::string& text) {
    if (opts.json_output)
        std::cout << payload.dump(2) << "\n";
    else if (!opts.quiet)
        std::cout << text;
}

GenConfig load_config(const std::string& path_flag) {
    std::string path = path_flag;
    if (path.empty()) {
        if (const char* env = std::getenv("HOMOGEN_CONFIG")) path = env;
    }
    if (path.empty()) return GenConfig{};
    return GenConfig::load(path);
}

json report_json(const IterationReport& r) { return json::parse(r.to_json()); }

int cmd_synth(const GlobalOpts& opts, int count, std::uint64_t seed, int width, int height,
              const std::string& out) {
    SynthSpec spec;
    spec.width = width;
    spec.height = height;
    const auto scenes = synth_corpus(spec, count, seed);
    save_corpus(scenes, out);
    emit(opts, {{"command", "synth"}, {"count", count}, {"seed", seed}, {"out", out}},
         "wrote " + std::to_string(count) + " synthetic pairs to " + out + "\n");
    return kExitOk;
}

int cmd_generate(const GlobalOpts& opts, const std::string& config_path,
                 const std::string& corpus_dir, const std::string& out, bool no_ccm, bool no_qam,
                 int threads, bool save_masks) {
    GenConfig cfg = load_config(config_path);
    if (no_ccm) cfg.use_ccm = false;
    if (no_qam) cfg.use_qam = false;
    if (threads > 0) cfg.threads = threads;
    cfg.save_masks = save_masks || cfg.save_masks;
    cfg.iterations = 1;

    const auto corpus = load_test_set(corpus_dir);
    const PipelineResult result = run(cfg, corpus, {}, out);
    emit(opts,
         {{"command", "generate"}, {"out", out}, {"report", report_json(result.reports.front())}},
         "generated " + std::to_string(result.reports.front().generated) + " samples (" +
             std::to_string(result.reports.front().accepted) + " accepted) under " + out + "\n");
    return kExitOk;
}

int cmd_run(const GlobalOpts& opts, const std::string& config_path, const std::string& corpus_dir,
            const std::string& eval_dir, const std::string& out, int threads) {
    GenConfig cfg = load_config(config_path);
    if (threads > 0) cfg.threads = threads;
    const auto corpus = load_test_set(corpus_dir);
    std::vector<TestPair> eval_set;
    if (!eval_dir.empty()) eval_set = load_test_set(eval_dir);

    const PipelineResult result = run(cfg, corpus, eval_set, out);
    json reports = json::array();
    std::string text;
    for (const auto& r : result.reports) {
        reports.push_back(report_json(r));
        text += "iteration " + std::to_string(r.iteration) + ": generated " +
                std::to_string(r.generated) + ", accepted " + std::to_string(r.accepted) +
                ", pme " + std::to_string(r.pme) + "\n";
    }
    emit(opts, {{"command", "run"}, {"out", out}, {"reports", reports}}, text);
    return kExitOk;
}

int cmd_eval(const GlobalOpts& opts, const std::string& model_path, const std::string& testset_dir,
             const std::string& out, bool identity_baseline) {
    const auto pairs = load_test_set(testset_dir);

    std::function<Homography(const ImageBuf&, const ImageBuf&)> estimate_st;
    if (identity_baseline) {
        estimate_st = [](const ImageBuf&, const ImageBuf&) { return Homography{}; };
    } else {
        if (model_path.empty()) throw ConfigError("eval needs --model or --identity");
        std::ifstream in(model_path);
        if (!in) throw IoError("cannot read model: " + model_path);
        std::stringstream buf;
        buf << in.rdbuf();
        const RegressorModel model = RegressorModel::from_json(buf.str());
        estimate_st = [model](const ImageBuf& a, const ImageBuf& b) {
            return invert(estimate(model, a, b));
        };
    }

    const EvalReport report = evaluate_pairs(estimate_st, pairs);
    if (!out.empty()) {
        fs::create_directories(out);
        write_eval_csv(report, (fs::path(out) / "report.csv").string());
        write_curve_svg(report.curve, (fs::path(out) / "curve.svg").string());
    }

    json by_category;
    for (const auto& [cat, v] : report.category_pme) by_category[cat] = v;
    std::string text = "pme " + std::to_string(report.overall_pme) + " over " +
                       std::to_string(report.per_pair.size()) + " pairs";
    if (report.excluded_points > 0)
        text += " (warning: " + std::to_string(report.excluded_points) +
                " points mapped to infinity and were excluded)";
    emit(opts,
         {{"command", "eval"},
          {"pme", report.overall_pme},
          {"pairs", report.per_pair.size()},
          {"excluded_points", report.excluded_points},
          {"category_pme", by_category}},
         text + "\n");
    return kExitOk;
}

int cmd_inspect(const GlobalOpts& opts, const std::string& sample_dir,
                const std::string& quality_path) {
    const ImageBuf i_s = load_image((fs::path(sample_dir) / "source.png").string());
    const ImageBuf i_t_prime = load_image((fs::path(sample_dir) / "target.png").string());
    std::ifstream meta_in(fs::path(sample_dir) / "meta.json");
    if (!meta_in) throw IoError("missing meta.json in " + sample_dir);
    json meta;
    meta_in >> meta;
    std::array<double, 9> m;
    for (int i = 0; i < 9; ++i) m[i] = meta.at("h_gt").at(i).get<double>();
    const Homography h_gt = normalize(Homography::from_row_major(m));

    // Alignment residual of the stored label over the valid warp area.
    const WarpResult plane = warp(i_s, h_gt);
    double residual = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < i_s.height; ++y) {
        for (int x = 0; x < i_s.width; ++x) {
            if (plane.validity.at(x, y) <= 0.99f) continue;
            for (int c = 0; c < i_s.channels; ++c)
                residual += std::abs(plane.image.at(x, y, c) - i_t_prime.at(x, y, c));
            ++n;
        }
    }
    residual = n ? residual / (static_cast<double>(n) * i_s.channels) : 0.0;

    // Seam energy along the dominant/non-dominant boundary of this sample.
    const MaskPair masks = estimate_masks(i_s, i_t_prime, invert(h_gt));
    const PlaneMask band = fusion_band(warp_mask(masks.m_s, h_gt));
    double seam = 0.0;
    try {
        seam = seam_energy(to_grayscale(i_t_prime), band);
    } catch (const EmptyBand&) {
        seam = 0.0;
    }

    double quality = meta.value("quality_score", -1.0);
    if (!quality_path.empty()) {
        std::ifstream in(quality_path);
        if (!in) throw IoError("cannot read quality model: " + quality_path);
        std::stringstream buf;
        buf << in.rdbuf();
        const QualityModel model = QualityModel::from_json(buf.str());
        quality = qam_score(model, i_t_prime, plane.image, model.tau, &plane.validity).value;
    }

    emit(opts,
         {{"command", "inspect"},
          {"sample", sample_dir},
          {"label_residual", residual},
          {"seam_energy", seam},
          {"quality_score", quality},
          {"accepted", meta.value("accepted", false)}},
         "label residual " + std::to_string(residual) + "\nseam energy " + std::to_string(seam) +
             "\nquality score " + std::to_string(quality) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Realistic dataset generation for supervised homography learning"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_flag("--json", opts.json_output, "machine-readable JSON output");
    app.add_flag("--quiet", opts.quiet, "suppress non-essential output");

    auto* synth = app.add_subcommand("synth", "emit a synthetic corpus with ground truth");
    int synth_count = 50, synth_w = 160, synth_h = 160;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--count", synth_count, "number of pairs");
    synth->add_option("--seed", synth_seed, "master seed");
    synth->add_option("--width", synth_w, "image width");
    synth->add_option("--height", synth_h, "image height");
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* generate = app.add_subcommand("generate", "run the generation phase only");
    std::string gen_config, gen_corpus, gen_out;
    bool no_ccm = false, no_qam = false, gen_masks = false;
    int gen_threads = 0;
    generate->add_option("--config", gen_config, "config JSON (default: $HOMOGEN_CONFIG)");
    generate->add_option("--corpus", gen_corpus, "input pair directory")->required();
    generate->add_option("--out", gen_out, "output directory")->required();
    generate->add_flag("--no-ccm", no_ccm, "disable content-consistency refinement");
    generate->add_flag("--no-qam", no_qam, "disable quality filtering");
    generate->add_flag("--save-masks", gen_masks, "persist estimated dominant-plane masks");
    generate->add_option("--threads", gen_threads, "generation thread count");

    auto* run_cmd = app.add_subcommand("run", "full iterative generate/train loop");
    std::string run_config, run_corpus, run_eval, run_out;
    int run_threads = 0;
    run_cmd->add_option("--config", run_config, "config JSON (default: $HOMOGEN_CONFIG)");
    run_cmd->add_option("--corpus", run_corpus, "input pair directory")->required();
    run_cmd->add_option("--eval", run_eval, "held-out labeled test set");
    run_cmd->add_option("--out", run_out, "output directory")->required();
    run_cmd->add_option("--threads", run_threads, "generation thread count");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a labeled test set");
    std::string eval_model, eval_testset, eval_out;
    bool eval_identity = false;
    eval_cmd->add_option("--model", eval_model, "regressor model JSON");
    eval_cmd->add_flag("--identity", eval_identity, "score the no-warping identity baseline");
    eval_cmd->add_option("--testset", eval_testset, "labeled test set directory")->required();
    eval_cmd->add_option("--out", eval_out, "write report.csv and curve.svg here");

    auto* inspect = app.add_subcommand("inspect", "print diagnostics for one dataset sample");
    std::string inspect_sample, inspect_quality;
    inspect->add_option("--sample", inspect_sample, "sample directory (shard/NNNN)")->required();
    inspect->add_option("--quality", inspect_quality, "quality model JSON for re-scoring");

    try {
        app.parse(argc, argv);
        if (synth->parsed())
            return cmd_synth(opts, synth_count, synth_seed, synth_w, synth_h, synth_out);
        if (generate->parsed())
            return cmd_generate(opts, gen_config, gen_corpus, gen_out, no_ccm, no_qam,
                                gen_threads, gen_masks);
        if (run_cmd->parsed())
            return cmd_run(opts, run_config, run_corpus, run_eval, run_out, run_threads);
        if (eval_cmd->parsed())
            return cmd_eval(opts, eval_model, eval_testset, eval_out, eval_identity);
        if (inspect->parsed()) return cmd_inspect(opts, inspect_sample, inspect_quality);
        return kExitUser;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUser;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const EmptyDataset& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const InsufficientData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
