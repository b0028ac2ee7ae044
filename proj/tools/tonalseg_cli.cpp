// Command-line front end for the tonalseg library.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tonalseg/evaluation.hpp"
#include "tonalseg/histogram.hpp"
#include "tonalseg/imaging.hpp"
#include "tonalseg/losses.hpp"
#include "tonalseg/manifest.hpp"
#include "tonalseg/pipeline.hpp"
#include "tonalseg/segmenter.hpp"

namespace fs = std::filesystem;
using namespace tonalseg;

namespace {

struct SegmenterFlags {
    std::string threshold = "otsu";
    std::size_t min_size = 0;
    std::size_t keep_largest = 0;
    std::string ref;
    bool apply_spec = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--threshold", threshold, "'otsu' or a fixed level 0..255");
        cmd->add_option("--min-size", min_size, "drop foreground components smaller than this");
        cmd->add_option("--keep-largest", keep_largest, "keep only the k largest components (0 = all)");
        cmd->add_option("--ref", ref, "reference histogram file");
        cmd->add_flag("--apply-spec", apply_spec, "histogram-specify each image before thresholding");
    }

    SegmenterConfig build() const {
        SegmenterConfig cfg;
        cfg.threshold = parse_threshold_mode(threshold);
        cfg.min_component_size = min_size;
        if (keep_largest > 0) cfg.keep_largest_k = keep_largest;
        cfg.apply_specification = apply_spec;
        if (!ref.empty()) cfg.reference = load_reference(ref);
        cfg.validate();
        return cfg;
    }
};

SplitSpec parse_fractions(const std::string& text, std::uint64_t seed) {
    std::vector<double> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad fraction '" + item + "'");
        }
    }
    if (parts.size() != 3) {
        throw Error(ErrorCode::InvalidArgument, "--fractions needs three comma-separated values");
    }
    SplitSpec spec{parts[0], parts[1], parts[2], seed};
    spec.validate();
    return spec;
}

std::vector<fs::path> png_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tonalseg: histogram specification and segmentation scoring"};
    app.require_subcommand(1);
    unsigned jobs = 1;
    app.add_option("-j,--jobs", jobs, "worker threads for batch stages")->check(CLI::PositiveNumber);

    // split
    auto* split_cmd = app.add_subcommand("split", "tag manifest entries train/val/test");
    std::string split_manifest_path, split_out, fractions = "0.7,0.1,0.2";
    std::uint64_t split_seed = 0;
    split_cmd->add_option("manifest", split_manifest_path)->required();
    split_cmd->add_option("--seed", split_seed);
    split_cmd->add_option("--fractions", fractions, "train,val,test");
    split_cmd->add_option("--out", split_out, "output manifest (default: overwrite input)");

    // build-ref
    auto* ref_cmd = app.add_subcommand("build-ref", "average the train-split histograms");
    std::string ref_manifest, ref_out, ref_created;
    ref_cmd->add_option("manifest", ref_manifest)->required();
    ref_cmd->add_option("--out", ref_out)->required();
    ref_cmd->add_option("--created", ref_created, "timestamp to record (default: now, UTC)");

    // match
    auto* match_cmd = app.add_subcommand("match", "histogram-specify images against a reference");
    std::string match_manifest, match_ref, match_out, match_split = "test";
    match_cmd->add_option("manifest", match_manifest)->required();
    match_cmd->add_option("--ref", match_ref)->required();
    match_cmd->add_option("--out-dir", match_out)->required();
    match_cmd->add_option("--split", match_split, "train|val|test|unassigned|all");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "run the baseline segmenter");
    std::string predict_manifest, predict_out, predict_split = "test";
    SegmenterFlags predict_flags;
    predict_cmd->add_option("manifest", predict_manifest)->required();
    predict_cmd->add_option("--out-dir", predict_out)->required();
    predict_cmd->add_option("--split", predict_split);
    predict_flags.attach(predict_cmd);

    // calibrate
    auto* calib_cmd = app.add_subcommand("calibrate", "fixed threshold with the best mean Dice");
    std::string calib_manifest, calib_split = "train";
    calib_cmd->add_option("manifest", calib_manifest)->required();
    calib_cmd->add_option("--split", calib_split);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against ground truth");
    std::string eval_manifest, eval_pred_dir, eval_report, eval_split = "test", eval_format = "both";
    SegmenterFlags eval_flags;
    eval_cmd->add_option("manifest", eval_manifest)->required();
    eval_cmd->add_option("--pred-dir", eval_pred_dir, "external masks named <image_id>.png");
    eval_cmd->add_option("--report", eval_report, "output directory for report.json / report.txt")
        ->required();
    eval_cmd->add_option("--split", eval_split);
    eval_cmd->add_option("--format", eval_format, "json|table|both");
    eval_flags.attach(eval_cmd);

    // overlay
    auto* overlay_cmd = app.add_subcommand("overlay", "render a TP/TN/FP/FN overlay");
    std::string overlay_pred, overlay_gt, overlay_out;
    overlay_cmd->add_option("pred", overlay_pred)->required();
    overlay_cmd->add_option("gt", overlay_gt)->required();
    overlay_cmd->add_option("--out", overlay_out)->required();

    // drift
    auto* drift_cmd = app.add_subcommand("drift", "total variation distance to the reference");
    std::string drift_target, drift_ref;
    drift_cmd->add_option("target", drift_target, "image file or directory of PNGs")->required();
    drift_cmd->add_option("--ref", drift_ref)->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic shifted dataset");
    SynthConfig synth;
    std::string synth_out, synth_tag = "unassigned";
    int synth_size = synth.width;
    synth_cmd->add_option("--count", synth.count);
    synth_cmd->add_option("--gamma", synth.gamma);
    synth_cmd->add_option("--noise", synth.noise);
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--size", synth_size, "square image side in pixels");
    synth_cmd->add_option("--fg", synth.foreground_level);
    synth_cmd->add_option("--bg", synth.background_level);
    synth_cmd->add_option("--prefix", synth.id_prefix);
    synth_cmd->add_option("--tag", synth_tag, "split tag written into the manifest");
    synth_cmd->add_option("--out-dir", synth_out)->required();

    // loss-check
    auto* loss_cmd = app.add_subcommand("loss-check", "loss value and gradient check");
    std::string loss_pred, loss_mask, loss_kind = "bce-iou";
    LossConfig loss_cfg;
    double loss_h = 1e-5;
    loss_cmd->add_option("pred", loss_pred, "probability map PNG (level/255)")->required();
    loss_cmd->add_option("mask", loss_mask)->required();
    loss_cmd->add_option("--loss", loss_kind, "bce|dice|iou|bce-iou");
    loss_cmd->add_option("--smooth", loss_cfg.epsilon_smooth);
    loss_cmd->add_option("--clamp", loss_cfg.epsilon_clamp);
    loss_cmd->add_option("--w-bce", loss_cfg.w_bce);
    loss_cmd->add_option("--w-iou", loss_cfg.w_iou);
    loss_cmd->add_option("--step", loss_h, "finite-difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*split_cmd) {
            const Manifest m = load_manifest(split_manifest_path);
            const Manifest out = split_manifest(m, parse_fractions(fractions, split_seed));
            save_manifest(out, split_out.empty() ? split_manifest_path : split_out);
            std::printf("train %zu  val %zu  test %zu\n", out.count(SplitTag::Train),
                        out.count(SplitTag::Val), out.count(SplitTag::Test));
        } else if (*ref_cmd) {
            const ReferenceHistogram ref = build_reference(
                load_manifest(ref_manifest), ref_created.empty() ? utc_timestamp() : ref_created, jobs);
            save_reference(ref, ref_out);
            std::printf("reference from %zu images -> %s\n", ref.source_images, ref_out.c_str());
        } else if (*match_cmd) {
            const Manifest sel = Selection::parse(match_split).apply(load_manifest(match_manifest));
            const auto written = match_batch(sel, load_reference(match_ref), match_out, jobs);
            for (const auto& p : written) std::printf("%s\n", p.c_str());
        } else if (*predict_cmd) {
            const Manifest sel = Selection::parse(predict_split).apply(load_manifest(predict_manifest));
            const auto written = predict_batch(sel, predict_flags.build(), predict_out, jobs);
            for (const auto& p : written) std::printf("%s\n", p.c_str());
        } else if (*calib_cmd) {
            const Manifest sel = Selection::parse(calib_split).apply(load_manifest(calib_manifest));
            std::vector<GrayImage> images;
            std::vector<BinaryMask> masks;
            for (const auto& e : sel.entries()) {
                if (!e.mask_path) throw Error(ErrorCode::MissingMask, "no mask for '" + e.image_id + "'");
                images.push_back(load_gray(e.image_path));
                masks.push_back(load_mask(*e.mask_path));
            }
            std::printf("%d\n", calibrate_threshold(images, masks));
        } else if (*eval_cmd) {
            RunConfig cfg;
            cfg.manifest_path = eval_manifest;
            cfg.output_dir = eval_report;
            cfg.selection = Selection::parse(eval_split);
            cfg.jobs = jobs;
            if (eval_format == "json") {
                cfg.report_format = ReportFormat::Json;
            } else if (eval_format == "table") {
                cfg.report_format = ReportFormat::Table;
            } else if (eval_format != "both") {
                throw Error(ErrorCode::InvalidArgument, "--format must be json, table or both");
            }
            if (!eval_pred_dir.empty()) {
                cfg.prediction_dir = eval_pred_dir;
            } else {
                cfg.segmenter = eval_flags.build();
            }
            const EvalReport report = evaluate_run(cfg);
            std::cout << format_table(report, "evaluation: " + eval_manifest);
        } else if (*overlay_cmd) {
            save_rgb(render_overlay(load_mask(overlay_pred), load_mask(overlay_gt)), overlay_out);
            const ConfusionCounts c = confusion(load_mask(overlay_pred), load_mask(overlay_gt));
            std::printf("tp %llu  tn %llu  fp %llu  fn %llu\n", static_cast<unsigned long long>(c.tp),
                        static_cast<unsigned long long>(c.tn), static_cast<unsigned long long>(c.fp),
                        static_cast<unsigned long long>(c.fn));
        } else if (*drift_cmd) {
            const ReferenceHistogram ref = load_reference(drift_ref);
            const std::vector<fs::path> targets =
                fs::is_directory(drift_target) ? png_files(drift_target)
                                               : std::vector<fs::path>{drift_target};
            for (const auto& p : targets) {
                const double d = drift_score(to_pmf(compute_histogram(load_gray(p))), ref.pmf);
                std::printf("%s\t%.6f\n", p.filename().c_str(), d);
            }
        } else if (*synth_cmd) {
            synth.width = synth.height = synth_size;
            synth.tag = parse_split_tag(synth_tag);
            const Manifest m = synth_dataset(synth_out, synth);
            std::printf("%zu images -> %s\n", m.size(), (fs::path(synth_out) / "manifest.tsv").c_str());
        } else if (*loss_cmd) {
            const LossKind kind = parse_loss_kind(loss_kind);
            const ProbMap pred = load_prob_map(loss_pred);
            const BinaryMask gt = load_mask(loss_mask);
            const LossValue v = compute_loss(kind, pred, gt, loss_cfg, Gradient::Skip);
            const GradientCheck check = check_gradient(kind, pred, gt, loss_cfg, loss_h);
            nlohmann::json out{{"loss", std::string(to_string(kind))},
                               {"value", v.value},
                               {"step", loss_h},
                               {"max_relative_error", check.max_relative_error},
                               {"max_absolute_error", check.max_absolute_error},
                               {"worst_pixel", check.worst_pixel}};
            std::cout << out.dump(2) << "\n";
        }
    } catch (const Error& e) {
        nlohmann::json line{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
        std::cerr << line.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json line{{"error", "Internal"}, {"message", e.what()}};
        std::cerr << line.dump() << "\n";
        return 1;
    }
    return 0;
}
