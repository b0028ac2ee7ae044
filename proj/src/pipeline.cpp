#include "tonalseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tonalseg/parallel.hpp"
#include "tonalseg/random.hpp"

namespace tonalseg {

namespace fs = std::filesystem;

namespace {

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const Error& err) {
        return std::string(to_string(err.code())) + ": " + err.what();
    } catch (const std::exception& err) {
        return err.what();
    }
}

// Throws one BatchFailed listing every failed id, in manifest order.
void raise_batch_errors(const Manifest& selection, const std::vector<std::exception_ptr>& errors,
                        std::string_view stage) {
    std::ostringstream msg;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        msg << "\n  " << selection.entries()[i].image_id << ": " << describe(errors[i]);
        ++failed;
    }
    if (failed > 0) {
        throw Error(ErrorCode::BatchFailed, std::string(stage) + " failed for " +
                                                std::to_string(failed) + " image(s):" + msg.str());
    }
}

}  // namespace

void SplitSpec::validate() const {
    const bool in_range = train_fraction >= 0.0 && val_fraction >= 0.0 && test_fraction >= 0.0;
    if (!in_range || std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "split fractions must be non-negative and sum to 1");
    }
}

SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    // The 1e-9 nudge keeps products such as 0.7 * 10 from landing just below an integer.
    const auto nd = static_cast<double>(n);
    const auto train = static_cast<std::size_t>(std::floor(spec.train_fraction * nd + 1e-9));
    const auto val = std::min(n - train,
                              static_cast<std::size_t>(std::floor(spec.val_fraction * nd + 0.5 + 1e-9)));
    return {train, val, n - train - val};
}

Manifest split_manifest(const Manifest& m, const SplitSpec& spec) {
    if (m.size() < 3) {
        throw Error(ErrorCode::TooFewEntries,
                    "need at least 3 entries to split, got " + std::to_string(m.size()));
    }
    if (m.count(SplitTag::Unassigned) != m.size()) {
        throw Error(ErrorCode::InvalidArgument, "manifest is already split");
    }
    const SplitCounts counts = split_counts(m.size(), spec);
    const std::vector<std::size_t> order = seeded_permutation(m.size(), spec.seed);

    std::vector<ManifestEntry> entries = m.entries();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        SplitTag tag = SplitTag::Test;
        if (rank < counts.train) {
            tag = SplitTag::Train;
        } else if (rank < counts.train + counts.val) {
            tag = SplitTag::Val;
        }
        entries[order[rank]].split = tag;
    }
    return Manifest(std::move(entries));
}

ReferenceHistogram build_reference(const Manifest& m, std::string created, unsigned jobs) {
    const Manifest train = m.select(SplitTag::Train);
    if (train.empty()) throw Error(ErrorCode::EmptySplit, "manifest has no train entries");

    std::vector<Histogram> hists(train.size());
    const auto errors = parallel_for(train.size(), jobs, [&](std::size_t i) {
        hists[i] = compute_histogram(load_gray(train.entries()[i].image_path));
    });
    rethrow_first(errors);
    return average_reference(hists, std::move(created));
}

std::vector<fs::path> match_batch(const Manifest& selection, const ReferenceHistogram& ref,
                                  const fs::path& out_dir, unsigned jobs) {
    if (selection.empty()) return {};
    ensure_directory(out_dir);
    std::vector<fs::path> written(selection.size());
    const auto errors = parallel_for(selection.size(), jobs, [&](std::size_t i) {
        const ManifestEntry& e = selection.entries()[i];
        const fs::path dest = out_dir / (e.image_id + ".png");
        save_gray(specify(load_gray(e.image_path), ref), dest);
        written[i] = dest;
    });
    raise_batch_errors(selection, errors, "match");
    return written;
}

std::vector<fs::path> predict_batch(const Manifest& selection, const SegmenterConfig& cfg,
                                    const fs::path& out_dir, unsigned jobs) {
    cfg.validate();
    if (selection.empty()) return {};
    ensure_directory(out_dir);
    std::vector<fs::path> written(selection.size());
    const auto errors = parallel_for(selection.size(), jobs, [&](std::size_t i) {
        const ManifestEntry& e = selection.entries()[i];
        const fs::path dest = prediction_path(out_dir, e.image_id);
        save_mask(predict(load_gray(e.image_path), cfg), dest);
        written[i] = dest;
    });
    raise_batch_errors(selection, errors, "predict");
    return written;
}

EvalReport evaluate_predictions(const Manifest& selection,
                                const std::map<std::string, BinaryMask>& predictions,
                                unsigned jobs) {
    if (selection.empty()) throw Error(ErrorCode::EmptySplit, "no entries selected for evaluation");
    std::vector<ImageRecord> records(selection.size());
    const auto errors = parallel_for(selection.size(), jobs, [&](std::size_t i) {
        const ManifestEntry& e = selection.entries()[i];
        const auto it = predictions.find(e.image_id);
        if (it == predictions.end()) {
            throw Error(ErrorCode::MissingPrediction, "no prediction for '" + e.image_id + "'");
        }
        if (!e.mask_path) {
            throw Error(ErrorCode::MissingMask, "no ground-truth mask for '" + e.image_id + "'");
        }
        const BinaryMask gt = load_mask(*e.mask_path);
        if (gt.size() != it->second.size()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "prediction for '" + e.image_id + "' is " + to_string(it->second.size()) +
                            " but its mask is " + to_string(gt.size()));
        }
        const PairScore s = evaluate_pair(it->second, gt);
        records[i] = ImageRecord{e.image_id, s.dice, s.iou, s.counts};
    });
    rethrow_first(errors);
    return make_report(std::move(records));
}

EvalReport evaluate_run(const RunConfig& cfg) {
    const Manifest selection = cfg.selection.apply(load_manifest(cfg.manifest_path));
    if (selection.empty()) throw Error(ErrorCode::EmptySplit, "no entries selected for evaluation");
    for (const auto& e : selection.entries()) {
        if (!e.mask_path) {
            throw Error(ErrorCode::MissingMask, "no ground-truth mask for '" + e.image_id + "'");
        }
    }

    std::map<std::string, BinaryMask> predictions;
    if (cfg.prediction_dir) {
        predictions = load_external_predictions(*cfg.prediction_dir, selection);
    } else {
        SegmenterConfig seg = cfg.segmenter;
        if (cfg.reference_path) seg.reference = load_reference(*cfg.reference_path);
        seg.validate();
        std::vector<std::optional<BinaryMask>> masks(selection.size());
        const auto errors = parallel_for(selection.size(), cfg.jobs, [&](std::size_t i) {
            masks[i] = predict(load_gray(selection.entries()[i].image_path), seg);
        });
        rethrow_first(errors);
        for (std::size_t i = 0; i < masks.size(); ++i) {
            predictions.emplace(selection.entries()[i].image_id, std::move(*masks[i]));
        }
    }

    EvalReport report = evaluate_predictions(selection, predictions, cfg.jobs);

    ensure_directory(cfg.output_dir);
    if (cfg.report_format != ReportFormat::Table) {
        write_text(cfg.output_dir / "report.json", report_to_json(report));
    }
    if (cfg.report_format != ReportFormat::Json) {
        write_text(cfg.output_dir / "report.txt",
                   format_table(report, "evaluation: " + cfg.manifest_path.filename().string()));
    }
    return report;
}

void SynthConfig::validate() const {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "synthetic count must be at least 1");
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
    if (noise < 0 || noise > 255) throw Error(ErrorCode::InvalidArgument, "noise must lie in [0,255]");
    if (width < 8 || height < 8) throw Error(ErrorCode::InvalidArgument, "synthetic images need at least 8x8 pixels");
    const auto level_ok = [](int v) { return v >= 0 && v <= 255; };
    if (!level_ok(foreground_level) || !level_ok(background_level)) {
        throw Error(ErrorCode::InvalidArgument, "levels must lie in [0,255]");
    }
}

LevelMap gamma_shift_map(double gamma) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
    std::array<std::uint8_t, kLevels> table{};
    for (std::size_t v = 0; v < kLevels; ++v) {
        const double shifted = 255.0 * std::pow(static_cast<double>(v) / 255.0, gamma);
        table[v] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(shifted), 0, 255));
    }
    return LevelMap(table);
}

Manifest synth_dataset(const fs::path& out_dir, const SynthConfig& cfg) {
    cfg.validate();
    const fs::path image_dir = out_dir / "images";
    const fs::path mask_dir = out_dir / "masks";
    ensure_directory(image_dir);
    ensure_directory(mask_dir);

    const LevelMap shift = gamma_shift_map(cfg.gamma);
    const int w = cfg.width;
    const int h = cfg.height;
    const std::size_t digits = std::max<std::size_t>(4, std::to_string(cfg.count - 1).size());
    SeededRng rng(cfg.seed);

    std::vector<ManifestEntry> entries;
    for (std::size_t k = 0; k < cfg.count; ++k) {
        // Ellipse center jitters by 10% of the frame, semi-axes by 5%.
        const double cx = w * (0.5 + rng.uniform(-0.1, 0.1));
        const double cy = h * (0.5 + rng.uniform(-0.1, 0.1));
        const double ax = w * 0.28 * (1.0 + rng.uniform(-0.05, 0.05));
        const double ay = h * 0.18 * (1.0 + rng.uniform(-0.05, 0.05));
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double ca = std::cos(angle);
        const double sa = std::sin(angle);

        std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
        std::vector<std::uint8_t> labels(pixels.size());
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dx = x + 0.5 - cx;
                const double dy = y + 0.5 - cy;
                const double u = (dx * ca + dy * sa) / ax;
                const double v = (-dx * sa + dy * ca) / ay;
                const bool inside = u * u + v * v <= 1.0;
                int level = inside ? cfg.foreground_level : cfg.background_level;
                if (cfg.noise > 0) {
                    level += static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(cfg.noise) + 1)) -
                             cfg.noise;
                }
                const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                      static_cast<std::size_t>(x);
                pixels[i] = shift[static_cast<std::size_t>(std::clamp(level, 0, 255))];
                labels[i] = inside ? 1 : 0;
            }
        }

        std::string index = std::to_string(k);
        index.insert(0, digits - index.size(), '0');
        ManifestEntry e;
        e.image_id = cfg.id_prefix + "_" + index;
        e.image_path = image_dir / (e.image_id + ".png");
        e.mask_path = mask_dir / (e.image_id + ".png");
        e.split = cfg.tag;
        save_gray(GrayImage(w, h, std::move(pixels)), e.image_path);
        save_mask(BinaryMask(w, h, std::move(labels)), *e.mask_path);
        entries.push_back(std::move(e));
    }

    Manifest manifest(std::move(entries));
    save_manifest(manifest, out_dir / "manifest.tsv");
    return manifest;
}

}  // namespace tonalseg
