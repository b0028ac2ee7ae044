#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tonalseg/evaluation.hpp"
#include "tonalseg/histogram.hpp"
#include "tonalseg/manifest.hpp"
#include "tonalseg/segmenter.hpp"

namespace tonalseg {

struct SplitSpec {
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    bool operator==(const SplitCounts&) const = default;
};

/// train = floor(f_train n), val = round-half-up(f_val n), test = rest.
SplitCounts split_counts(std::size_t n, const SplitSpec& spec);

/// Tags entries train/val/test in seeded_permutation order. Entry order is
/// preserved. Requires every entry unassigned; throws TooFewEntries for n < 3.
Manifest split_manifest(const Manifest& m, const SplitSpec& spec);

/// Averaged reference over the train-tagged entries. Throws EmptySplit.
ReferenceHistogram build_reference(const Manifest& m, std::string created = {}, unsigned jobs = 1);

/// Writes specify(image, ref) as <out_dir>/<image_id>.png for every entry
/// and returns the written paths in manifest order. Per-file failures are
/// collected into one BatchFailed error listing the ids.
std::vector<std::filesystem::path> match_batch(const Manifest& selection,
                                               const ReferenceHistogram& ref,
                                               const std::filesystem::path& out_dir,
                                               unsigned jobs = 1);

/// Baseline segmenter over every entry, masks written as <out_dir>/<id>.png.
std::vector<std::filesystem::path> predict_batch(const Manifest& selection,
                                                 const SegmenterConfig& cfg,
                                                 const std::filesystem::path& out_dir,
                                                 unsigned jobs = 1);

enum class ReportFormat { Json, Table, Both };

struct RunConfig {
    std::filesystem::path manifest_path;
    std::optional<std::filesystem::path> reference_path;
    SegmenterConfig segmenter;
    /// When set, masks are read from here instead of running the baseline.
    std::optional<std::filesystem::path> prediction_dir;
    std::filesystem::path output_dir;
    ReportFormat report_format = ReportFormat::Both;
    Selection selection{SplitTag::Test};
    unsigned jobs = 1;
};

/// Scores predictions against ground truth for the selected entries and
/// writes report.json / report.txt under output_dir.
EvalReport evaluate_run(const RunConfig& cfg);

/// Scores an already-loaded set of predictions; rows sorted by id.
EvalReport evaluate_predictions(const Manifest& selection,
                                const std::map<std::string, BinaryMask>& predictions,
                                unsigned jobs = 1);

struct SynthConfig {
    std::size_t count = 1;
    double gamma = 1.0;
    int noise = 40;  ///< additive noise is uniform on [-noise, +noise]
    std::uint64_t seed = 0;
    int width = 128;
    int height = 128;
    int foreground_level = 180;
    int background_level = 40;
    std::string id_prefix = "img";
    SplitTag tag = SplitTag::Unassigned;

    void validate() const;
};

/// Gray-level shift v -> round(255 (v/255)^gamma) as a lookup table.
LevelMap gamma_shift_map(double gamma);

/// Writes images/<id>.png, masks/<id>.png and manifest.tsv under out_dir.
/// Each image holds one bright ellipse on a darker background with
/// clamped additive noise, then the gamma shift. The geometry and noise
/// depend only on the seed, so two sets that differ only in gamma are
/// pixel-aligned.
Manifest synth_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg);

}  // namespace tonalseg
