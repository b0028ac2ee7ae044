#include "tonalseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace tonalseg {

namespace {

void require_same_size(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.size() != gt.size()) {
        throw Error(ErrorCode::DimensionMismatch, "prediction is " + to_string(pred.size()) +
                                                      " but ground truth is " + to_string(gt.size()));
    }
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string cell(const MeanCI& m) { return fixed3(m.mean) + " ± " + fixed3(m.half_width); }

}  // namespace

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_size(pred, gt);
    ConfusionCounts c;
    const auto p = pred.labels();
    const auto g = gt.labels();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i]) {
            if (g[i]) ++c.tp; else ++c.fp;
        } else {
            if (g[i]) ++c.fn; else ++c.tn;
        }
    }
    return c;
}

double dice(const ConfusionCounts& c) noexcept {
    const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double iou(const ConfusionCounts& c) noexcept {
    const std::uint64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

MeanCI aggregate(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyList, "cannot aggregate an empty list");
    const auto n = values.size();
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    if (n == 1) return {mean, 0.0, 1};

    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return {mean, 1.96 * sd / std::sqrt(static_cast<double>(n)), n};
}

RgbImage render_overlay(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_size(pred, gt);
    std::vector<Rgb> pixels(pred.pixel_count());
    const auto p = pred.labels();
    const auto g = gt.labels();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (p[i]) {
            pixels[i] = g[i] ? kColorTP : kColorFP;
        } else {
            pixels[i] = g[i] ? kColorFN : kColorTN;
        }
    }
    return RgbImage(pred.width(), pred.height(), std::move(pixels));
}

PairScore evaluate_pair(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts c = confusion(pred, gt);
    return {dice(c), iou(c), c};
}

EvalReport make_report(std::vector<ImageRecord> records) {
    if (records.empty()) throw Error(ErrorCode::EmptyList, "no images to report");
    std::sort(records.begin(), records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });

    std::vector<double> dices;
    std::vector<double> ious;
    for (const auto& r : records) {
        dices.push_back(r.dice);
        ious.push_back(r.iou);
    }
    EvalReport report;
    report.dice = aggregate(dices);
    report.iou = aggregate(ious);
    report.records = std::move(records);
    return report;
}

std::string report_to_json(const EvalReport& report) {
    using nlohmann::json;
    json rows = json::array();
    for (const auto& r : report.records) {
        rows.push_back({{"image_id", r.image_id},
                        {"dice", r.dice},
                        {"iou", r.iou},
                        {"tp", r.counts.tp},
                        {"tn", r.counts.tn},
                        {"fp", r.counts.fp},
                        {"fn", r.counts.fn}});
    }
    auto block = [](const MeanCI& m) {
        return json{{"mean", m.mean}, {"half_width", m.half_width}, {"n", m.n}};
    };
    json doc;
    doc["images"] = std::move(rows);
    doc["aggregate"] = {{"dice", block(report.dice)},
                        {"iou", block(report.iou)},
                        {"ci", "95% normal approximation over per-image scores"}};
    return doc.dump(2) + "\n";
}

std::string format_table(const EvalReport& report, const std::string& title) {
    std::ostringstream out;
    char line[160];
    out << title << "\n";
    std::snprintf(line, sizeof line, "%-24s %8s %8s %10s %10s %10s %10s\n", "image_id", "dice",
                  "iou", "tp", "tn", "fp", "fn");
    out << line;
    for (const auto& r : report.records) {
        std::snprintf(line, sizeof line, "%-24s %8.3f %8.3f %10llu %10llu %10llu %10llu\n",
                      r.image_id.c_str(), r.dice, r.iou,
                      static_cast<unsigned long long>(r.counts.tp),
                      static_cast<unsigned long long>(r.counts.tn),
                      static_cast<unsigned long long>(r.counts.fp),
                      static_cast<unsigned long long>(r.counts.fn));
        out << line;
    }
    out << "\n";
    std::snprintf(line, sizeof line, "%-8s %-18s %-18s\n", "n", "mDice", "mIoU");
    out << line;
    std::snprintf(line, sizeof line, "%-8zu ", report.dice.n);
    out << line << cell(report.dice) << "      " << cell(report.iou) << "\n";
    out << "(95% CI over per-image scores, 1.96 s/sqrt(n))\n";
    return out.str();
}

}  // namespace tonalseg
