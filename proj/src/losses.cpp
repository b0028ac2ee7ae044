#include "tonalseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tonalseg {

namespace {

void require_same_size(const ProbMap& pred, const BinaryMask& gt) {
    if (pred.size() != gt.size()) {
        throw Error(ErrorCode::DimensionMismatch, "prediction is " + to_string(pred.size()) +
                                                      " but mask is " + to_string(gt.size()));
    }
}

struct SoftSums {
    double intersection = 0.0;  // sum p*y
    double pred = 0.0;          // sum p
    double truth = 0.0;         // sum y
};

SoftSums soft_sums(std::span<const double> p, std::span<const std::uint8_t> y) {
    SoftSums s;
    for (std::size_t i = 0; i < p.size(); ++i) {
        s.pred += p[i];
        if (y[i]) {
            s.truth += 1.0;
            s.intersection += p[i];
        }
    }
    return s;
}

LossValue bce_raw(std::span<const double> p, std::span<const std::uint8_t> y, double eps,
                  Gradient mode) {
    const auto n = static_cast<double>(p.size());
    LossValue out;
    if (mode == Gradient::Compute) out.gradient.emplace(p.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], eps, 1.0 - eps);
        sum -= y[i] ? std::log(q) : std::log1p(-q);
        if (out.gradient && p[i] > eps && p[i] < 1.0 - eps) {
            (*out.gradient)[i] = (q - y[i]) / (q * (1.0 - q)) / n;
        }
    }
    out.value = sum / n;
    return out;
}

LossValue dice_raw(std::span<const double> p, std::span<const std::uint8_t> y, double eps,
                   Gradient mode) {
    const SoftSums s = soft_sums(p, y);
    const double num = 2.0 * s.intersection + eps;
    const double den = s.pred + s.truth + eps;
    LossValue out;
    out.value = 1.0 - num / den;
    if (mode == Gradient::Compute) {
        // d num / d p_i = 2 y_i, d den / d p_i = 1
        out.gradient.emplace(p.size());
        const double den2 = den * den;
        for (std::size_t i = 0; i < p.size(); ++i) {
            (*out.gradient)[i] = -(2.0 * y[i] * den - num) / den2;
        }
    }
    return out;
}

LossValue iou_raw(std::span<const double> p, std::span<const std::uint8_t> y, double eps,
                  Gradient mode) {
    const SoftSums s = soft_sums(p, y);
    const double num = s.intersection + eps;
    const double den = s.pred + s.truth - s.intersection + eps;
    LossValue out;
    out.value = 1.0 - num / den;
    if (mode == Gradient::Compute) {
        // d num / d p_i = y_i, d den / d p_i = 1 - y_i
        out.gradient.emplace(p.size());
        const double den2 = den * den;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double yi = y[i];
            (*out.gradient)[i] = -(yi * den - num * (1.0 - yi)) / den2;
        }
    }
    return out;
}

LossValue compute_raw(LossKind kind, std::span<const double> p, std::span<const std::uint8_t> y,
                      const LossConfig& cfg, Gradient mode) {
    switch (kind) {
        case LossKind::Bce: return bce_raw(p, y, cfg.epsilon_clamp, mode);
        case LossKind::Dice: return dice_raw(p, y, cfg.epsilon_smooth, mode);
        case LossKind::Iou: return iou_raw(p, y, cfg.epsilon_smooth, mode);
        case LossKind::BceIou: {
            LossValue a = bce_raw(p, y, cfg.epsilon_clamp, mode);
            LossValue b = iou_raw(p, y, cfg.epsilon_smooth, mode);
            LossValue out;
            out.value = cfg.w_bce * a.value + cfg.w_iou * b.value;
            if (mode == Gradient::Compute) {
                out.gradient.emplace(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) {
                    (*out.gradient)[i] = cfg.w_bce * (*a.gradient)[i] + cfg.w_iou * (*b.gradient)[i];
                }
            }
            return out;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown loss kind");
}

}  // namespace

void LossConfig::validate() const {
    if (!(epsilon_smooth > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "epsilon_smooth must be positive");
    }
    if (!(epsilon_clamp > 0.0 && epsilon_clamp < 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "epsilon_clamp must lie in (0, 0.5)");
    }
    if (!(w_bce >= 0.0) || !(w_iou >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "loss weights must be non-negative");
    }
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "bce") return LossKind::Bce;
    if (name == "dice") return LossKind::Dice;
    if (name == "iou") return LossKind::Iou;
    if (name == "bce-iou") return LossKind::BceIou;
    throw Error(ErrorCode::InvalidArgument, "unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) noexcept {
    switch (kind) {
        case LossKind::Bce: return "bce";
        case LossKind::Dice: return "dice";
        case LossKind::Iou: return "iou";
        case LossKind::BceIou: return "bce-iou";
    }
    return "unknown";
}

LossValue compute_loss(LossKind kind, const ProbMap& pred, const BinaryMask& gt,
                       const LossConfig& cfg, Gradient mode) {
    require_same_size(pred, gt);
    cfg.validate();
    return compute_raw(kind, pred.probs(), gt.labels(), cfg, mode);
}

LossValue bce(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg, Gradient mode) {
    return compute_loss(LossKind::Bce, pred, gt, cfg, mode);
}

LossValue dice_loss(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
                    Gradient mode) {
    return compute_loss(LossKind::Dice, pred, gt, cfg, mode);
}

LossValue iou_loss(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
                   Gradient mode) {
    return compute_loss(LossKind::Iou, pred, gt, cfg, mode);
}

LossValue bce_iou(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
                  Gradient mode) {
    return compute_loss(LossKind::BceIou, pred, gt, cfg, mode);
}

double batch_loss(LossKind kind, std::span<const ProbMap> preds, std::span<const BinaryMask> gts,
                  const LossConfig& cfg) {
    if (preds.empty()) throw Error(ErrorCode::EmptyList, "empty batch");
    if (preds.size() != gts.size()) {
        throw Error(ErrorCode::DimensionMismatch, "batch has " + std::to_string(preds.size()) +
                                                      " predictions but " +
                                                      std::to_string(gts.size()) + " masks");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        sum += compute_loss(kind, preds[i], gts[i], cfg, Gradient::Skip).value;
    }
    return sum / static_cast<double>(preds.size());
}

std::vector<double> finite_diff_gradient(LossKind kind, const ProbMap& pred, const BinaryMask& gt,
                                         const LossConfig& cfg, double h) {
    require_same_size(pred, gt);
    cfg.validate();
    if (!(h > 0.0 && h <= 1e-2)) {
        throw Error(ErrorCode::InvalidArgument, "finite-difference step must lie in (0, 1e-2]");
    }
    std::vector<double> p(pred.probs().begin(), pred.probs().end());
    const auto y = gt.labels();
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        const double hi = std::min(orig + h, 1.0);
        const double lo = std::max(orig - h, 0.0);
        p[i] = hi;
        const double f_hi = compute_raw(kind, p, y, cfg, Gradient::Skip).value;
        p[i] = lo;
        const double f_lo = compute_raw(kind, p, y, cfg, Gradient::Skip).value;
        p[i] = orig;
        grad[i] = (f_hi - f_lo) / (hi - lo);
    }
    return grad;
}

GradientCheck check_gradient(LossKind kind, const ProbMap& pred, const BinaryMask& gt,
                             const LossConfig& cfg, double h) {
    const LossValue analytic = compute_loss(kind, pred, gt, cfg, Gradient::Compute);
    const std::vector<double> numeric = finite_diff_gradient(kind, pred, gt, cfg, h);
    GradientCheck check;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double a = (*analytic.gradient)[i];
        const double f = numeric[i];
        const double abs_err = std::abs(a - f);
        const double scale = std::max(std::abs(a), std::abs(f));
        const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
        check.max_absolute_error = std::max(check.max_absolute_error, abs_err);
        if (rel_err > check.max_relative_error) {
            check.max_relative_error = rel_err;
            check.worst_pixel = i;
        }
    }
    return check;
}

}  // namespace tonalseg
