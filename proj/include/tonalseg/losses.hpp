#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tonalseg/imaging.hpp"

namespace tonalseg {

struct LossConfig {
    double epsilon_smooth = 1.0;  ///< added to numerator and denominator of Dice/IoU
    double epsilon_clamp = 1e-6;  ///< probabilities clamped to [eps, 1-eps] before the log
    double w_bce = 1.0;
    double w_iou = 1.0;

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;
};

struct LossValue {
    double value = 0.0;
    /// d(loss)/d(prob) per pixel, row-major.
    std::optional<std::vector<double>> gradient;
};

enum class LossKind { Bce, Dice, Iou, BceIou };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind) noexcept;

enum class Gradient { Skip, Compute };

/// Mean pixel-wise binary cross-entropy. Clamped pixels get zero gradient.
LossValue bce(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
              Gradient mode = Gradient::Compute);

/// 1 - (2 sum(p y) + e) / (sum p + sum y + e)
LossValue dice_loss(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
                    Gradient mode = Gradient::Compute);

/// 1 - (sum(p y) + e) / (sum p + sum y - sum(p y) + e)
LossValue iou_loss(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
                   Gradient mode = Gradient::Compute);

/// w_bce * bce + w_iou * iou_loss.
LossValue bce_iou(const ProbMap& pred, const BinaryMask& gt, const LossConfig& cfg,
                  Gradient mode = Gradient::Compute);

LossValue compute_loss(LossKind kind, const ProbMap& pred, const BinaryMask& gt,
                       const LossConfig& cfg, Gradient mode = Gradient::Compute);

/// Mean of per-image loss values over a batch. Throws EmptyList.
double batch_loss(LossKind kind, std::span<const ProbMap> preds, std::span<const BinaryMask> gts,
                  const LossConfig& cfg);

/// Central differences per pixel. Perturbed probabilities are clamped to
/// [0,1] and the quotient uses the step actually taken. Requires h in (0, 1e-2].
std::vector<double> finite_diff_gradient(LossKind kind, const ProbMap& pred, const BinaryMask& gt,
                                         const LossConfig& cfg, double h);

struct GradientCheck {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::size_t worst_pixel = 0;
};

/// Relative error per pixel is |a - f| / max(|a|, |f|), or zero when both vanish.
GradientCheck check_gradient(LossKind kind, const ProbMap& pred, const BinaryMask& gt,
                             const LossConfig& cfg, double h);

}  // namespace tonalseg
