#pragma once

// COCO-style similarity measures, greedy matching and averaged precision.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratseg/annotate.hpp"
#include "ratseg/coco.hpp"
#include "ratseg/raster.hpp"

namespace ratseg {

struct OksSigmas {
    std::array<double, 3> sigma{0.079, 0.107, 0.089};  ///< head, tail_base, tail_end
    /// Throws InvalidArgument unless all sigmas are positive.
    void validate() const;
};

/// Intersection over union of continuous [x, x + w) x [y, y + h) boxes.
double bbox_iou(const BoundingBox& a, const BoundingBox& b);
/// Zero when both masks are empty. Throws DimensionMismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);
/// Mean over gt-visible keypoints of exp(-d^2 / (2 s^2 k^2)), s^2 = gt_area,
/// k = 2 sigma. Throws NoVisibleKeypoints, NonPositiveArea.
double oks(const Keypoints& pred, const Keypoints& gt, double gt_area,
           const OksSigmas& sigmas = {});

/// Row-major similarity of detections (rows) against ground truths (cols).
struct SimilarityMatrix {
    std::size_t dets = 0;
    std::size_t gts = 0;
    std::vector<double> values;
    double operator()(std::size_t d, std::size_t g) const { return values[d * gts + g]; }
};

struct MatchResult {
    std::vector<int> det_to_gt;  ///< -1 for false positives
    std::vector<int> gt_to_det;  ///< -1 for misses
    std::size_t true_positives = 0;
    double matched_similarity = 0.0;
};

/// Detections are taken in row order (callers sort by descending score);
/// each takes the most similar unmatched gt with similarity >= threshold,
/// the lowest gt index on ties.
MatchResult match_greedy(const SimilarityMatrix& sim, double threshold);

/// 0.50, 0.55, ..., 0.95, each the correctly rounded decimal.
std::array<double, 10> iou_thresholds();

/// Detections and ground truths of one image and category.
struct ImageEval {
    std::vector<double> scores;  ///< one per detection row of `sim`
    SimilarityMatrix sim;
};

struct ApResult {
    bool defined = false;  ///< false when there is no ground truth
    double ap = 0.0;
    std::array<double, 10> per_threshold{};
};

/// 101-point interpolated precision averaged over the threshold sweep.
/// Detections are ranked by score across images (stable: image order, then
/// row order).
ApResult average_precision(const std::vector<ImageEval>& images);
/// Single-threshold variant.
double average_precision_at(const std::vector<ImageEval>& images, double threshold);

enum class EvalTask { Bbox, Segm, Keypoints, Parts, All };

const char* to_string(EvalTask t);
/// Throws InvalidArgument.
EvalTask eval_task_from_string(const std::string& s);

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct MetricReport {
    std::string metric;  ///< "bbox", "segm" or "keypoints"
    double ap = 0.0;
    std::array<double, 10> per_threshold{};
    std::size_t categories = 0;  ///< categories with ground truth
    Counts counts;               ///< at similarity 0.5 and score >= cutoff
};

struct EvalReport {
    EvalTask task = EvalTask::All;
    std::vector<MetricReport> metrics;
    double score_cutoff = 0.7;
    OksSigmas sigmas;

    const MetricReport* find(const std::string& metric) const;
};

/// Throws SchemaError, UnknownImageId.
EvalReport evaluate_dataset(const std::vector<Detection>& predictions, const CocoDocument& gt,
                            EvalTask task, const OksSigmas& sigmas = {}, double score_cutoff = 0.7);

nlohmann::json to_json(const EvalReport& report);

/// AP in percent with two decimals, "-" when absent.
std::string ap_cell(std::optional<double> ap);

/// Aligned plain-text table. The first column is left-aligned, the others
/// right-aligned; a "|" is drawn before every column index in `breaks`.
std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         const std::vector<std::size_t>& breaks = {});

}  // namespace ratseg
