#include "ratseg/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace ratseg {

using nlohmann::json;

void OksSigmas::validate() const {
    for (double s : sigma)
        if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "OKS sigmas must be positive");
}

double bbox_iou(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool x = a[i] != 0;
        const bool y = b[i] != 0;
        inter += x && y;
        uni += x || y;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double oks(const Keypoints& pred, const Keypoints& gt, double gt_area, const OksSigmas& sigmas) {
    if (!(gt_area > 0.0)) throw Error(ErrorCode::NonPositiveArea, "ground-truth area must be positive");
    double sum = 0.0;
    int visible = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (gt[i].visibility <= 0) continue;
        ++visible;
        const double dx = pred[i].x - gt[i].x;
        const double dy = pred[i].y - gt[i].y;
        const double k = 2.0 * sigmas.sigma[i];
        sum += std::exp(-(dx * dx + dy * dy) / (2.0 * gt_area * k * k));
    }
    if (visible == 0) throw Error(ErrorCode::NoVisibleKeypoints, "ground truth has no labeled keypoints");
    return sum / visible;
}

MatchResult match_greedy(const SimilarityMatrix& sim, double threshold) {
    MatchResult m;
    m.det_to_gt.assign(sim.dets, -1);
    m.gt_to_det.assign(sim.gts, -1);
    for (std::size_t d = 0; d < sim.dets; ++d) {
        int best = -1;
        double best_sim = threshold;
        for (std::size_t g = 0; g < sim.gts; ++g) {
            if (m.gt_to_det[g] >= 0) continue;
            const double s = sim(d, g);
            if (s >= threshold && (best < 0 || s > best_sim)) {
                best = static_cast<int>(g);
                best_sim = s;
            }
        }
        if (best < 0) continue;
        m.det_to_gt[d] = best;
        m.gt_to_det[static_cast<std::size_t>(best)] = static_cast<int>(d);
        ++m.true_positives;
        m.matched_similarity += best_sim;
    }
    return m;
}

std::array<double, 10> iou_thresholds() {
    std::array<double, 10> t{};
    for (int i = 0; i < 10; ++i) t[static_cast<std::size_t>(i)] = (50.0 + 5.0 * i) / 100.0;
    return t;
}

namespace {

struct Ranked {
    double score;
    bool tp;
};

// Detections of every image in descending score order with their match
// outcome at `threshold`.
std::vector<Ranked> rank_and_match(const std::vector<ImageEval>& images, double threshold,
                                   std::size_t& total_gt) {
    std::vector<Ranked> all;
    total_gt = 0;
    for (const ImageEval& im : images) {
        if (im.scores.size() != im.sim.dets)
            throw Error(ErrorCode::InvalidArgument, "score count differs from detection count");
        total_gt += im.sim.gts;
        std::vector<std::size_t> order(im.sim.dets);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return im.scores[a] > im.scores[b]; });
        SimilarityMatrix sorted{im.sim.dets, im.sim.gts, {}};
        sorted.values.reserve(im.sim.values.size());
        for (std::size_t d : order)
            for (std::size_t g = 0; g < im.sim.gts; ++g) sorted.values.push_back(im.sim(d, g));
        const MatchResult m = match_greedy(sorted, threshold);
        for (std::size_t r = 0; r < order.size(); ++r) all.push_back({im.scores[order[r]], m.det_to_gt[r] >= 0});
    }
    std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
    return all;
}

double interpolated_ap(const std::vector<Ranked>& ranked, std::size_t total_gt) {
    const std::size_t n = ranked.size();
    std::vector<double> recall(n);
    std::vector<double> precision(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        tp += ranked[i].tp;
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / 101.0;
}

}  // namespace

double average_precision_at(const std::vector<ImageEval>& images, double threshold) {
    std::size_t total_gt = 0;
    const std::vector<Ranked> ranked = rank_and_match(images, threshold, total_gt);
    if (total_gt == 0) return 0.0;
    return interpolated_ap(ranked, total_gt);
}

ApResult average_precision(const std::vector<ImageEval>& images) {
    ApResult res;
    std::size_t total_gt = 0;
    for (const ImageEval& im : images) total_gt += im.sim.gts;
    if (total_gt == 0) return res;
    res.defined = true;
    const auto th = iou_thresholds();
    double sum = 0.0;
    for (std::size_t t = 0; t < th.size(); ++t) {
        res.per_threshold[t] = average_precision_at(images, th[t]);
        sum += res.per_threshold[t];
    }
    res.ap = sum / static_cast<double>(th.size());
    return res;
}

const char* to_string(EvalTask t) {
    switch (t) {
        case EvalTask::Bbox: return "bbox";
        case EvalTask::Segm: return "segm";
        case EvalTask::Keypoints: return "keypoints";
        case EvalTask::Parts: return "parts";
        case EvalTask::All: return "all";
    }
    return "?";
}

EvalTask eval_task_from_string(const std::string& s) {
    for (EvalTask t : {EvalTask::Bbox, EvalTask::Segm, EvalTask::Keypoints, EvalTask::Parts, EvalTask::All})
        if (s == to_string(t)) return t;
    throw Error(ErrorCode::InvalidArgument, "unknown task " + s);
}

const MetricReport* EvalReport::find(const std::string& metric) const {
    for (const MetricReport& m : metrics)
        if (m.metric == metric) return &m;
    return nullptr;
}

namespace {

enum class Metric { Bbox, Segm, Keypoints };

const char* metric_name(Metric m) {
    return m == Metric::Bbox ? "bbox" : (m == Metric::Segm ? "segm" : "keypoints");
}

struct Record {
    const Detection* det;
    mutable std::optional<BinaryMask> mask;

    const BinaryMask& decoded() const {
        if (!mask) {
            if (!det->mask) throw Error(ErrorCode::SchemaError, "record " + std::to_string(det->id) + " has no segmentation");
            mask = decode_rle(*det->mask);
        }
        return *mask;
    }
    BoundingBox box() const {
        if (det->bbox) return *det->bbox;
        if (det->mask) return area(decoded()) ? bounding_box(decoded()) : BoundingBox{};
        throw Error(ErrorCode::SchemaError, "record " + std::to_string(det->id) + " has no bbox");
    }
};

bool has_labeled_keypoint(const Detection& d) {
    if (!d.keypoints) return false;
    for (std::size_t i = 0; i < 3; ++i)
        if ((*d.keypoints)[i].visibility > 0) return true;
    return false;
}

double similarity(Metric m, const Record& det, const Record& gt, const OksSigmas& sigmas) {
    switch (m) {
        case Metric::Bbox: return bbox_iou(det.box(), gt.box());
        case Metric::Segm: {
            const BinaryMask& a = det.decoded();
            const BinaryMask& b = gt.decoded();
            if (!a.same_shape(b)) throw Error(ErrorCode::SchemaError, "prediction mask size differs from ground truth");
            return mask_iou(a, b);
        }
        case Metric::Keypoints:
            if (!det.det->keypoints)
                throw Error(ErrorCode::SchemaError, "record " + std::to_string(det.det->id) + " has no keypoints");
            return oks(*det.det->keypoints, *gt.det->keypoints, gt.det->area, sigmas);
    }
    return 0.0;
}

}  // namespace

EvalReport evaluate_dataset(const std::vector<Detection>& predictions, const CocoDocument& gt,
                            EvalTask task, const OksSigmas& sigmas, double score_cutoff) {
    sigmas.validate();
    EvalReport report;
    report.task = task;
    report.sigmas = sigmas;
    report.score_cutoff = score_cutoff;

    std::map<int, std::size_t> image_index;
    for (const CocoImage& im : gt.images) image_index.emplace(im.id, image_index.size());
    for (const Detection& d : predictions)
        if (!image_index.count(d.image_id))
            throw Error(ErrorCode::UnknownImageId, "prediction references unknown image " + std::to_string(d.image_id));
    for (const Detection& d : gt.annotations)
        if (!image_index.count(d.image_id))
            throw Error(ErrorCode::SchemaError, "ground truth references unknown image " + std::to_string(d.image_id));

    std::vector<Metric> metrics;
    switch (task) {
        case EvalTask::Bbox: metrics = {Metric::Bbox}; break;
        case EvalTask::Segm: metrics = {Metric::Segm}; break;
        case EvalTask::Keypoints: metrics = {Metric::Keypoints}; break;
        case EvalTask::Parts: metrics = {Metric::Bbox, Metric::Segm}; break;
        case EvalTask::All: metrics = {Metric::Bbox, Metric::Segm, Metric::Keypoints}; break;
    }

    // Records bucketed by (category, image) in input order.
    using Key = std::pair<int, std::size_t>;
    std::map<Key, std::vector<Record>> det_bucket;
    std::map<Key, std::vector<Record>> gt_bucket;
    for (const Detection& d : predictions) det_bucket[{d.category_id, image_index[d.image_id]}].push_back({&d, {}});
    for (const Detection& d : gt.annotations) gt_bucket[{d.category_id, image_index[d.image_id]}].push_back({&d, {}});

    for (Metric metric : metrics) {
        MetricReport mr;
        mr.metric = metric_name(metric);
        double ap_sum = 0.0;
        std::array<double, 10> pt_sum{};
        for (const CocoCategory& cat : gt.categories) {
            std::vector<ImageEval> evals;
            std::vector<ImageEval> cut_evals;
            for (std::size_t img = 0; img < gt.images.size(); ++img) {
                static const std::vector<Record> none;
                auto di = det_bucket.find({cat.id, img});
                auto gi = gt_bucket.find({cat.id, img});
                const std::vector<Record>& dets = di == det_bucket.end() ? none : di->second;
                std::vector<const Record*> gts;
                if (gi != gt_bucket.end())
                    for (const Record& r : gi->second)
                        if (metric != Metric::Keypoints || has_labeled_keypoint(*r.det)) gts.push_back(&r);
                if (dets.empty() && gts.empty()) continue;
                ImageEval ev;
                ev.sim = {dets.size(), gts.size(), std::vector<double>(dets.size() * gts.size())};
                for (std::size_t d = 0; d < dets.size(); ++d) {
                    ev.scores.push_back(dets[d].det->score);
                    for (std::size_t g = 0; g < gts.size(); ++g)
                        ev.sim.values[d * gts.size() + g] = similarity(metric, dets[d], *gts[g], sigmas);
                }
                ImageEval cut;
                cut.sim.gts = gts.size();
                for (std::size_t d = 0; d < dets.size(); ++d) {
                    if (!(dets[d].det->score >= score_cutoff)) continue;
                    cut.scores.push_back(dets[d].det->score);
                    ++cut.sim.dets;
                    for (std::size_t g = 0; g < gts.size(); ++g) cut.sim.values.push_back(ev.sim(d, g));
                }
                evals.push_back(std::move(ev));
                cut_evals.push_back(std::move(cut));
            }
            const ApResult ap = average_precision(evals);
            if (ap.defined) {
                ++mr.categories;
                ap_sum += ap.ap;
                for (std::size_t t = 0; t < 10; ++t) pt_sum[t] += ap.per_threshold[t];
            }
            for (const ImageEval& ev : cut_evals) {
                std::vector<std::size_t> order(ev.sim.dets);
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return ev.scores[a] > ev.scores[b]; });
                SimilarityMatrix sorted{ev.sim.dets, ev.sim.gts, {}};
                for (std::size_t d : order)
                    for (std::size_t g = 0; g < ev.sim.gts; ++g) sorted.values.push_back(ev.sim(d, g));
                const MatchResult m = match_greedy(sorted, 0.5);
                mr.counts.tp += m.true_positives;
                mr.counts.fp += ev.sim.dets - m.true_positives;
                mr.counts.fn += ev.sim.gts - m.true_positives;
            }
        }
        if (mr.categories > 0) {
            mr.ap = ap_sum / static_cast<double>(mr.categories);
            for (std::size_t t = 0; t < 10; ++t) mr.per_threshold[t] = pt_sum[t] / static_cast<double>(mr.categories);
        }
        report.metrics.push_back(mr);
    }
    return report;
}

json to_json(const EvalReport& r) {
    json metrics = json::object();
    for (const MetricReport& m : r.metrics)
        metrics[m.metric] = {{"ap", m.ap},
                             {"per_threshold", m.per_threshold},
                             {"categories", m.categories},
                             {"counts", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}}}};
    return {{"schema_version", kSchemaVersion},
            {"task", to_string(r.task)},
            {"metrics", metrics},
            {"config",
             {{"iou_thresholds", iou_thresholds()},
              {"oks_sigmas", {{"head", r.sigmas.sigma[0]}, {"tail_base", r.sigmas.sigma[1]}, {"tail_end", r.sigmas.sigma[2]}}},
              {"score_cutoff", r.score_cutoff}}}};
}

std::string ap_cell(std::optional<double> ap) {
    if (!ap) return "-";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << *ap * 100.0;
    return os.str();
}

std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         const std::vector<std::size_t>& breaks) {
    const std::size_t cols = header.size();
    for (const auto& r : rows)
        if (r.size() != cols) throw Error(ErrorCode::InvalidArgument, "table row width differs from header");
    std::vector<std::size_t> width(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) os << (std::find(breaks.begin(), breaks.end(), c) != breaks.end() ? " | " : "  ");
            const std::string pad(width[c] - cells[c].size(), ' ');
            if (c == 0)
                os << cells[c] << pad;
            else
                os << pad << cells[c];
        }
        os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
}

}  // namespace ratseg
