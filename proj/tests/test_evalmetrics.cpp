#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "ratseg/background.hpp"
#include "ratseg/evalmetrics.hpp"
#include "ratseg/synthgen.hpp"

using namespace ratseg;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

Keypoints kps(double x0, double y0, double x1, double y1, double x2, double y2) {
    return {{x0, y0, 2}, {x1, y1, 2}, {x2, y2, 2}};
}

ImageEval image(std::vector<double> scores, std::size_t gts, std::vector<double> values) {
    ImageEval ev;
    ev.scores = std::move(scores);
    ev.sim = {ev.scores.size(), gts, std::move(values)};
    return ev;
}

// Random image sets, shared between the implementation and the oracle.
struct Case {
    std::vector<ImageEval> evals;
    std::vector<oracle::ImageCase> oracle;
};

Case random_case(Rng& rng, int images, bool quantized) {
    Case c;
    for (int i = 0; i < images; ++i) {
        const auto nd = static_cast<std::size_t>(rng.uniform_int(0, 5));
        const auto ng = static_cast<std::size_t>(rng.uniform_int(0, 4));
        ImageEval ev;
        oracle::ImageCase oc;
        oc.gts = ng;
        ev.sim = {nd, ng, {}};
        for (std::size_t d = 0; d < nd; ++d) {
            const double s = quantized ? static_cast<double>(rng.uniform_int(0, 4)) / 4.0 : rng.uniform();
            ev.scores.push_back(s);
            oc.scores.push_back(s);
            std::vector<double> row;
            for (std::size_t g = 0; g < ng; ++g) {
                double v = rng.uniform() < 0.4 ? 0.0 : rng.uniform(0.3, 1.0);
                if (quantized) v = std::round(v * 20.0) / 20.0;
                row.push_back(v);
                ev.sim.values.push_back(v);
            }
            oc.sim.push_back(row);
        }
        c.evals.push_back(ev);
        c.oracle.push_back(oc);
    }
    return c;
}

std::size_t total_gts(const std::vector<ImageEval>& evals) {
    std::size_t n = 0;
    for (const ImageEval& e : evals) n += e.sim.gts;
    return n;
}

// Ground truth and pipeline predictions over a few synthetic frames.
struct Dataset {
    CocoDocument gt_kp = make_document(DocumentKind::Keypoints, nlohmann::json::object());
    CocoDocument gt_parts = make_document(DocumentKind::Parts, nlohmann::json::object());
    CocoDocument pred_kp = make_document(DocumentKind::Keypoints, nlohmann::json::object());
    CocoDocument pred_parts = make_document(DocumentKind::Parts, nlohmann::json::object());
};

Dataset synthetic_dataset(int frames) {
    Dataset ds;
    SceneSpec spec;
    spec.noise_sigma = 0.0;
    const BackgroundModel bg{render_background(spec), 1};
    Rng rng(404);
    for (int f = 0; f < frames; ++f) {
        const Scene sc = generate_scene(spec, static_cast<std::uint64_t>(f));
        const CocoImage im{f + 1, "frame_" + std::to_string(f) + ".png", spec.width, spec.height};
        std::vector<InstanceAnnotation> truth;
        for (const GroundTruth& g : sc.truths) truth.push_back(to_instance(g));
        add_instances(ds.gt_kp, ds.gt_parts, im, truth);
        const FrameAnnotations fa = annotate_frame(sc.frame, bg, AnnotationConfig{});
        add_instances(ds.pred_kp, ds.pred_parts, im, fa.accepted);
    }
    for (Detection& d : ds.pred_kp.annotations) d.score = rng.uniform(0.3, 1.0);
    for (Detection& d : ds.pred_parts.annotations) d.score = rng.uniform(0.3, 1.0);
    return ds;
}

}  // namespace

TEST_CASE("bbox_iou: examples and rasterized oracle") {
    CHECK(bbox_iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
    CHECK(bbox_iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(bbox_iou({0, 0, 2, 2}, {5, 5, 2, 2}) == 0.0);
    CHECK(bbox_iou({0, 0, 2, 2}, {2, 0, 2, 2}) == 0.0);
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        const int ax = static_cast<int>(rng.uniform_int(0, 20)), ay = static_cast<int>(rng.uniform_int(0, 20));
        const int aw = static_cast<int>(rng.uniform_int(1, 15)), ah = static_cast<int>(rng.uniform_int(1, 15));
        const int bx = static_cast<int>(rng.uniform_int(0, 20)), by = static_cast<int>(rng.uniform_int(0, 20));
        const int bw = static_cast<int>(rng.uniform_int(1, 15)), bh = static_cast<int>(rng.uniform_int(1, 15));
        const BoundingBox a{double(ax), double(ay), double(aw), double(ah)};
        const BoundingBox b{double(bx), double(by), double(bw), double(bh)};
        const double v = bbox_iou(a, b);
        CHECK(std::abs(v - oracle::box_iou_raster(ax, ay, aw, ah, bx, by, bw, bh)) <= 1e-9);
        CHECK(v == bbox_iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("mask_iou: examples, oracle and errors") {
    const BinaryMask a = oracle::disc_mask(30, 30, 10, 10, 5);
    const BinaryMask b = oracle::disc_mask(30, 30, 22, 22, 5);
    CHECK(mask_iou(a, a) == 1.0);
    CHECK(mask_iou(a, b) == 0.0);
    CHECK(mask_iou(BinaryMask(5, 5, 0), BinaryMask(5, 5, 0)) == 0.0);
    Rng rng(12);
    for (int t = 0; t < 300; ++t) {
        const BinaryMask x = oracle::random_mask(rng, 24, 17, rng.uniform());
        const BinaryMask y = oracle::random_mask(rng, 24, 17, rng.uniform());
        CHECK(mask_iou(x, y) == oracle::mask_iou(x, y));
        CHECK(mask_iou(x, y) == mask_iou(y, x));
    }
    CHECK(code_of([&] { mask_iou(a, BinaryMask(29, 30, 0)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("oks: closed forms, visibility and errors") {
    const Keypoints g = kps(10, 10, 30, 10, 60, 12);
    CHECK(oks(g, g, 400.0) == 1.0);

    // Only the head is labeled and it misses by exactly s * k_head.
    Keypoints head_only = g;
    head_only.tail_base.visibility = 0;
    head_only.tail_end.visibility = 0;
    const double s = 10.0, k = 2 * 0.079;
    Keypoints p = g;
    p.head.x += s * k;
    p.tail_base.x += 100.0;
    CHECK(std::abs(oks(p, head_only, s * s) - std::exp(-0.5)) <= 1e-9);

    // One unlabeled keypoint: its error does not count and the mean is over two.
    Keypoints two = g;
    two.tail_end.visibility = 0;
    Keypoints q = g;
    q.tail_base.y += 3.0;
    q.tail_end.x += 500.0;
    const double kb = 2 * 0.107;
    const double expected = (1.0 + std::exp(-9.0 / (2 * 400.0 * kb * kb))) / 2.0;
    CHECK(std::abs(oks(q, two, 400.0) - expected) <= 1e-12);

    // Occluded but labeled (visibility 1) still counts.
    Keypoints occl = g;
    occl.tail_end.visibility = 1;
    CHECK(oks(q, occl, 400.0) < oks(q, two, 400.0));

    Keypoints none = g;
    for (std::size_t i = 0; i < 3; ++i) none[i].visibility = 0;
    CHECK(code_of([&] { oks(g, none, 100.0); }) == ErrorCode::NoVisibleKeypoints);
    CHECK(code_of([&] { oks(g, g, 0.0); }) == ErrorCode::NonPositiveArea);
    CHECK(code_of([&] { oks(g, g, -1.0); }) == ErrorCode::NonPositiveArea);
    OksSigmas bad;
    bad.sigma[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("oks: matches the oracle and decreases strictly with error") {
    Rng rng(13);
    for (int t = 0; t < 500; ++t) {
        Keypoints g, p;
        for (std::size_t i = 0; i < 3; ++i) {
            g[i] = {rng.uniform(0, 100), rng.uniform(0, 100), static_cast<int>(rng.uniform_int(0, 2))};
            p[i] = {g[i].x + rng.uniform(-10, 10), g[i].y + rng.uniform(-10, 10), 2};
        }
        if (!g.head.visibility && !g.tail_base.visibility && !g.tail_end.visibility) g.head.visibility = 2;
        const double area = rng.uniform(50, 3000);
        const double v = oks(p, g, area);
        CHECK(std::abs(v - oracle::oks(p, g, area)) <= 1e-12);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        for (std::size_t i = 0; i < 3; ++i) {
            if (!g[i].visibility) continue;
            Keypoints farther = p;
            farther[i].x = g[i].x + (p[i].x - g[i].x) * 1.5 + (p[i].x >= g[i].x ? 0.5 : -0.5);
            CHECK(oks(farther, g, area) < v);
        }
    }
}

TEST_CASE("match_greedy: examples") {
    const MatchResult one = match_greedy({1, 1, {0.9}}, 0.5);
    CHECK(one.true_positives == 1);
    CHECK(one.det_to_gt == std::vector<int>{0});

    // Rows are in score order (0.9, 0.8); the first takes the gt.
    const MatchResult two = match_greedy({2, 1, {0.6, 0.95}}, 0.5);
    CHECK(two.true_positives == 1);
    CHECK(two.det_to_gt == std::vector<int>{0, -1});
    CHECK(two.gt_to_det == std::vector<int>{0});

    const MatchResult below = match_greedy({1, 1, {0.49}}, 0.5);
    CHECK(below.true_positives == 0);
    CHECK(below.gt_to_det == std::vector<int>{-1});

    // Equal similarity goes to the lower gt index.
    const MatchResult tie = match_greedy({1, 2, {0.7, 0.7}}, 0.5);
    CHECK(tie.det_to_gt == std::vector<int>{0});
    // The best gt, not the first above threshold.
    const MatchResult best = match_greedy({1, 3, {0.6, 0.9, 0.8}}, 0.5);
    CHECK(best.det_to_gt == std::vector<int>{1});
    CHECK(best.matched_similarity == 0.9);
}

TEST_CASE("match_greedy: agrees with exhaustive enumeration under greedy order") {
    Rng rng(14);
    for (int t = 0; t < 2000; ++t) {
        const auto nd = static_cast<std::size_t>(rng.uniform_int(0, 5));
        const auto ng = static_cast<std::size_t>(rng.uniform_int(0, 5));
        SimilarityMatrix sim{nd, ng, {}};
        std::vector<std::vector<double>> rows(nd);
        for (std::size_t d = 0; d < nd; ++d)
            for (std::size_t g = 0; g < ng; ++g) {
                const double v = static_cast<double>(rng.uniform_int(0, 10)) / 10.0;
                sim.values.push_back(v);
                rows[d].push_back(v);
            }
        const double thr = rng.uniform(0.3, 0.8);
        const MatchResult m = match_greedy(sim, thr);
        const oracle::Assignment o = oracle::exhaustive_match(rows, thr);
        CHECK(m.true_positives == o.tp);
        CHECK(std::abs(m.matched_similarity - o.total) <= 1e-12);
        std::size_t tp = 0;
        for (std::size_t d = 0; d < nd; ++d) {
            const int g = m.det_to_gt[d];
            if (g < 0) continue;
            ++tp;
            CHECK(m.gt_to_det[static_cast<std::size_t>(g)] == static_cast<int>(d));
            CHECK(sim(d, static_cast<std::size_t>(g)) >= thr);
        }
        CHECK(tp == m.true_positives);
    }
}

TEST_CASE("iou_thresholds: ten levels from 0.50 to 0.95") {
    const std::array<double, 10> expected{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
    CHECK(iou_thresholds() == expected);
}

TEST_CASE("average_precision: hand-computed cases") {
    // Perfect detections.
    const ApResult perfect = average_precision({image({0.9, 0.8}, 2, {1.0, 0.0, 0.0, 1.0})});
    CHECK(perfect.defined);
    CHECK(perfect.ap == 1.0);

    // A single match at IoU 0.7.
    const ApResult single = average_precision({image({0.9}, 1, {0.7})});
    const std::array<double, 10> sweep{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    CHECK(single.per_threshold == sweep);
    CHECK(single.ap == doctest::Approx(0.5).epsilon(1e-12));

    // TP, FP, TP over two gts.
    const ApResult pr = average_precision({image({0.9, 0.8, 0.7}, 2, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0})});
    const double expected = (51.0 * 1.0 + 50.0 * (2.0 / 3.0)) / 101.0;
    for (double v : pr.per_threshold) CHECK(std::abs(v - expected) <= 1e-9);
    CHECK(std::abs(pr.ap - expected) <= 1e-9);
    CHECK(std::abs(average_precision_at({image({0.9, 0.8, 0.7}, 2, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0})}, 0.95) -
                   expected) <= 1e-9);

    // Ranking spans images: the FP outranks the second image's TP.
    const ApResult across = average_precision({image({0.9, 0.8}, 1, {1.0, 0.0}), image({0.7}, 1, {1.0})});
    CHECK(std::abs(across.ap - expected) <= 1e-9);

    // No gt: undefined. Gt without detections: 0.
    CHECK_FALSE(average_precision({image({0.5}, 0, {})}).defined);
    CHECK_FALSE(average_precision({}).defined);
    const ApResult missed = average_precision({image({}, 3, {})});
    CHECK(missed.defined);
    CHECK(missed.ap == 0.0);
}

TEST_CASE("average_precision: agrees with the oracle and keeps its invariants") {
    Rng rng(15);
    int checked = 0;
    for (int t = 0; t < 500; ++t) {
        Case c = random_case(rng, static_cast<int>(rng.uniform_int(1, 4)), t % 2 == 0);
        if (total_gts(c.evals) == 0) continue;
        ++checked;
        const ApResult r = average_precision(c.evals);
        REQUIRE(r.defined);
        CHECK(std::abs(r.ap - oracle::ap(c.oracle)) <= 1e-9);
        double mean = 0.0;
        for (std::size_t i = 0; i < 10; ++i) {
            mean += r.per_threshold[i];
            CHECK(r.per_threshold[i] >= 0.0);
            CHECK(r.per_threshold[i] <= 1.0);
            if (i) CHECK(r.per_threshold[i] <= r.per_threshold[i - 1]);
            CHECK(r.per_threshold[i] == average_precision_at(c.evals, iou_thresholds()[i]));
        }
        CHECK(std::abs(r.ap - mean / 10.0) <= 1e-12);

        // Only the order of scores matters.
        std::vector<ImageEval> rescaled = c.evals;
        for (ImageEval& e : rescaled)
            for (double& s : e.scores) s = 0.01 + 0.5 * std::pow(s, 3.0);
        CHECK(average_precision(rescaled).ap == r.ap);

        // A false positive ranked last.
        std::vector<ImageEval> with_fp = c.evals;
        ImageEval& target = with_fp[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(with_fp.size()) - 1))];
        target.scores.push_back(-1.0);
        ++target.sim.dets;
        for (std::size_t g = 0; g < target.sim.gts; ++g) target.sim.values.push_back(0.0);
        const ApResult fp = average_precision(with_fp);
        for (std::size_t i = 0; i < 10; ++i) CHECK(fp.per_threshold[i] <= r.per_threshold[i]);

        // A true positive for a gt nothing else can reach.
        std::vector<ImageEval> with_tp = c.evals;
        ImageEval& im = with_tp[0];
        ImageEval grown;
        grown.scores.push_back(2.0);
        grown.scores.insert(grown.scores.end(), im.scores.begin(), im.scores.end());
        grown.sim = {im.sim.dets + 1, im.sim.gts + 1, {}};
        for (std::size_t g = 0; g <= im.sim.gts; ++g) grown.sim.values.push_back(g == im.sim.gts ? 1.0 : 0.0);
        for (std::size_t d = 0; d < im.sim.dets; ++d) {
            for (std::size_t g = 0; g < im.sim.gts; ++g) grown.sim.values.push_back(im.sim(d, g));
            grown.sim.values.push_back(0.0);
        }
        im = grown;
        const ApResult tp = average_precision(with_tp);
        for (std::size_t i = 0; i < 10; ++i) CHECK(tp.per_threshold[i] >= r.per_threshold[i]);
    }
    CHECK(checked > 400);
}

TEST_CASE("evaluate_dataset: predictions equal to ground truth") {
    const Dataset ds = synthetic_dataset(3);
    REQUIRE(!ds.gt_kp.annotations.empty());
    const EvalReport kp = evaluate_dataset(ds.gt_kp.annotations, ds.gt_kp, EvalTask::All);
    REQUIRE(kp.metrics.size() == 3);
    for (const MetricReport& m : kp.metrics) {
        CHECK(m.ap == 1.0);
        CHECK(m.categories == 1);
        CHECK(m.counts.tp == ds.gt_kp.annotations.size());
        CHECK(m.counts.fp == 0);
        CHECK(m.counts.fn == 0);
    }
    const EvalReport parts = evaluate_dataset(ds.gt_parts.annotations, ds.gt_parts, EvalTask::Parts);
    REQUIRE(parts.metrics.size() == 2);
    CHECK(parts.find("bbox")->ap == 1.0);
    CHECK(parts.find("segm")->ap == 1.0);
    CHECK(parts.find("segm")->categories == 3);
    CHECK(parts.find("keypoints") == nullptr);
}

TEST_CASE("evaluate_dataset: empty predictions, cutoff and errors") {
    const Dataset ds = synthetic_dataset(2);
    const EvalReport empty = evaluate_dataset({}, ds.gt_kp, EvalTask::Segm);
    REQUIRE(empty.metrics.size() == 1);
    CHECK(empty.metrics[0].ap == 0.0);
    CHECK(empty.metrics[0].counts.fn == ds.gt_kp.annotations.size());
    CHECK(empty.metrics[0].counts.tp == 0);

    // Low scores still count for AP but not for the counts.
    std::vector<Detection> low = ds.gt_kp.annotations;
    for (Detection& d : low) d.score = 0.6;
    const EvalReport r = evaluate_dataset(low, ds.gt_kp, EvalTask::Bbox);
    CHECK(r.metrics[0].ap == 1.0);
    CHECK(r.metrics[0].counts.tp == 0);
    CHECK(r.metrics[0].counts.fn == ds.gt_kp.annotations.size());
    const EvalReport r2 = evaluate_dataset(low, ds.gt_kp, EvalTask::Bbox, {}, 0.5);
    CHECK(r2.metrics[0].counts.tp == ds.gt_kp.annotations.size());

    std::vector<Detection> stray = ds.gt_kp.annotations;
    stray[0].image_id = 999;
    CHECK(code_of([&] { evaluate_dataset(stray, ds.gt_kp, EvalTask::All); }) == ErrorCode::UnknownImageId);
    CocoDocument broken = ds.gt_kp;
    broken.annotations[0].image_id = 999;
    CHECK(code_of([&] { evaluate_dataset({}, broken, EvalTask::All); }) == ErrorCode::SchemaError);

    const nlohmann::json j = to_json(r);
    CHECK(j.at("task") == "bbox");
    CHECK(j.at("metrics").at("bbox").at("per_threshold").size() == 10);
    CHECK(j.at("config").at("score_cutoff") == 0.7);
    CHECK(j.at("config").at("oks_sigmas").at("tail_base") == 0.107);
    CHECK(j.at("config").at("iou_thresholds").size() == 10);
}

TEST_CASE("evaluate_dataset: agrees with an independent implementation on pipeline output") {
    const Dataset ds = synthetic_dataset(6);
    REQUIRE(!ds.pred_kp.annotations.empty());
    const EvalReport kp = evaluate_dataset(ds.pred_kp.annotations, ds.gt_kp, EvalTask::All);
    for (const char* metric : {"bbox", "segm", "keypoints"}) {
        CAPTURE(metric);
        const double o = oracle::dataset_ap(ds.pred_kp.annotations, ds.gt_kp, metric);
        CHECK(std::abs(kp.find(metric)->ap - o) <= 1e-9);
        CHECK(kp.find(metric)->ap > 0.0);
    }
    const EvalReport parts = evaluate_dataset(ds.pred_parts.annotations, ds.gt_parts, EvalTask::Parts);
    for (const char* metric : {"bbox", "segm"}) {
        CAPTURE(metric);
        const double o = oracle::dataset_ap(ds.pred_parts.annotations, ds.gt_parts, metric);
        CHECK(std::abs(parts.find(metric)->ap - o) <= 1e-9);
    }
}

TEST_CASE("eval task names and table formatting") {
    for (EvalTask t : {EvalTask::Bbox, EvalTask::Segm, EvalTask::Keypoints, EvalTask::Parts, EvalTask::All})
        CHECK(eval_task_from_string(to_string(t)) == t);
    CHECK(code_of([] { eval_task_from_string("mAP"); }) == ErrorCode::InvalidArgument);

    CHECK(ap_cell(0.4891) == "48.91");
    CHECK(ap_cell(1.0) == "100.00");
    CHECK(ap_cell(std::nullopt) == "-");

    const std::string t = format_table({"Method", "Keypoint AP", "Segmentation AP"},
                                       {{"CV", "48.91", "53.22"}, {"Snap + clean", "9.38", "-"}}, {2});
    CHECK(t ==
          "Method        Keypoint AP | Segmentation AP\n"
          "CV                  48.91 |           53.22\n"
          "Snap + clean         9.38 |               -\n");
    CHECK_THROWS_AS(format_table({"a", "b"}, {{"x"}}), Error);
}
