#include "ratseg/ablation.hpp"

#include <cstdio>

#include "ratseg/config.hpp"
#include "ratseg/evalmetrics.hpp"

namespace ratseg {

std::string frame_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.png", index);
    return buf;
}

SyntheticDataset make_synthetic_dataset(const SceneSpec& spec, int count, std::uint64_t seed) {
    spec.validate();
    if (count < 0) throw Error(ErrorCode::InvalidArgument, "count must be >= 0");
    SyntheticDataset d;
    d.background = {render_background(spec), 1};
    const nlohmann::json info = {{"generator", "synth"}, {"seed", seed}, {"spec", to_json(spec)}};
    d.keypoints = make_document(DocumentKind::Keypoints, info);
    d.parts = make_document(DocumentKind::Parts, info);
    for (int i = 0; i < count; ++i) {
        Scene s = generate_scene(spec, derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::vector<InstanceAnnotation> inst;
        for (const GroundTruth& gt : s.truths) inst.push_back(to_instance(gt));
        const CocoImage im{i + 1, frame_name(static_cast<std::size_t>(i)), spec.width, spec.height};
        add_instances(d.keypoints, d.parts, im, inst);
        d.frames.push_back(std::move(s.frame));
    }
    return d;
}

std::array<AblationSetting, 4> ablation_grid() {
    return {{{true, false, true}, {false, false, true}, {false, true, true}, {false, true, false}}};
}

AblationRow run_ablation_row(const SyntheticDataset& data, const AnnotationConfig& base,
                             const AblationSetting& setting) {
    AnnotationConfig cfg = base;
    cfg.snap_head_to_corner = setting.snap_head_to_corner;
    cfg.clean_mask = setting.clean_mask;
    cfg.trim_protruding = setting.trim_protruding;
    cfg.validate();

    AblationRow row;
    row.setting = setting;
    row.config = to_json(cfg);
    CocoDocument kp = make_document(DocumentKind::Keypoints, {{"config", row.config}});
    CocoDocument parts = make_document(DocumentKind::Parts, {{"config", row.config}});
    for (std::size_t i = 0; i < data.frames.size(); ++i) {
        const FrameAnnotations fa = annotate_frame(data.frames[i], data.background, cfg);
        row.accepted += fa.accepted.size();
        row.rejected += fa.rejected.size();
        add_instances(kp, parts, data.keypoints.images[i], fa.accepted);
    }
    const EvalReport inst = evaluate_dataset(kp.annotations, data.keypoints, EvalTask::All);
    const EvalReport part = evaluate_dataset(parts.annotations, data.parts, EvalTask::Parts);
    row.bbox_ap = inst.find("bbox")->ap;
    row.segm_ap = inst.find("segm")->ap;
    row.keypoint_ap = inst.find("keypoints")->ap;
    row.part_bbox_ap = part.find("bbox")->ap;
    row.part_segm_ap = part.find("segm")->ap;
    return row;
}

std::vector<AblationRow> run_ablation(const SyntheticDataset& data, const AnnotationConfig& base) {
    std::vector<AblationRow> rows;
    for (const AblationSetting& s : ablation_grid()) rows.push_back(run_ablation_row(data, base, s));
    return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
    const std::vector<std::string> header{"Set head to nearest corner", "Clean mask", "Trim protruding parts",
                                          "Bounding box AP", "Keypoint AP", "Segmentation AP",
                                          "Bounding box AP", "Segmentation AP"};
    auto mark = [](bool b) { return std::string(b ? "yes" : "no"); };
    std::vector<std::vector<std::string>> body;
    for (const AblationRow& r : rows)
        body.push_back({mark(r.setting.snap_head_to_corner), mark(r.setting.clean_mask),
                        mark(r.setting.trim_protruding), ap_cell(r.bbox_ap), ap_cell(r.keypoint_ap),
                        ap_cell(r.segm_ap), ap_cell(r.part_bbox_ap), ap_cell(r.part_segm_ap)});
    return format_table(header, body, {3, 6});
}

nlohmann::json to_json(const AblationRow& r) {
    return {{"snap_head_to_corner", r.setting.snap_head_to_corner},
            {"clean_mask", r.setting.clean_mask},
            {"trim_protruding", r.setting.trim_protruding},
            {"config", r.config},
            {"instances", {{"bbox_ap", r.bbox_ap}, {"keypoint_ap", r.keypoint_ap}, {"segm_ap", r.segm_ap}}},
            {"parts", {{"bbox_ap", r.part_bbox_ap}, {"segm_ap", r.part_segm_ap}}},
            {"accepted", r.accepted},
            {"rejected", r.rejected}};
}

}  // namespace ratseg
