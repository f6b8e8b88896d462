#pragma once

// Synthetic evaluation set and the snap/clean/trim configuration grid.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratseg/annotate.hpp"
#include "ratseg/coco.hpp"
#include "ratseg/synthgen.hpp"

namespace ratseg {

/// Independent scenes with their ground truth as COCO documents. Image ids
/// are 1-based; file names follow frame_%06d.png from 0.
struct SyntheticDataset {
    std::vector<ImageRgb> frames;
    BackgroundModel background;  ///< noise-free
    CocoDocument keypoints;
    CocoDocument parts;
};

std::string frame_name(std::size_t index);

/// Scene i uses derive_seed(seed, i).
SyntheticDataset make_synthetic_dataset(const SceneSpec& spec, int count, std::uint64_t seed);

struct AblationSetting {
    bool snap_head_to_corner = false;
    bool clean_mask = true;
    bool trim_protruding = true;
};

/// The four rows of the comparison, in table order.
std::array<AblationSetting, 4> ablation_grid();

struct AblationRow {
    AblationSetting setting;
    nlohmann::json config;  ///< full annotation config echo
    double bbox_ap = 0.0;
    double keypoint_ap = 0.0;
    double segm_ap = 0.0;
    double part_bbox_ap = 0.0;
    double part_segm_ap = 0.0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Annotates every frame with `base` plus the row's toggles and evaluates
/// against the dataset's ground truth.
AblationRow run_ablation_row(const SyntheticDataset& data, const AnnotationConfig& base,
                             const AblationSetting& setting);
std::vector<AblationRow> run_ablation(const SyntheticDataset& data, const AnnotationConfig& base);

/// Toggle columns, instance AP columns, then part AP columns.
std::string ablation_table(const std::vector<AblationRow>& rows);
nlohmann::json to_json(const AblationRow& row);

}  // namespace ratseg
