#pragma once

// COCO-style annotation documents: the keypoint document (one "rat" per
// instance) and the part document (one annotation per head/body/tail region).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratseg/annotate.hpp"
#include "ratseg/rle.hpp"

namespace ratseg {

inline constexpr const char* kSchemaVersion = "1.0";

struct CocoImage {
    int id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
};

struct CocoCategory {
    int id = 0;
    std::string name;
    std::vector<std::string> keypoints;  ///< empty for part categories
};

/// One annotation or prediction record.
struct Detection {
    std::int64_t id = 0;
    int image_id = 0;
    int category_id = 0;
    double score = 1.0;
    std::optional<BoundingBox> bbox;
    std::optional<Rle> mask;
    std::optional<Keypoints> keypoints;
    double area = 0.0;            ///< mask area when a mask is present
    std::int64_t instance_id = -1;  ///< part records: id of the owning instance
    std::string source;           ///< "cv_pipeline", "synthetic" or "augmented"
    std::vector<std::string> quality_flags;
};

struct CocoDocument {
    nlohmann::json info = nlohmann::json::object();
    std::vector<CocoImage> images;
    std::vector<CocoCategory> categories;
    std::vector<Detection> annotations;
};

enum class DocumentKind { Keypoints, Parts };

const char* to_string(Source s);
std::vector<std::string> quality_flag_names(unsigned flags);

/// Category list of each document kind.
std::vector<CocoCategory> coco_categories(DocumentKind kind);

/// Appends the records of one image's instances. Ids continue from the
/// current annotation count + 1; part records link to their instance.
void add_instances(CocoDocument& keypoint_doc, CocoDocument& part_doc, const CocoImage& image,
                   const std::vector<InstanceAnnotation>& instances);

CocoDocument make_document(DocumentKind kind, const nlohmann::json& info);

nlohmann::json to_json(const CocoDocument& doc);
nlohmann::json to_json(const Detection& det);

/// Structural checks on a document; throws SchemaError naming the offending
/// path.
void validate_coco(const nlohmann::json& j);
/// Validates then parses.
CocoDocument coco_from_json(const nlohmann::json& j);

/// Accepts a results array (records with scores) or a full document.
std::vector<Detection> detections_from_json(const nlohmann::json& j);

/// Rebuilds pipeline annotations for one image from a keypoint document and
/// the matching part document (parts may be absent).
std::vector<InstanceAnnotation> instances_for_image(const CocoDocument& keypoint_doc,
                                                    const CocoDocument* part_doc, int image_id);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace ratseg
