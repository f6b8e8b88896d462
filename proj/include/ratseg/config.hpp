#pragma once

// JSON configuration files. Unknown keys and wrongly typed values are schema
// errors; absent keys keep their defaults.

#include <string>

#include <json.hpp>

#include "ratseg/annotate.hpp"
#include "ratseg/augment.hpp"
#include "ratseg/synthgen.hpp"

namespace ratseg {

struct RunPaths {
    std::string frames;        ///< directory of frame_%06d.png files
    std::string background;
    std::string annotations;   ///< output (annotate) or input (augment, overlay)
    std::string overlay_dir;
};

struct RunConfig {
    AnnotationConfig annotation;
    AugmentConfig augment;
    RunPaths paths;
    int stride = 1;
    int threads = 0;  ///< 0 = all available cores
};

/// Throws SchemaError.
AnnotationConfig annotation_config_from_json(const nlohmann::json& j);
AugmentConfig augment_config_from_json(const nlohmann::json& j);
SceneSpec scene_spec_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AnnotationConfig& c);
nlohmann::json to_json(const AugmentConfig& c);
nlohmann::json to_json(const SceneSpec& s);

}  // namespace ratseg
