#include "ratseg/config.hpp"

#include <array>
#include <set>

namespace ratseg {

using nlohmann::json;

namespace {

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    void get(const char* key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) fail(at(key), "expected a boolean");
            out = v->get<bool>();
        }
    }
    void get(const char* key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) fail(at(key), "expected an integer");
            out = v->get<int>();
        }
    }
    void get(const char* key, std::size_t& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
                fail(at(key), "expected a non-negative integer");
            out = v->get<std::size_t>();
        }
    }
    void get(const char* key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) fail(at(key), "expected a number");
            out = v->get<double>();
        }
    }
    void get(const char* key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) fail(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }
    template <class T>
    void get(const char* key, std::array<T, 2>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array() || v->size() != 2) fail(at(key), "expected [min, max]");
            for (std::size_t i = 0; i < 2; ++i) {
                const json& e = (*v)[i];
                if constexpr (std::is_integral_v<T>) {
                    if (!e.is_number_integer()) fail(at(key), "expected integers");
                } else if (!e.is_number()) {
                    fail(at(key), "expected numbers");
                }
                out[i] = e.get<T>();
            }
        }
    }
    const json* child(const char* key) { return take(key); }
    std::string at(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown key");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& msg) {
        throw Error(ErrorCode::SchemaError, path + ": " + msg);
    }

private:
    const json* take(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class F>
void validated(const std::string& path, F f) {
    try {
        f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) Reader::fail(path, e.what());
        throw;
    }
}

AnnotationConfig read_annotation(const json& j, const std::string& path) {
    AnnotationConfig c;
    Reader r(j, path);
    r.get("snap_head_to_corner", c.snap_head_to_corner);
    r.get("clean_mask", c.clean_mask);
    r.get("trim_protruding", c.trim_protruding);
    r.get("closing_radius", c.closing_radius);
    r.get("min_component_area", c.min_component_area);
    std::array<double, 2> sol{c.solidity_min, c.solidity_max};
    r.get("solidity_bounds", sol);
    c.solidity_min = sol[0];
    c.solidity_max = sol[1];
    r.get("spline_degree", c.spline_degree);
    r.get("spline_smoothing_per_length", c.spline_smoothing_per_length);
    r.get("max_side_branch_fraction", c.max_side_branch_fraction);
    std::array<double, 2> tr{c.tail_ratio_min, c.tail_ratio_max};
    r.get("tail_ratio_bounds", tr);
    c.tail_ratio_min = tr[0];
    c.tail_ratio_max = tr[1];
    r.get("residual_threshold", c.residual_threshold);
    r.get("corner_snap_radius", c.corner_snap_radius);
    r.get("corner_k", c.corner_k);
    r.get("corner_min_turn_deg", c.corner_min_turn_deg);
    r.get("extend_endpoints_to_boundary", c.extend_endpoints_to_boundary);
    r.get("mcd_epsilon", c.mcd_epsilon);
    r.finish();
    validated(path, [&] { c.validate(); });
    return c;
}

AugmentConfig read_augment(const json& j, const std::string& path) {
    AugmentConfig c;
    Reader r(j, path);
    r.get("rotation_range", c.rotation_range);
    r.get("scale_range", c.scale_range);
    r.get("tps_max_shift", c.tps_max_shift);
    std::string smoothing = to_string(c.smoothing);
    r.get("smoothing", smoothing);
    bool known = false;
    for (Smoothing s : {Smoothing::None, Smoothing::Gaussian, Smoothing::MedianPyramid})
        if (smoothing == to_string(s)) {
            c.smoothing = s;
            known = true;
        }
    if (!known) Reader::fail(r.at("smoothing"), "expected none, gaussian or median_pyramid");
    r.get("gaussian_sigma", c.gaussian_sigma);
    r.get("pyramid_levels", c.pyramid_levels);
    r.get("max_center_distance", c.max_center_distance);
    r.get("min_bbox_overlap", c.min_bbox_overlap);
    r.get("seed", c.seed);
    r.finish();
    validated(path, [&] { c.validate(); });
    return c;
}

}  // namespace

AnnotationConfig annotation_config_from_json(const json& j) { return read_annotation(j, "$"); }
AugmentConfig augment_config_from_json(const json& j) { return read_augment(j, "$"); }

SceneSpec scene_spec_from_json(const json& j) {
    SceneSpec s;
    Reader r(j, "$");
    r.get("width", s.width);
    r.get("height", s.height);
    r.get("rat_count", s.rat_count);
    r.get("background_level", s.background_level);
    r.get("texture_amplitude", s.texture_amplitude);
    r.get("texture_seed", s.texture_seed);
    std::string occ = to_string(s.occlusion);
    r.get("occlusion", occ);
    bool known = false;
    for (OcclusionMode m : {OcclusionMode::None, OcclusionMode::Partial, OcclusionMode::Mounting})
        if (occ == to_string(m)) {
            s.occlusion = m;
            known = true;
        }
    if (!known) Reader::fail("$.occlusion", "expected none, partial or mounting");
    r.get("noise_sigma", s.noise_sigma);
    if (const json* ranges = r.child("ranges")) {
        Reader rr(*ranges, "$.ranges");
        rr.get("body_length", s.ranges.body_length);
        rr.get("max_body_halfwidth", s.ranges.max_body_halfwidth);
        rr.get("head_radius", s.ranges.head_radius);
        rr.get("tail_ratio", s.ranges.tail_ratio);
        rr.get("tail_base_halfwidth", s.ranges.tail_base_halfwidth);
        rr.get("intensity", s.ranges.intensity);
        rr.get("bend", s.ranges.bend);
        rr.get("tail_bend", s.ranges.tail_bend);
        rr.finish();
    }
    r.finish();
    validated("$", [&] { s.validate(); });
    return s;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    Reader r(j, "$");
    if (const json* a = r.child("annotation")) c.annotation = read_annotation(*a, "$.annotation");
    if (const json* a = r.child("augment")) c.augment = read_augment(*a, "$.augment");
    if (const json* p = r.child("paths")) {
        Reader pr(*p, "$.paths");
        pr.get("frames", c.paths.frames);
        pr.get("background", c.paths.background);
        pr.get("annotations", c.paths.annotations);
        pr.get("overlay_dir", c.paths.overlay_dir);
        pr.finish();
    }
    r.get("stride", c.stride);
    r.get("threads", c.threads);
    r.finish();
    if (c.stride < 1) Reader::fail("$.stride", "must be >= 1");
    if (c.threads < 0) Reader::fail("$.threads", "must be >= 0");
    return c;
}

json to_json(const AnnotationConfig& c) {
    return {{"snap_head_to_corner", c.snap_head_to_corner},
            {"clean_mask", c.clean_mask},
            {"trim_protruding", c.trim_protruding},
            {"closing_radius", c.closing_radius},
            {"min_component_area", c.min_component_area},
            {"solidity_bounds", {c.solidity_min, c.solidity_max}},
            {"spline_degree", c.spline_degree},
            {"spline_smoothing_per_length", c.spline_smoothing_per_length},
            {"max_side_branch_fraction", c.max_side_branch_fraction},
            {"tail_ratio_bounds", {c.tail_ratio_min, c.tail_ratio_max}},
            {"residual_threshold", c.residual_threshold},
            {"corner_snap_radius", c.corner_snap_radius},
            {"corner_k", c.corner_k},
            {"corner_min_turn_deg", c.corner_min_turn_deg},
            {"extend_endpoints_to_boundary", c.extend_endpoints_to_boundary},
            {"mcd_epsilon", c.mcd_epsilon}};
}

json to_json(const AugmentConfig& c) {
    return {{"rotation_range", c.rotation_range},
            {"scale_range", c.scale_range},
            {"tps_max_shift", c.tps_max_shift},
            {"smoothing", to_string(c.smoothing)},
            {"gaussian_sigma", c.gaussian_sigma},
            {"pyramid_levels", c.pyramid_levels},
            {"max_center_distance", c.max_center_distance},
            {"min_bbox_overlap", c.min_bbox_overlap},
            {"seed", c.seed}};
}

json to_json(const SceneSpec& s) {
    const ShapeRanges& r = s.ranges;
    return {{"width", s.width},
            {"height", s.height},
            {"rat_count", s.rat_count},
            {"background_level", s.background_level},
            {"texture_amplitude", s.texture_amplitude},
            {"texture_seed", s.texture_seed},
            {"occlusion", to_string(s.occlusion)},
            {"noise_sigma", s.noise_sigma},
            {"ranges",
             {{"body_length", r.body_length},
              {"max_body_halfwidth", r.max_body_halfwidth},
              {"head_radius", r.head_radius},
              {"tail_ratio", r.tail_ratio},
              {"tail_base_halfwidth", r.tail_base_halfwidth},
              {"intensity", r.intensity},
              {"bend", r.bend},
              {"tail_bend", r.tail_bend}}}};
}

}  // namespace ratseg
