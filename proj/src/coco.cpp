#include "ratseg/coco.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace ratseg {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw Error(ErrorCode::SchemaError, path + ": " + msg);
}

const json& field(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing \"") + key + "\"");
    return *it;
}

std::int64_t get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
}

const std::set<std::string>& source_names() {
    static const std::set<std::string> s{"cv_pipeline", "synthetic", "augmented"};
    return s;
}

const std::set<std::string>& flag_names() {
    static const std::set<std::string> s{"smoothed", "trimmed", "corner_snapped"};
    return s;
}

void check_keypoints(const json& kp, std::size_t expected, const std::string& path) {
    if (!kp.is_array()) fail(path, "expected an array");
    if (kp.size() != 3 * expected)
        fail(path, "expected " + std::to_string(3 * expected) + " values");
    for (std::size_t i = 0; i < kp.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (i % 3 == 2) {
            const auto v = get_int(kp[i], p);
            if (v < 0 || v > 2) fail(p, "visibility must be 0, 1 or 2");
        } else {
            get_number(kp[i], p);
        }
    }
}

void check_bbox(const json& b, const std::string& path) {
    if (!b.is_array() || b.size() != 4) fail(path, "expected [x, y, w, h]");
    for (std::size_t i = 0; i < 4; ++i) {
        const double v = get_number(b[i], path + "[" + std::to_string(i) + "]");
        if (i >= 2 && v < 0.0) fail(path, "negative box size");
    }
}

void check_rle(const json& s, const std::string& path, int height, int width) {
    if (!s.is_object()) fail(path, "expected an RLE object");
    const json& size = field(s, "size", path);
    if (!size.is_array() || size.size() != 2) fail(path + ".size", "expected [h, w]");
    const auto h = get_int(size[0], path + ".size[0]");
    const auto w = get_int(size[1], path + ".size[1]");
    if (height >= 0 && (h != height || w != width)) fail(path + ".size", "does not match the image");
    const json& counts = field(s, "counts", path);
    if (!counts.is_array()) fail(path + ".counts", "expected an array");
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto c = get_int(counts[i], path + ".counts[" + std::to_string(i) + "]");
        if (c < 0) fail(path + ".counts", "negative run");
        total += static_cast<std::uint64_t>(c);
    }
    if (total != static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w))
        fail(path + ".counts", "runs do not cover the mask");
}

struct CategoryInfo {
    std::size_t keypoint_count = 0;
};

// Checks one annotation or result record. `images` maps id -> (h, w); when
// null, image references are not checked here.
void check_record(const json& a, const std::string& p,
                  const std::unordered_map<std::int64_t, std::pair<int, int>>* images,
                  const std::unordered_map<std::int64_t, CategoryInfo>* categories) {
    if (!a.is_object()) fail(p, "expected an object");
    const auto image_id = get_int(field(a, "image_id", p), p + ".image_id");
    const auto cat = get_int(field(a, "category_id", p), p + ".category_id");
    int h = -1;
    int w = -1;
    if (images) {
        auto it = images->find(image_id);
        if (it == images->end()) fail(p + ".image_id", "unknown image " + std::to_string(image_id));
        h = it->second.first;
        w = it->second.second;
    }
    std::size_t kp_count = 3;
    if (categories) {
        auto it = categories->find(cat);
        if (it == categories->end()) fail(p + ".category_id", "unknown category");
        kp_count = it->second.keypoint_count;
    }
    bool any = false;
    if (a.contains("bbox")) {
        check_bbox(a["bbox"], p + ".bbox");
        any = true;
    }
    if (a.contains("segmentation")) {
        check_rle(a["segmentation"], p + ".segmentation", h, w);
        any = true;
    }
    if (a.contains("keypoints")) {
        if (kp_count == 0) fail(p + ".keypoints", "category has no keypoints");
        check_keypoints(a["keypoints"], kp_count, p + ".keypoints");
        any = true;
    }
    if (!any) fail(p, "needs bbox, segmentation or keypoints");
    if (a.contains("score")) {
        const double s = get_number(a["score"], p + ".score");
        if (s < 0.0 || s > 1.0) fail(p + ".score", "must lie in [0, 1]");
    }
    if (a.contains("area") && get_number(a["area"], p + ".area") < 0.0) fail(p + ".area", "negative");
    if (a.contains("iscrowd")) {
        const auto c = get_int(a["iscrowd"], p + ".iscrowd");
        if (c != 0) fail(p + ".iscrowd", "crowd regions are not supported");
    }
    if (a.contains("num_keypoints")) get_int(a["num_keypoints"], p + ".num_keypoints");
    if (a.contains("instance_id")) get_int(a["instance_id"], p + ".instance_id");
    if (a.contains("source")) {
        if (!a["source"].is_string() || !source_names().count(a["source"].get<std::string>()))
            fail(p + ".source", "unknown source");
    }
    if (a.contains("quality_flags")) {
        const json& f = a["quality_flags"];
        if (!f.is_array()) fail(p + ".quality_flags", "expected an array");
        for (const json& s : f)
            if (!s.is_string() || !flag_names().count(s.get<std::string>()))
                fail(p + ".quality_flags", "unknown flag");
    }
}

Keypoints keypoints_from_json(const json& kp) {
    Keypoints k;
    for (std::size_t i = 0; i < 3; ++i)
        k[i] = {kp[3 * i].get<double>(), kp[3 * i + 1].get<double>(), kp[3 * i + 2].get<int>()};
    return k;
}

Detection record_from_json(const json& a) {
    Detection d;
    d.id = a.value("id", std::int64_t{0});
    d.image_id = a.at("image_id").get<int>();
    d.category_id = a.at("category_id").get<int>();
    d.score = a.value("score", 1.0);
    if (a.contains("bbox")) {
        const json& b = a["bbox"];
        d.bbox = BoundingBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    }
    if (a.contains("segmentation")) d.mask = rle_from_json(a["segmentation"]);
    if (a.contains("keypoints")) d.keypoints = keypoints_from_json(a["keypoints"]);
    if (a.contains("area"))
        d.area = a["area"].get<double>();
    else if (d.mask)
        d.area = static_cast<double>(rle_area(*d.mask));
    else if (d.bbox)
        d.area = d.bbox->area();
    d.instance_id = a.value("instance_id", std::int64_t{-1});
    d.source = a.value("source", std::string{});
    if (a.contains("quality_flags")) d.quality_flags = a["quality_flags"].get<std::vector<std::string>>();
    return d;
}

Detection make_record(std::int64_t id, int image_id, int category, const BinaryMask& mask) {
    Detection d;
    d.id = id;
    d.image_id = image_id;
    d.category_id = category;
    d.bbox = bounding_box(mask);
    d.mask = encode_rle(mask);
    d.area = static_cast<double>(area(mask));
    return d;
}

}  // namespace

const char* to_string(Source s) {
    switch (s) {
        case Source::CvPipeline: return "cv_pipeline";
        case Source::Synthetic: return "synthetic";
        case Source::Augmented: return "augmented";
    }
    return "?";
}

std::vector<std::string> quality_flag_names(unsigned flags) {
    std::vector<std::string> out;
    if (flags & kSmoothed) out.emplace_back("smoothed");
    if (flags & kTrimmed) out.emplace_back("trimmed");
    if (flags & kCornerSnapped) out.emplace_back("corner_snapped");
    return out;
}

std::vector<CocoCategory> coco_categories(DocumentKind kind) {
    if (kind == DocumentKind::Keypoints)
        return {{1, "rat", {Keypoints::names.begin(), Keypoints::names.end()}}};
    return {{1, "head", {}}, {2, "body", {}}, {3, "tail", {}}};
}

CocoDocument make_document(DocumentKind kind, const json& info) {
    CocoDocument doc;
    doc.info = info.is_object() ? info : json::object();
    doc.info["schema_version"] = kSchemaVersion;
    doc.info["document"] = kind == DocumentKind::Keypoints ? "keypoints" : "parts";
    doc.categories = coco_categories(kind);
    return doc;
}

void add_instances(CocoDocument& kdoc, CocoDocument& pdoc, const CocoImage& image,
                   const std::vector<InstanceAnnotation>& instances) {
    auto has_image = [&](const CocoDocument& d) {
        for (const CocoImage& im : d.images)
            if (im.id == image.id) return true;
        return false;
    };
    if (!has_image(kdoc)) kdoc.images.push_back(image);
    if (!has_image(pdoc)) pdoc.images.push_back(image);
    for (const InstanceAnnotation& inst : instances) {
        Detection d = make_record(static_cast<std::int64_t>(kdoc.annotations.size()) + 1, image.id, 1,
                                  inst.mask);
        d.bbox = inst.bbox;
        d.keypoints = inst.keypoints;
        d.source = to_string(inst.source);
        d.quality_flags = quality_flag_names(inst.quality_flags);
        kdoc.annotations.push_back(d);
        if (!inst.parts.same_shape(inst.mask)) continue;
        for (std::int32_t label = 1; label <= 3; ++label) {
            const BinaryMask part = mask_from_label(inst.parts, label);
            if (area(part) == 0) continue;
            Detection p = make_record(static_cast<std::int64_t>(pdoc.annotations.size()) + 1, image.id,
                                      label, part);
            p.instance_id = d.id;
            p.source = d.source;
            pdoc.annotations.push_back(std::move(p));
        }
    }
}

json to_json(const Detection& d) {
    json a = {{"id", d.id}, {"image_id", d.image_id}, {"category_id", d.category_id},
              {"iscrowd", 0}, {"area", d.area}, {"score", d.score}};
    if (d.bbox) a["bbox"] = {d.bbox->x, d.bbox->y, d.bbox->w, d.bbox->h};
    if (d.mask) a["segmentation"] = to_json(*d.mask);
    if (d.keypoints) {
        json kp = json::array();
        int labeled = 0;
        for (std::size_t i = 0; i < 3; ++i) {
            const Keypoint& k = (*d.keypoints)[i];
            if (k.visibility == 0) {
                kp.insert(kp.end(), {0, 0, 0});
                continue;
            }
            ++labeled;
            kp.insert(kp.end(), {k.x, k.y, k.visibility});
        }
        a["keypoints"] = kp;
        a["num_keypoints"] = labeled;
    }
    if (d.instance_id >= 0) a["instance_id"] = d.instance_id;
    if (!d.source.empty()) a["source"] = d.source;
    if (!d.quality_flags.empty()) a["quality_flags"] = d.quality_flags;
    return a;
}

json to_json(const CocoDocument& doc) {
    json j;
    j["info"] = doc.info;
    j["images"] = json::array();
    for (const CocoImage& im : doc.images)
        j["images"].push_back(
            {{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
    j["categories"] = json::array();
    for (const CocoCategory& c : doc.categories) {
        json cj = {{"id", c.id}, {"name", c.name}, {"supercategory", "rat"}};
        if (!c.keypoints.empty()) {
            cj["keypoints"] = c.keypoints;
            cj["skeleton"] = {{1, 2}, {2, 3}};
        }
        j["categories"].push_back(cj);
    }
    j["annotations"] = json::array();
    for (const Detection& d : doc.annotations) j["annotations"].push_back(to_json(d));
    return j;
}

void validate_coco(const json& j) {
    if (!j.is_object()) fail("$", "expected an object");
    if (j.contains("info") && !j["info"].is_object()) fail("$.info", "expected an object");
    for (const char* key : {"images", "categories", "annotations"})
        if (!field(j, key, "$").is_array()) fail(std::string("$.") + key, "expected an array");

    std::unordered_map<std::int64_t, std::pair<int, int>> images;
    const json& ims = j["images"];
    for (std::size_t i = 0; i < ims.size(); ++i) {
        const std::string p = "$.images[" + std::to_string(i) + "]";
        const json& im = ims[i];
        if (!im.is_object()) fail(p, "expected an object");
        const auto id = get_int(field(im, "id", p), p + ".id");
        if (!field(im, "file_name", p).is_string()) fail(p + ".file_name", "expected a string");
        const auto w = get_int(field(im, "width", p), p + ".width");
        const auto h = get_int(field(im, "height", p), p + ".height");
        if (w <= 0 || h <= 0) fail(p, "image size must be positive");
        if (!images.emplace(id, std::pair<int, int>{static_cast<int>(h), static_cast<int>(w)}).second)
            fail(p + ".id", "duplicate image id");
    }

    std::unordered_map<std::int64_t, CategoryInfo> cats;
    const json& cs = j["categories"];
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const std::string p = "$.categories[" + std::to_string(i) + "]";
        const json& c = cs[i];
        if (!c.is_object()) fail(p, "expected an object");
        const auto id = get_int(field(c, "id", p), p + ".id");
        if (!field(c, "name", p).is_string()) fail(p + ".name", "expected a string");
        CategoryInfo info;
        if (c.contains("keypoints")) {
            if (!c["keypoints"].is_array()) fail(p + ".keypoints", "expected an array");
            for (const json& k : c["keypoints"])
                if (!k.is_string()) fail(p + ".keypoints", "expected strings");
            info.keypoint_count = c["keypoints"].size();
        }
        if (!cats.emplace(id, info).second) fail(p + ".id", "duplicate category id");
    }

    std::set<std::int64_t> ids;
    const json& as = j["annotations"];
    for (std::size_t i = 0; i < as.size(); ++i) {
        const std::string p = "$.annotations[" + std::to_string(i) + "]";
        check_record(as[i], p, &images, &cats);
        const auto id = get_int(field(as[i], "id", p), p + ".id");
        if (!ids.insert(id).second) fail(p + ".id", "duplicate annotation id");
    }
}

CocoDocument coco_from_json(const json& j) {
    validate_coco(j);
    CocoDocument doc;
    if (j.contains("info")) doc.info = j["info"];
    for (const json& im : j["images"])
        doc.images.push_back({im["id"].get<int>(), im["file_name"].get<std::string>(),
                              im["width"].get<int>(), im["height"].get<int>()});
    for (const json& c : j["categories"]) {
        CocoCategory cat{c["id"].get<int>(), c["name"].get<std::string>(), {}};
        if (c.contains("keypoints")) cat.keypoints = c["keypoints"].get<std::vector<std::string>>();
        doc.categories.push_back(std::move(cat));
    }
    for (const json& a : j["annotations"]) doc.annotations.push_back(record_from_json(a));
    return doc;
}

std::vector<Detection> detections_from_json(const json& j) {
    if (j.is_object()) return coco_from_json(j).annotations;
    if (!j.is_array()) fail("$", "expected a results array or a document");
    std::vector<Detection> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = "$[" + std::to_string(i) + "]";
        check_record(j[i], p, nullptr, nullptr);
        if (!j[i].contains("score")) fail(p, "missing \"score\"");
        Detection d = record_from_json(j[i]);
        if (!j[i].contains("id")) d.id = static_cast<std::int64_t>(i) + 1;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<InstanceAnnotation> instances_for_image(const CocoDocument& kdoc, const CocoDocument* pdoc,
                                                    int image_id) {
    std::vector<InstanceAnnotation> out;
    for (const Detection& d : kdoc.annotations) {
        if (d.image_id != image_id) continue;
        if (!d.mask) throw Error(ErrorCode::SchemaError, "instance has no segmentation");
        InstanceAnnotation a;
        a.mask = decode_rle(*d.mask);
        a.bbox = d.bbox ? *d.bbox : bounding_box(a.mask);
        if (d.keypoints) a.keypoints = *d.keypoints;
        a.source = d.source == "synthetic"   ? Source::Synthetic
                   : d.source == "augmented" ? Source::Augmented
                                             : Source::CvPipeline;
        for (const std::string& f : d.quality_flags) {
            if (f == "smoothed") a.quality_flags |= kSmoothed;
            if (f == "trimmed") a.quality_flags |= kTrimmed;
            if (f == "corner_snapped") a.quality_flags |= kCornerSnapped;
        }
        a.parts = LabelMap(a.mask.width(), a.mask.height(), 0);
        if (pdoc)
            for (const Detection& p : pdoc->annotations) {
                if (p.instance_id != d.id || p.image_id != image_id || !p.mask) continue;
                const BinaryMask pm = decode_rle(*p.mask);
                if (!pm.same_shape(a.mask)) throw Error(ErrorCode::SchemaError, "part mask size differs");
                for (std::size_t k = 0; k < pm.size(); ++k)
                    if (pm[k] && a.mask[k]) a.parts[k] = p.category_id;
            }
        out.push_back(std::move(a));
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << j.dump() << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

}  // namespace ratseg
