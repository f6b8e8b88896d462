// Command-line front end: background, annotate, augment, evaluate, overlay,
// synth and ablate.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "ratseg/ablation.hpp"
#include "ratseg/augment.hpp"
#include "ratseg/background.hpp"
#include "ratseg/coco.hpp"
#include "ratseg/config.hpp"
#include "ratseg/evalmetrics.hpp"
#include "ratseg/image_io.hpp"
#include "ratseg/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ratseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitDimension = 3;
constexpr int kExitSchema = 4;
constexpr int kExitNoInput = 5;

constexpr const char* kFramePattern = "frame_*.png";

// Exit-code carrying failure raised by the commands themselves.
struct Exit {
    int code;
    std::string message;
};

void log_line(const json& j) { std::cerr << j.dump() << '\n'; }

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw Error(ErrorCode::Io, "no such file: " + path);
}

void require_dir(const std::string& path) {
    if (!fs::is_directory(path)) throw Error(ErrorCode::Io, "no such directory: " + path);
}

void make_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + path + ": " + ec.message());
}

RunConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    require_file(path);
    return run_config_from_json(read_json_file(path));
}

void set_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

// Per-index results filled by a parallel loop; the first exception (in index
// order) is rethrown afterwards.
template <class F>
void parallel_for_ordered(std::size_t n, F f) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// --- background --------------------------------------------------------------

struct BackgroundArgs {
    std::string frames;
    std::string out;
    std::string pattern = kFramePattern;
    int stride = 1;
};

int cmd_background(const BackgroundArgs& a) {
    require_dir(a.frames);
    if (a.stride < 1) throw Error(ErrorCode::InvalidArgument, "--stride must be >= 1");
    const auto files = io::list_frames(a.frames, a.pattern);
    std::vector<fs::path> used;
    for (std::size_t i = 0; i < files.size(); i += static_cast<std::size_t>(a.stride)) used.push_back(files[i]);
    if (used.empty()) throw Exit{kExitIo, "no frames match " + a.pattern + " in " + a.frames};
    FrameSequence frames(used.size());
    parallel_for_ordered(used.size(), [&](std::size_t i) { frames[i] = io::read_png_rgb(used[i]); });
    const BackgroundModel bg = estimate_background(frames);
    io::write_png_rgb(a.out, bg.background);
    const json meta = {{"schema_version", kSchemaVersion},
                       {"frames", bg.frame_count},
                       {"frames_available", files.size()},
                       {"stride", a.stride},
                       {"width", bg.background.width()},
                       {"height", bg.background.height()}};
    write_json_file(a.out + ".json", meta);
    std::cout << json{{"command", "background"}, {"frames", bg.frame_count}, {"out", a.out}}.dump() << '\n';
    return kExitOk;
}

// --- annotate ----------------------------------------------------------------

struct AnnotateArgs {
    std::string frames;
    std::string background;
    std::string config;
    std::string out;
    std::string rejects_log;
    std::string pattern = kFramePattern;
    int threads = 0;
};

int cmd_annotate(const AnnotateArgs& a) {
    const RunConfig cfg = load_config(a.config);
    require_dir(a.frames);
    require_file(a.background);
    set_threads(a.threads > 0 ? a.threads : cfg.threads);
    const BackgroundModel bg{io::read_png_rgb(a.background), 1};

    const auto all = io::list_frames(a.frames, a.pattern);
    std::vector<fs::path> files;
    for (std::size_t i = 0; i < all.size(); i += static_cast<std::size_t>(cfg.stride)) files.push_back(all[i]);

    std::vector<FrameAnnotations> results(files.size());
    std::vector<CocoImage> images(files.size());
    parallel_for_ordered(files.size(), [&](std::size_t i) {
        const ImageRgb frame = io::read_png_rgb(files[i]);
        if (!frame.same_shape(bg.background))
            throw Error(ErrorCode::DimensionMismatch, files[i].string() + " does not match the background");
        images[i] = {static_cast<int>(i) + 1, files[i].filename().string(), frame.width(), frame.height()};
        results[i] = annotate_frame(frame, bg, cfg.annotation);
    });

    const json info = {{"generator", "annotate"},
                       {"config", to_json(cfg.annotation)},
                       {"background", a.background},
                       {"stride", cfg.stride}};
    CocoDocument kp = make_document(DocumentKind::Keypoints, info);
    CocoDocument parts = make_document(DocumentKind::Parts, info);
    make_dir(a.out);
    const std::string rejects = a.rejects_log.empty() ? (fs::path(a.out) / "rejects.jsonl").string() : a.rejects_log;
    std::ofstream rlog(rejects);
    if (!rlog) throw Error(ErrorCode::Io, "cannot write " + rejects);

    std::map<std::string, std::size_t> by_reason;
    for (RejectionReason r : {RejectionReason::TooSmall, RejectionReason::NonConvexityGate,
                              RejectionReason::TooFewEndpoints, RejectionReason::TailRatioInvalid,
                              RejectionReason::DegenerateSkeleton})
        by_reason[to_string(r)] = 0;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        add_instances(kp, parts, images[i], results[i].accepted);
        accepted += results[i].accepted.size();
        for (const Rejection& rj : results[i].rejected) {
            ++by_reason[to_string(rj.reason)];
            const BoundingBox b = bounding_box(rj.mask);
            rlog << json{{"image_id", images[i].id},
                         {"file_name", images[i].file_name},
                         {"reason", to_string(rj.reason)},
                         {"area", area(rj.mask)},
                         {"bbox", {b.x, b.y, b.w, b.h}}}
                        .dump()
                 << '\n';
        }
    }
    write_json_file((fs::path(a.out) / "keypoints.json").string(), to_json(kp));
    write_json_file((fs::path(a.out) / "parts.json").string(), to_json(parts));
    std::size_t rejected = 0;
    for (const auto& [k, v] : by_reason) rejected += v;
    std::cout << json{{"command", "annotate"},
                      {"frames", files.size()},
                      {"accepted", accepted},
                      {"rejected", rejected},
                      {"rejected_by_reason", by_reason}}
                     .dump()
              << '\n';
    return kExitOk;
}

// --- augment -----------------------------------------------------------------

struct AugmentArgs {
    std::string frames;
    std::string annotations;
    std::string parts;
    std::string background;
    std::string config;
    std::string out;
    int n = 1;
    std::optional<std::uint64_t> seed;
};

constexpr int kSampleRetries = 10;

int cmd_augment(const AugmentArgs& a) {
    const RunConfig cfg = load_config(a.config);
    require_dir(a.frames);
    require_file(a.annotations);
    require_file(a.background);
    if (!a.parts.empty()) require_file(a.parts);
    if (a.n < 0) throw Error(ErrorCode::InvalidArgument, "--n must be >= 0");
    const CocoDocument kdoc = coco_from_json(read_json_file(a.annotations));
    std::optional<CocoDocument> pdoc;
    if (!a.parts.empty()) pdoc = coco_from_json(read_json_file(a.parts));
    const BackgroundModel bg{io::read_png_rgb(a.background), 1};
    const std::uint64_t seed = a.seed ? *a.seed : cfg.augment.seed;

    std::map<int, std::size_t> counts;
    for (const Detection& d : kdoc.annotations) ++counts[d.image_id];
    std::vector<const CocoImage*> eligible;
    for (const CocoImage& im : kdoc.images) {
        const fs::path file = fs::path(a.frames) / im.file_name;
        if (counts[im.id] < 2) {
            log_line({{"level", "info"}, {"event", "skip_frame"}, {"file_name", im.file_name},
                      {"reason", "fewer than two instances"}});
            continue;
        }
        if (!fs::is_regular_file(file)) {
            log_line({{"level", "info"}, {"event", "skip_frame"}, {"file_name", im.file_name},
                      {"reason", "frame file missing"}});
            continue;
        }
        eligible.push_back(&im);
    }

    make_dir(a.out);
    const json info = {{"generator", "augment"}, {"seed", seed}, {"config", to_json(cfg.augment)},
                       {"source_annotations", a.annotations}};
    CocoDocument out_kp = make_document(DocumentKind::Keypoints, info);
    CocoDocument out_parts = make_document(DocumentKind::Parts, info);
    std::ofstream prov((fs::path(a.out) / "provenance.jsonl").string());
    if (!prov) throw Error(ErrorCode::Io, "cannot write provenance log");

    if (a.n > 0 && eligible.empty()) throw Exit{kExitNoInput, "no frame has two or more instances"};

    std::map<int, std::pair<ImageRgb, std::vector<InstanceAnnotation>>> cache;
    std::size_t written = 0;
    for (int i = 0; i < a.n; ++i) {
        const std::uint64_t si = derive_seed(seed, static_cast<std::uint64_t>(i));
        Rng pick(si);
        const CocoImage& im = *eligible[static_cast<std::size_t>(
            pick.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
        auto it = cache.find(im.id);
        if (it == cache.end()) {
            ImageRgb frame = io::read_png_rgb(fs::path(a.frames) / im.file_name);
            if (!frame.same_shape(bg.background))
                throw Error(ErrorCode::DimensionMismatch, im.file_name + " does not match the background");
            auto inst = instances_for_image(kdoc, pdoc ? &*pdoc : nullptr, im.id);
            it = cache.emplace(im.id, std::make_pair(std::move(frame), std::move(inst))).first;
        }
        std::optional<AugmentSample> sample;
        for (int k = 0; k < kSampleRetries && !sample; ++k) {
            try {
                sample = synthesize_occlusion_sample(it->second.first, it->second.second, bg, cfg.augment,
                                                     derive_seed(si, static_cast<std::uint64_t>(k) + 1));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::PlacementFailure) throw;
            }
        }
        if (!sample) {
            log_line({{"level", "warn"}, {"event", "sample_failed"}, {"sample", i}, {"file_name", im.file_name}});
            continue;
        }
        const std::string name = frame_name(static_cast<std::size_t>(i));
        io::write_png_rgb(fs::path(a.out) / name, sample->image);
        add_instances(out_kp, out_parts, {i + 1, name, im.width, im.height}, sample->annotations);
        const AugmentDraw& d = sample->draw;
        json shifts = json::array();
        for (const Point2& s : d.keypoint_shift) shifts.push_back({s.x, s.y});
        prov << json{{"sample", i},
                     {"file_name", name},
                     {"source_image_id", im.id},
                     {"source_file", im.file_name},
                     {"seed", d.seed},
                     {"mover", d.mover},
                     {"target", d.target},
                     {"angle_deg", d.angle_deg},
                     {"scale", d.scale},
                     {"keypoint_shift", shifts},
                     {"offset", {d.offset.x, d.offset.y}},
                     {"placement_attempts", d.placement_attempts},
                     {"smoothing", to_string(d.smoothing)}}
                    .dump()
             << '\n';
        ++written;
    }
    write_json_file((fs::path(a.out) / "keypoints.json").string(), to_json(out_kp));
    write_json_file((fs::path(a.out) / "parts.json").string(), to_json(out_parts));
    std::cout << json{{"command", "augment"}, {"samples", written}, {"eligible_frames", eligible.size()}}.dump()
              << '\n';
    return kExitOk;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
    std::string pred;
    std::string gt;
    std::string task = "all";
    std::string out;
    double score_cutoff = 0.7;
};

int cmd_evaluate(const EvaluateArgs& a) {
    EvalTask task;
    try {
        task = eval_task_from_string(a.task);
    } catch (const Error& e) {
        throw Error(ErrorCode::SchemaError, e.what());
    }
    require_file(a.pred);
    require_file(a.gt);
    const CocoDocument gt = coco_from_json(read_json_file(a.gt));
    const std::vector<Detection> pred = detections_from_json(read_json_file(a.pred));
    const EvalReport report = evaluate_dataset(pred, gt, task, OksSigmas{}, a.score_cutoff);
    if (!a.out.empty()) write_json_file(a.out, to_json(report));
    auto ap = [&](const char* m) -> std::optional<double> {
        const MetricReport* r = report.find(m);
        return r ? std::optional<double>(r->ap) : std::nullopt;
    };
    std::cout << format_table({"Task", "Bounding box AP", "Keypoint AP", "Segmentation AP"},
                              {{to_string(task), ap_cell(ap("bbox")), ap_cell(ap("keypoints")), ap_cell(ap("segm"))}});
    return kExitOk;
}

// --- overlay -----------------------------------------------------------------

struct OverlayArgs {
    std::string frames;
    std::string annotations;
    std::string parts;
    std::string out;
    std::string pattern = kFramePattern;
};

const std::array<std::array<int, 3>, 4> kPartColors{{{255, 255, 0}, {255, 0, 0}, {0, 255, 0}, {0, 0, 255}}};
const std::array<std::array<int, 3>, 3> kKeypointColors{{{255, 0, 255}, {0, 255, 255}, {255, 255, 255}}};

void render_overlay(ImageRgb& img, const InstanceAnnotation& inst) {
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (!inst.mask(x, y)) continue;
            const int label = inst.parts.same_shape(inst.mask) ? inst.parts(x, y) : 0;
            const auto& col = kPartColors[static_cast<std::size_t>(std::clamp(label, 0, 3))];
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = static_cast<std::uint8_t>((img.at(x, y, c) + col[static_cast<std::size_t>(c)] + 1) / 2);
        }
    // Crosses stay on mask pixels so nothing outside the instance changes.
    for (std::size_t k = 0; k < 3; ++k) {
        const Keypoint& kp = inst.keypoints[k];
        if (kp.visibility == 0) continue;
        const int cx = static_cast<int>(std::lround(kp.x));
        const int cy = static_cast<int>(std::lround(kp.y));
        for (const auto [dx, dy] : {std::pair{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
            const int x = cx + dx;
            const int y = cy + dy;
            if (!inst.mask.contains(x, y) || !inst.mask(x, y)) continue;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(kKeypointColors[k][static_cast<std::size_t>(c)]);
        }
    }
}

int cmd_overlay(const OverlayArgs& a) {
    require_dir(a.frames);
    require_file(a.annotations);
    if (!a.parts.empty()) require_file(a.parts);
    const CocoDocument kdoc = coco_from_json(read_json_file(a.annotations));
    std::optional<CocoDocument> pdoc;
    if (!a.parts.empty()) pdoc = coco_from_json(read_json_file(a.parts));
    std::map<std::string, int> by_name;
    for (const CocoImage& im : kdoc.images) by_name[im.file_name] = im.id;
    make_dir(a.out);
    const auto files = io::list_frames(a.frames, a.pattern);
    std::size_t rendered = 0;
    for (const fs::path& f : files) {
        const fs::path dst = fs::path(a.out) / f.filename();
        auto it = by_name.find(f.filename().string());
        const auto inst = it == by_name.end() ? std::vector<InstanceAnnotation>{}
                                              : instances_for_image(kdoc, pdoc ? &*pdoc : nullptr, it->second);
        if (inst.empty()) {
            std::error_code ec;
            fs::copy_file(f, dst, fs::copy_options::overwrite_existing, ec);
            if (ec) throw Error(ErrorCode::Io, "cannot copy " + f.string() + ": " + ec.message());
            continue;
        }
        ImageRgb img = io::read_png_rgb(f);
        for (const InstanceAnnotation& i : inst) {
            if (!img.same_shape(i.mask)) throw Error(ErrorCode::DimensionMismatch, f.string() + " does not match its annotation");
            render_overlay(img, i);
        }
        io::write_png_rgb(dst, img);
        ++rendered;
    }
    std::cout << json{{"command", "overlay"}, {"frames", files.size()}, {"rendered", rendered}}.dump() << '\n';
    return kExitOk;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    std::string spec;
    std::string out;
    int n = 10;
    std::uint64_t seed = 0;
    bool sequence = false;
};

SceneSpec load_spec(const std::string& path) {
    if (path.empty()) return {};
    require_file(path);
    return scene_spec_from_json(read_json_file(path));
}

int cmd_synth(const SynthArgs& a) {
    const SceneSpec spec = load_spec(a.spec);
    if (a.n < 0) throw Error(ErrorCode::InvalidArgument, "--n must be >= 0");
    make_dir(a.out);
    const json info = {{"generator", "synth"}, {"seed", a.seed}, {"sequence", a.sequence}, {"spec", to_json(spec)}};
    CocoDocument kp = make_document(DocumentKind::Keypoints, info);
    CocoDocument parts = make_document(DocumentKind::Parts, info);
    std::vector<ImageRgb> frames;
    std::vector<std::vector<GroundTruth>> truths;
    if (a.sequence && a.n > 0) {
        Sequence seq = generate_sequence(spec, a.n, a.seed);
        frames = std::move(seq.frames);
        truths = std::move(seq.truths);
    } else {
        for (int i = 0; i < a.n; ++i) {
            Scene s = generate_scene(spec, derive_seed(a.seed, static_cast<std::uint64_t>(i)));
            frames.push_back(std::move(s.frame));
            truths.push_back(std::move(s.truths));
        }
    }
    io::write_png_rgb(fs::path(a.out) / "background.png", render_background(spec));
    std::size_t instances = 0;
    std::size_t single_blob = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string name = frame_name(i);
        io::write_png_rgb(fs::path(a.out) / name, frames[i]);
        std::vector<InstanceAnnotation> inst;
        BinaryMask uni(spec.width, spec.height, 0);
        for (const GroundTruth& gt : truths[i]) {
            inst.push_back(to_instance(gt));
            uni = mask_or(uni, gt.mask);
        }
        instances += inst.size();
        if (label_count(connected_components(uni)) == 1) ++single_blob;
        add_instances(kp, parts, {static_cast<int>(i) + 1, name, spec.width, spec.height}, inst);
    }
    write_json_file((fs::path(a.out) / "keypoints.json").string(), to_json(kp));
    write_json_file((fs::path(a.out) / "parts.json").string(), to_json(parts));
    std::cout << json{{"command", "synth"},
                      {"frames", frames.size()},
                      {"instances", instances},
                      {"single_blob_frames", single_blob},
                      {"occlusion", to_string(spec.occlusion)}}
                     .dump()
              << '\n';
    return kExitOk;
}

// --- ablate ------------------------------------------------------------------

struct AblateArgs {
    std::string spec;
    std::string config;
    std::string out;
    int n = 20;
    std::uint64_t seed = 0;
};

int cmd_ablate(const AblateArgs& a) {
    const SceneSpec spec = load_spec(a.spec);
    const RunConfig cfg = load_config(a.config);
    const SyntheticDataset data = make_synthetic_dataset(spec, a.n, a.seed);
    const std::vector<AblationRow> rows = run_ablation(data, cfg.annotation);
    if (!a.out.empty()) {
        json j = {{"schema_version", kSchemaVersion}, {"frames", a.n}, {"seed", a.seed},
                  {"spec", to_json(spec)}, {"rows", json::array()}};
        for (const AblationRow& r : rows) j["rows"].push_back(to_json(r));
        write_json_file(a.out, j);
    }
    std::cout << ablation_table(rows);
    return kExitOk;
}

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::Io: return kExitIo;
        case ErrorCode::DimensionMismatch: return kExitDimension;
        case ErrorCode::SchemaError:
        case ErrorCode::UnknownImageId:
        case ErrorCode::InvalidArgument: return kExitSchema;
        case ErrorCode::EmptySequence: return kExitIo;
        case ErrorCode::TooFewInstances: return kExitNoInput;
        default: return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Automatic annotation of top-view rodent video"};
    app.require_subcommand(1);

    BackgroundArgs bg;
    auto* c_bg = app.add_subcommand("background", "Per-pixel temporal mode of a frame directory");
    c_bg->add_option("frames_dir", bg.frames)->required();
    c_bg->add_option("--stride", bg.stride, "Use every n-th frame");
    c_bg->add_option("--pattern", bg.pattern, "Frame file pattern");
    c_bg->add_option("--out", bg.out, "Background PNG")->required();

    AnnotateArgs an;
    auto* c_an = app.add_subcommand("annotate", "Run the annotation pipeline on every frame");
    c_an->add_option("frames_dir", an.frames)->required();
    c_an->add_option("--background", an.background)->required();
    c_an->add_option("--config", an.config, "Run configuration JSON");
    c_an->add_option("--out", an.out, "Output directory")->required();
    c_an->add_option("--rejects-log", an.rejects_log, "JSON-lines rejection log");
    c_an->add_option("--pattern", an.pattern, "Frame file pattern");
    c_an->add_option("--threads", an.threads, "Worker threads (0 = all cores)");

    AugmentArgs au;
    auto* c_au = app.add_subcommand("augment", "Synthesize occlusion samples");
    c_au->add_option("frames_dir", au.frames)->required();
    c_au->add_option("--annotations", au.annotations, "Keypoint document")->required();
    c_au->add_option("--parts", au.parts, "Part document");
    c_au->add_option("--background", au.background)->required();
    c_au->add_option("--config", au.config, "Run configuration JSON");
    c_au->add_option("--n", au.n, "Number of samples");
    std::uint64_t au_seed = 0;
    auto* au_seed_opt = c_au->add_option("--seed", au_seed, "Base seed (default: config augment.seed)");
    c_au->add_option("--out", au.out, "Output directory")->required();

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "COCO-style AP of predictions against ground truth");
    c_ev->add_option("--pred", ev.pred)->required();
    c_ev->add_option("--gt", ev.gt)->required();
    c_ev->add_option("--task", ev.task, "bbox, segm, keypoints, parts or all");
    c_ev->add_option("--out", ev.out, "Report JSON");
    c_ev->add_option("--score-cutoff", ev.score_cutoff, "Score cutoff for the TP/FP/FN counts");

    OverlayArgs ov;
    auto* c_ov = app.add_subcommand("overlay", "Render annotations onto the frames");
    c_ov->add_option("frames_dir", ov.frames)->required();
    c_ov->add_option("--annotations", ov.annotations)->required();
    c_ov->add_option("--parts", ov.parts);
    c_ov->add_option("--pattern", ov.pattern, "Frame file pattern");
    c_ov->add_option("--out", ov.out)->required();

    SynthArgs sy;
    auto* c_sy = app.add_subcommand("synth", "Generate synthetic frames with ground truth");
    c_sy->add_option("--spec", sy.spec, "Scene spec JSON");
    c_sy->add_option("--n", sy.n, "Number of frames");
    c_sy->add_option("--seed", sy.seed);
    c_sy->add_flag("--sequence", sy.sequence, "Random-walk sequence instead of independent scenes");
    c_sy->add_option("--out", sy.out)->required();

    AblateArgs ab;
    auto* c_ab = app.add_subcommand("ablate", "Snap/clean/trim comparison on synthetic frames");
    c_ab->add_option("--spec", ab.spec, "Scene spec JSON");
    c_ab->add_option("--config", ab.config, "Base run configuration JSON");
    c_ab->add_option("--n", ab.n, "Number of frames");
    c_ab->add_option("--seed", ab.seed);
    c_ab->add_option("--out", ab.out, "Result JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSchema;
    }

    try {
        if (*c_bg) return cmd_background(bg);
        if (*c_an) return cmd_annotate(an);
        if (*c_au) {
            if (*au_seed_opt) au.seed = au_seed;
            return cmd_augment(au);
        }
        if (*c_ev) return cmd_evaluate(ev);
        if (*c_ov) return cmd_overlay(ov);
        if (*c_sy) return cmd_synth(sy);
        if (*c_ab) return cmd_ablate(ab);
    } catch (const Exit& e) {
        std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
