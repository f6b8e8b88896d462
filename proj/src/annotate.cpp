#include "ratseg/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "ratseg/spline.hpp"

namespace ratseg {

namespace {

constexpr std::array<int, 8> kDx{-1, 0, 1, -1, 1, -1, 0, 1};
constexpr std::array<int, 8> kDy{-1, -1, -1, 0, 0, 1, 1, 1};

constexpr std::int32_t lab(PartLabel p) { return static_cast<std::int32_t>(p); }

bool lex_less(Pixel a, Pixel b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

std::vector<double> radius_profile(std::span<const Pixel> nodes, const DistanceMap& dist) {
    std::vector<double> v(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = dist(nodes[i].x, nodes[i].y);
    return v;
}

// Moving average over +-2 nodes, truncated at the ends.
std::vector<double> smoothed_profile(std::span<const Pixel> nodes, const DistanceMap& dist) {
    const std::vector<double> v = radius_profile(nodes, dist);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v.size());
    std::vector<double> s(v.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        int cnt = 0;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
            sum += v[static_cast<std::size_t>(j)];
            ++cnt;
        }
        s[static_cast<std::size_t>(i)] = sum / cnt;
    }
    return s;
}

// Walks from the skeleton end along the local midline direction and returns
// the last mask pixel before leaving the shape.
Point2 extend_to_boundary(const BinaryMask& mask, std::span<const Pixel> nodes, bool at_front) {
    const std::size_t n = nodes.size();
    const std::size_t back = std::min<std::size_t>(8, n - 1);
    const Pixel tip = at_front ? nodes[0] : nodes[n - 1];
    const Pixel ref = at_front ? nodes[back] : nodes[n - 1 - back];
    double dx = tip.x - ref.x;
    double dy = tip.y - ref.y;
    const double len = std::hypot(dx, dy);
    Point2 last{static_cast<double>(tip.x), static_cast<double>(tip.y)};
    if (len == 0.0) return last;
    dx /= len;
    dy /= len;
    for (double t = 0.5;; t += 0.5) {
        const int x = static_cast<int>(std::lround(tip.x + t * dx));
        const int y = static_cast<int>(std::lround(tip.y + t * dy));
        if (!mask.contains(x, y) || !mask(x, y)) break;
        last = {static_cast<double>(x), static_cast<double>(y)};
    }
    return last;
}

// Non-largest islands of each part take the most common neighbouring label.
void merge_part_islands(LabelMap& parts) {
    for (int pass = 0; pass < 3; ++pass) {
        bool changed = false;
        for (std::int32_t l = 1; l <= 3; ++l) {
            const LabelMap comp = connected_components(mask_from_label(parts, l));
            if (label_count(comp) <= 1) continue;
            const int k = label_count(comp);
            std::vector<std::array<int, 4>> votes(static_cast<std::size_t>(k) + 1, {0, 0, 0, 0});
            for (int y = 0; y < parts.height(); ++y)
                for (int x = 0; x < parts.width(); ++x) {
                    const std::int32_t c = comp(x, y);
                    if (c < 2) continue;
                    for (int d = 0; d < 8; ++d) {
                        const int nx = x + kDx[d], ny = y + kDy[d];
                        if (!parts.contains(nx, ny)) continue;
                        const std::int32_t o = parts(nx, ny);
                        if (o != 0 && o != l) ++votes[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
                    }
                }
            for (std::size_t i = 0; i < parts.size(); ++i) {
                const std::int32_t c = comp[i];
                if (c < 2) continue;
                const auto& v = votes[static_cast<std::size_t>(c)];
                std::int32_t best = 0;
                for (std::int32_t o = 1; o <= 3; ++o)
                    if (v[static_cast<std::size_t>(o)] > (best ? v[static_cast<std::size_t>(best)] : 0)) best = o;
                if (best != 0) {
                    parts[i] = best;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
}

Point2 offset_point(Point2 p, int dx, int dy) { return {p.x + dx, p.y + dy}; }

}  // namespace

void AnnotationConfig::validate() const {
    if (closing_radius < 0) throw Error(ErrorCode::InvalidArgument, "closing_radius must be >= 0");
    if (!(solidity_min <= solidity_max))
        throw Error(ErrorCode::InvalidArgument, "solidity bounds are not ordered");
    if (!(tail_ratio_min <= tail_ratio_max))
        throw Error(ErrorCode::InvalidArgument, "tail ratio bounds are not ordered");
    if (spline_degree < 1) throw Error(ErrorCode::InvalidArgument, "spline_degree must be >= 1");
    if (spline_smoothing_per_length < 0.0)
        throw Error(ErrorCode::InvalidArgument, "spline smoothing must be >= 0");
    if (residual_threshold < 0) throw Error(ErrorCode::InvalidArgument, "residual_threshold must be >= 0");
    if (!(max_side_branch_fraction > 0.0))
        throw Error(ErrorCode::InvalidArgument, "max_side_branch_fraction must be > 0");
    if (corner_k < 1) throw Error(ErrorCode::InvalidArgument, "corner_k must be >= 1");
    if (corner_snap_radius < 0.0) throw Error(ErrorCode::InvalidArgument, "corner_snap_radius must be >= 0");
}

const char* to_string(RejectionReason r) {
    switch (r) {
        case RejectionReason::TooSmall: return "too_small";
        case RejectionReason::NonConvexityGate: return "non_convexity_gate";
        case RejectionReason::TooFewEndpoints: return "too_few_endpoints";
        case RejectionReason::TailRatioInvalid: return "tail_ratio_invalid";
        case RejectionReason::DegenerateSkeleton: return "degenerate_skeleton";
    }
    return "unknown";
}

BinaryMask smooth_boundary(const BinaryMask& mask, const AnnotationConfig& cfg) {
    const Contour contour = trace_boundary(mask);
    const double length = polygon_perimeter(contour);
    const SplineFit fit = fit_closed_bspline(contour, cfg.spline_degree,
                                             cfg.spline_smoothing_per_length * length);
    const std::size_t count = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(2.0 * length)));
    Contour curve = fit.curve.sample(count);

    // The penalty shrinks convex loops; offset back to the traced area. The
    // traced points are pixel centers, so the region reaches half a pixel
    // further out.
    const double orient = polygon_area(curve) >= 0.0 ? 1.0 : -1.0;
    const double shrink = (std::abs(polygon_area(contour)) - std::abs(polygon_area(curve))) /
                          std::max(1.0, polygon_perimeter(curve));
    const double offset = 0.5 + shrink;
    Contour shifted(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const Point2& a = curve[(i + curve.size() - 1) % curve.size()];
        const Point2& b = curve[(i + 1) % curve.size()];
        double tx = b.x - a.x, ty = b.y - a.y;
        const double tl = std::hypot(tx, ty);
        if (tl > 0.0) {
            tx /= tl;
            ty /= tl;
        }
        shifted[i] = {curve[i].x + offset * orient * ty, curve[i].y - offset * orient * tx};
    }

    BinaryMask out;
    try {
        out = rasterize_polygon(shifted, mask.width(), mask.height());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegeneratePolygon)
            throw Error(ErrorCode::SplineFitFailure, "smoothed boundary is degenerate");
        throw;
    }
    out = fill_holes(largest_component(out));
    const double a0 = static_cast<double>(area(mask));
    const double a1 = static_cast<double>(area(out));
    if (a1 == 0.0 || std::abs(a1 - a0) > 0.15 * a0)
        throw Error(ErrorCode::SplineFitFailure, "smoothing changed the area by more than 15%");
    return out;
}

PreprocessResult preprocess(const BinaryMask& raw_mask, const AnnotationConfig& cfg) {
    BinaryMask m = raw_mask;
    if (cfg.clean_mask) {
        m = fill_holes(m);
        m = morphological_closing(m, cfg.closing_radius);
        m = remove_small_components(m, cfg.min_component_area);
    }
    m = largest_component(m);
    if (area(m) == 0 || area(m) < cfg.min_component_area) return RejectionReason::TooSmall;
    const double s = solidity(m);
    if (s < cfg.solidity_min || s > cfg.solidity_max) return RejectionReason::NonConvexityGate;
    try {
        return smooth_boundary(m, cfg);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SplineFitFailure) return RejectionReason::DegenerateSkeleton;
        throw;
    }
}

EndpointClasses classify_endpoints(const DistanceMap& dist, const BinaryMask& mask, Pixel q,
                                   Pixel r) {
    if (q == r) throw Error(ErrorCode::InvalidArgument, "classify_endpoints: q == r");
    const Pixel first = lex_less(q, r) ? q : r;
    const Pixel second = lex_less(q, r) ? r : q;
    LabelMap markers(mask.width(), mask.height(), 0);
    markers(first.x, first.y) = 1;
    markers(second.x, second.y) = 2;
    const LabelMap basins = watershed(negated_distance_elevation(dist), markers, mask);
    const std::vector<std::size_t> areas = label_areas(basins);
    const std::size_t a1 = areas.size() > 1 ? areas[1] : 0;
    const std::size_t a2 = areas.size() > 2 ? areas[2] : 0;
    bool first_is_head = a1 > a2;
    if (a1 == a2) first_is_head = dist(first.x, first.y) >= dist(second.x, second.y);
    return first_is_head ? EndpointClasses{first, second} : EndpointClasses{second, first};
}

std::size_t find_tail_base(std::span<const Pixel> path, const DistanceMap& dist) {
    if (path.size() < 5) throw Error(ErrorCode::PathTooShort, "path has fewer than 5 nodes");
    const std::vector<double> v = radius_profile(path, dist);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double m = (n % 2) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    std::size_t above_after = 0;
    // Nodes at the median are neutral, so a flat profile splits at 0.
    for (double x : v)
        if (x > m) ++above_after;
    std::size_t below_before = 0;
    std::size_t best = 0;
    std::size_t best_cost = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cost = below_before + above_after;
        if (cost < best_cost) {
            best_cost = cost;
            best = i;
        }
        if (v[i] < m) ++below_before;
        if (v[i] > m) --above_after;
    }
    return best;
}

double tail_ratio(std::span<const Pixel> path, std::size_t tail_base_index) {
    if (path.empty() || tail_base_index >= path.size())
        throw Error(ErrorCode::InvalidArgument, "tail_base index outside path");
    const double body = chain_length(path, 0, tail_base_index).value();
    const double tail = chain_length(path, tail_base_index, path.size() - 1).value();
    if (body == 0.0) return std::numeric_limits<double>::infinity();
    return tail / body;
}

bool validate_tail_ratio(std::span<const Pixel> path, std::size_t tail_base_index,
                         const AnnotationConfig& cfg) {
    const double r = tail_ratio(path, tail_base_index);
    return r >= cfg.tail_ratio_min && r <= cfg.tail_ratio_max;
}

std::vector<int> nearest_path_node(const BinaryMask& mask, std::span<const Pixel> nodes) {
    std::vector<int> out(mask.size(), -1);
    if (nodes.empty()) return out;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y)) continue;
            long best = std::numeric_limits<long>::max();
            int arg = -1;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const long dx = nodes[i].x - x;
                const long dy = nodes[i].y - y;
                const long d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    arg = static_cast<int>(i);
                }
            }
            out[mask.index(x, y)] = arg;
        }
    return out;
}

LabelMap segment_parts(const BinaryMask& mask, const DistanceMap& dist, const Keypoints& kps,
                       const Midline& midline) {
    auto kp_pixel = [&](const Keypoint& k) {
        const Pixel p{static_cast<int>(std::lround(k.x)), static_cast<int>(std::lround(k.y))};
        if (!mask.contains(p.x, p.y) || !mask(p.x, p.y))
            throw Error(ErrorCode::KeypointOutsideMask, "keypoint outside mask");
        return p;
    };
    const Pixel head = kp_pixel(kps.head);
    const Pixel base = kp_pixel(kps.tail_base);
    const Pixel tip = kp_pixel(kps.tail_end);

    const std::vector<Pixel>& nodes = midline.nodes;
    const std::size_t n = nodes.size();
    LabelMap markers(mask.width(), mask.height(), 0);
    if (n > 0) {
        const std::size_t tb = std::min(midline.tail_base, n - 1);
        const std::vector<double> s = smoothed_profile(nodes, dist);
        // Seeds climb from the keypoints to the nearest radius maxima so each
        // basin starts from the deep part of its lobe.
        std::size_t h = 0;
        while (h + 1 < n && s[h + 1] >= s[h]) ++h;
        std::size_t b = tb;
        while (b > 0 && s[b - 1] >= s[b]) --b;
        std::ptrdiff_t head_end = static_cast<std::ptrdiff_t>(h);
        if (head_end >= static_cast<std::ptrdiff_t>(tb)) head_end = static_cast<std::ptrdiff_t>(tb) - 1;
        const std::size_t body_begin = std::max<std::size_t>(b, static_cast<std::size_t>(head_end + 1));
        for (std::size_t i = 0; i < n; ++i) {
            std::int32_t l = 0;
            if (static_cast<std::ptrdiff_t>(i) <= head_end) l = lab(PartLabel::Head);
            else if (i >= body_begin && i <= tb) l = lab(PartLabel::Body);
            else if (i > tb) l = lab(PartLabel::Tail);
            if (l) markers(nodes[i].x, nodes[i].y) = l;
        }
    }
    markers(head.x, head.y) = lab(PartLabel::Head);
    markers(tip.x, tip.y) = lab(PartLabel::Tail);
    markers(base.x, base.y) = lab(PartLabel::Body);

    LabelMap parts = watershed(negated_distance_elevation(dist), markers, mask);
    if (n > 0) {
        const std::vector<int> near = nearest_path_node(mask, nodes);
        const auto tb = static_cast<int>(std::min(midline.tail_base, n - 1));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (!mask[i]) continue;
            if (near[i] > tb) parts[i] = lab(PartLabel::Tail);
            else if (parts[i] == lab(PartLabel::Tail)) parts[i] = lab(PartLabel::Body);
        }
    }
    for (std::size_t i = 0; i < parts.size(); ++i)
        if (mask[i] && parts[i] == 0) parts[i] = lab(PartLabel::Body);
    merge_part_islands(parts);
    return parts;
}

Point2 snap_keypoint_to_corner(Point2 kp, const Contour& contour, const AnnotationConfig& cfg) {
    std::vector<CurvaturePoint> ext;
    try {
        ext = curvature_extrema(contour, cfg.corner_k, cfg.corner_min_turn_deg);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ContourTooShort) return kp;
        throw;
    }
    for (const CurvaturePoint& c : ext)
        if (std::hypot(c.point.x - kp.x, c.point.y - kp.y) <= cfg.corner_snap_radius) return c.point;
    return kp;
}

LabelMap trim_head_segment(const LabelMap& parts, const Midline& midline, const DistanceMap& dist) {
    const std::size_t n = midline.nodes.size();
    if (n < 3) return parts;
    const std::vector<double> s = smoothed_profile(midline.nodes, dist);
    std::size_t i = 0;
    while (i + 1 < n && s[i + 1] >= s[i]) ++i;
    while (i + 1 < n && s[i + 1] <= s[i]) ++i;
    if (i + 1 >= n) return parts;  // no rise after the dip, so no neck
    const int neck = static_cast<int>(i);

    BinaryMask domain(parts.width(), parts.height(), 0);
    for (std::size_t k = 0; k < parts.size(); ++k) domain[k] = parts[k] == lab(PartLabel::Head);
    const std::vector<int> near = nearest_path_node(domain, midline.nodes);
    LabelMap out = parts;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (domain[k] && near[k] > neck) out[k] = lab(PartLabel::Body);
    return out;
}

InstanceResult annotate_instance(const BinaryMask& raw_mask, const AnnotationConfig& cfg) {
    const PreprocessResult pre = preprocess(raw_mask, cfg);
    if (const auto* r = std::get_if<RejectionReason>(&pre)) return *r;
    const BinaryMask& mask = std::get<BinaryMask>(pre);

    const MedialAxis ma = medial_axis(mask);
    const SkeletonGraph graph = build_skeleton_graph(ma.skeleton, ma.dist);
    if (graph.endpoints.size() < 2) return RejectionReason::TooFewEndpoints;
    SkeletonPath path;
    try {
        path = longest_endpoint_geodesic(graph);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DisconnectedEndpoints) return RejectionReason::DegenerateSkeleton;
        throw;
    }
    if (path.nodes.size() < 5) return RejectionReason::DegenerateSkeleton;
    if (longest_side_branch(graph, path) > cfg.max_side_branch_fraction * path.length.value())
        return RejectionReason::DegenerateSkeleton;

    const EndpointClasses ends =
        classify_endpoints(ma.dist, mask, path.nodes.front(), path.nodes.back());
    if (!(ends.head == path.nodes.front())) std::reverse(path.nodes.begin(), path.nodes.end());

    Midline midline{path.nodes, find_tail_base(path.nodes, ma.dist)};
    if (!validate_tail_ratio(midline.nodes, midline.tail_base, cfg))
        return RejectionReason::TailRatioInvalid;

    InstanceAnnotation ann;
    ann.source = Source::CvPipeline;
    ann.quality_flags = kSmoothed;
    const Pixel hp = midline.nodes.front();
    const Pixel bp = midline.nodes[midline.tail_base];
    const Pixel tp = midline.nodes.back();
    Point2 head{static_cast<double>(hp.x), static_cast<double>(hp.y)};
    Point2 tail{static_cast<double>(tp.x), static_cast<double>(tp.y)};
    if (cfg.extend_endpoints_to_boundary) {
        head = extend_to_boundary(mask, midline.nodes, true);
        tail = extend_to_boundary(mask, midline.nodes, false);
    }
    ann.keypoints.head = {head.x, head.y, 2};
    ann.keypoints.tail_base = {static_cast<double>(bp.x), static_cast<double>(bp.y), 2};
    ann.keypoints.tail_end = {tail.x, tail.y, 2};

    ann.parts = segment_parts(mask, ma.dist, ann.keypoints, midline);

    if (cfg.snap_head_to_corner) {
        const Point2 snapped = snap_keypoint_to_corner(head, trace_boundary(mask), cfg);
        if (!(snapped == head)) {
            ann.keypoints.head.x = snapped.x;
            ann.keypoints.head.y = snapped.y;
            ann.quality_flags |= kCornerSnapped;
        }
    }
    if (cfg.trim_protruding) {
        LabelMap trimmed = trim_head_segment(ann.parts, midline, ma.dist);
        if (!(trimmed == ann.parts)) {
            ann.parts = std::move(trimmed);
            ann.quality_flags |= kTrimmed;
        }
    }
    ann.mask = mask;
    ann.bbox = bounding_box(mask);
    return ann;
}

FrameAnnotations annotate_foreground(const BinaryMask& foreground, const AnnotationConfig& cfg) {
    cfg.validate();
    const LabelMap labels = connected_components(foreground, Connectivity::Eight);
    const int n = label_count(labels);
    const int w = foreground.width();
    const int h = foreground.height();

    struct Box {
        int x0, y0, x1, y1;
    };
    std::vector<Box> boxes(static_cast<std::size_t>(n), Box{w, h, -1, -1});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::int32_t l = labels(x, y);
            if (!l) continue;
            Box& b = boxes[static_cast<std::size_t>(l - 1)];
            b.x0 = std::min(b.x0, x);
            b.y0 = std::min(b.y0, y);
            b.x1 = std::max(b.x1, x);
            b.y1 = std::max(b.y1, y);
        }

    const int margin = cfg.closing_radius + 2;
    std::vector<InstanceResult> results(static_cast<std::size_t>(n), RejectionReason::TooSmall);
    std::vector<BinaryMask> raws(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < n; ++c) try {
        const Box& b = boxes[static_cast<std::size_t>(c)];
        const int x0 = std::max(0, b.x0 - margin);
        const int y0 = std::max(0, b.y0 - margin);
        const int x1 = std::min(w - 1, b.x1 + margin);
        const int y1 = std::min(h - 1, b.y1 + margin);
        BinaryMask local(x1 - x0 + 1, y1 - y0 + 1, 0);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) local(x - x0, y - y0) = labels(x, y) == c + 1;

        InstanceResult r = annotate_instance(local, cfg);
        if (auto* ann = std::get_if<InstanceAnnotation>(&r)) {
            InstanceAnnotation full;
            full.mask = BinaryMask(w, h, 0);
            paste(full.mask, ann->mask, x0, y0);
            full.parts = LabelMap(w, h, 0);
            paste(full.parts, ann->parts, x0, y0);
            full.bbox = bounding_box(full.mask);
            full.keypoints = ann->keypoints;
            for (std::size_t k = 0; k < 3; ++k) {
                const Point2 p = offset_point({full.keypoints[k].x, full.keypoints[k].y}, x0, y0);
                full.keypoints[k].x = p.x;
                full.keypoints[k].y = p.y;
            }
            full.source = ann->source;
            full.quality_flags = ann->quality_flags;
            results[static_cast<std::size_t>(c)] = std::move(full);
        } else {
            results[static_cast<std::size_t>(c)] = r;
            BinaryMask raw(w, h, 0);
            paste(raw, local, x0, y0);
            raws[static_cast<std::size_t>(c)] = std::move(raw);
        }
    } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    FrameAnnotations out;
    for (std::size_t c = 0; c < results.size(); ++c) {
        if (auto* ann = std::get_if<InstanceAnnotation>(&results[c]))
            out.accepted.push_back(std::move(*ann));
        else
            out.rejected.push_back({std::move(raws[c]), std::get<RejectionReason>(results[c])});
    }
    return out;
}

FrameAnnotations annotate_frame(const ImageRgb& frame, const BackgroundModel& bg,
                                const AnnotationConfig& cfg) {
    if (!frame.same_shape(bg.background))
        throw Error(ErrorCode::DimensionMismatch, "frame and background differ in size");
    return annotate_foreground(binarize(extract_foreground(frame, bg), cfg.residual_threshold), cfg);
}

}  // namespace ratseg
