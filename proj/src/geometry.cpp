#include "ratseg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

#include "ratseg/kernels.hpp"

namespace ratseg {

namespace {

constexpr std::array<int, 8> kDx{-1, 0, 1, -1, 1, -1, 0, 1};
constexpr std::array<int, 8> kDy{-1, -1, -1, 0, 0, 1, 1, 1};

std::uint8_t at_or_zero(const BinaryMask& m, int x, int y) {
    return m.contains(x, y) ? m(x, y) : 0;
}

// Neighbours P2..P9 clockwise from north, as in the Zhang-Suen formulation.
std::array<std::uint8_t, 8> ring(const BinaryMask& m, int x, int y) {
    return {at_or_zero(m, x, y - 1),     at_or_zero(m, x + 1, y - 1),
            at_or_zero(m, x + 1, y),     at_or_zero(m, x + 1, y + 1),
            at_or_zero(m, x, y + 1),     at_or_zero(m, x - 1, y + 1),
            at_or_zero(m, x - 1, y),     at_or_zero(m, x - 1, y - 1)};
}

bool zs_deletable(const std::array<std::uint8_t, 8>& p, bool first) {
    int b = 0;
    int a = 0;
    for (int i = 0; i < 8; ++i) {
        b += p[i];
        if (!p[i] && p[(i + 1) % 8]) ++a;
    }
    if (b < 2 || b > 6 || a != 1) return false;
    // p[0]=N p[2]=E p[4]=S p[6]=W
    if (first) return !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6]);
    return !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6]);
}

// Ring offsets in the same clockwise order as ring().
constexpr std::array<int, 8> kRingDx{0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kRingDy{-1, -1, 0, 1, 1, 1, 0, -1};

// A set pixel is simple when its set neighbours form one 8-connected group and
// its unset 4-neighbours lie in one 4-connected background group of the ring.
bool is_simple(const std::array<std::uint8_t, 8>& p) {
    auto groups = [&](bool fg) {
        std::array<int, 8> seen{};
        int count = 0;
        for (int s = 0; s < 8; ++s) {
            if ((p[s] != 0) != fg || seen[s]) continue;
            // background groups only count when they touch p 4-adjacently
            bool touches = false;
            std::array<int, 8> stack{};
            int top = 0;
            stack[top++] = s;
            seen[s] = 1;
            while (top) {
                const int c = stack[--top];
                if (c % 2 == 0) touches = true;
                for (int t = 0; t < 8; ++t) {
                    if ((p[t] != 0) != fg || seen[t]) continue;
                    const int dx = std::abs(kRingDx[c] - kRingDx[t]);
                    const int dy = std::abs(kRingDy[c] - kRingDy[t]);
                    const bool adj = fg ? (dx <= 1 && dy <= 1) : (dx + dy == 1);
                    if (adj) {
                        seen[t] = 1;
                        stack[top++] = t;
                    }
                }
            }
            if (fg || touches) ++count;
        }
        return count;
    };
    return groups(true) == 1 && groups(false) == 1;
}

bool sqrt2_less_than_zero(long a, long b) {
    // sign of a + b*sqrt(2) < 0
    if (a <= 0 && b <= 0) return a < 0 || b < 0;
    if (a >= 0 && b >= 0) return false;
    const long double aa = static_cast<long double>(a) * a;
    const long double bb = 2.0L * static_cast<long double>(b) * b;
    return a < 0 ? aa > bb : bb > aa;
}

StepLength step_between(Pixel a, Pixel b) {
    return (a.x != b.x && a.y != b.y) ? StepLength{0, 1} : StepLength{1, 0};
}

}  // namespace

DistanceMap distance_transform(const BinaryMask& mask) {
    DistanceMap out(mask.width(), mask.height(), 0.0);
    if (mask.empty()) return out;
    std::vector<std::int64_t> sq(mask.size());
    kernels::omp::squared_edt(mask.data().data(), mask.width(), mask.height(), sq.data());
    for (std::size_t i = 0; i < sq.size(); ++i) out[i] = std::sqrt(static_cast<double>(sq[i]));
    return out;
}

BinaryMask zhang_suen_thin(const BinaryMask& mask) {
    BinaryMask cur = mask;
    const int w = mask.width();
    const int h = mask.height();
    std::vector<std::size_t> doomed;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            doomed.clear();
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (cur(x, y) && zs_deletable(ring(cur, x, y), pass == 0))
                        doomed.push_back(cur.index(x, y));
            for (std::size_t i : doomed) cur[i] = 0;
            if (!doomed.empty()) changed = true;
        }
    }

    // Staircase cleanup: drop simple non-end pixels so the result is 8-thin.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!cur(x, y)) continue;
            const auto p = ring(cur, x, y);
            int b = 0;
            for (auto v : p) b += v;
            if (b >= 2 && is_simple(p)) cur(x, y) = 0;
        }

    const LabelMap labels = connected_components(mask, Connectivity::Eight);
    const int n = label_count(labels);
    if (n == 0) return cur;
    std::vector<char> alive(static_cast<std::size_t>(n) + 1, 0);
    for (std::size_t i = 0; i < cur.size(); ++i)
        if (cur[i]) alive[static_cast<std::size_t>(labels[i])] = 1;
    if (std::all_of(alive.begin() + 1, alive.end(), [](char a) { return a != 0; })) return cur;

    const DistanceMap dist = distance_transform(mask);
    std::vector<std::ptrdiff_t> deepest(static_cast<std::size_t>(n) + 1, -1);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        if (l == 0 || alive[l]) continue;
        if (deepest[l] < 0 || dist[i] > dist[static_cast<std::size_t>(deepest[l])])
            deepest[l] = static_cast<std::ptrdiff_t>(i);
    }
    for (std::size_t l = 1; l <= static_cast<std::size_t>(n); ++l)
        if (deepest[l] >= 0) cur[static_cast<std::size_t>(deepest[l])] = 1;
    return cur;
}

MedialAxis medial_axis(const BinaryMask& mask) {
    if (area(mask) == 0) throw Error(ErrorCode::EmptyMask, "medial_axis: empty mask");
    return {zhang_suen_thin(mask), distance_transform(mask)};
}

double StepLength::value() const noexcept {
    return static_cast<double>(axial) + static_cast<double>(diagonal) * std::numbers::sqrt2;
}

std::strong_ordering StepLength::operator<=>(const StepLength& o) const noexcept {
    const long a = axial - o.axial;
    const long b = diagonal - o.diagonal;
    if (a == 0 && b == 0) return std::strong_ordering::equal;
    return sqrt2_less_than_zero(a, b) ? std::strong_ordering::less
                                      : std::strong_ordering::greater;
}

int SkeletonGraph::node_at(Pixel p) const noexcept {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) return -1;
    return index_[static_cast<std::size_t>(p.y) * width + p.x];
}

SkeletonGraph build_skeleton_graph(const BinaryMask& skeleton, const DistanceMap& dist) {
    if (!skeleton.same_shape(dist))
        throw Error(ErrorCode::DimensionMismatch, "build_skeleton_graph: shape mismatch");
    SkeletonGraph g;
    g.width = skeleton.width();
    g.height = skeleton.height();
    g.index_.assign(skeleton.size(), -1);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            if (skeleton(x, y)) {
                g.index_[skeleton.index(x, y)] = static_cast<int>(g.nodes.size());
                g.nodes.push_back({x, y});
                g.radii.push_back(dist(x, y));
            }
    g.adjacency.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const Pixel p = g.nodes[i];
        for (int k = 0; k < 8; ++k) {
            const int j = g.node_at({p.x + kDx[k], p.y + kDy[k]});
            if (j >= 0) g.adjacency[i].push_back(j);
        }
        std::sort(g.adjacency[i].begin(), g.adjacency[i].end());
        if (g.adjacency[i].size() == 1) g.endpoints.push_back(static_cast<int>(i));
    }
    return g;
}

StepLength chain_length(std::span<const Pixel> nodes, std::size_t from, std::size_t to) {
    StepLength len;
    for (std::size_t i = from; i < to && i + 1 < nodes.size(); ++i)
        len = len + step_between(nodes[i], nodes[i + 1]);
    return len;
}

SkeletonPath longest_endpoint_geodesic(const SkeletonGraph& g) {
    if (g.endpoints.size() < 2)
        throw Error(ErrorCode::TooFewEndpoints, "skeleton has fewer than two endpoints");

    const std::size_t n = g.nodes.size();
    std::vector<StepLength> dist(n);
    std::vector<char> reached(n);
    std::vector<int> pred(n);

    auto run = [&](int src) {
        std::fill(reached.begin(), reached.end(), 0);
        std::fill(pred.begin(), pred.end(), -1);
        using Entry = std::pair<StepLength, int>;
        auto cmp = [](const Entry& a, const Entry& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second > b.second;
        };
        std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
        std::vector<char> done(n, 0);
        dist[static_cast<std::size_t>(src)] = {};
        reached[static_cast<std::size_t>(src)] = 1;
        pq.push({{}, src});
        while (!pq.empty()) {
            const auto [d, u] = pq.top();
            pq.pop();
            const auto uu = static_cast<std::size_t>(u);
            if (done[uu]) continue;
            done[uu] = 1;
            for (int v : g.adjacency[uu]) {
                const auto vv = static_cast<std::size_t>(v);
                const StepLength nd = d + step_between(g.nodes[uu], g.nodes[vv]);
                if (!reached[vv] || nd < dist[vv]) {
                    reached[vv] = 1;
                    dist[vv] = nd;
                    pred[vv] = u;
                    pq.push({nd, v});
                }
            }
        }
    };

    // Endpoints are already in (row, col) order, so the first strict maximum
    // found scanning q then r is the lexicographic tie winner.
    bool have = false;
    int best_q = -1;
    int best_r = -1;
    StepLength best;
    for (std::size_t a = 0; a < g.endpoints.size(); ++a) {
        run(g.endpoints[a]);
        for (std::size_t b = a + 1; b < g.endpoints.size(); ++b) {
            const auto r = static_cast<std::size_t>(g.endpoints[b]);
            if (!reached[r])
                throw Error(ErrorCode::DisconnectedEndpoints, "skeleton endpoints are disconnected");
            if (!have || dist[r] > best) {
                have = true;
                best = dist[r];
                best_q = g.endpoints[a];
                best_r = g.endpoints[b];
            }
        }
    }

    run(best_q);
    SkeletonPath path;
    path.length = best;
    for (int v = best_r; v >= 0; v = pred[static_cast<std::size_t>(v)])
        path.nodes.push_back(g.nodes[static_cast<std::size_t>(v)]);
    std::reverse(path.nodes.begin(), path.nodes.end());
    return path;
}

double longest_side_branch(const SkeletonGraph& g, const SkeletonPath& path) {
    const std::size_t n = g.nodes.size();
    std::vector<StepLength> dist(n);
    std::vector<char> reached(n, 0), done(n, 0);
    using Entry = std::pair<StepLength, int>;
    auto cmp = [](const Entry& a, const Entry& b) { return a.first > b.first; };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
    for (const Pixel& p : path.nodes) {
        const int v = g.node_at(p);
        if (v < 0) throw Error(ErrorCode::InvalidArgument, "path pixel is not a skeleton node");
        reached[static_cast<std::size_t>(v)] = 1;
        pq.push({{}, v});
    }
    StepLength far;
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        const auto uu = static_cast<std::size_t>(u);
        if (done[uu]) continue;
        done[uu] = 1;
        if (d > far) far = d;
        for (int v : g.adjacency[uu]) {
            const auto vv = static_cast<std::size_t>(v);
            const StepLength nd = d + step_between(g.nodes[uu], g.nodes[vv]);
            if (!reached[vv] || nd < dist[vv]) {
                reached[vv] = 1;
                dist[vv] = nd;
                pq.push({nd, v});
            }
        }
    }
    return far.value();
}

LabelMap watershed(const GrayImage& elevation, const LabelMap& markers, const BinaryMask& domain) {
    if (!elevation.same_shape(markers) || !elevation.same_shape(domain))
        throw Error(ErrorCode::DimensionMismatch, "watershed: shape mismatch");
    const int w = elevation.width();
    const int h = elevation.height();
    LabelMap labels(w, h, 0);

    using Entry = std::tuple<std::int32_t, std::uint64_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    std::uint64_t age = 0;
    for (std::size_t i = 0; i < markers.size(); ++i) {
        if (markers[i] <= 0) continue;
        if (!domain[i])
            throw Error(ErrorCode::MarkerOutsideDomain, "watershed: marker outside domain");
        labels[i] = markers[i];
        pq.emplace(elevation[i], age++, i);
    }
    if (pq.empty()) throw Error(ErrorCode::NoMarkers, "watershed: no markers");

    while (!pq.empty()) {
        const auto [e, a, i] = pq.top();
        pq.pop();
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        for (int k = 0; k < 8; ++k) {
            const int nx = x + kDx[k];
            const int ny = y + kDy[k];
            if (!labels.contains(nx, ny)) continue;
            const std::size_t j = labels.index(nx, ny);
            if (!domain[j] || labels[j] != 0) continue;
            labels[j] = labels[i];
            pq.emplace(elevation[j], age++, j);
        }
    }
    return labels;
}

GrayImage negated_distance_elevation(const DistanceMap& dist) {
    GrayImage out(dist.width(), dist.height(), 0);
    for (std::size_t i = 0; i < dist.size(); ++i)
        out[i] = -static_cast<std::int32_t>(std::lround(dist[i] * 1000.0));
    return out;
}

std::vector<double> k_cosine_turning(const Contour& c, int k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k_cosine_turning: k must be >= 1");
    const std::size_t n = c.size();
    if (n < static_cast<std::size_t>(2 * k + 1))
        throw Error(ErrorCode::ContourTooShort, "contour shorter than 2k+1 points");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = c[i];
        const Point2& b = c[(i + n - static_cast<std::size_t>(k)) % n];
        const Point2& f = c[(i + static_cast<std::size_t>(k)) % n];
        const double ax = b.x - p.x, ay = b.y - p.y;
        const double fx = f.x - p.x, fy = f.y - p.y;
        const double na = std::hypot(ax, ay);
        const double nf = std::hypot(fx, fy);
        if (na == 0.0 || nf == 0.0) continue;
        const double cosv = std::clamp((ax * fx + ay * fy) / (na * nf), -1.0, 1.0);
        out[i] = 180.0 - std::acos(cosv) * 180.0 / std::numbers::pi;
    }
    return out;
}

std::vector<CurvaturePoint> curvature_extrema(const Contour& c, int k, double min_turning_deg) {
    const std::vector<double> t = k_cosine_turning(c, k);
    const std::size_t n = c.size();
    std::vector<CurvaturePoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] <= min_turning_deg) continue;
        bool is_max = true;
        for (int d = 1; d <= k && is_max; ++d) {
            const double before = t[(i + n - static_cast<std::size_t>(d)) % n];
            const double after = t[(i + static_cast<std::size_t>(d)) % n];
            if (before >= t[i] || after > t[i]) is_max = false;
        }
        if (is_max) out.push_back({i, c[i], t[i]});
    }
    std::stable_sort(out.begin(), out.end(), [](const CurvaturePoint& a, const CurvaturePoint& b) {
        return a.turning_deg > b.turning_deg;
    });
    return out;
}

}  // namespace ratseg
