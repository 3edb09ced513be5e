#include <myoshape/quant.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include <myoshape/geometry.hpp>
#include <myoshape/metrics.hpp>

namespace myoshape::quant {

namespace {

constexpr int kSegments = 6;
constexpr int kDimGroups = 3;

void require_quantifiable(const LandmarkSet& p) {
    p.require_valid("lv_params");
    if (p.n_endo != p.n_epi())
        throw InvalidInputError("lv_params: endo/epi ring size mismatch");
    if (p.n_endo % kSegments != 0 || p.n_endo % 2 != 0)
        throw InvalidInputError("lv_params: ring size must be even and divisible by 6");
}

}  // namespace

LVParams lv_params_from_landmarks(const LandmarkSet& p, double pixel_size_mm) {
    require_quantifiable(p);
    const int n = p.n_endo;
    const int per_seg = n / kSegments;
    const auto endo = p.endo_ring();
    const auto epi = p.epi_ring();

    LVParams out;
    for (int k = 0; k < kSegments; ++k) {
        double acc = 0.0;
        for (int j = 0; j < per_seg; ++j) {
            const int i = k * per_seg + j;
            acc += (epi[i] - endo[i]).norm();
        }
        out.rwt_mm[k] = acc / per_seg * pixel_size_mm;
    }

    const int half = n / 2;
    const int per_group = half / kDimGroups;
    for (int g = 0; g < kDimGroups; ++g) {
        double acc = 0.0;
        for (int j = 0; j < per_group; ++j) {
            const int i = g * per_group + j;
            acc += (endo[i] - endo[i + half]).norm();
        }
        out.dim_lv_mm[g] = acc / per_group * pixel_size_mm;
    }

    const Contour endo_c = geometry::spline_contour(endo);
    const Contour epi_c = geometry::spline_contour(epi);
    if (!geometry::polyline_is_simple(endo_c.pts) ||
        !geometry::polyline_is_simple(epi_c.pts))
        throw TopologyError("lv_params: self-intersecting contour polygon");
    const double px2 = pixel_size_mm * pixel_size_mm;
    const double a_endo = std::abs(geometry::polygon_area(endo_c.pts)) * px2;
    const double a_epi = std::abs(geometry::polygon_area(epi_c.pts)) * px2;
    out.a_lv_mm2 = a_endo;
    out.a_myo_mm2 = a_epi - a_endo;
    return out;
}

// ---------------------------------------------------------------------------
// Marching squares over a binary mask (0.5 level, crossings at edge
// midpoints). Foreground saddles connect diagonally, matching 8-connected
// foreground / 4-connected background.
// ---------------------------------------------------------------------------

std::vector<Contour> extract_boundaries(const BinaryMask& m) {
    struct Seg {
        Point a, b;
    };
    std::vector<Seg> segs;

    const auto val = [&](int x, int y) -> int {
        if (x < 0 || y < 0 || x >= m.width || y >= m.height) return 0;
        return m.at(x, y) ? 1 : 0;
    };

    for (int y = -1; y < m.height; ++y) {
        for (int x = -1; x < m.width; ++x) {
            const int c = val(x, y) | (val(x + 1, y) << 1) |
                          (val(x + 1, y + 1) << 2) | (val(x, y + 1) << 3);
            if (c == 0 || c == 15) continue;
            const Point e0{x + 0.5, static_cast<double>(y)};      // bottom
            const Point e1{x + 1.0, y + 0.5};                     // right
            const Point e2{x + 0.5, static_cast<double>(y + 1)};  // top
            const Point e3{static_cast<double>(x), y + 0.5};      // left
            switch (c) {
                case 1: case 14: segs.push_back({e3, e0}); break;
                case 2: case 13: segs.push_back({e0, e1}); break;
                case 3: case 12: segs.push_back({e3, e1}); break;
                case 4: case 11: segs.push_back({e1, e2}); break;
                case 6: case 9: segs.push_back({e0, e2}); break;
                case 7: case 8: segs.push_back({e3, e2}); break;
                case 5:  // v00+v11 inside: keep the diagonal connected
                    segs.push_back({e0, e1});
                    segs.push_back({e2, e3});
                    break;
                case 10:  // v10+v01 inside
                    segs.push_back({e3, e0});
                    segs.push_back({e1, e2});
                    break;
                default: break;
            }
        }
    }

    // Link segments into closed loops; endpoints live on the half-integer
    // lattice so exact keys are available.
    const auto key = [](const Point& p) {
        return std::pair<long, long>(std::lround(p.x * 2.0), std::lround(p.y * 2.0));
    };
    std::map<std::pair<long, long>, std::vector<int>> by_end;
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        by_end[key(segs[i].a)].push_back(i);
        by_end[key(segs[i].b)].push_back(i);
    }

    std::vector<bool> used(segs.size(), false);
    std::vector<Contour> loops;
    for (int start = 0; start < static_cast<int>(segs.size()); ++start) {
        if (used[start]) continue;
        Contour loop;
        loop.closed = true;
        used[start] = true;
        Point cur = segs[start].b;
        loop.pts.push_back(segs[start].a);
        loop.pts.push_back(segs[start].b);
        while (key(cur) != key(segs[start].a)) {
            const auto& cands = by_end.at(key(cur));
            int next = -1;
            for (int c : cands)
                if (!used[c]) {
                    next = c;
                    break;
                }
            if (next < 0) break;  // open chain; should not happen on valid masks
            used[next] = true;
            cur = key(segs[next].a) == key(cur) ? segs[next].b : segs[next].a;
            loop.pts.push_back(cur);
        }
        loop.pts.pop_back();  // drop the seam duplicate
        if (loop.pts.size() >= 3) loops.push_back(std::move(loop));
    }
    return loops;
}

MaskBoundaries myocardium_boundaries(const BinaryMask& m) {
    // Cavity = largest enclosed background component (4-connected).
    std::vector<std::uint8_t> bg(m.bits.size());
    for (size_t i = 0; i < m.bits.size(); ++i) bg[i] = m.bits[i] == 0;

    // Flood from the border to mark the outside background.
    std::vector<std::uint8_t> outside(m.bits.size(), 0);
    std::vector<int> stack;
    const auto push = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= m.width || y >= m.height) return;
        const int i = y * m.width + x;
        if (bg[i] && !outside[i]) {
            outside[i] = 1;
            stack.push_back(i);
        }
    };
    for (int x = 0; x < m.width; ++x) {
        push(x, 0);
        push(x, m.height - 1);
    }
    for (int y = 0; y < m.height; ++y) {
        push(0, y);
        push(m.width - 1, y);
    }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % m.width, y = i / m.width;
        push(x + 1, y);
        push(x - 1, y);
        push(x, y + 1);
        push(x, y - 1);
    }

    BinaryMask cavity(m.width, m.height);
    std::int64_t n_cavity = 0;
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const int i = y * m.width + x;
            if (bg[i] && !outside[i]) {
                cavity.at(x, y) = 1;
                ++n_cavity;
                sx += x;
                sy += y;
            }
        }
    if (n_cavity == 0)
        throw UnrealisticShapeError("myocardium_boundaries: mask has no cavity");

    MaskBoundaries out;
    out.cavity_centroid = {sx / n_cavity, sy / n_cavity};

    const auto largest_loop = [](std::vector<Contour> loops) {
        if (loops.empty())
            throw UnrealisticShapeError("myocardium_boundaries: no boundary loop");
        size_t best = 0;
        double best_area = -1.0;
        for (size_t i = 0; i < loops.size(); ++i) {
            const double a = std::abs(geometry::polygon_area(loops[i].pts));
            if (a > best_area) {
                best_area = a;
                best = i;
            }
        }
        return loops[best];
    };

    out.endo = largest_loop(extract_boundaries(cavity));
    out.epi = largest_loop(extract_boundaries(m));
    return out;
}

LVParams lv_params_from_mask(const BinaryMask& m, double theta,
                             double pixel_size_mm) {
    const metrics::ShapeFlags flags = metrics::classify_shape(m);
    if (!flags.empty()) {
        std::string names;
        for (const auto f : flags)
            names += (names.empty() ? "" : ";") + metrics::shape_flag_name(f);
        throw UnrealisticShapeError("lv_params_from_mask: unrealistic mask (" +
                                    names + ")");
    }
    const MaskBoundaries b = myocardium_boundaries(m);
    const int n_ring = 18;
    const std::vector<Point> endo = geometry::resample_equiangular(
        b.endo, b.cavity_centroid, theta, n_ring);
    const std::vector<Point> epi = geometry::resample_equiangular(
        b.epi, b.cavity_centroid, theta, n_ring);

    LandmarkSet p;
    p.n_endo = n_ring;
    p.pts = endo;
    p.pts.insert(p.pts.end(), epi.begin(), epi.end());
    return lv_params_from_landmarks(p, pixel_size_mm);
}

std::pair<double, double> mae_and_correlation(const std::vector<double>& truth,
                                              const std::vector<double>& pred) {
    if (truth.size() != pred.size())
        throw InvalidInputError("mae_and_correlation: length mismatch");
    if (truth.size() < 2)
        throw InvalidInputError("mae_and_correlation: need at least 2 samples");
    const int n = static_cast<int>(truth.size());
    double mae = 0.0, mt = 0.0, mp = 0.0;
    for (int i = 0; i < n; ++i) {
        mae += std::abs(truth[i] - pred[i]);
        mt += truth[i];
        mp += pred[i];
    }
    mae /= n;
    mt /= n;
    mp /= n;
    double stt = 0.0, spp = 0.0, stp = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dt = truth[i] - mt, dp = pred[i] - mp;
        stt += dt * dt;
        spp += dp * dp;
        stp += dt * dp;
    }
    if (stt <= 0.0 || spp <= 0.0)
        throw UndefinedCorrelationError("mae_and_correlation: zero variance");
    return {mae, stp / std::sqrt(stt * spp)};
}

}  // namespace myoshape::quant
