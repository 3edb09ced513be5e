#include <myoshape/metrics.hpp>

#include <algorithm>
#include <cmath>

#include <myoshape/geometry.hpp>
#include <myoshape/rng.hpp>

namespace myoshape::metrics {

std::string shape_flag_name(ShapeFlag f) {
    switch (f) {
        case ShapeFlag::Empty: return "empty";
        case ShapeFlag::NoCavity: return "no_cavity";
        case ShapeFlag::OpenMyocardium: return "open_myocardium";
        case ShapeFlag::MultiComponent: return "multi_component";
    }
    return "?";
}

double dsc(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_dims(b))
        throw InvalidInputError("dsc: mask dimension mismatch");
    std::int64_t inter = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.bits.size(); ++i) {
        const bool fa = a.bits[i] != 0, fb = b.bits[i] != 0;
        inter += fa && fb;
        na += fa;
        nb += fb;
    }
    if (na + nb == 0) return 1.0;  // both-empty convention
    return 2.0 * inter / static_cast<double>(na + nb);
}

std::vector<Point> boundary_pixels(const BinaryMask& m) {
    std::vector<Point> out;
    const auto bg = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= m.width || y >= m.height) return true;
        return m.at(x, y) == 0;
    };
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            if (bg(x - 1, y) || bg(x + 1, y) || bg(x, y - 1) || bg(x, y + 1))
                out.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    return out;
}

namespace {

// Exact nearest-neighbor distances via an expanding-ring search over a
// pixel-bucket grid (boundary pixels have integer coordinates).
class PixelIndex {
public:
    PixelIndex(const std::vector<Point>& pts, int width, int height)
        : width_(width), height_(height), occupied_(static_cast<size_t>(width) * height, 0) {
        for (const auto& p : pts)
            occupied_[static_cast<size_t>(p.y) * width_ + static_cast<size_t>(p.x)] = 1;
    }

    double nearest_distance(const Point& q) const {
        const int qx = static_cast<int>(q.x);
        const int qy = static_cast<int>(q.y);
        double best2 = std::numeric_limits<double>::infinity();
        const int max_r = std::max(width_, height_);
        for (int r = 0; r <= max_r; ++r) {
            // Every pixel on Chebyshev ring r is at Euclidean distance >= r,
            // so the current best cannot be undercut once best2 <= r^2.
            if (r > 0 && best2 <= static_cast<double>(r) * r) break;
            scan_ring(qx, qy, r, best2);
        }
        return std::sqrt(best2);
    }

private:
    void scan_ring(int qx, int qy, int r, double& best2) const {
        const auto visit = [&](int x, int y) {
            if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
            if (!occupied_[static_cast<size_t>(y) * width_ + x]) return;
            const double dx = x - qx, dy = y - qy;
            best2 = std::min(best2, dx * dx + dy * dy);
        };
        if (r == 0) {
            visit(qx, qy);
            return;
        }
        for (int x = qx - r; x <= qx + r; ++x) {
            visit(x, qy - r);
            visit(x, qy + r);
        }
        for (int y = qy - r + 1; y <= qy + r - 1; ++y) {
            visit(qx - r, y);
            visit(qx + r, y);
        }
    }

    int width_, height_;
    std::vector<std::uint8_t> occupied_;
};

std::pair<double, double> directed_stats(const std::vector<Point>& from,
                                         const PixelIndex& to) {
    double sum = 0.0, mx = 0.0;
    for (const auto& p : from) {
        const double d = to.nearest_distance(p);
        sum += d;
        mx = std::max(mx, d);
    }
    return {sum / static_cast<double>(from.size()), mx};
}

}  // namespace

std::pair<double, double> boundary_distances(const BinaryMask& a,
                                             const BinaryMask& b) {
    if (!a.same_dims(b))
        throw InvalidInputError("boundary_distances: mask dimension mismatch");
    const std::vector<Point> ba = boundary_pixels(a);
    const std::vector<Point> bb = boundary_pixels(b);
    if (ba.empty() || bb.empty())
        throw UndefinedMetricError("boundary_distances: empty mask");
    const PixelIndex ia(ba, a.width, a.height);
    const PixelIndex ib(bb, b.width, b.height);
    const auto [mean_ab, max_ab] = directed_stats(ba, ib);
    const auto [mean_ba, max_ba] = directed_stats(bb, ia);
    return {0.5 * (mean_ab + mean_ba), std::max(max_ab, max_ba)};
}

std::pair<double, double> contour_boundary_distances(
    const std::vector<Point>& a, const std::vector<Point>& b,
    int samples_per_segment) {
    if (a.size() < 3 || b.size() < 3)
        throw InvalidInputError("contour_boundary_distances: contour too small");
    if (samples_per_segment < 1)
        throw InvalidInputError("contour_boundary_distances: bad sampling density");

    const auto directed = [&](const std::vector<Point>& from,
                              const std::vector<Point>& to) {
        double sum = 0.0, mx = 0.0;
        int count = 0;
        const int n = static_cast<int>(from.size());
        for (int i = 0; i < n; ++i) {
            const Point& p = from[i];
            const Point& q = from[(i + 1) % n];
            for (int s = 0; s < samples_per_segment; ++s) {
                const double u = static_cast<double>(s) / samples_per_segment;
                const double d =
                    geometry::distance_to_polyline(p + (q - p) * u, to);
                sum += d;
                mx = std::max(mx, d);
                ++count;
            }
        }
        return std::pair<double, double>{sum / count, mx};
    };
    const auto [mean_ab, max_ab] = directed(a, b);
    const auto [mean_ba, max_ba] = directed(b, a);
    return {0.5 * (mean_ab + mean_ba), std::max(max_ab, max_ba)};
}

namespace {

// Label connected components over a predicate; conn = 4 or 8.
std::vector<int> label_components(int width, int height,
                                  const std::vector<std::uint8_t>& in_region,
                                  int conn, int& n_components) {
    std::vector<int> label(in_region.size(), -1);
    n_components = 0;
    static const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    std::vector<int> stack;
    for (size_t start = 0; start < in_region.size(); ++start) {
        if (!in_region[start] || label[start] != -1) continue;
        const int id = n_components++;
        stack.push_back(static_cast<int>(start));
        label[start] = id;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            const int cx = cur % width, cy = cur / width;
            for (int k = 0; k < conn; ++k) {
                const int nx = cx + dx8[k], ny = cy + dy8[k];
                if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                const int ni = ny * width + nx;
                if (in_region[ni] && label[ni] == -1) {
                    label[ni] = id;
                    stack.push_back(ni);
                }
            }
        }
    }
    return label;
}

BinaryMask closing_3x3(const BinaryMask& m) {
    BinaryMask dil(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool any = false;
            for (int dy = -1; dy <= 1 && !any; ++dy)
                for (int dx = -1; dx <= 1 && !any; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx >= 0 && ny >= 0 && nx < m.width && ny < m.height &&
                        m.at(nx, ny))
                        any = true;
                }
            dil.at(x, y) = any;
        }
    BinaryMask ero(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool all = true;
            for (int dy = -1; dy <= 1 && all; ++dy)
                for (int dx = -1; dx <= 1 && all; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    // Outside the image counts as background for erosion.
                    if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height ||
                        !dil.at(nx, ny))
                        all = false;
                }
            ero.at(x, y) = all;
        }
    return ero;
}

bool has_enclosed_cavity(const BinaryMask& m) {
    std::vector<std::uint8_t> bg(m.bits.size());
    for (size_t i = 0; i < m.bits.size(); ++i) bg[i] = m.bits[i] == 0;
    int n_bg = 0;
    const std::vector<int> label = label_components(m.width, m.height, bg, 4, n_bg);
    if (n_bg == 0) return false;
    std::vector<std::uint8_t> touches_border(n_bg, 0);
    for (int x = 0; x < m.width; ++x) {
        if (label[x] >= 0) touches_border[label[x]] = 1;
        const int bottom = (m.height - 1) * m.width + x;
        if (label[bottom] >= 0) touches_border[label[bottom]] = 1;
    }
    for (int y = 0; y < m.height; ++y) {
        if (label[static_cast<size_t>(y) * m.width] >= 0)
            touches_border[label[static_cast<size_t>(y) * m.width]] = 1;
        const int right = y * m.width + m.width - 1;
        if (label[right] >= 0) touches_border[label[right]] = 1;
    }
    for (int c = 0; c < n_bg; ++c)
        if (!touches_border[c]) return true;
    return false;
}

}  // namespace

ShapeFlags classify_shape(const BinaryMask& m) {
    ShapeFlags flags;
    if (m.count() == 0) {
        flags.insert(ShapeFlag::Empty);
        return flags;
    }
    int n_fg = 0;
    label_components(m.width, m.height, m.bits, 8, n_fg);
    if (n_fg > 1) flags.insert(ShapeFlag::MultiComponent);

    if (!has_enclosed_cavity(m)) {
        // Distinguish a wall gap from a genuinely filled shape: closing
        // bridges gaps up to 2 px; if that creates a cavity, the original
        // cavity leaked to the border through the gap.
        if (has_enclosed_cavity(closing_3x3(m)))
            flags.insert(ShapeFlag::OpenMyocardium);
        else
            flags.insert(ShapeFlag::NoCavity);
    }
    return flags;
}

std::pair<double, double> pose_errors(const Pose& truth, const Pose& pred) {
    truth.require_valid("pose_errors");
    pred.require_valid("pose_errors");
    const double dc = (truth.center - pred.center).norm();
    const double dt = std::abs(wrap_angle(truth.theta - pred.theta));
    return {dc, dt * 180.0 / M_PI};
}

double shape_landmark_error(const ShapeModel& model, const ShapeCoeffs& b_p,
                            const Pose& truth_pose, const LandmarkSet& p_t) {
    const LandmarkSet rec = geometry::pose_denormalize(
        shape_model::reconstruct(model, b_p), truth_pose);
    if (rec.size() != p_t.size())
        throw InvalidInputError("shape_landmark_error: landmark count mismatch");
    double acc = 0.0;
    for (int i = 0; i < p_t.size(); ++i)
        acc += (p_t.pts[i] - rec.pts[i]).norm();
    return acc / p_t.size();
}

double bootstrap_rank_test(const std::vector<double>& metric_a,
                           const std::vector<double>& metric_b, int n_perm,
                           std::uint64_t seed) {
    if (metric_a.size() != metric_b.size())
        throw InvalidInputError("bootstrap_rank_test: length mismatch");
    if (metric_a.size() < 2)
        throw InvalidInputError("bootstrap_rank_test: need at least 2 cases");
    if (n_perm < 1000)
        throw InvalidInputError("bootstrap_rank_test: n_perm below 1000");

    const int n = static_cast<int>(metric_a.size());
    // Per-case rank difference: rank 1 vs 2 within the pair, ties share 1.5.
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        if (metric_a[i] < metric_b[i]) d[i] = -1.0;
        else if (metric_a[i] > metric_b[i]) d[i] = 1.0;
        else d[i] = 0.0;
    }
    double observed = 0.0;
    for (double v : d) observed += v;
    observed = std::abs(observed) / n;

    Rng rng(seed);
    int exceed = 0;
    for (int p = 0; p < n_perm; ++p) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const bool flip = (rng.raw() & 1ull) != 0;
            acc += flip ? -d[i] : d[i];
        }
        if (std::abs(acc) / n >= observed) ++exceed;
    }
    return static_cast<double>(exceed) / n_perm;
}

}  // namespace myoshape::metrics
