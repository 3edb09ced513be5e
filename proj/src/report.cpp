#include <myoshape/report.hpp>

#include <sstream>

#include <myoshape/geometry.hpp>
#include <myoshape/quant.hpp>

namespace myoshape::report {

namespace {

constexpr double kScale = 4.0;

void append_polyline(std::ostringstream& out, const Contour& c,
                     const char* color) {
    out << "  <polygon fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    out.precision(2);
    out << std::fixed;
    for (size_t i = 0; i < c.pts.size(); ++i) {
        if (i) out << ' ';
        out << c.pts[i].x * kScale << ',' << c.pts[i].y * kScale;
    }
    out << "\"/>\n";
}

void append_rings(std::ostringstream& out, const LandmarkSet& p,
                  const char* color) {
    append_polyline(out, geometry::spline_contour(p.endo_ring(), 120), color);
    append_polyline(out, geometry::spline_contour(p.epi_ring(), 120), color);
}

}  // namespace

std::string overlay_svg(const OverlayCase& c) {
    const double w = c.spec.width * kScale;
    const double h = c.spec.height * kScale;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
        << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
        << "\">\n"
        << "  <rect width=\"" << w << "\" height=\"" << h
        << "\" fill=\"#202020\"/>\n";

    if (c.map_mask) {
        for (const auto& loop : quant::extract_boundaries(*c.map_mask))
            append_polyline(out, loop, "yellow");
    }
    if (c.truth) append_rings(out, *c.truth, "red");
    if (c.contour) append_rings(out, *c.contour, "cyan");

    out << "  <text x=\"" << w - 8 << "\" y=\"" << h - 8
        << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"16\" "
           "fill=\"white\">"
        << c.case_id;
    if (c.dsc) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " DSC %.2f", *c.dsc);
        out << buf;
    }
    out << "</text>\n</svg>\n";
    return out.str();
}

}  // namespace myoshape::report
