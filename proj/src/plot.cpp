#include "framelab/evaluator.hpp"

#include "framelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <sstream>

namespace framelab {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

} // namespace

std::string curve_to_csv(const PushoverCurve& curve, const Frame& frame) {
    std::ostringstream out;
    out << "load_factor,V1,V2";
    for (const auto& n : frame.nodes) {
        out << ",ux_" << n.id << ",uy_" << n.id << ",rz_" << n.id;
    }
    out << '\n';
    for (const auto& p : curve.points) {
        if (p.response.size() != frame.nodes.size()) {
            fail(ErrorKind::invalid_argument, "curve_to_csv: curve does not match frame");
        }
        out << num(p.load_factor) << ',' << num(p.shears.v1) << ',' << num(p.shears.v2);
        for (const auto& r : p.response) {
            out << ',' << num(r.ux_mm) << ',' << num(r.uy_mm) << ',' << num(r.rz_deg);
        }
        out << '\n';
    }
    return out.str();
}

std::string curve_to_svg(const PushoverCurve& curve, const Frame& frame) {
    if (curve.points.empty()) {
        fail(ErrorKind::invalid_argument, "curve_to_svg: empty curve");
    }
    const double width = 640.0;
    const double height = 420.0;
    const double left = 70.0;
    const double right = 130.0;
    const double top = 30.0;
    const double bottom = 50.0;

    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    for (const auto& p : curve.points) {
        x_max = std::max(x_max, p.shears.v1 / 1e3);
        for (const auto& r : p.response) {
            y_min = std::min(y_min, r.ux_mm);
            y_max = std::max(y_max, r.ux_mm);
        }
    }
    if (x_max <= 0.0) {
        x_max = 1.0;
    }
    if (y_max - y_min <= 0.0) {
        y_max = y_min + 1.0;
    }
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto sx = [&](double v) { return left + pw * v / x_max; };
    auto sy = [&](double v) { return top + ph * (1.0 - (v - y_min) / (y_max - y_min)); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
        << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\""
        << num(left + pw) << "\" y2=\"" << num(top + ph) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(top + ph) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x_max * t / 4.0;
        const double yv = y_min + (y_max - y_min) * t / 4.0;
        out << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 16)
            << "\" text-anchor=\"middle\">" << num(std::round(xv * 10) / 10) << "</text>\n";
        out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(yv) + 4)
            << "\" text-anchor=\"end\">" << num(std::round(yv * 100) / 100) << "</text>\n";
    }
    out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 10)
        << "\" text-anchor=\"middle\">Applied force V1 (kN)</text>\n";
    out << "<text transform=\"translate(16," << num(top + ph / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">u_x (mm)</text>\n";

    for (std::size_t k = 0; k < frame.nodes.size(); ++k) {
        const char* colour = kPalette[k % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const auto& p = curve.points[i];
            out << (i ? " " : "") << num(sx(p.shears.v1 / 1e3)) << ','
                << num(sy(p.response[k].ux_mm));
        }
        out << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(k);
        out << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
            << num(left + pw + 32) << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">Node "
            << frame.nodes[k].id << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace framelab
