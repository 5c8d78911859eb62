#include "ptm/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ptm {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 64;
constexpr double kRight = 24;
constexpr double kTop = 44;
constexpr double kBottom = 64;

const char* kColorA = "#4878a8";
const char* kColorB = "#d0883c";
const char* kColors[] = {"#4878a8", "#d0883c", "#5e9e63", "#b05c5c", "#8a6fae"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0;
    double hi = 1;

    void pad(double frac) {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
            return;
        }
        double d = (hi - lo) * frac;
        lo -= d;
        hi += d;
    }
};

double map_x(double x, const Range& r) { return kLeft + (x - r.lo) / (r.hi - r.lo) * (kWidth - kLeft - kRight); }
double map_y(double y, const Range& r) { return kHeight - kBottom - (y - r.lo) / (r.hi - r.lo) * (kHeight - kTop - kBottom); }

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << escape_xml(title) << "</text>\n";
}

void draw_axes(std::ostringstream& out, const Range& xr, const Range& yr,
               const std::string& x_label, const std::string& y_label, int ticks) {
    double x0 = kLeft, x1 = kWidth - kRight;
    double y0 = kHeight - kBottom, y1 = kTop;
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= ticks; ++i) {
        double fx = xr.lo + (xr.hi - xr.lo) * i / ticks;
        double px = map_x(fx, xr);
        out << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y0 + 4
            << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << px << "\" y=\"" << y0 + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fx)
            << "</text>\n";
        double fy = yr.lo + (yr.hi - yr.lo) * i / ticks;
        double py = map_y(fy, yr);
        out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
            << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << (y0 + y1) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
        << (y0 + y1) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
}

}  // namespace

std::string render_curve_svg(const std::vector<CurveSeries>& series, const std::string& title,
                             const std::string& x_label, const std::string& y_label) {
    bool any = false;
    for (const auto& s : series) any = any || !s.points.empty();
    if (!any) throw MissingInput("curve has no points");

    Range xr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Range yr = xr;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            xr.lo = std::min(xr.lo, p.x);
            xr.hi = std::max(xr.hi, p.x);
            yr.lo = std::min(yr.lo, p.y);
            yr.hi = std::max(yr.hi, p.y);
        }
    xr.pad(0.02);
    yr.pad(0.08);

    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, xr, yr, x_label, y_label, 5);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.points.empty()) continue;
        const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
        std::vector<SeriesPoint> pts = s.points;
        std::sort(pts.begin(), pts.end(),
                  [](const SeriesPoint& a, const SeriesPoint& b) { return a.x < b.x; });
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : pts) out << fmt(map_x(p.x, xr)) << "," << fmt(map_y(p.y, yr)) << " ";
        out << "\"/>\n";
        for (const auto& p : pts)
            out << "<circle cx=\"" << fmt(map_x(p.x, xr)) << "\" cy=\"" << fmt(map_y(p.y, yr))
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        if (series.size() > 1) {
            double lx = kWidth - kRight - 150;
            double ly = kTop + 16 * static_cast<double>(si);
            out << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
                << color << "\"/>\n";
            out << "<text x=\"" << lx + 18 << "\" y=\"" << ly + 10
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.label)
                << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_grouped_bars_svg(const std::vector<BarGroup>& groups, const std::string& title,
                                    const std::string& series_a, const std::string& series_b,
                                    const std::string& y_label) {
    if (groups.empty()) throw MissingInput("bar chart has no groups");
    Range yr{0, 0};
    for (const auto& g : groups) yr.hi = std::max({yr.hi, g.a, g.b});
    if (yr.hi <= 0) yr.hi = 1;
    yr.hi *= 1.12;

    std::ostringstream out;
    open_svg(out, title);
    double x0 = kLeft, x1 = kWidth - kRight;
    double y0 = kHeight - kBottom;
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << kTop
        << "\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double fy = yr.lo + (yr.hi - yr.lo) * i / 5;
        double py = map_y(fy, yr);
        out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
            << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
            << "</text>\n";
    }
    out << "<text x=\"18\" y=\"" << (y0 + kTop) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
        << (y0 + kTop) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

    double slot = (x1 - x0) / static_cast<double>(groups.size());
    double bar = slot * 0.32;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        double cx = x0 + slot * (static_cast<double>(i) + 0.5);
        double ha = (g.a - yr.lo) / (yr.hi - yr.lo) * (y0 - kTop);
        double hb = (g.b - yr.lo) / (yr.hi - yr.lo) * (y0 - kTop);
        out << "<rect x=\"" << fmt(cx - bar) << "\" y=\"" << fmt(y0 - ha) << "\" width=\""
            << fmt(bar) << "\" height=\"" << fmt(ha) << "\" fill=\"" << kColorA << "\"/>\n";
        out << "<rect x=\"" << fmt(cx) << "\" y=\"" << fmt(y0 - hb) << "\" width=\"" << fmt(bar)
            << "\" height=\"" << fmt(hb) << "\" fill=\"" << kColorB << "\"/>\n";
        out << "<text x=\"" << fmt(cx) << "\" y=\"" << y0 + 12
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" transform=\"rotate(-35 "
            << fmt(cx) << " " << y0 + 12 << ")\">" << escape_xml(g.label) << "</text>\n";
    }
    double lx = kWidth - kRight - 170;
    out << "<rect x=\"" << lx << "\" y=\"" << kTop << "\" width=\"12\" height=\"12\" fill=\""
        << kColorA << "\"/>\n";
    out << "<text x=\"" << lx + 18 << "\" y=\"" << kTop + 10
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(series_a)
        << "</text>\n";
    out << "<rect x=\"" << lx << "\" y=\"" << kTop + 16 << "\" width=\"12\" height=\"12\" fill=\""
        << kColorB << "\"/>\n";
    out << "<text x=\"" << lx + 18 << "\" y=\"" << kTop + 26
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(series_b)
        << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace ptm
